//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check, 2 closed form and enumeration
//! disagree, 3 resource bound, 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::flat::{self, BieberbachSpec, BieberbachType};
use crate::mesh::{self, OracleReport};
use crate::scan::{ScanConfig, ScanOutcome};
use crate::surface::{KLEIN_SYSTOLE, PHI0};
use crate::suspension::{self, RatioReport, SuspensionSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Agreement required between closed-form and enumerated systoles.
pub const ENUM_TOL: f64 = 1e-9;
/// Largest relative error accepted from the mesh oracle.
pub const MESH_REL_TOL: f64 = 0.02;
/// Least error reduction accepted when the mesh resolution halves.
pub const MESH_CONVERGENCE: f64 = 1.7;
/// Largest amount by which mesh distances may undercut the closed forms.
pub const UNDERSHOOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Flat,
    Mesh,
}

#[derive(Debug, Parser)]
#[command(
    name = "systolica",
    version,
    about = "Systolic ratios of flat and singular non-orientable 3-manifolds"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal flat and singular ratios per type.
    Table {
        #[arg(long = "type")]
        kind: Option<BieberbachType>,
    },
    /// Systole, volume and ratio of a flat manifold.
    Flat(FlatArgs),
    /// Systole, volume and ratio of a singular suspension; optimal
    /// parameters when none are given.
    Suspension {
        kind: BieberbachType,
        #[arg(allow_negative_numbers = true)]
        params: Vec<String>,
    },
    /// Grid-plus-refinement scan of the ratio over normalized moduli.
    Scan(ScanArgs),
    /// Closed forms against enumeration and the mesh oracle.
    Verify(VerifyArgs),
    /// Node and edge listing of an oracle mesh.
    MeshDump {
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        patches: usize,
        #[arg(long)]
        edges: bool,
    },
}

#[derive(Debug, Args)]
pub struct FlatArgs {
    pub kind: BieberbachType,
    /// Moduli, positional or `name=value`.
    #[arg(allow_negative_numbers = true, required = true)]
    pub moduli: Vec<String>,
    /// Added to the enumerated systole; exercises the consistency check.
    #[arg(
        long,
        hide = true,
        default_value_t = 0.0,
        allow_negative_numbers = true
    )]
    pub fault_offset: f64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long = "type")]
    pub kind: BieberbachType,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    /// Scan the singular suspension parameters instead of flat moduli.
    #[arg(long)]
    pub singular: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Mesh resolution; the convergence check also runs at `h/2`.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    /// Samples per type (flat suite, default 1000) and per family (mesh
    /// suite, default 100).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl clap::builder::ValueParserFactory for BieberbachType {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| {
            s.parse::<BieberbachType>().map_err(|e| e.to_string())
        })
    }
}

/// A command's report and exit code.
struct Outcome {
    report: String,
    /// Printed to stderr, or to stdout when the report goes to a file.
    summary: String,
    code: i32,
}

impl Outcome {
    fn new(report: String, code: i32) -> Self {
        Self {
            report,
            summary: String::new(),
            code,
        }
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::ResourceBound(_) => EXIT_RESOURCE,
        Error::Parse(_)
        | Error::InvalidModulus { .. }
        | Error::DegenerateModuli(_)
        | Error::DegenerateLattice
        | Error::OutOfRange { .. }
        | Error::DegenerateMesh(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs the CLI on `args` and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let outcome = match execute(&cli) {
        Ok(outcome) => outcome,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.report)
            .and_then(|_| stdout.write_all(outcome.summary.as_bytes())),
        None => stdout
            .write_all(outcome.report.as_bytes())
            .and_then(|_| stderr.write_all(outcome.summary.as_bytes())),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_CHECK_FAILED;
    }
    outcome.code
}

fn execute(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Table { kind } => cmd_table(*kind, cli.format),
        Command::Flat(args) => cmd_flat(args, cli.format),
        Command::Suspension { kind, params } => cmd_suspension(*kind, params, cli.format),
        Command::Scan(args) => cmd_scan(args, cli.format),
        Command::Verify(args) => cmd_verify(args, cli.format),
        Command::MeshDump { h, patches, edges } => {
            let mesh = mesh::build_mesh(PHI0, *patches, *h)?;
            Ok(Outcome::new(mesh.dump(*edges), EXIT_OK))
        }
    }
}

fn cmd_table(kind: Option<BieberbachType>, format: Format) -> Result<Outcome, Error> {
    let rows: Vec<RatioReport> = suspension::table_report()?
        .into_iter()
        .filter(|r| kind.is_none_or(|k| r.type_tag == k))
        .collect();
    let code = if rows.iter().all(RatioReport::singular_wins) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let report = match format {
        Format::Json => json_text(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "type",
                "flat_exact",
                "flat_value",
                "singular_exact",
                "singular_value",
            ])
            .map_err(csv_error)?;
            for r in &rows {
                w.write_record([
                    r.type_tag.to_string(),
                    r.flat_exact.to_string(),
                    r.flat_value.to_string(),
                    r.singular_exact.to_string(),
                    r.singular_value.to_string(),
                ])
                .map_err(csv_error)?;
            }
            csv_string(w)?
        }
        Format::Text => {
            let mut s = format!(
                "{:<4}  {:<12} {:>10}  {:<24} {:>14}\n",
                "type", "flat_exact", "flat_value", "singular_exact", "singular_value"
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:<4}  {:<12} {:>10.6}  {:<24} {:>14.6}",
                    r.type_tag, r.flat_exact, r.flat_value, r.singular_exact, r.singular_value
                );
            }
            s
        }
    };
    Ok(Outcome::new(report, code))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, Error> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Key-value report in the requested format.
fn key_values(
    pairs: &[(&str, String)],
    json_value: serde_json::Value,
    format: Format,
) -> Result<String, Error> {
    Ok(match format {
        Format::Json => json_text(&json_value),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(pairs.iter().map(|(k, _)| *k))
                .map_err(csv_error)?;
            w.write_record(pairs.iter().map(|(_, v)| v.as_str()))
                .map_err(csv_error)?;
            csv_string(w)?
        }
        Format::Text => pairs.iter().map(|(k, v)| format!("{k:<16}{v}\n")).collect(),
    })
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn cmd_flat(args: &FlatArgs, format: Format) -> Result<Outcome, Error> {
    let text = format!("{} {}", args.kind, args.moduli.join(" "));
    let spec: BieberbachSpec = text.parse()?;
    let closed = flat::flat_systole_closed(&spec)?;
    let enumerated = flat::flat_systole_enum(&spec)? + args.fault_offset;
    let volume = flat::flat_volume(&spec);
    let ratio = closed.powi(3) / volume;
    let consistent = (closed - enumerated).abs() <= ENUM_TOL;
    let moduli: String = spec
        .params()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    let pairs = [
        ("type", spec.type_tag().to_string()),
        ("moduli", moduli),
        ("systole_closed", fixed(closed)),
        ("systole_enum", fixed(enumerated)),
        ("volume", fixed(volume)),
        ("ratio", fixed(ratio)),
        ("consistent", consistent.to_string()),
    ];
    let value = json!({
        "type": spec.type_tag(),
        "moduli": spec.params().into_iter().collect::<std::collections::BTreeMap<_, _>>(),
        "systole_closed": closed,
        "systole_enum": enumerated,
        "volume": volume,
        "ratio": ratio,
        "consistent": consistent,
    });
    let mut outcome = Outcome::new(key_values(&pairs, value, format)?, EXIT_OK);
    if !consistent {
        outcome.code = EXIT_INCONSISTENT;
        outcome.summary =
            format!("closed-form systole {closed} disagrees with enumeration {enumerated}\n");
    }
    Ok(outcome)
}

fn cmd_suspension(
    kind: BieberbachType,
    params: &[String],
    format: Format,
) -> Result<Outcome, Error> {
    let spec = if params.is_empty() {
        suspension::optimize_suspension(kind)?.0
    } else {
        format!("{kind} {}", params.join(" ")).parse::<SuspensionSpec>()?
    };
    let systole = suspension::suspension_systole(&spec);
    let volume = suspension::suspension_volume(&spec);
    let ratio = suspension::singular_ratio(&spec);
    let parameters = spec
        .params()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    let pairs = [
        ("type", kind.to_string()),
        ("parameters", parameters),
        ("systole", fixed(systole)),
        ("volume", fixed(volume)),
        ("ratio", fixed(ratio)),
    ];
    let value = json!({
        "type": kind,
        "parameters": spec.params().into_iter().collect::<std::collections::BTreeMap<_, _>>(),
        "systole": systole,
        "volume": volume,
        "ratio": ratio,
    });
    Ok(Outcome::new(key_values(&pairs, value, format)?, EXIT_OK))
}

/// CSV of a scan: `round,<axis names...>,ratio`.
pub fn scan_csv(outcome: &ScanOutcome) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["round"];
    header.extend(outcome.axes.iter().map(|a| a.name));
    header.push("ratio");
    w.write_record(&header).map_err(csv_error)?;
    for s in &outcome.samples {
        let mut record = vec![s.round.to_string()];
        record.extend(s.point.iter().map(|x| x.to_string()));
        record.push(s.value.to_string());
        w.write_record(&record).map_err(csv_error)?;
    }
    csv_string(w)
}

fn cmd_scan(args: &ScanArgs, format: Format) -> Result<Outcome, Error> {
    let config = ScanConfig {
        grid: args.grid,
        rounds: args.rounds,
        ..ScanConfig::default()
    };
    let (outcome, optimum) = if args.singular {
        (
            suspension::scan_singular(args.kind, &config)?,
            suspension::singular_optimum_exact(args.kind)?,
        )
    } else {
        (
            flat::scan_flat(args.kind, &config)?,
            flat::optimal_flat_ratio(args.kind).0,
        )
    };
    let gap = optimum - outcome.best.value;
    let point: Vec<(&str, f64)> = outcome
        .axes
        .iter()
        .map(|a| a.name)
        .zip(outcome.best.point.iter().copied())
        .collect();
    let summary = match format {
        Format::Json => json_text(&json!({
            "type": args.kind,
            "singular": args.singular,
            "evaluations": outcome.evaluations,
            "incumbent": point.iter().copied().collect::<std::collections::BTreeMap<_, _>>(),
            "ratio": outcome.best.value,
            "optimum": optimum,
            "gap": gap,
        })),
        Format::Text | Format::Csv => {
            let coords: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
            format!(
                "{} {} incumbent {} ratio {:.6} optimum {:.6} gap {:.3e}\n",
                args.kind,
                if args.singular { "singular" } else { "flat" },
                coords.join(" "),
                outcome.best.value,
                optimum,
                gap
            )
        }
    };
    let code = if outcome.best.value <= optimum + 1e-9 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(Outcome {
        report: scan_csv(&outcome)?,
        summary,
        code,
    })
}

/// Per-type agreement of closed-form and enumerated flat systoles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatSuiteRow {
    #[serde(rename = "type")]
    pub type_tag: BieberbachType,
    pub samples: usize,
    pub max_abs_difference: f64,
    pub max_ratio: f64,
    pub optimum: f64,
}

impl FlatSuiteRow {
    pub fn consistent(&self) -> bool {
        self.max_abs_difference <= ENUM_TOL
    }

    pub fn below_optimum(&self) -> bool {
        self.max_ratio <= self.optimum + ENUM_TOL
    }
}

pub fn flat_suite(samples: usize, seed: u64) -> Result<Vec<FlatSuiteRow>, Error> {
    use rayon::prelude::*;

    BieberbachType::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let specs: Vec<BieberbachSpec> = (0..samples)
                .map(|_| BieberbachSpec::random(kind, &mut rng))
                .collect();
            let results: Vec<(f64, f64)> = specs
                .par_iter()
                .map(|s| {
                    let closed = flat::flat_systole_closed(s)?;
                    let enumerated = flat::flat_systole_enum(s)?;
                    Ok((
                        (closed - enumerated).abs(),
                        closed.powi(3) / flat::flat_volume(s),
                    ))
                })
                .collect::<Result<_, Error>>()?;
            Ok(FlatSuiteRow {
                type_tag: kind,
                samples,
                max_abs_difference: results.iter().map(|r| r.0).fold(0.0, f64::max),
                max_ratio: results.iter().map(|r| r.1).fold(0.0, f64::max),
                optimum: flat::optimal_flat_ratio(kind).0,
            })
        })
        .collect()
}

/// Mesh displacement of the base isometry at an optimal suspension, and the
/// shortest loop it allows with a single power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementCheck {
    #[serde(rename = "type")]
    pub type_tag: BieberbachType,
    pub closed: f64,
    pub mesh: f64,
    pub systole_bound: f64,
}

impl DisplacementCheck {
    pub fn passes(&self) -> bool {
        self.mesh >= self.closed - UNDERSHOOT_TOL
            && self.mesh <= self.closed * (1.0 + MESH_REL_TOL)
            && self.systole_bound >= KLEIN_SYSTOLE - UNDERSHOOT_TOL
    }
}

/// Compares the Klein-bottle displacement of `r_α` and `T_δ` at the optimal
/// suspensions with the mesh minimum over base points and deck images.
pub fn displacement_checks(h: f64) -> Result<Vec<DisplacementCheck>, Error> {
    let mesh = mesh::build_mesh(PHI0, mesh::ORACLE_PATCHES, h)?;
    [BieberbachType::B1, BieberbachType::B2]
        .into_iter()
        .map(|kind| {
            let (spec, _) = suspension::optimize_suspension(kind)?;
            let measured = mesh::klein_displacement(&mesh, spec.base)?;
            Ok(DisplacementCheck {
                type_tag: kind,
                closed: spec.base.displacement(),
                mesh: measured,
                systole_bound: measured.hypot(spec.d),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSuite {
    pub coarse: OracleReport,
    pub fine: OracleReport,
    pub convergence: f64,
    pub displacement: Vec<DisplacementCheck>,
}

impl MeshSuite {
    pub fn passes(&self) -> bool {
        self.coarse.max_rel_error() < MESH_REL_TOL
            && self.coarse.max_undershoot <= UNDERSHOOT_TOL
            && self.fine.max_undershoot <= UNDERSHOOT_TOL
            && self.convergence >= MESH_CONVERGENCE
            && self.displacement.iter().all(DisplacementCheck::passes)
    }
}

pub fn mesh_suite(h: f64, samples: usize, seed: u64) -> Result<MeshSuite, Error> {
    let coarse = mesh::verify_closed_forms(h, samples, seed)?;
    let fine = mesh::verify_closed_forms(h / 2.0, samples, seed)?;
    let convergence = coarse.max_rel_error() / fine.max_rel_error();
    Ok(MeshSuite {
        coarse,
        fine,
        convergence,
        displacement: displacement_checks(h)?,
    })
}

fn cmd_verify(args: &VerifyArgs, format: Format) -> Result<Outcome, Error> {
    let flat_rows = match args.suite {
        Suite::All | Suite::Flat => Some(flat_suite(args.samples.unwrap_or(1000), args.seed)?),
        Suite::Mesh => None,
    };
    let mesh_report = match args.suite {
        Suite::All | Suite::Mesh => {
            Some(mesh_suite(args.h, args.samples.unwrap_or(100), args.seed)?)
        }
        Suite::Flat => None,
    };

    let inconsistent = flat_rows.iter().flatten().any(|r| !r.consistent());
    let failed = flat_rows.iter().flatten().any(|r| !r.below_optimum())
        || mesh_report.as_ref().is_some_and(|m| !m.passes());
    let code = if inconsistent {
        EXIT_INCONSISTENT
    } else if failed {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };

    let report = match format {
        Format::Json => json_text(&json!({ "flat": flat_rows, "mesh": mesh_report })),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["suite", "check", "value", "limit", "pass"])
                .map_err(csv_error)?;
            for (suite, check, value, limit, pass) in
                verify_lines(flat_rows.as_deref(), mesh_report.as_ref())
            {
                w.write_record([
                    suite,
                    &check,
                    &value.to_string(),
                    &limit.to_string(),
                    &pass.to_string(),
                ])
                .map_err(csv_error)?;
            }
            csv_string(w)?
        }
        Format::Text => verify_lines(flat_rows.as_deref(), mesh_report.as_ref())
            .into_iter()
            .map(|(suite, check, value, limit, pass)| {
                format!(
                    "{} {suite:<5} {check:<34} {value:>12.3e}  limit {limit:.3e}\n",
                    if pass { "PASS" } else { "FAIL" }
                )
            })
            .collect(),
    };
    Ok(Outcome::new(report, code))
}

type VerifyLine = (&'static str, String, f64, f64, bool);

fn verify_lines(
    flat_rows: Option<&[FlatSuiteRow]>,
    mesh_report: Option<&MeshSuite>,
) -> Vec<VerifyLine> {
    let mut lines = Vec::new();
    for r in flat_rows.unwrap_or_default() {
        lines.push((
            "flat",
            format!("{} |enum - closed| ({} specs)", r.type_tag, r.samples),
            r.max_abs_difference,
            ENUM_TOL,
            r.consistent(),
        ));
        lines.push((
            "flat",
            format!("{} max ratio - optimum", r.type_tag),
            r.max_ratio - r.optimum,
            ENUM_TOL,
            r.below_optimum(),
        ));
    }
    if let Some(m) = mesh_report {
        for (label, report) in [("coarse", &m.coarse), ("fine", &m.fine)] {
            lines.push((
                "mesh",
                format!("rel error h={}", report.h),
                report.max_rel_error(),
                MESH_REL_TOL,
                report.max_rel_error() < MESH_REL_TOL,
            ));
            lines.push((
                "mesh",
                format!("undershoot ({label})"),
                report.max_undershoot,
                UNDERSHOOT_TOL,
                report.max_undershoot <= UNDERSHOOT_TOL,
            ));
        }
        lines.push((
            "mesh",
            "screw base-point spread".into(),
            m.coarse.screw_base_point_spread,
            MESH_REL_TOL,
            m.coarse.screw_base_point_spread < MESH_REL_TOL,
        ));
        lines.push((
            "mesh",
            "error ratio under halving h".into(),
            m.convergence,
            MESH_CONVERGENCE,
            m.convergence >= MESH_CONVERGENCE,
        ));
        for c in &m.displacement {
            lines.push((
                "mesh",
                format!("{} klein displacement mesh - closed", c.type_tag),
                c.mesh - c.closed,
                MESH_REL_TOL * c.closed,
                c.passes(),
            ));
        }
    }
    lines
}

/// Applies `SYSTOLICA_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SYSTOLICA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("SYSTOLICA_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("systolica").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["flat", "B3", "2", "-2", "1"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["flat", "B7", "1"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["table", "--format", "xml"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("table"));
    }

    #[test]
    fn flat_command() {
        let (code, out, _) = run_args(&["flat", "B3", "2", "2", "1"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("ratio           1.000000"), "{out}");
        let (code, _, err) = run_args(&["flat", "B3", "2", "2", "1", "--fault-offset", "1e-6"]);
        assert_eq!(code, EXIT_INCONSISTENT);
        assert!(err.contains("disagrees"));
        let (code, out, _) =
            run_args(&["flat", "B2", "1", "-0.625", "0.7806247497997998", "0.125"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("1.281025"), "{out}");
    }

    #[test]
    fn suspension_command() {
        let (code, out, _) = run_args(&["suspension", "B2"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("1.321039"), "{out}");
        let (code, out, _) = run_args(&["--format", "json", "suspension", "B3", "d=2"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["systole"], 2.0);
    }

    #[test]
    fn resource_bound_exit_code() {
        assert_eq!(run_args(&["mesh-dump", "--h", "1e-8"]).0, EXIT_RESOURCE);
        assert_eq!(run_args(&["mesh-dump", "--h", "2"]).0, EXIT_USAGE);
    }
}
