use std::io;
use std::process::ExitCode;

use systolica::cli;

fn main() -> ExitCode {
    if let Err(message) = cli::configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(cli::EXIT_USAGE as u8);
    }
    let code = cli::run(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
