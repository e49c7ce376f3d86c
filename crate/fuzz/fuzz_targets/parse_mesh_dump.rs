#![no_main]
use libfuzzer_sys::fuzz_target;
use systolica::mesh::MeshDump;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(dump) = text.parse::<MeshDump>() {
        for &(u, v, w) in &dump.edges {
            assert!(u < dump.nodes.len() && v < dump.nodes.len());
            assert!(w.is_finite() && w >= 0.0);
        }
        assert!(dump.nodes.iter().all(|n| n.theta.is_finite() && n.phi.is_finite() && n.j <= 1));
    }
});
