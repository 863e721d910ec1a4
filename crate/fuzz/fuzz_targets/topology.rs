#![no_main]

use dqas::device::DeviceGraph;
use dqas::vcg::derive_position_sets;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = DeviceGraph::from_toml_str(text) {
        let back = DeviceGraph::from_toml_str(&d.to_toml_string()).expect("round trip");
        assert_eq!(back, d);
        if d.num_qubits() <= 64 {
            let _ = derive_position_sets(&d);
        }
    }
});
