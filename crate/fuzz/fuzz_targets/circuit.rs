#![no_main]

use dqas::circuit::Circuit;
use dqas::dag::build_dag;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(c) = Circuit::from_text(text) {
        assert_eq!(Circuit::from_text(&c.to_text()).expect("round trip"), c);
        if c.qubit_span() <= 4096 {
            let _ = build_dag(&c, c.qubit_span());
        }
    }
});
