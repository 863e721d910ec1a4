#![no_main]

use dqas::hamiltonian::PauliHamiltonian;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(h) = PauliHamiltonian::from_text(text) {
        let back = PauliHamiltonian::from_text(&h.to_text()).expect("round trip");
        assert_eq!(back.n_qubits(), h.n_qubits());
        assert_eq!(back.terms().len(), h.terms().len());
    }
});
