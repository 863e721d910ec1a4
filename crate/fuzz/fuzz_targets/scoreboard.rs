#![no_main]

use dqas::pipeline::store::{
    parse_records, render_records, ExprRecord, GeneratedRecord, Manifest, PathRecord, QueryRecord,
    TimingRecord,
};
use libfuzzer_sys::fuzz_target;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn check<T: DeserializeOwned + Serialize + PartialEq + std::fmt::Debug>(text: &str) {
    if let Ok(records) = parse_records::<T>(text) {
        let again: Vec<T> = parse_records(&render_records(&records)).expect("round trip");
        assert_eq!(again.len(), records.len());
    }
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    check::<GeneratedRecord>(text);
    check::<PathRecord>(text);
    check::<ExprRecord>(text);
    check::<QueryRecord>(text);
    check::<TimingRecord>(text);
    let _ = serde_json::from_str::<Manifest>(text);
});
