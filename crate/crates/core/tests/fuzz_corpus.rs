//! Replays the checked-in fuzz corpora through the parsers.

use std::fs;
use std::path::{Path, PathBuf};

use dqas::circuit::Circuit;
use dqas::dag::build_dag;
use dqas::device::DeviceGraph;
use dqas::hamiltonian::PauliHamiltonian;
use dqas::pipeline::store::{
    parse_records, render_records, ExprRecord, GeneratedRecord, Manifest, PathRecord, QueryRecord,
    TimingRecord,
};
use dqas::pipeline::PipelineConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {target}");
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect()
}

#[test]
fn topology_seeds() {
    let mut ok = 0;
    for (name, text) in corpus("topology") {
        if let Ok(d) = DeviceGraph::from_toml_str(&text) {
            assert_eq!(
                DeviceGraph::from_toml_str(&d.to_toml_string()).unwrap(),
                d,
                "{name}"
            );
            ok += 1;
        }
    }
    assert_eq!(ok, 2);
}

#[test]
fn hamiltonian_seeds() {
    for (name, text) in corpus("hamiltonian") {
        let parsed = PauliHamiltonian::from_text(&text);
        let expect_ok = !matches!(name.as_str(), "length_mismatch.txt" | "nonfinite.txt");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}");
        if let Ok(h) = parsed {
            let back = PauliHamiltonian::from_text(&h.to_text()).unwrap();
            assert_eq!(back.terms(), h.terms(), "{name}");
        }
    }
}

#[test]
fn circuit_seeds() {
    for (name, text) in corpus("circuit") {
        let parsed = Circuit::from_text(&text);
        assert_eq!(parsed.is_ok(), name != "bad_gate.txt", "{name}");
        if let Ok(c) = parsed {
            assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
            build_dag(&c, c.qubit_span());
        }
    }
}

#[test]
fn config_seeds() {
    let base = Path::new("/corpus");
    for (name, text) in corpus("config") {
        let parsed = PipelineConfig::from_toml_str(&text, base);
        assert_eq!(parsed.is_ok(), name != "missing_fields.toml", "{name}");
        if let Ok(cfg) = parsed {
            let back = PipelineConfig::from_toml_str(&cfg.to_toml_string(), base).unwrap();
            assert_eq!(back, cfg);
        }
    }
}

fn round_trip<T: DeserializeOwned + Serialize + PartialEq + std::fmt::Debug>(text: &str) -> bool {
    match parse_records::<T>(text) {
        Ok(r) => {
            assert_eq!(parse_records::<T>(&render_records(&r)).unwrap(), r);
            true
        }
        Err(_) => false,
    }
}

#[test]
fn scoreboard_seeds() {
    for (name, text) in corpus("scoreboard") {
        let hits = [
            round_trip::<GeneratedRecord>(&text),
            round_trip::<PathRecord>(&text),
            round_trip::<ExprRecord>(&text),
            round_trip::<QueryRecord>(&text),
            round_trip::<TimingRecord>(&text),
            serde_json::from_str::<Manifest>(&text).is_ok(),
        ];
        let n = hits.iter().filter(|h| **h).count();
        let want = usize::from(name != "torn_tail.jsonl");
        assert_eq!(n, want, "{name}: {hits:?}");
    }
}
