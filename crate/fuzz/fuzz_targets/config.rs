#![no_main]

use std::path::Path;

use dqas::pipeline::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = PipelineConfig::from_toml_str(text, Path::new("/fuzz")) {
        let back = PipelineConfig::from_toml_str(&cfg.to_toml_string(), Path::new("/fuzz"))
            .expect("round trip");
        assert_eq!(back, cfg);
        let _ = cfg.query_budget();
    }
});
