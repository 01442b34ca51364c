#![no_main]

use libfuzzer_sys::fuzz_target;
use obsp_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Parsing must never panic, and anything it accepts must reach the
    // canonical form in one render.
    if let Ok(cfg) = ExperimentConfig::parse_str(text) {
        let canon = cfg.canonical_render();
        let again = ExperimentConfig::parse_str(&canon).expect("canonical form parses");
        assert_eq!(again.canonical_render(), canon);
    }
});
