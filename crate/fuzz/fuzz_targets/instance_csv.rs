#![no_main]

use libfuzzer_sys::fuzz_target;
use obsp_core::instance::{parse_instance, render_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Parsing must never panic, and anything it accepts must survive a
    // render/reparse round trip structurally unchanged.
    if let Ok(instance) = parse_instance(text) {
        let rendered = render_instance(&instance);
        let again = parse_instance(&rendered).expect("rendered instance parses");
        assert_eq!(instance, again);
    }
});
