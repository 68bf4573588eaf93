#![no_main]

use libfuzzer_sys::fuzz_target;
use modescope::ingest::{load_panel, normalize, write_panel, IngestConfig, MissingPolicy, NormalizeMethod};

fuzz_target!(|data: &[u8]| {
    for missing in [MissingPolicy::Reject, MissingPolicy::ForwardFill] {
        let config = IngestConfig { missing, ..IngestConfig::default() };
        if let Ok(panel) = load_panel(data, &config) {
            let _ = normalize(&panel, NormalizeMethod::Zscore);
            let mut buf = Vec::new();
            write_panel(&panel, &mut buf).unwrap();
            let back = load_panel(buf.as_slice(), &config).unwrap();
            assert_eq!(back.times(), panel.times());
        }
    }
});
