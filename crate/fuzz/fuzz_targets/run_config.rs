#![no_main]

use libfuzzer_sys::fuzz_target;
use modescope::config::RunConfig;

fuzz_target!(|text: &str| {
    if let Ok(config) = RunConfig::from_toml(text) {
        if config.validate().is_ok() {
            let _ = config.hash();
            let _ = config.multifractal_config();
        }
    }
});
