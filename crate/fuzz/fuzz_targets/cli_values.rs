#![no_main]

use libfuzzer_sys::fuzz_target;
use modescope::dmd::PowerDefinition;
use modescope::ingest::{MissingPolicy, NormalizeMethod};
use modescope::multifractal::LevelRange;
use modescope::wavelet::{FilterPair, Padding};

fuzz_target!(|text: &str| {
    if let Ok(r) = text.parse::<LevelRange>() {
        assert!(r.count() >= 1 && r.iter().all(|j| j >= 1));
    }
    let _ = text.parse::<NormalizeMethod>();
    let _ = text.parse::<MissingPolicy>();
    let _ = text.parse::<FilterPair>();
    let _ = text.parse::<Padding>();
    let _ = text.parse::<PowerDefinition>();
});
