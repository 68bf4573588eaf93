#![no_main]

use libfuzzer_sys::fuzz_target;
use modescope::synth::{gen_planted_cycles, parse_cycles};

fuzz_target!(|text: &str| {
    if let Ok(cycles) = parse_cycles(text) {
        if cycles[0].loading.len() <= 64 {
            let _ = gen_planted_cycles(&cycles, 32, 0.0, 0);
        }
    }
});
