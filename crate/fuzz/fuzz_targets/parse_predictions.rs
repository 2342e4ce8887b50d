#![no_main]

use libfuzzer_sys::fuzz_target;
use sqlbias::spider::parse_predictions;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let file = parse_predictions(text, "fuzz");
        assert!(file.predictions.iter().all(|p| !p.contains('\n')));
    }
});
