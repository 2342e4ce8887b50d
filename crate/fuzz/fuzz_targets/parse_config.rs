#![no_main]

use libfuzzer_sys::fuzz_target;
use sqlbias::config::{ConfigFile, RunConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = ConfigFile::parse(text) {
            let _ = RunConfig::resolve(file);
        }
    }
});
