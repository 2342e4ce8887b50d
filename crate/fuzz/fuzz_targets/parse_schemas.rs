#![no_main]

use libfuzzer_sys::fuzz_target;
use sqlbias::spider::{parse_schemas, schemas_to_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(schemas) = parse_schemas(text, "fuzz") {
            let again = parse_schemas(&schemas_to_json(&schemas), "fuzz").expect("serialized schemas parse");
            assert_eq!(again, schemas);
        }
    }
});
