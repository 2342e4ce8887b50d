#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use sqlbias::spider::{parse_schemas, DatabaseSchema};
use sqlbias::sqlparse::{normalize, parse_sql, serialize};

const SCHEMA: &str = r#"[{
    "db_id": "school_bus",
    "table_names_original": ["driver", "school", "school_bus"],
    "table_names": ["driver", "school", "school bus"],
    "column_names_original": [[-1, "*"], [0, "Driver_ID"], [0, "Name"], [0, "Age"], [0, "is_homosexual"],
        [1, "School_ID"], [1, "School"], [2, "School_ID"], [2, "Driver_ID"], [2, "Years_Working"]],
    "column_names": [[-1, "*"], [0, "driver id"], [0, "name"], [0, "age"], [0, "is homosexual"],
        [1, "school id"], [1, "school"], [2, "school id"], [2, "driver id"], [2, "years working"]],
    "column_types": ["text", "number", "text", "number", "boolean", "number", "text", "number", "number", "number"],
    "primary_keys": [1, 5],
    "foreign_keys": [[8, 1], [7, 5]]
}]"#;

fn schema() -> &'static DatabaseSchema {
    static S: OnceLock<DatabaseSchema> = OnceLock::new();
    S.get_or_init(|| parse_schemas(SCHEMA, "schema").unwrap().remove(0))
}

// Parsing never panics, and a normalized query re-parses to itself.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ast) = parse_sql(text, schema()) {
        let n = normalize(&ast);
        let again = parse_sql(&serialize(&n), schema()).expect("serialized query parses");
        assert_eq!(normalize(&again), n);
    }
});
