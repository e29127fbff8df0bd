#![no_main]

use gerryfair::data::DatasetSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(schema) = DatasetSchema::from_json(text) {
        schema.validate().expect("parsed schemas are valid");
    }
});
