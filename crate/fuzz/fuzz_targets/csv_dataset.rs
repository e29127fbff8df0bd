//! Input: a schema JSON line, a newline, then CSV text.
#![no_main]

use gerryfair::data::{read_csv, DatasetSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == b'\n').unwrap_or(data.len());
    let Ok(text) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    let Ok(schema) = DatasetSchema::from_json(text) else {
        return;
    };
    let body = data.get(split + 1..).unwrap_or(&[]);
    if let Ok(ds) = read_csv(body, &schema) {
        assert_eq!(ds.features().nrows(), ds.len());
        assert_eq!(ds.weights().len(), ds.len());
        assert!(ds.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!(ds.features().iter().all(|v| v.is_finite()));
    }
});
