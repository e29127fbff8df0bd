#![no_main]

use gerryfair::model::read_predictions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = read_predictions(data) {
        assert!(!d.is_empty());
    }
});
