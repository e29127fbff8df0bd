//! Parses a model and evaluates it on a fixed 4 × 3 feature matrix.
#![no_main]

use gerryfair::model::Model;
use libfuzzer_sys::fuzz_target;
use nalgebra::DMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = Model::from_json(text) else {
        return;
    };
    let x = DMatrix::from_row_slice(4, 3, &[0., 0., 1., 0., 1., 0., 1., 0., 0.5, 1., 1., 2.]);
    if let Ok(d) = model.classifier(&x) {
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
    let _ = model.dual(&x);
    let _ = model.to_json();
});
