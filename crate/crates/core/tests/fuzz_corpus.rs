//! Replays the checked-in fuzz corpus through the parser entry points on
//! stable, so the seeds stay meaningful and crash-free without libFuzzer.

use std::path::{Path, PathBuf};

use gerryfair::data::{read_csv, DatasetSchema};
use gerryfair::model::{read_predictions, Model};
use nalgebra::DMatrix;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).unwrap())
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "no seeds for {target}");
    seeds
}

#[test]
fn csv_dataset_seeds() {
    for (name, data) in corpus("csv_dataset") {
        let split = data.iter().position(|&b| b == b'\n').unwrap();
        let schema = DatasetSchema::from_json(std::str::from_utf8(&data[..split]).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let ds = read_csv(&data[split + 1..], &schema).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!ds.is_empty(), "{name}");
        assert!(ds.features().iter().all(|v| v.is_finite()), "{name}");
    }
}

#[test]
fn schema_json_seeds() {
    for (name, data) in corpus("schema_json") {
        let parsed = DatasetSchema::from_json(std::str::from_utf8(&data).unwrap());
        // a schema without protected columns is the deliberate invalid seed
        assert_eq!(parsed.is_ok(), name != "no_protected", "{name}: {parsed:?}");
    }
}

#[test]
fn predictions_csv_seeds() {
    for (name, data) in corpus("predictions_csv") {
        let parsed = read_predictions(data.as_slice());
        assert_eq!(parsed.is_ok(), name != "bad_value", "{name}: {parsed:?}");
    }
}

#[test]
fn model_json_seeds() {
    let x = DMatrix::from_row_slice(4, 3, &[0., 0., 1., 0., 1., 0., 1., 0., 0.5, 1., 1., 2.]);
    for (name, data) in corpus("model_json") {
        let model = Model::from_json(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let d = model.classifier(&x).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9, "{name}");
        model.dual(&x).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = Model::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(again, model, "{name}");
    }
}

mod arbitrary_input {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = DatasetSchema::from_json(&text);
            let _ = read_predictions(bytes.as_slice());
            let _ = Model::from_json(&text);
            let schema = DatasetSchema::new(&["a"], "y");
            let _ = read_csv(bytes.as_slice(), &schema);
        }

        #[test]
        fn csv_shaped_input_never_panics(
            rows in proptest::collection::vec(proptest::collection::vec("[-0-9.eE,a-z\"]{0,6}", 0..4), 0..6),
        ) {
            let mut body = String::from("a,b,y\n");
            for r in &rows {
                body.push_str(&r.join(","));
                body.push('\n');
            }
            let mut schema = DatasetSchema::new(&["a"], "y");
            let _ = read_csv(body.as_bytes(), &schema);
            schema.fill_missing = Some(0.0);
            schema.percentile = Some(50.0);
            let _ = read_csv(body.as_bytes(), &schema);
            let _ = read_predictions(body.replace("a,b,y", "D").as_bytes());
        }
    }
}
