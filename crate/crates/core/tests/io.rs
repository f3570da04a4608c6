mod common;

use hidim::matrix_io::{decode_flat_binary, encode_flat_binary, format_csv, parse_csv};
use hidim::report::{report_to_json, REPORT_SCHEMA};
use hidim::{
    detect, load_matrix, read_report, save_matrix, write_report, DetectConfig, Error,
    MatrixFormat, Methods, OrderBounds,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn finite_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..12, 1usize..40).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, r * c)
            .prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_binary_round_trip_is_bitwise(m in finite_matrix()) {
        let back = decode_flat_binary(&encode_flat_binary(&m).unwrap()).unwrap();
        prop_assert_eq!(back.values().shape(), m.shape());
        for (a, b) in back.values().iter().zip(m.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bitwise(m in finite_matrix()) {
        let back = parse_csv(&format_csv(&m)).unwrap();
        for (a, b) in back.values().iter().zip(m.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn file_round_trip_10_by_50() {
    let dir = tempfile::tempdir().unwrap();
    let m = common::gaussian(10, 50, &mut common::rng(1));
    for (name, format) in [("m.bin", MatrixFormat::FlatBinary), ("m.csv", MatrixFormat::Csv)] {
        let path = dir.path().join(name);
        save_matrix(&m, &path, format).unwrap();
        assert_eq!(MatrixFormat::from_path(&path), format);
        let back = load_matrix(&path, format).unwrap();
        assert_eq!(back.values(), &m);
    }
}

#[test]
fn rejects_truncated_and_non_finite_input() {
    let m = common::gaussian(4, 3, &mut common::rng(2));
    let bytes = encode_flat_binary(&m).unwrap();
    assert!(decode_flat_binary(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_flat_binary(b"nope").is_err());
    assert!(matches!(parse_csv("1,2\n3,NaN\n"), Err(Error::NonFinite { row: 1, col: 1 })));
    assert!(parse_csv("1,2\n3\n").is_err());
    let missing = load_matrix("/definitely/not/here.bin".as_ref(), MatrixFormat::FlatBinary);
    assert!(missing.unwrap_err().is_input_error());
}

fn schema_validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(report: &hidim::OutlierReport) {
    let doc: serde_json::Value = serde_json::from_str(&report_to_json(report).unwrap()).unwrap();
    let validator = schema_validator();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

#[test]
fn report_round_trip_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let y = common::data(common::gaussian(40, 120, &mut common::rng(3)));
    let report = detect(&y, &DetectConfig::default()).unwrap();
    report.check().unwrap();
    assert_valid(&report);

    let path = dir.path().join("report.json");
    write_report(&report, &path).unwrap();
    assert_eq!(read_report(&path).unwrap(), report);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert!(csv.starts_with("t,leverage,leverage_flag,distance,distance_flag,in_mcd_subset\n"));
}

#[test]
fn leverage_only_report_on_five_time_points() {
    let y = common::data(common::gaussian(5, 30, &mut common::rng(4)));
    let cfg = DetectConfig {
        order_bounds: OrderBounds { lo: 1, hi: 3 },
        methods: Methods { leverage: true, distance: false },
        ..DetectConfig::default()
    };
    let report = detect(&y, &cfg).unwrap();
    assert_eq!(report.t, 5);
    assert_eq!(report.leverage.as_ref().unwrap().len(), 5);
    assert!(report.distance.is_none() && report.distance_flags.is_none() && report.mcd.is_none());
    report.check().unwrap();
    assert_valid(&report);
}
