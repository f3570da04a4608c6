mod common;

use hidim::mcd_detector::{default_h, fast_mcd_with};
use hidim::report::report_to_json;
use hidim::seeds::derive_seed;
use hidim::{
    calibrate, detect, distance_outliers, gram_svd, leverage, leverage_outliers, reduce,
    robust_scale, select_model_order, DetectConfig, Methods, OrderBounds,
};

#[test]
fn report_matches_modules_run_in_sequence() {
    let mut values = common::gaussian(60, 200, &mut common::rng(1));
    values.row_mut(17).scale_mut(8.0);
    let y = common::data(values);
    let cfg = DetectConfig { seed: 42, ..DetectConfig::default() };
    let report = detect(&y, &cfg).unwrap();

    let (scaled, _) = robust_scale(&y).unwrap();
    let decomp = gram_svd(&scaled).unwrap();
    let q = select_model_order(&decomp.eigenvalues, cfg.order_bounds).unwrap();
    let basis = reduce(&decomp, q).unwrap();
    let lev = leverage_outliers(&leverage(&basis), cfg.alpha);
    let h = default_h(60, q);
    let fit = fast_mcd_with(&basis.u, h, derive_seed(42, &[1]), &cfg.mcd).unwrap();
    let cal = calibrate(60, q, h, cfg.gamma, derive_seed(42, &[2])).unwrap();
    let dist = distance_outliers(&basis.u, &fit, &cal).unwrap();

    assert_eq!(report.q, q);
    assert_eq!(report.leverage.as_ref().unwrap(), &lev.h);
    assert_eq!(report.leverage_flags.as_ref().unwrap(), &lev.flags);
    assert_eq!(report.distance_flags.as_ref().unwrap(), &dist.flags);
    assert_eq!(report.mcd.as_ref().unwrap().subset, fit.subset);
    assert!(report.distance_outliers().contains(&17));
    assert!(report.leverage_outliers().contains(&17));
    report.check().unwrap();
}

#[test]
fn detection_is_a_pure_function_of_its_inputs() {
    let y = common::data(common::gaussian(45, 150, &mut common::rng(2)));
    let cfg = DetectConfig { seed: 9, ..DetectConfig::default() };
    let a = report_to_json(&detect(&y, &cfg).unwrap()).unwrap();
    let b = report_to_json(&detect(&y, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn leverage_only_leaves_distance_fields_empty() {
    let y = common::data(common::gaussian(30, 90, &mut common::rng(3)));
    let cfg = DetectConfig { methods: Methods { leverage: true, distance: false }, ..DetectConfig::default() };
    let report = detect(&y, &cfg).unwrap();
    assert!(report.leverage.is_some());
    assert!(report.distance.is_none() && report.mcd.is_none() && report.n_distance_outliers.is_none());
    let json = report_to_json(&report).unwrap();
    assert!(json.contains("\"distance\": null"));
}

#[test]
fn invalid_configurations_are_rejected() {
    let y = common::data(common::gaussian(30, 60, &mut common::rng(4)));
    let bad = [
        DetectConfig { alpha: 1.0, ..DetectConfig::default() },
        DetectConfig { gamma: 0.5, ..DetectConfig::default() },
        DetectConfig { order_bounds: OrderBounds { lo: 10, hi: 5 }, ..DetectConfig::default() },
        DetectConfig { h_ratio: Some(0.4), ..DetectConfig::default() },
    ];
    for cfg in bad {
        assert!(detect(&y, &cfg).unwrap_err().is_input_error());
    }
    let short = common::data(common::gaussian(19, 60, &mut common::rng(5)));
    assert!(detect(&short, &DetectConfig::default()).is_err());
}

#[test]
fn constant_columns_are_reported() {
    let mut values = common::gaussian(30, 40, &mut common::rng(6));
    values.column_mut(3).fill(2.0);
    let report = detect(&common::data(values), &DetectConfig::default()).unwrap();
    assert_eq!(report.dropped_cols, vec![3]);
    assert_eq!(report.v, 40);
}
