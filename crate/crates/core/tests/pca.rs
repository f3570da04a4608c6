mod common;

use hidim::pca_reduce::full_basis;
use hidim::{gram_svd, leverage, reduce, select_model_order, OrderBounds};
use nalgebra::DMatrix;

#[test]
fn gram_eigenvalues_match_direct_svd() {
    let y = common::gaussian(20, 100, &mut common::rng(10));
    let decomp = gram_svd(&common::data(y.clone())).unwrap();
    let mut sv: Vec<f64> = y.clone().svd(false, false).singular_values.iter().map(|s| s * s).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    for (lam, s2) in decomp.eigenvalues.iter().zip(&sv) {
        assert!(common::rel_err(*lam, *s2) < 1e-9, "{lam} vs {s2}");
    }
    let gram = &y * y.transpose();
    let utu = decomp.u.transpose() * &decomp.u;
    assert!((utu - DMatrix::identity(20, 20)).amax() < 1e-10);
    let rebuilt = &decomp.u * DMatrix::from_diagonal(&decomp.eigenvalues.clone().into()) * decomp.u.transpose();
    assert!((rebuilt - &gram).amax() < 1e-9 * gram.amax());
}

#[test]
fn model_order_hand_spectrum() {
    let mut spectrum = vec![10.0, 10.0];
    spectrum.extend([1.0; 18]);
    let mean = spectrum.iter().sum::<f64>() / 20.0;
    assert!((mean - 1.9).abs() < 1e-15);
    assert_eq!(select_model_order(&spectrum, OrderBounds::default()).unwrap(), 15);
    assert_eq!(select_model_order(&spectrum, OrderBounds { lo: 1, hi: 50 }).unwrap(), 2);
    let short = [3.0, 2.0, 1.0, 0.5, 0.1];
    assert_eq!(select_model_order(&short, OrderBounds::default()).unwrap(), 4);
    assert!(select_model_order(&spectrum, OrderBounds { lo: 0, hi: 5 }).is_err());
}

fn reconstruction_error(y: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
    (y - u * (u.transpose() * y)).norm_squared()
}

#[test]
fn eckart_young_and_monotone_error() {
    for seed in 0..5 {
        let y = common::gaussian(12, 40, &mut common::rng(20 + seed));
        let decomp = gram_svd(&common::data(y.clone())).unwrap();
        let mut last = f64::INFINITY;
        for q in 1..12 {
            let basis = reduce(&decomp, q).unwrap();
            let err = reconstruction_error(&y, &basis.u);
            let tail: f64 = decomp.eigenvalues[q..].iter().sum();
            assert!(common::rel_err(err, tail) < 1e-6, "q = {q}: {err} vs {tail}");
            assert!(err < last);
            last = err;
        }
    }
}

#[test]
fn reduce_rejects_full_and_empty_orders() {
    let decomp = gram_svd(&common::data(common::gaussian(6, 20, &mut common::rng(3)))).unwrap();
    assert!(reduce(&decomp, 0).is_err());
    assert!(reduce(&decomp, 6).is_err());
    assert_eq!(full_basis(&decomp).q, 6);
}

#[test]
fn leverage_ignores_column_signs() {
    let decomp = gram_svd(&common::data(common::gaussian(30, 80, &mut common::rng(4)))).unwrap();
    let basis = reduce(&decomp, 8).unwrap();
    let mut flipped = basis.clone();
    for k in [0, 3, 7] {
        flipped.u.column_mut(k).neg_mut();
    }
    for (a, b) in leverage(&basis).iter().zip(leverage(&flipped)) {
        assert!((a - b).abs() < 1e-14);
    }
}
