mod common;

use hidim::{
    gram_svd, leverage, leverage_outliers, reduce, robust_scale, run, DataMatrix, DetectConfig,
    Methods, OrderBounds, ReducedBasis,
};
use nalgebra::DMatrix;
use rand::Rng;

fn basis_of(y: &DMatrix<f64>, q: usize) -> ReducedBasis {
    let (scaled, _) = robust_scale(&common::data(y.clone())).unwrap();
    reduce(&gram_svd(&scaled).unwrap(), q).unwrap()
}

#[test]
fn matches_hat_matrix_of_scores() {
    for seed in 0..5 {
        let basis = basis_of(&common::gaussian(50, 300, &mut common::rng(seed)), 10);
        let h = leverage(&basis);
        let hat = common::hat_diagonal(&basis.scores());
        for (a, b) in h.iter().zip(&hat) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((h.iter().sum::<f64>() - 10.0).abs() < 1e-8);
        assert!(h.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}

#[test]
fn invariant_to_rotations_and_scaling_of_the_basis() {
    let mut rng = common::rng(7);
    let basis = basis_of(&common::gaussian(40, 150, &mut rng), 6);
    let h = leverage(&basis);
    let rotated = ReducedBasis { u: &basis.u * common::orthogonal(6, &mut rng), ..basis.clone() };
    for (a, b) in h.iter().zip(leverage(&rotated)) {
        assert!((a - b).abs() < 1e-12);
    }
    let from_scores = common::hat_diagonal(&basis.scores());
    let from_u = common::hat_diagonal(&basis.u);
    for ((a, b), c) in h.iter().zip(&from_scores).zip(&from_u) {
        assert!((a - b).abs() < 1e-10 && (a - c).abs() < 1e-12);
    }
}

#[test]
fn far_row_gets_the_largest_leverage() {
    let (trials, q) = (100, 5);
    let mut rng = common::rng(11);
    let mut hits = 0;
    for _ in 0..trials {
        let (mut scaled, _) = robust_scale(&common::data(common::gaussian(20, 60, &mut rng))).unwrap();
        let mut y = scaled.values().clone();
        let row = rng.random_range(0..20);
        let typical = (0..20).map(|i| y.row(i).norm()).sum::<f64>() / 20.0;
        let direction = common::gaussian(1, y.ncols(), &mut rng);
        let far = &direction * (100.0 * typical / direction.norm());
        y.row_mut(row).copy_from(&far);
        scaled = common::data(y);
        let h = leverage(&reduce(&gram_svd(&scaled).unwrap(), q).unwrap());
        let top = (0..20).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
        hits += usize::from(top == row);
    }
    assert!(hits >= 99, "{hits} of {trials}");
}

#[test]
fn duplicating_rows_duplicates_flags() {
    let y = common::gaussian(21, 80, &mut common::rng(12));
    // doubling the rows moves the eigenvalue mean, so the order is pinned
    let cfg = DetectConfig {
        order_bounds: OrderBounds { lo: 6, hi: 6 },
        methods: Methods { leverage: true, distance: false },
        ..DetectConfig::default()
    };
    let once = run(&common::data(y.clone()), &cfg).unwrap();
    let mut doubled = DMatrix::zeros(42, 80);
    doubled.rows_mut(0, 21).copy_from(&y);
    doubled.rows_mut(21, 21).copy_from(&y);
    let twice = run(&DataMatrix::new(doubled).unwrap(), &cfg).unwrap();
    assert_eq!(once.basis.q, twice.basis.q);

    let (a, b) = (once.leverage.unwrap(), twice.leverage.unwrap());
    for t in 0..21 {
        assert!((b.h[t] - a.h[t] / 2.0).abs() < 1e-10);
        assert!((b.h[t + 21] - b.h[t]).abs() < 1e-10);
        assert_eq!(b.flags[t], a.flags[t]);
        assert_eq!(b.flags[t + 21], a.flags[t]);
    }
}

#[test]
fn threshold_is_strict() {
    let r = leverage_outliers(&[0.3, 0.1, 0.1, 0.1, 0.05], 3.0);
    assert_eq!(r.threshold, 0.30000000000000004);
    assert!(r.flags.iter().all(|f| !f));
    let r = leverage_outliers(&[0.9, 0.02, 0.02, 0.02, 0.02], 3.0);
    assert_eq!(r.flagged(), vec![0]);
    assert!((r.threshold - 0.06).abs() < 1e-15);
}
