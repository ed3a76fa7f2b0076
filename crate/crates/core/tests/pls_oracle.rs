mod support;

use skyaug::pls::{fit_pls2, r2_score, sweep_ncomp, R2Mode, XY};
use support::oracles::{ols_predict, regression_fixture, to_rows};

#[test]
fn full_rank_matches_least_squares() {
    for seed in 0..5 {
        let (x, y) = regression_fixture(30, 6, 3, seed);
        let model = fit_pls2(&x, &y, 6).unwrap();
        let pred = to_rows(&model.predict(&x).unwrap());
        let oracle = ols_predict(&to_rows(&x), &to_rows(&y), &to_rows(&x));
        for (a, b) in pred.iter().flatten().zip(oracle.iter().flatten()) {
            assert!((a - b).abs() < 1e-6, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn training_r2_grows_with_components() {
    for seed in 0..5 {
        let (x, y) = regression_fixture(30, 6, 3, seed);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=6 {
            let m = fit_pls2(&x, &y, k).unwrap();
            let r2 = r2_score(&y, &m.predict(&x).unwrap()).unwrap();
            assert!(r2 >= prev - 1e-9, "seed {seed}, k {k}: {r2} < {prev}");
            prev = r2;
        }
    }
}

#[test]
fn x_scores_are_orthogonal() {
    for seed in 0..5 {
        let (x, y) = regression_fixture(30, 6, 3, seed);
        let t = fit_pls2(&x, &y, 6).unwrap().x_scores;
        for a in 0..t.ncols() {
            for b in 0..a {
                let dot = t.column(a).dot(&t.column(b));
                assert!(dot.abs() < 1e-8, "seed {seed}: t{a}·t{b} = {dot}");
            }
        }
    }
}

#[test]
fn sweep_agrees_with_direct_fits() {
    let (x, y) = regression_fixture(40, 8, 2, 9);
    let train = XY::new(x.rows(0, 30).into(), y.rows(0, 30).into()).unwrap();
    let val = XY::new(x.rows(30, 10).into(), y.rows(30, 10).into()).unwrap();
    let report = sweep_ncomp(&train, &val, 8, R2Mode::Pooled).unwrap();
    assert_eq!(report.rows.len(), 8);
    for row in &report.rows {
        let m = fit_pls2(&train.x, &train.y, row.n_comp).unwrap();
        let r2v = r2_score(&val.y, &m.predict(&val.x).unwrap()).unwrap();
        assert!((r2v - row.r2_val).abs() < 1e-9);
    }
    let best = report.rows.iter().map(|r| r.r2_val).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.chosen_row().r2_val, best);
    assert_eq!(report.to_csv().lines().count(), 9);
}
