use approx::assert_abs_diff_eq;
use nof1_apte::features::{FeatureEncoder, FeatureMatrix, FeatureSpec, OutcomeLag};
use nof1_apte::models::forest::{draw_samples, fit_forest, fit_forest_with_samples, ForestTask};
use nof1_apte::models::{
    fit_forest_outcome, fit_forest_propensity, fit_linear_outcome, fit_logistic_propensity, ForestConfig,
};
use nof1_apte::seed::{open_unit, std_normal, SeedSpec};
use rand::Rng;

/// Matrix of arbitrary rows labelled as exogenous columns `v0, v1, ...`.
fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
    let p = rows[0].len();
    let spec = FeatureSpec {
        include_current_exposure: false,
        use_exposure_lag1: false,
        outcome_lag_mode: OutcomeLag::None,
        exog_names: (0..p).map(|j| format!("v{j}")).collect(),
    };
    FeatureMatrix {
        periods: (1..=rows.len()).collect(),
        rows,
        dropped_head: 0,
        encoder: FeatureEncoder { spec, quartiles: None },
    }
}

fn random_rows(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeedSpec::new(seed).rng();
    (0..n).map(|_| (0..p).map(|_| std_normal(&mut rng)).collect()).collect()
}

#[test]
fn ols_constant_response() {
    let fm = matrix((0..10).map(|i| vec![i as f64]).collect());
    let m = fit_linear_outcome(&fm, &[4.5; 10]).unwrap();
    let c = m.coefficients().unwrap();
    assert_abs_diff_eq!(c[0].1, 4.5, epsilon = 1e-12);
    assert_abs_diff_eq!(c[1].1, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(m.resid_sd, 0.0, epsilon = 1e-12);
}

#[test]
fn ols_two_point_interpolation_is_exact() {
    let fm = matrix(vec![vec![0.0], vec![1.0]]);
    let m = fit_linear_outcome(&fm, &[2.0, 3.1]).unwrap();
    let c = m.coefficients().unwrap();
    assert_eq!(c[0].1, 2.0);
    assert_eq!(c[1].1, 1.1);
    assert_eq!(m.predict_row(&[0.0]), 2.0);
    assert_eq!(m.predict_row(&[1.0]), 3.1);
}

#[test]
fn ols_residuals_orthogonal_to_design() {
    let rows = random_rows(200, 3, 11);
    let mut rng = SeedSpec::new(12).rng();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 + 2.0 * r[0] - 0.5 * r[1] + 0.3 * r[2] + std_normal(&mut rng))
        .collect();
    let fm = matrix(rows.clone());
    let m = fit_linear_outcome(&fm, &y).unwrap();
    let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, y)| y - m.predict_row(r)).collect();
    assert!(resid.iter().sum::<f64>().abs() < 1e-9);
    for j in 0..3 {
        let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
        assert!(dot.abs() < 1e-9, "column {j}: {dot}");
    }
}

#[test]
fn ols_rank_deficiency_reported() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let e = fit_linear_outcome(&matrix(rows), &[1.0; 10]).unwrap_err().to_string();
    assert!(e.contains("v1"), "{e}");
}

fn grouped(counts: [(u32, u32); 2]) -> (FeatureMatrix, Vec<u8>) {
    // counts[g] = (successes, failures) for predictor value g
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (g, (s, f)) in counts.iter().enumerate() {
        for _ in 0..*s {
            rows.push(vec![g as f64]);
            y.push(1);
        }
        for _ in 0..*f {
            rows.push(vec![g as f64]);
            y.push(0);
        }
    }
    (matrix(rows), y)
}

fn logistic_coefs(fm: &FeatureMatrix, y: &[u8]) -> Vec<f64> {
    fit_logistic_propensity(fm, y)
        .unwrap()
        .coefficients()
        .unwrap()
        .into_iter()
        .map(|(_, b)| b)
        .collect()
}

#[test]
fn irls_balanced_outcome_gives_zero() {
    let (fm, y) = grouped([(5, 5), (5, 5)]);
    let b = logistic_coefs(&fm, &y);
    assert_abs_diff_eq!(b[0], 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(b[1], 0.0, epsilon = 1e-10);
}

#[test]
fn irls_three_quarters_gives_log_three() {
    let (fm, y) = grouped([(3, 1), (6, 2)]);
    let b = logistic_coefs(&fm, &y);
    assert_abs_diff_eq!(b[0], 3f64.ln(), epsilon = 1e-8);
    assert_abs_diff_eq!(b[1], 0.0, epsilon = 1e-8);
}

#[test]
fn irls_two_by_two_odds_ratio() {
    let (fm, y) = grouped([(1, 3), (3, 1)]);
    let b = logistic_coefs(&fm, &y);
    assert_abs_diff_eq!(b[0], (1.0f64 / 3.0).ln(), epsilon = 1e-8);
    assert_abs_diff_eq!(b[1], 9f64.ln(), epsilon = 1e-8);
}

#[test]
fn irls_score_equations_hold() {
    let rows = random_rows(300, 2, 21);
    let mut rng = SeedSpec::new(22).rng();
    let y: Vec<u8> = rows
        .iter()
        .map(|r| {
            let p = 1.0 / (1.0 + (-(0.3 + 0.8 * r[0] - 0.5 * r[1])).exp());
            u8::from(open_unit(&mut rng) < p)
        })
        .collect();
    let fm = matrix(rows.clone());
    let model = fit_logistic_propensity(&fm, &y).unwrap();
    let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, &y)| f64::from(y) - model.predict_row(r)).collect();
    assert!(resid.iter().sum::<f64>().abs() < 1e-6);
    for j in 0..2 {
        let s: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
        assert!(s.abs() < 1e-6, "score {j} = {s}");
    }
}

#[test]
fn irls_single_class_and_separation() {
    let (fm, _) = grouped([(2, 2), (2, 2)]);
    assert!(fit_logistic_propensity(&fm, &[1; 8]).is_err());
    let (fm, y) = grouped([(0, 4), (4, 0)]);
    let m = fit_logistic_propensity(&fm, &y);
    // perfectly separated: either flagged or reported as non-convergence
    if let Ok(m) = m {
        assert!(m.separation_warning());
    }
}

fn single_tree(p: usize, max_depth: Option<usize>, min_node: usize) -> ForestConfig {
    ForestConfig {
        n_trees: 1,
        mtry: Some(p),
        min_node_size: Some(min_node),
        max_depth,
        bootstrap: false,
        seed: SeedSpec::new(5),
    }
}

#[test]
fn forest_constant_response_predicts_constant() {
    let rows = random_rows(60, 2, 31);
    let fm = matrix(rows.clone());
    let m = fit_forest_outcome(&fm, &[3.25; 60], &ForestConfig { n_trees: 20, ..Default::default() }).unwrap();
    for r in random_rows(50, 2, 32) {
        assert_eq!(m.predict_row(&r), 3.25);
    }
    assert_eq!(m.resid_sd, 0.0);
}

/// Exhaustive best single split by residual sum of squares.
fn brute_force_split(rows: &[Vec<f64>], y: &[f64], min_node: usize) -> (usize, f64) {
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0, 0.0);
    for j in 0..rows[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i][j] <= thr);
            if l.len() < min_node || r.len() < min_node {
                continue;
            }
            let s = sse(&l) + sse(&r);
            if s < best.0 {
                best = (s, j, thr);
            }
        }
    }
    (best.1, best.2)
}

#[test]
fn forest_stump_matches_brute_force() {
    for seed in 0..5 {
        let rows = random_rows(40, 3, 100 + seed);
        let y: Vec<f64> = rows.iter().map(|r| r[1].powi(2) + 0.3 * r[0]).collect();
        let f = fit_forest(&rows, &y, ForestTask::Regression, &single_tree(3, Some(1), 1)).unwrap();
        let (j, thr) = f.trees[0].root_split().unwrap();
        let (bj, bthr) = brute_force_split(&rows, &y, 1);
        assert_eq!(j, bj);
        assert_abs_diff_eq!(thr, bthr, epsilon = 1e-12);
        assert_eq!(f.trees[0].depth(), 1);
    }
}

#[test]
fn forest_separable_classes_fit_exactly() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
    let y: Vec<f64> = (0..30).map(|i| f64::from(u8::from(i >= 13))).collect();
    let f = fit_forest(&rows, &y, ForestTask::Classification, &single_tree(2, None, 1)).unwrap();
    for (r, y) in rows.iter().zip(&y) {
        assert_eq!(f.predict(r), *y);
    }
}

#[test]
fn forest_probabilities_stay_in_unit_interval() {
    let rows = random_rows(150, 2, 41);
    let mut rng = SeedSpec::new(42).rng();
    let x: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 0.5 * std_normal(&mut rng) > 0.0)).collect();
    let fm = matrix(rows);
    let m = fit_forest_propensity(&fm, &x, &ForestConfig { n_trees: 50, ..Default::default() }).unwrap();
    let mut rng = SeedSpec::new(43).rng();
    for _ in 0..10_000 {
        let r = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let p = m.predict_row(&r);
        assert!((0.0..=1.0).contains(&p), "{p}");
    }
}

#[test]
fn forest_invariant_to_row_order_given_remapped_samples() {
    let rows = random_rows(80, 3, 51);
    let y: Vec<f64> = rows.iter().map(|r| r[0] - r[2].abs()).collect();
    let cfg = ForestConfig { n_trees: 25, seed: SeedSpec::new(9), ..Default::default() };
    let samples = draw_samples(&cfg, rows.len());
    let a = fit_forest_with_samples(&rows, &y, ForestTask::Regression, &cfg, &samples).unwrap();

    // reverse the rows and remap every bootstrap position accordingly
    let n = rows.len();
    let rows_r: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
    let y_r: Vec<f64> = y.iter().rev().copied().collect();
    let samples_r: Vec<Vec<usize>> = samples.iter().map(|s| s.iter().map(|&i| n - 1 - i).collect()).collect();
    let b = fit_forest_with_samples(&rows_r, &y_r, ForestTask::Regression, &cfg, &samples_r).unwrap();
    for r in random_rows(200, 3, 52) {
        assert_abs_diff_eq!(a.predict(&r), b.predict(&r), epsilon = 1e-9);
    }
}

#[test]
fn forest_is_deterministic_in_seed() {
    let rows = random_rows(60, 2, 61);
    let y: Vec<f64> = rows.iter().map(|r| r[0] * r[1]).collect();
    let cfg = ForestConfig { n_trees: 30, ..Default::default() };
    let a = fit_forest(&rows, &y, ForestTask::Regression, &cfg).unwrap();
    let b = fit_forest(&rows, &y, ForestTask::Regression, &cfg).unwrap();
    assert_eq!(a, b);
    let c = fit_forest(&rows, &y, ForestTask::Regression, &ForestConfig { seed: SeedSpec::new(1), ..cfg }).unwrap();
    assert_ne!(a, c);
}
