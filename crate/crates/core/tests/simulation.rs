use nof1_apte::arco::{long_run_mean, simulate_dataset, ArcoParams, ExogKind, PropensityParams, SimConfig};
use nof1_apte::seed::SeedSpec;
use nof1_apte::stats::{mean, stable_sum};

const N: usize = 1_000_000;

fn randomized(seed: u64, exog: Vec<ExogKind>) -> SimConfig {
    SimConfig {
        m_analysis: N,
        burn_in: 200,
        seed: SeedSpec::new(seed),
        randomized_mode: true,
        randomized_pi: 0.5,
        exog,
    }
}

fn check(p: &ArcoParams, cfg: &SimConfig, mu_v: &[f64]) {
    let target = long_run_mean(p, cfg.randomized_pi, mu_v).unwrap();
    let ds = simulate_dataset(p, &PropensityParams::benchmark(), cfg).unwrap();
    assert_eq!(ds.len(), N);
    let y = ds.y();
    let m = stable_sum(y.iter().copied()) / N as f64;
    assert!((m - target).abs() < 0.01 * target.abs(), "mean {m} vs {target}");
    let share = mean(&ds.x().iter().map(|&x| f64::from(x)).collect::<Vec<_>>());
    assert!((share - 0.5).abs() < 0.002, "exposure share {share}");
}

#[test]
fn benchmark_mechanism_long_run_mean() {
    check(&ArcoParams::benchmark(), &randomized(1, vec![]), &[]);
}

#[test]
fn interaction_mechanism_long_run_mean() {
    let p = ArcoParams {
        beta0: 1.0,
        beta_x: 1.0,
        beta_co: 0.2,
        beta_xco: 0.1,
        beta_ar: 0.5,
        beta_xar: 0.1,
        beta_ex: vec![],
        sigma_eps: 1.0,
    };
    check(&p, &randomized(2, vec![]), &[]);
}

#[test]
fn weekend_exogenous_long_run_mean() {
    let p = ArcoParams {
        beta_ex: vec![-1.5],
        ..ArcoParams::benchmark()
    };
    check(&p, &randomized(3, vec![ExogKind::Weekend]), &[ExogKind::Weekend.long_run_mean()]);
}
