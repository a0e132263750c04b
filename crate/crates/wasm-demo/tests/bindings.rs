use nof1_wasm_demo::{bias_impl, simulate_impl, trace_impl};

const SMALL: &str = "m = 60\nburn_in = 20\nH = 3\nn_trees = 20\nr_max = 40\nmethods = raw,coef,motr_glm\n";

#[test]
fn simulate_reports_series_and_echo() {
    let s = simulate_impl(SMALL).unwrap();
    assert_eq!(s.y.len(), 60);
    assert_eq!(s.t, (1..=60).collect::<Vec<_>>());
    assert!(s.share_exposed > 0.0 && s.share_exposed < 1.0);
    assert!(s.echo.iter().any(|l| l == "m = 60"));
    let again = simulate_impl(SMALL).unwrap();
    assert_eq!(s.y, again.y);
}

#[test]
fn trace_is_cumulative_and_ends_at_estimate() {
    let t = trace_impl(SMALL, "motr-glm").unwrap();
    assert_eq!(t.trajectory.len(), t.runs_used);
    let last = t.trajectory.last().unwrap();
    assert_eq!(last.cum_delta, t.delta);
    let mean = t.trajectory.iter().map(|p| p.delta_r).sum::<f64>() / t.runs_used as f64;
    assert!((mean - t.delta).abs() < 1e-12);
}

#[test]
fn trace_rejects_non_motr_methods() {
    assert!(trace_impl(SMALL, "pstn_glm").unwrap_err().contains("no trajectory"));
    assert!(trace_impl(SMALL, "bogus").is_err());
}

#[test]
fn bias_study_summarises_requested_methods() {
    let b = bias_impl(SMALL).unwrap();
    assert_eq!(b.true_apte, 1.1);
    let names: Vec<_> = b.summary.iter().map(|s| s.method.as_str()).collect();
    assert_eq!(names, ["raw", "coef", "motr_glm"]);
    assert!(b.summary.iter().all(|s| s.n == 3));
}

#[test]
fn bad_config_is_an_error_string() {
    assert!(simulate_impl("no_such_key = 1").unwrap_err().contains("no_such_key"));
}
