//! `nof1`: simulate n-of-1 datasets, estimate APTEs, run replication studies
//! and compute exact enumeration oracles.
//!
//! Exit status: 0 success, 2 configuration error, 3 data error, 4 estimator error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nof1_apte::dataset::{fmt_f64, read_csv};
use nof1_apte::harness::{analyze, replicate, Analysis, MethodId};
use nof1_apte::oracle::enumerate_capos;
use nof1_apte::{simulate_dataset, ApteEstimate, Error, ErrorClass, RunConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "nof1", version, about = "Average period treatment effects for n-of-1 time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable): --set betaX=1.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed (overrides the `seed` key)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset and write it as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output CSV path (stdout if omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Estimate the APTE of a CSV dataset with one method
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV: t,y,x[,exog...]
        #[arg(long, short)]
        data: PathBuf,
        /// raw | coef | motr-glm | motr-rf | pstn-glm | pstn-rf
        #[arg(long, short)]
        method: String,
        /// Result JSON path (stdout if omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// MoTR only: per-run trajectory CSV
        #[arg(long)]
        runs_csv: Option<PathBuf>,
        /// MoTR / PSTn only: per-period CSV (fitted means or weights)
        #[arg(long)]
        periods_csv: Option<PathBuf>,
        /// Write the fitted model summary as JSON
        #[arg(long)]
        dump_model: Option<PathBuf>,
    },
    /// Replicated bias study over simulated datasets
    Replicate {
        #[command(flatten)]
        common: Common,
        /// Per-dataset rows CSV: h,method,estimate,bias,error
        #[arg(long)]
        rows: PathBuf,
        /// Per-method summary CSV, prefixed by the resolved configuration
        #[arg(long)]
        summary: PathBuf,
        /// Full report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads (overrides the `workers` key)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exact APTE of the configured noise-free mechanism by enumeration
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Result JSON path (stdout if omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Estimator => 4,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate { common, out } => {
            let cfg = resolve(RunConfig::default(), &common)?;
            cmd_simulate(&cfg, out.as_deref())
        }
        Command::Analyze {
            common,
            data,
            method,
            out,
            runs_csv,
            periods_csv,
            dump_model,
        } => {
            let cfg = resolve(RunConfig::default(), &common)?;
            let method: MethodId = method.parse()?;
            cmd_analyze(
                &cfg,
                &data,
                method,
                AnalyzeOutputs {
                    out: out.as_deref(),
                    runs_csv: runs_csv.as_deref(),
                    periods_csv: periods_csv.as_deref(),
                    dump_model: dump_model.as_deref(),
                },
            )
        }
        Command::Replicate {
            common,
            rows,
            summary,
            json,
            workers,
        } => {
            let mut cfg = resolve(RunConfig::replication(), &common)?;
            if let Some(w) = workers {
                cfg.set("workers", &w.to_string())?;
            }
            cmd_replicate(&cfg, &rows, &summary, json.as_deref())
        }
        Command::Oracle { common, out } => {
            let cfg = resolve(RunConfig::default(), &common)?;
            cmd_oracle(&cfg, out.as_deref())
        }
    }
}

/// Defaults, then the file, then `--set` overrides, then dedicated flags.
fn resolve(mut cfg: RunConfig, common: &Common) -> CliResult<RunConfig> {
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    }
    for kv in &common.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(s) = common.seed {
        cfg.set("seed", &s.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, v: &Value) -> CliResult {
    let mut w = create(path)?;
    let s = serde_json::to_string_pretty(v).expect("serializable");
    writeln!(w, "{s}")
        .and_then(|_| w.flush())
        .map_err(|e| io_err(path.unwrap_or(Path::new("<stdout>")), e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Failure {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    })
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    }
}

fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> CliResult {
    let ds = simulate_dataset(&cfg.arco, &cfg.propensity, &cfg.sim)?;
    let mut w = create(out)?;
    ds.write_csv(&mut w, &cfg.echo())?;
    w.flush().map_err(|e| io_err(out.unwrap_or(Path::new("<stdout>")), e))
}

struct AnalyzeOutputs<'a> {
    out: Option<&'a Path>,
    runs_csv: Option<&'a Path>,
    periods_csv: Option<&'a Path>,
    dump_model: Option<&'a Path>,
}

fn interval(ci: Option<nof1_apte::stats::Interval>) -> Value {
    ci.map_or(Value::Null, |c| json!({"lo": c.lo, "hi": c.hi}))
}

fn cmd_analyze(cfg: &RunConfig, data: &Path, method: MethodId, outs: AnalyzeOutputs<'_>) -> CliResult {
    let file = File::open(data).map_err(|e| io_err(data, e))?;
    let loaded = read_csv(file, cfg.csv).map_err(|e| Failure {
        code: 3,
        msg: format!("{}: {e}", data.display()),
    })?;
    let ds = &loaded.dataset;
    let is_motr = matches!(method, MethodId::MotrGlm | MethodId::MotrRf);
    let is_pstn = matches!(method, MethodId::PstnGlm | MethodId::PstnRf);
    if outs.runs_csv.is_some() && !is_motr {
        return Err(config_err("--runs-csv applies to MoTR methods only"));
    }
    if outs.periods_csv.is_some() && !(is_motr || is_pstn) {
        return Err(config_err("--periods-csv applies to MoTR and PSTn methods only"));
    }
    let analysis = analyze(ds, method, &cfg.methods_cfg, cfg.sim.seed)?;

    let (details, model) = match &analysis {
        Analysis::Raw(r) => (serde_json::to_value(r).expect("serializable"), None),
        Analysis::Coef(c) => (
            json!({"beta_x": c.beta_x, "std_error": c.std_error, "ci": c.ci}),
            Some(c.model.summary()),
        ),
        Analysis::Motr { estimate, model } => (serde_json::to_value(estimate).expect("serializable"), Some(model.summary())),
        Analysis::Pstn { result, model } => {
            let mut v = serde_json::to_value(result).expect("serializable");
            v["separation_warning"] = json!(model.separation_warning());
            (v, Some(model.summary()))
        }
    };

    if let (Some(p), Analysis::Motr { estimate, .. }) = (outs.runs_csv, &analysis) {
        write_runs(p, estimate)?;
    }
    if let Some(p) = outs.periods_csv {
        write_periods(p, ds, &analysis)?;
    }
    if let Some(p) = outs.dump_model {
        let m = model.clone().unwrap_or(Value::Null);
        write_json(Some(p), &json!({"method": method, "model": m}))?;
    }

    let out = json!({
        "method": method,
        "delta": analysis.point(),
        "ci": interval(analysis.interval()),
        "n_periods": ds.len(),
        "x_threshold": loaded.x_threshold,
        "details": details,
        "config": cfg.echo(),
    });
    write_json(outs.out, &out)
}

fn write_runs(path: &Path, est: &ApteEstimate) -> CliResult {
    let mut w = csv_writer(path)?;
    let fail = csv_fail(path);
    w.write_record(["r", "delta_r", "lo_r", "hi_r", "cum_delta", "cum_lo", "cum_hi", "cum_po_1", "cum_po_0"])
        .map_err(&fail)?;
    for p in &est.trajectory {
        w.write_record([
            p.r.to_string(),
            fmt_f64(p.delta_r),
            fmt_f64(p.lo_r),
            fmt_f64(p.hi_r),
            fmt_f64(p.cum_delta),
            fmt_f64(p.cum_lo),
            fmt_f64(p.cum_hi),
            fmt_f64(p.cum_po_1),
            fmt_f64(p.cum_po_0),
        ])
        .map_err(&fail)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_periods(path: &Path, ds: &nof1_apte::TimeSeriesDataset, analysis: &Analysis) -> CliResult {
    let mut w = csv_writer(path)?;
    let fail = csv_fail(path);
    match analysis {
        Analysis::Pstn { result, .. } => {
            w.write_record(["t", "pi_hat", "weight", "retained"]).map_err(&fail)?;
            for p in &result.weights {
                w.write_record([p.t.to_string(), fmt_f64(p.pi_hat), fmt_f64(p.weight), p.retained.to_string()])
                    .map_err(&fail)?;
            }
        }
        Analysis::Motr { model, .. } => {
            // fitted conditional means at the observed lags
            let fm = nof1_apte::assemble_features(ds, &model.encoder.spec)?;
            w.write_record(["t", "y", "x", "fitted"]).map_err(&fail)?;
            for (row, &t) in fm.rows.iter().zip(&fm.periods) {
                let p = &ds.periods()[t - 1];
                w.write_record([t.to_string(), fmt_f64(p.y), p.x.to_string(), fmt_f64(model.predict_row(row))])
                    .map_err(&fail)?;
            }
        }
        _ => unreachable!("checked by caller"),
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn cmd_replicate(cfg: &RunConfig, rows_path: &Path, summary_path: &Path, json_path: Option<&Path>) -> CliResult {
    let report = replicate(&cfg.study())?;

    let mut w = csv_writer(rows_path)?;
    let fail = csv_fail(rows_path);
    w.write_record(["h", "method", "estimate", "bias", "error"]).map_err(&fail)?;
    for r in &report.rows {
        w.write_record([
            r.h.to_string(),
            r.method.to_string(),
            opt(r.estimate),
            opt(r.bias),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(&fail)?;
    }
    w.flush().map_err(|e| io_err(rows_path, e))?;

    let mut f = BufWriter::new(File::create(summary_path).map_err(|e| io_err(summary_path, e))?);
    let mut head = String::new();
    for line in cfg.echo() {
        head.push_str(&format!("# {line}\n"));
    }
    head.push_str(&format!("# true_apte = {}\n", fmt_f64(report.true_apte)));
    f.write_all(head.as_bytes()).map_err(|e| io_err(summary_path, e))?;
    let mut w = csv::Writer::from_writer(f);
    let fail = csv_fail(summary_path);
    w.write_record(["method", "mean_bias", "sd_bias", "ci_lo", "ci_hi", "n_datasets", "failures"])
        .map_err(&fail)?;
    for s in &report.summary {
        w.write_record([
            s.method.to_string(),
            fmt_f64(s.mean_bias),
            fmt_f64(s.sd_bias),
            fmt_f64(s.ci_lo),
            fmt_f64(s.ci_hi),
            s.n.to_string(),
            s.failures.to_string(),
        ])
        .map_err(&fail)?;
    }
    w.flush().map_err(|e| io_err(summary_path, e))?;

    if let Some(p) = json_path {
        let per_dataset: Vec<Value> = report
            .rows
            .iter()
            .map(|r| json!({"h": r.h, "method": r.method, "estimate": r.estimate, "bias": r.bias, "error": r.error}))
            .collect();
        let summary: Vec<Value> = report
            .summary
            .iter()
            .map(|s| {
                json!({
                    "method": s.method, "mean_bias": s.mean_bias, "sd_bias": s.sd_bias,
                    "ci_lo": s.ci_lo, "ci_hi": s.ci_hi, "n_datasets": s.n, "failures": s.failures,
                })
            })
            .collect();
        write_json(
            Some(p),
            &json!({
                "true_apte": report.true_apte,
                "per_dataset": per_dataset,
                "summary": summary,
                "config": cfg.echo(),
            }),
        )?;
    }
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig, out: Option<&Path>) -> CliResult {
    let spec = cfg.enum_spec();
    let capos = enumerate_capos(&spec)?;
    let v = json!({
        "mode": cfg.get("oracle_mode"),
        "m": spec.m,
        "apte_exact": capos.apte(),
        "capo_1": capos.capo_1,
        "capo_0": capos.capo_0,
        "y_init": spec.y_init,
        "x_init": spec.x_init,
        "config": cfg.echo(),
    });
    write_json(out, &v)
}
