//! Feature assembly: current/lagged exposure, lagged outcome (continuous or
//! quartile-coded) and exogenous columns, aligned to period indices.

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::stats::quartile_bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLag {
    ContinuousLag1,
    QuartileLag1,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub include_current_exposure: bool,
    pub use_exposure_lag1: bool,
    pub outcome_lag_mode: OutcomeLag,
    pub exog_names: Vec<String>,
}

impl FeatureSpec {
    /// `(X_t, Y_{t-1})`: the outcome-model layout of the simulation study.
    pub fn outcome_default() -> Self {
        Self {
            include_current_exposure: true,
            use_exposure_lag1: false,
            outcome_lag_mode: OutcomeLag::ContinuousLag1,
            exog_names: Vec::new(),
        }
    }

    /// `(Y_{t-1})`: the propensity-model layout of the simulation study.
    pub fn propensity_default() -> Self {
        Self {
            include_current_exposure: false,
            use_exposure_lag1: false,
            outcome_lag_mode: OutcomeLag::ContinuousLag1,
            exog_names: Vec::new(),
        }
    }

    pub fn has_lags(&self) -> bool {
        self.use_exposure_lag1 || self.outcome_lag_mode != OutcomeLag::None
    }

    pub fn validate_for_outcome(&self) -> Result<()> {
        if !self.include_current_exposure {
            return Err(Error::Config(
                "outcome models must include the current exposure".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_for_propensity(&self) -> Result<()> {
        if self.include_current_exposure {
            return Err(Error::Config(
                "propensity models cannot use the current exposure as a feature".into(),
            ));
        }
        Ok(())
    }
}

/// Frozen encoding rule: the spec plus quartile cut points learned from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub spec: FeatureSpec,
    pub quartiles: Option<(f64, f64, f64)>,
}

impl FeatureEncoder {
    pub fn column_names(&self) -> Vec<String> {
        let s = &self.spec;
        let mut names = Vec::new();
        if s.include_current_exposure {
            names.push("x".to_string());
        }
        if s.use_exposure_lag1 {
            names.push("x_lag1".into());
        }
        match s.outcome_lag_mode {
            OutcomeLag::ContinuousLag1 => names.push("y_lag1".into()),
            OutcomeLag::QuartileLag1 => names.extend((1..=4).map(|q| format!("y_lag1_q{q}"))),
            OutcomeLag::None => {}
        }
        names.extend(s.exog_names.iter().cloned());
        names
    }

    pub fn n_columns(&self) -> usize {
        let s = &self.spec;
        usize::from(s.include_current_exposure)
            + usize::from(s.use_exposure_lag1)
            + match s.outcome_lag_mode {
                OutcomeLag::ContinuousLag1 => 1,
                OutcomeLag::QuartileLag1 => 4,
                OutcomeLag::None => 0,
            }
            + s.exog_names.len()
    }

    /// Quartile slot (0..4) of a lagged value; ties at a boundary go down.
    pub fn quartile_slot(&self, v: f64) -> usize {
        let (q1, q2, q3) = self.quartiles.expect("quartile encoder without boundaries");
        [q1, q2, q3].iter().filter(|&&b| v > b).count()
    }

    /// Encode one row. `x_prev`/`y_prev` are ignored when the spec has no lags.
    pub fn encode_into(&self, out: &mut Vec<f64>, x_t: u8, x_prev: u8, y_prev: f64, exog: &[f64]) {
        out.clear();
        let s = &self.spec;
        if s.include_current_exposure {
            out.push(f64::from(x_t));
        }
        if s.use_exposure_lag1 {
            out.push(f64::from(x_prev));
        }
        match s.outcome_lag_mode {
            OutcomeLag::ContinuousLag1 => out.push(y_prev),
            OutcomeLag::QuartileLag1 => {
                let slot = self.quartile_slot(y_prev);
                out.extend((0..4).map(|k| if k == slot { 1.0 } else { 0.0 }));
            }
            OutcomeLag::None => {}
        }
        out.extend_from_slice(exog);
    }

    pub fn encode(&self, x_t: u8, x_prev: u8, y_prev: f64, exog: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_columns());
        self.encode_into(&mut v, x_t, x_prev, y_prev, exog);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    /// Period index of each row.
    pub periods: Vec<usize>,
    pub dropped_head: usize,
    pub encoder: FeatureEncoder,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.encoder.n_columns()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.encoder.column_names()
    }

    /// Observed outcomes aligned to the rows.
    pub fn outcome_targets(&self, ds: &TimeSeriesDataset) -> Vec<f64> {
        self.periods.iter().map(|&t| ds.periods()[t - 1].y).collect()
    }

    /// Observed exposures aligned to the rows.
    pub fn exposure_targets(&self, ds: &TimeSeriesDataset) -> Vec<u8> {
        self.periods.iter().map(|&t| ds.periods()[t - 1].x).collect()
    }
}

/// Exogenous values of every period, in `names` order.
pub(crate) fn exog_table(ds: &TimeSeriesDataset, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let cols = names
        .iter()
        .map(|n| ds.exog(n))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..ds.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

pub fn assemble_features(ds: &TimeSeriesDataset, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if ds.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            found: ds.len(),
        });
    }
    let exog = exog_table(ds, &spec.exog_names)?;
    let y = ds.y();
    let x = ds.x();
    let quartiles = (spec.outcome_lag_mode == OutcomeLag::QuartileLag1).then(|| quartile_bounds(&y));
    let encoder = FeatureEncoder {
        spec: spec.clone(),
        quartiles,
    };
    let dropped_head = usize::from(spec.has_lags());
    let rows = (dropped_head..ds.len())
        .map(|i| {
            let (xp, yp) = if i > 0 { (x[i - 1], y[i - 1]) } else { (0, f64::NAN) };
            encoder.encode(x[i], xp, yp, &exog[i])
        })
        .collect();
    Ok(FeatureMatrix {
        rows,
        periods: (dropped_head + 1..=ds.len()).collect(),
        dropped_head,
        encoder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(y: &[f64]) -> TimeSeriesDataset {
        let x: Vec<u8> = (0..y.len()).map(|i| (i % 2) as u8).collect();
        TimeSeriesDataset::from_xy(y, &x).unwrap()
    }

    fn lag_only(mode: OutcomeLag) -> FeatureSpec {
        FeatureSpec {
            include_current_exposure: false,
            use_exposure_lag1: false,
            outcome_lag_mode: mode,
            exog_names: vec![],
        }
    }

    #[test]
    fn continuous_lag_rows() {
        let fm = assemble_features(&ds(&[1.0, 2.0, 3.0, 4.0]), &lag_only(OutcomeLag::ContinuousLag1)).unwrap();
        assert_eq!(fm.dropped_head, 1);
        assert_eq!(fm.rows, vec![vec![1.0], vec![2.0], vec![3.0]]);
        assert_eq!(fm.periods, vec![2, 3, 4]);
    }

    #[test]
    fn quartile_extremes() {
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let fm = assemble_features(&ds(&y), &lag_only(OutcomeLag::QuartileLag1)).unwrap();
        assert_eq!(fm.encoder.encode(0, 0, 1.0, &[]), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(fm.encoder.encode(0, 0, 8.0, &[]), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn quartile_matches_rank_oracle() {
        let y = [5.0, 1.0, 7.0, 3.0, 9.0, 2.0, 8.0, 4.0];
        let fm = assemble_features(&ds(&y), &lag_only(OutcomeLag::QuartileLag1)).unwrap();
        // oracle: rank among all 8 values, two per quartile
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank_slot = |v: f64| sorted.iter().position(|&s| s == v).unwrap() / 2;
        for (row, &t) in fm.rows.iter().zip(&fm.periods) {
            let lag = y[t - 2];
            let mut expect = vec![0.0; 4];
            expect[rank_slot(lag)] = 1.0;
            assert_eq!(row, &expect, "lag {lag}");
        }
    }

    #[test]
    fn quartile_boundary_ties_go_down() {
        let y: Vec<f64> = (1..=8).map(f64::from).collect();
        let fm = assemble_features(&ds(&y), &lag_only(OutcomeLag::QuartileLag1)).unwrap();
        assert_eq!(fm.encoder.quartile_slot(2.5), 0);
        assert_eq!(fm.encoder.quartile_slot(4.5), 1);
        assert_eq!(fm.encoder.quartile_slot(6.5), 2);
    }

    #[test]
    fn full_layout_and_errors() {
        let mut d = ds(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            assemble_features(&ds(&[1.0, 2.0]), &lag_only(OutcomeLag::ContinuousLag1)),
            Err(Error::TooShort { .. })
        ));
        let spec = FeatureSpec {
            include_current_exposure: true,
            use_exposure_lag1: true,
            outcome_lag_mode: OutcomeLag::ContinuousLag1,
            exog_names: vec!["weekend".into()],
        };
        assert!(matches!(assemble_features(&d, &spec), Err(Error::MissingExog(_))));
        let periods = d
            .periods()
            .iter()
            .cloned()
            .map(|mut p| {
                p.exog.insert("weekend".into(), p.t as f64 * 10.0);
                p
            })
            .collect();
        d = TimeSeriesDataset::new(periods, 0).unwrap();
        let fm = assemble_features(&d, &spec).unwrap();
        assert_eq!(fm.column_names(), ["x", "x_lag1", "y_lag1", "weekend"]);
        assert_eq!(fm.rows[0], vec![1.0, 0.0, 1.0, 20.0]);
        assert_eq!(fm.rows[1], vec![0.0, 1.0, 2.0, 30.0]);
    }

    proptest! {
        #[test]
        fn quartile_one_hot_and_monotone(y in proptest::collection::vec(-50.0f64..50.0, 3..60)) {
            let fm = assemble_features(&ds(&y), &lag_only(OutcomeLag::QuartileLag1)).unwrap();
            let again = assemble_features(&ds(&y), &lag_only(OutcomeLag::QuartileLag1)).unwrap();
            prop_assert_eq!(&fm, &again);
            let mut pairs: Vec<(f64, usize)> = Vec::new();
            for (row, &t) in fm.rows.iter().zip(&fm.periods) {
                prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
                prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
                pairs.push((y[t - 2], row.iter().position(|&v| v == 1.0).unwrap()));
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}
