//! Per-period dataset container and its CSV form (`t,y,x[,exog...]`).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::dichotomize_exposure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub y: f64,
    pub x: u8,
    pub exog: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    periods: Vec<PeriodRecord>,
    pub burn_in_dropped: usize,
}

impl TimeSeriesDataset {
    /// Validates indices, finiteness, binary exposure and exog key sets.
    pub fn new(periods: Vec<PeriodRecord>, burn_in_dropped: usize) -> Result<Self> {
        let keys: Option<Vec<&String>> = periods.first().map(|p| p.exog.keys().collect());
        for (i, p) in periods.iter().enumerate() {
            if p.t != i + 1 {
                return Err(Error::InvalidData(format!(
                    "period index {} at position {} (expected {})",
                    p.t,
                    i + 1,
                    i + 1
                )));
            }
            if !p.y.is_finite() {
                return Err(Error::InvalidData(format!("non-finite outcome at t={}", p.t)));
            }
            if p.x > 1 {
                return Err(Error::InvalidData(format!("exposure {} at t={} is not binary", p.x, p.t)));
            }
            if let Some(k) = &keys {
                if p.exog.keys().ne(k.iter().copied()) {
                    return Err(Error::InvalidData(format!("exogenous keys differ at t={}", p.t)));
                }
            }
            if let Some((name, v)) = p.exog.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidData(format!("non-finite `{name}` = {v} at t={}", p.t)));
            }
        }
        Ok(Self {
            periods,
            burn_in_dropped,
        })
    }

    /// Build from plain vectors with no exogenous columns.
    pub fn from_xy(y: &[f64], x: &[u8]) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::InvalidData(format!(
                "y has {} values but x has {}",
                y.len(),
                x.len()
            )));
        }
        let periods = y
            .iter()
            .zip(x)
            .enumerate()
            .map(|(i, (&y, &x))| PeriodRecord {
                t: i + 1,
                y,
                x,
                exog: BTreeMap::new(),
            })
            .collect();
        Self::new(periods, 0)
    }

    pub fn periods(&self) -> &[PeriodRecord] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn y(&self) -> Vec<f64> {
        self.periods.iter().map(|p| p.y).collect()
    }

    pub fn x(&self) -> Vec<u8> {
        self.periods.iter().map(|p| p.x).collect()
    }

    pub fn exog_names(&self) -> Vec<String> {
        self.periods
            .first()
            .map(|p| p.exog.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn exog(&self, name: &str) -> Result<Vec<f64>> {
        self.periods
            .iter()
            .map(|p| p.exog.get(name).copied().ok_or_else(|| Error::MissingExog(name.into())))
            .collect()
    }

    /// Replace every outcome by `f(y)`; fails if `f` produces a non-finite value.
    pub fn map_outcome(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut periods = self.periods.clone();
        for p in &mut periods {
            p.y = f(p.y);
        }
        Self::new(periods, self.burn_in_dropped)
    }

    pub fn write_csv<W: Write>(&self, w: W, comments: &[String]) -> Result<()> {
        let mut w = w;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        let names = self.exog_names();
        let mut header = vec!["t".to_string(), "y".into(), "x".into()];
        header.extend(names.iter().cloned());
        wtr.write_record(&header)?;
        for p in &self.periods {
            let mut rec = vec![p.t.to_string(), fmt_f64(p.y), p.x.to_string()];
            rec.extend(names.iter().map(|n| fmt_f64(p.exog[n])));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Options controlling how raw CSV columns become a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Dichotomize `x` at its median (strict `>`), required when `x` is continuous.
    pub dichotomize_x: bool,
    /// Replace `y` by `log10(y)`.
    pub log10_y: bool,
}

/// Result of reading a CSV: the dataset plus the median threshold if `x` was dichotomized.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: TimeSeriesDataset,
    pub x_threshold: Option<f64>,
}

/// Parse the dataset CSV. Lines starting with `#` are comments.
pub fn read_csv<R: Read>(r: R, opts: CsvOptions) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[0] != "t" || cols[1] != "y" || cols[2] != "x" {
        return Err(Error::InvalidData(format!(
            "header must start with t,y,x; found {}",
            cols.join(",")
        )));
    }
    let exog_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    let mut exogs: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let field = |j: usize| -> Result<f64> {
            let s = rec.get(j).unwrap_or("");
            s.parse::<f64>().map_err(|_| {
                Error::InvalidData(format!(
                    "line {line}: column `{}` value `{s}` is not a number",
                    cols[j]
                ))
            })
        };
        let t = field(0)?;
        if t.fract() != 0.0 || t < 1.0 {
            return Err(Error::InvalidData(format!("line {line}: bad period index {t}")));
        }
        ts.push(t as usize);
        ys.push(field(1)?);
        xs.push(field(2)?);
        exogs.push((3..cols.len()).map(field).collect::<Result<_>>()?);
    }
    let (x_bin, x_threshold) = if opts.dichotomize_x {
        let (b, th) = dichotomize_exposure(&xs)?;
        (b, Some(th))
    } else {
        let b = xs
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                0.0 => Ok(0u8),
                1.0 => Ok(1u8),
                _ => Err(Error::InvalidData(format!(
                    "row {}: exposure {v} is not binary (enable dichotomization for continuous x)",
                    i + 1
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        (b, None)
    };
    if opts.log10_y {
        ys = crate::transform::log10_transform(&ys)?;
    }
    let periods = ts
        .into_iter()
        .zip(ys)
        .zip(x_bin)
        .zip(exogs)
        .map(|(((t, y), x), ex)| PeriodRecord {
            t,
            y,
            x,
            exog: exog_names.iter().cloned().zip(ex).collect(),
        })
        .collect();
    Ok(LoadedDataset {
        dataset: TimeSeriesDataset::new(periods, 0)?,
        x_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_exog_and_comments() {
        let text = "# generated\nt,y,x,weekend\n1,1.5,0,0\n2,2.25,1,1\n3,0.1,1,0\n";
        let ds = read_csv(text.as_bytes(), CsvOptions::default()).unwrap().dataset;
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.exog("weekend").unwrap(), vec![0.0, 1.0, 0.0]);
        let mut out = Vec::new();
        ds.write_csv(&mut out, &["seed=1".into()]).unwrap();
        let back = read_csv(out.as_slice(), CsvOptions::default()).unwrap().dataset;
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_gaps_and_non_binary() {
        let gap = "t,y,x\n1,1,0\n3,1,1\n";
        assert!(matches!(
            read_csv(gap.as_bytes(), CsvOptions::default()),
            Err(Error::InvalidData(_))
        ));
        let cont = "t,y,x\n1,1,0.3\n2,1,0.9\n";
        assert!(read_csv(cont.as_bytes(), CsvOptions::default()).is_err());
        let loaded = read_csv(
            cont.as_bytes(),
            CsvOptions {
                dichotomize_x: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(loaded.dataset.x(), vec![0, 1]);
        assert_eq!(loaded.x_threshold, Some(0.6));
    }

    #[test]
    fn parse_error_names_line() {
        let bad = "t,y,x\n1,1,0\n2,abc,1\n";
        let err = read_csv(bad.as_bytes(), CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
