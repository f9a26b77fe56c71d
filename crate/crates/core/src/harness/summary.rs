use crate::error::{Error, Result};
use crate::vi::SweepTrace;

/// Mean and sample sd of one trace column after burn-in.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ColumnSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
}

/// Arithmetic mean and sample sd (divisor `k - 1`) of the rows after the
/// first `burn_in`. A single remaining row has sd 0.
pub fn summarize_trace(trace: &SweepTrace, burn_in: usize) -> Result<Vec<ColumnSummary>> {
    if trace.len() <= burn_in {
        return Err(Error::InvalidParameter(format!(
            "trace has {} rows, need more than the burn-in of {burn_in}",
            trace.len()
        )));
    }
    Ok(trace
        .columns()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let col: Vec<f64> = trace.rows()[burn_in..].iter().map(|r| r[c]).collect();
            let (mean, sd) = mean_sd(&col);
            ColumnSummary {
                parameter: name.clone(),
                mean,
                sd,
            }
        })
        .collect())
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Linear-interpolation quantile of unsorted data, `p` in [0, 1].
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Pointwise mean with 2.5% and 97.5% quantiles over sampled curves.
pub fn pointwise_band(curves: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let Some(first) = curves.first() else {
        return Err(Error::InvalidParameter("no curves to summarize".into()));
    };
    let m = first.len();
    if curves.iter().any(|c| c.len() != m) {
        return Err(Error::InvalidParameter("curves differ in length".into()));
    }
    let mut mean = Vec::with_capacity(m);
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    let mut col = vec![0.0; curves.len()];
    for j in 0..m {
        for (c, curve) in col.iter_mut().zip(curves) {
            *c = curve[j];
        }
        mean.push(col.iter().sum::<f64>() / col.len() as f64);
        lo.push(quantile(&col, 0.025));
        hi.push(quantile(&col, 0.975));
    }
    Ok((mean, lo, hi))
}
