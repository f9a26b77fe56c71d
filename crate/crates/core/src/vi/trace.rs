use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Append-only per-sweep record of monitored statistics.
///
/// Wall-clock stamps are kept in memory but never written to the CSV, so
/// identical runs produce byte-identical trace files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTrace {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    elbo: Vec<Option<f64>>,
    elapsed: Vec<f64>,
}

impl SweepTrace {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn elbo(&self) -> &[Option<f64>] {
        &self.elbo
    }

    pub fn elapsed(&self) -> &[f64] {
        &self.elapsed
    }

    /// Appends one sweep. The first push fixes the column set when the trace
    /// was created without one.
    pub fn push(&mut self, stats: &[(String, f64)], elbo: Option<f64>, elapsed_secs: f64) {
        if self.columns.is_empty() && self.rows.is_empty() {
            self.columns = stats.iter().map(|(k, _)| k.clone()).collect();
        }
        let row = self
            .columns
            .iter()
            .map(|c| stats.iter().find(|(k, _)| k == c).map(|(_, v)| *v).unwrap_or(f64::NAN))
            .collect();
        self.rows.push(row);
        self.elbo.push(elbo);
        self.elapsed.push(elapsed_secs);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| c.last().copied())
    }

    /// Mean of the last `k` values of a column.
    pub fn tail_mean(&self, name: &str, k: usize) -> Option<f64> {
        let c = self.column(name)?;
        if c.is_empty() {
            return None;
        }
        let k = k.min(c.len());
        Some(c[c.len() - k..].iter().sum::<f64>() / k as f64)
    }

    fn has_elbo(&self) -> bool {
        self.elbo.iter().any(Option::is_some)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sweep".to_string()];
        header.extend(self.columns.iter().cloned());
        let with_elbo = self.has_elbo();
        if with_elbo {
            header.push("elbo".into());
        }
        w.write_record(&header)?;
        for (k, row) in self.rows.iter().enumerate() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(row.iter().map(|v| format_value(*v)));
            if with_elbo {
                rec.push(self.elbo[k].map(format_value).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a trace written by [`SweepTrace::write_csv`] (or any CSV whose
    /// first column is a sweep counter).
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() {
            return Err(Error::Parse(format!("{}: empty header", path.display())));
        }
        let elbo_col = header.iter().position(|h| h == "elbo");
        let columns: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != 0 && Some(*j) != elbo_col)
            .map(|(_, h)| h.clone())
            .collect();
        let mut trace = Self::new(columns);
        for rec in r.records() {
            let rec = rec?;
            let mut row = Vec::with_capacity(trace.columns.len());
            let mut elbo = None;
            for (j, field) in rec.iter().enumerate() {
                if j == 0 {
                    continue;
                }
                let v = if field.is_empty() {
                    f64::NAN
                } else {
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{}: {field:?}: {e}", path.display())))?
                };
                if Some(j) == elbo_col {
                    elbo = v.is_finite().then_some(v);
                } else {
                    row.push(v);
                }
            }
            trace.rows.push(row);
            trace.elbo.push(elbo);
            trace.elapsed.push(f64::NAN);
        }
        Ok(trace)
    }
}

/// Shortest representation that round-trips through `f64` parsing.
fn format_value(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_and_query() {
        let mut t = SweepTrace::default();
        for k in 0..5 {
            t.push(&[("a".into(), k as f64), ("b".into(), 2.0 * k as f64)], None, 0.0);
        }
        assert_eq!(t.len(), 5);
        assert_eq!(t.column("b").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(t.tail_mean("a", 2), Some(3.5));
        assert!(t.column("c").is_none());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = SweepTrace::default();
        t.push(&[("x".into(), 0.1 + 0.2)], Some(-3.25), 0.5);
        t.push(&[("x".into(), 1e-300)], None, 0.6);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        t.save_csv(&p).unwrap();
        let back = SweepTrace::load_csv(&p).unwrap();
        assert_eq!(back.rows(), t.rows());
        assert_eq!(back.elbo(), t.elbo());
        assert_eq!(back.columns(), t.columns());
    }
}
