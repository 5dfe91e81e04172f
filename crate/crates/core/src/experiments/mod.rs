//! Evaluation protocols and the synthetic data generator.
//!
//! Every protocol returns a [`ResultTable`]: labelled rows, one per
//! repetition, that the CSV writer extends with per-group mean and standard
//! deviation rows.

pub mod batch;
pub mod consistency;
pub mod grid;
pub mod majority;
pub mod split;
pub mod synth;
pub mod tradeoff;

use crate::data::SparseRatings;
use crate::error::Result;
use crate::metrics::{evaluate, Accuracy};
use crate::registry::Predictor;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub keys: Vec<String>,
    pub rep: usize,
    pub metrics: Vec<f64>,
}

/// Key values and per-metric `(mean, std)` of one group.
pub type GroupSummary = (Vec<String>, Vec<(f64, f64)>);

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub key_columns: Vec<String>,
    pub metric_columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Append mean and std rows per key group.
    pub summarize: bool,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ResultTable {
    pub fn new(key_columns: &[&str], metric_columns: &[&str]) -> Self {
        ResultTable {
            key_columns: key_columns.iter().map(|s| s.to_string()).collect(),
            metric_columns: metric_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summarize: true,
        }
    }

    pub fn push(&mut self, keys: Vec<String>, rep: usize, metrics: Vec<f64>) {
        debug_assert_eq!(keys.len(), self.key_columns.len());
        debug_assert_eq!(metrics.len(), self.metric_columns.len());
        self.rows.push(ResultRow { keys, rep, metrics });
    }

    /// Key groups in first-appearance order, each with its per-metric
    /// `(mean, std)`.
    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut groups: Vec<(Vec<String>, Vec<&ResultRow>)> = Vec::new();
        for row in &self.rows {
            match groups.iter_mut().find(|(k, _)| *k == row.keys) {
                Some((_, rows)) => rows.push(row),
                None => groups.push((row.keys.clone(), vec![row])),
            }
        }
        groups
            .into_iter()
            .map(|(keys, rows)| {
                let stats = (0..self.metric_columns.len())
                    .map(|c| {
                        let values: Vec<f64> = rows.iter().map(|r| r.metrics[c]).collect();
                        mean_std(&values)
                    })
                    .collect();
                (keys, stats)
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.metric_columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.metrics[idx]).collect())
    }
}

/// Test-set accuracy of any predictor.
pub fn evaluate_predictor(predictor: &dyn Predictor, test: &SparseRatings) -> Result<Accuracy> {
    let mut failure = None;
    let acc = evaluate(test, |u, i| match predictor.predict(u, i) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn summaries_group_by_keys() {
        let mut t = ResultTable::new(&["method"], &["rmse"]);
        t.push(vec!["a".into()], 0, vec![1.0]);
        t.push(vec!["b".into()], 0, vec![5.0]);
        t.push(vec!["a".into()], 1, vec![3.0]);
        let s = t.summaries();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].0, vec!["a".to_string()]);
        assert_eq!(s[0].1[0].0, 2.0);
        assert_eq!(s[1].1[0], (5.0, 0.0));
    }
}
