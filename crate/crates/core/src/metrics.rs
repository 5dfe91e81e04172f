//! Rating-accuracy and ranking metrics.
//!
//! | metric | definition |
//! |--------|------------|
//! | MAE | `sum |r - r_hat| / |T|` |
//! | RMSE | `sqrt(sum (r - r_hat)^2 / |T|)` |
//! | Precision@k | relevant in top-k / k |
//! | Recall@k | relevant in top-k / all relevant |
//! | AP | `sum_i r_i * Precision@i / #relevant` |
//! | NDCG@k | `Z_k sum_{i<=k} (2^{r_i} - 1) / ln(i + 1)` |
//!
//! Positions are 1-based, so the first discount is `1 / ln 2`.

use crate::data::SparseRatings;
use crate::error::{Error, Result};

/// Mean absolute error over `(actual, predicted)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyMetricSet);
    }
    Ok(pairs.iter().map(|(a, p)| (a - p).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Root mean squared error over `(actual, predicted)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyMetricSet);
    }
    let mse = pairs.iter().map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / pairs.len() as f64;
    Ok(mse.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub mae: f64,
    pub rmse: f64,
    pub count: usize,
}

impl Accuracy {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Ok(Accuracy {
            mae: mae(pairs)?,
            rmse: rmse(pairs)?,
            count: pairs.len(),
        })
    }
}

/// MAE and RMSE of `predict(user, item)` against every rating in `test`.
pub fn evaluate(test: &SparseRatings, mut predict: impl FnMut(usize, usize) -> f64) -> Result<Accuracy> {
    let pairs: Vec<(f64, f64)> = test
        .entries()
        .iter()
        .map(|r| (r.value, predict(r.user, r.item)))
        .collect();
    Accuracy::from_pairs(&pairs)
}

/// A ranking with binary relevance flags. `total_relevant` counts relevant
/// candidates in the whole pool, which may extend past the listed prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    relevance: Vec<bool>,
    total_relevant: usize,
}

impl RankedList {
    pub fn new(relevance: Vec<bool>) -> Self {
        let total_relevant = relevance.iter().filter(|&&r| r).count();
        RankedList {
            relevance,
            total_relevant,
        }
    }

    pub fn with_total(relevance: Vec<bool>, total_relevant: usize) -> Result<Self> {
        let listed = relevance.iter().filter(|&&r| r).count();
        if total_relevant < listed {
            return Err(Error::invalid(format!(
                "total relevant {total_relevant} below the {listed} listed"
            )));
        }
        Ok(RankedList {
            relevance,
            total_relevant,
        })
    }

    pub fn relevance(&self) -> &[bool] {
        &self.relevance
    }

    pub fn total_relevant(&self) -> usize {
        self.total_relevant
    }

    fn hits_at(&self, k: usize) -> usize {
        self.relevance.iter().take(k).filter(|&&r| r).count()
    }
}

/// `(precision@k, recall@k)`; recall is `None` when nothing is relevant.
///
/// # Panics
///
/// If `k == 0`.
pub fn precision_recall_at_k(ranked: &RankedList, k: usize) -> (f64, Option<f64>) {
    assert!(k >= 1, "k must be at least 1");
    let hits = ranked.hits_at(k) as f64;
    let recall = (ranked.total_relevant > 0).then(|| hits / ranked.total_relevant as f64);
    (hits / k as f64, recall)
}

/// Average precision; `None` when nothing is relevant.
pub fn average_precision(ranked: &RankedList) -> Option<f64> {
    if ranked.total_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (idx, &rel) in ranked.relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (idx + 1) as f64;
        }
    }
    Some(sum / ranked.total_relevant as f64)
}

/// Mean of the defined per-list APs.
pub fn mean_average_precision<'a>(lists: impl IntoIterator<Item = &'a RankedList>) -> Option<f64> {
    let aps: Vec<f64> = lists.into_iter().filter_map(average_precision).collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).ln()
}

/// NDCG@k with natural-log discount; 0 when nothing is relevant.
///
/// # Panics
///
/// If `k == 0`.
pub fn ndcg_at_k(ranked: &RankedList, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let dcg: f64 = ranked
        .relevance
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(idx, _)| discount(idx + 1))
        .sum();
    let ideal: f64 = (1..=ranked.total_relevant.min(k)).map(discount).sum();
    if ideal == 0.0 {
        0.0
    } else {
        dcg / ideal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        let pairs = [(3.0, 4.0), (5.0, 3.0)];
        assert_eq!(mae(&pairs).unwrap(), 1.5);
        assert!((rmse(&pairs).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(mae(&[(1.0, 5.0)]).unwrap(), 4.0);
        assert_eq!(rmse(&[(2.0, 2.0), (4.0, 4.0)]).unwrap(), 0.0);
        assert!(matches!(mae(&[]), Err(Error::EmptyMetricSet)));
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        // relevant {a, b, c}; top-2 = (a, x)
        let ranked = RankedList::with_total(vec![true, false], 3).unwrap();
        let (p, r) = precision_recall_at_k(&ranked, 2);
        assert_eq!(p, 0.5);
        assert!((r.unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let all = RankedList::new(vec![true, true, true, false]);
        assert_eq!(precision_recall_at_k(&all, 3), (1.0, Some(1.0)));

        let none = RankedList::with_total(vec![false, false, true], 1).unwrap();
        assert_eq!(precision_recall_at_k(&none, 2), (0.0, Some(0.0)));

        let empty = RankedList::new(vec![false, false]);
        assert_eq!(precision_recall_at_k(&empty, 2).1, None);
    }

    #[test]
    fn average_precision_examples() {
        let ap = average_precision(&RankedList::new(vec![true, false, true])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(
            average_precision(&RankedList::new(vec![true, true, false, false])),
            Some(1.0)
        );
        assert_eq!(
            average_precision(&RankedList::new(vec![false, false, false, true])),
            Some(0.25)
        );
        assert_eq!(average_precision(&RankedList::new(vec![false])), None);
    }

    #[test]
    fn map_skips_lists_without_relevant_items() {
        let lists = [
            RankedList::new(vec![true]),
            RankedList::new(vec![false]),
            RankedList::new(vec![false, true]),
        ];
        assert_eq!(mean_average_precision(&lists), Some(0.75));
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&RankedList::new(vec![true, true, false]), 3), 1.0);
        let v = ndcg_at_k(&RankedList::new(vec![false, true]), 2);
        assert!((v - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert_eq!(ndcg_at_k(&RankedList::new(vec![false, false]), 2), 0.0);
    }
}
