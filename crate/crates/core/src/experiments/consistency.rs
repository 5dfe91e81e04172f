//! How well declared trust (or distrust) lines up with rating similarity.
//!
//! For each user, every other user sharing at least one rated item is a
//! candidate. Candidates are ranked by Pearson similarity (descending for
//! trust, ascending for distrust) and the declared relation marks which of
//! them are relevant.

use rand::seq::SliceRandom;

use crate::data::{Sign, SocialGraph, SparseRatings};
use crate::error::{Error, Result};
use crate::metrics::{average_precision, ndcg_at_k, precision_recall_at_k, RankedList};
use crate::neighborhood::{pearson, MIN_CORATED};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyConfig {
    pub relation: Sign,
    /// Lower bin edges on the user's rating count; the last bin is open.
    pub bin_edges: Vec<usize>,
    pub min_corated: usize,
    /// Permute relevance flags among each user's candidates (control run).
    pub shuffle_seed: Option<u64>,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            relation: Sign::Trust,
            bin_edges: vec![1, 20, 40, 60, 80],
            min_corated: MIN_CORATED,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRanking {
    pub user: usize,
    pub rating_count: usize,
    pub ranked: RankedList,
}

/// Ranked candidates of every user with at least one relevant candidate.
/// An undefined similarity ranks as 0; equal scores put relevant first.
pub fn user_rankings(
    ratings: &SparseRatings,
    graph: &SocialGraph,
    config: &ConsistencyConfig,
) -> Result<Vec<UserRanking>> {
    if graph.n_users() != ratings.n_users() {
        return Err(Error::invalid("ratings and social graph disagree on user count"));
    }
    let by_user = ratings.by_user();
    let by_item = ratings.by_item();
    let n = ratings.n_users();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for u in 0..n {
        let mut candidates = Vec::new();
        for &(item, _) in &by_user[u] {
            for &(v, _) in &by_item[item] {
                if v != u && !seen[v] {
                    seen[v] = true;
                    candidates.push(v);
                }
            }
        }
        for &v in &candidates {
            seen[v] = false;
        }
        candidates.sort_unstable();
        let related = graph.neighbors(u, config.relation);
        let mut relevant: Vec<bool> = candidates.iter().map(|v| related.contains(v)).collect();
        if !relevant.iter().any(|&r| r) {
            continue;
        }
        if let Some(seed) = config.shuffle_seed {
            relevant.shuffle(&mut substream(seed, "shuffle", u as u64));
        }
        let direction = match config.relation {
            Sign::Trust => 1.0,
            Sign::Distrust => -1.0,
        };
        let mut scored: Vec<(f64, bool, usize)> = candidates
            .iter()
            .zip(&relevant)
            .map(|(&v, &rel)| {
                let s = pearson(&by_user[u], &by_user[v], config.min_corated).unwrap_or(0.0);
                (direction * s, rel, v)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.cmp(&a.1))
                .then(a.2.cmp(&b.2))
        });
        out.push(UserRanking {
            user: u,
            rating_count: by_user[u].len(),
            ranked: RankedList::new(scored.into_iter().map(|s| s.1).collect()),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinSummary {
    pub lower: usize,
    pub upper: Option<usize>,
    pub users: usize,
    pub ndcg10: f64,
    pub ndcg20: f64,
    pub recall10: f64,
    pub recall20: f64,
    pub recall40: f64,
    pub map: f64,
}

impl BinSummary {
    pub fn label(&self) -> String {
        match self.upper {
            Some(hi) => format!("[{},{})", self.lower, hi),
            None => format!("[{},inf)", self.lower),
        }
    }

    pub fn metrics(&self) -> [f64; 6] {
        [
            self.ndcg10,
            self.ndcg20,
            self.recall10,
            self.recall20,
            self.recall40,
            self.map,
        ]
    }
}

pub const METRIC_NAMES: [&str; 6] = ["ndcg10", "ndcg20", "recall10", "recall20", "recall40", "map"];

fn summarize(lower: usize, upper: Option<usize>, users: &[&UserRanking]) -> BinSummary {
    let mean = |f: &dyn Fn(&RankedList) -> f64| -> f64 {
        if users.is_empty() {
            f64::NAN
        } else {
            users.iter().map(|u| f(&u.ranked)).sum::<f64>() / users.len() as f64
        }
    };
    let recall = |k: usize| move |r: &RankedList| precision_recall_at_k(r, k).1.unwrap_or(0.0);
    BinSummary {
        lower,
        upper,
        users: users.len(),
        ndcg10: mean(&|r| ndcg_at_k(r, 10)),
        ndcg20: mean(&|r| ndcg_at_k(r, 20)),
        recall10: mean(&recall(10)),
        recall20: mean(&recall(20)),
        recall40: mean(&recall(40)),
        map: mean(&|r| average_precision(r).unwrap_or(0.0)),
    }
}

/// Per-bin averages, followed by one row over every ranked user.
pub fn consistency_eval(
    ratings: &SparseRatings,
    graph: &SocialGraph,
    config: &ConsistencyConfig,
) -> Result<Vec<BinSummary>> {
    let edges = &config.bin_edges;
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("bin edges must be non-empty and strictly increasing"));
    }
    let rankings = user_rankings(ratings, graph, config)?;
    let mut rows = Vec::with_capacity(edges.len() + 1);
    for (idx, &lower) in edges.iter().enumerate() {
        let upper = edges.get(idx + 1).copied();
        let members: Vec<&UserRanking> = rankings
            .iter()
            .filter(|r| r.rating_count >= lower && upper.is_none_or(|hi| r.rating_count < hi))
            .collect();
        rows.push(summarize(lower, upper, &members));
    }
    let all: Vec<&UserRanking> = rankings.iter().filter(|r| r.rating_count >= edges[0]).collect();
    rows.push(summarize(edges[0], None, &all));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Rating, RatingScale};

    #[test]
    fn aligned_friends_score_perfectly() {
        // users 1 and 2 rate like user 0, user 3 opposite; 0 trusts 1 and 2
        let rows = [
            [1.0, 2.0, 3.0, 4.0],
            [1.0, 2.0, 3.0, 5.0],
            [2.0, 3.0, 4.0, 5.0],
            [5.0, 4.0, 3.0, 1.0],
        ];
        let mut entries = Vec::new();
        for (u, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                entries.push(Rating { user: u, item: i, value: v });
            }
        }
        let ratings = SparseRatings::new(4, 4, entries, RatingScale::default()).unwrap();
        let mut graph = SocialGraph::new(4);
        graph.add_edge(0, 1, Sign::Trust).unwrap();
        graph.add_edge(0, 2, Sign::Trust).unwrap();
        let ranks = user_rankings(&ratings, &graph, &ConsistencyConfig::default()).unwrap();
        assert_eq!(ranks.len(), 1);
        assert_eq!(ranks[0].ranked.relevance(), &[true, true, false]);
        assert_eq!(ndcg_at_k(&ranks[0].ranked, 10), 1.0);
        assert_eq!(average_precision(&ranks[0].ranked), Some(1.0));

        let bins = consistency_eval(&ratings, &graph, &ConsistencyConfig::default()).unwrap();
        assert_eq!(bins.len(), 6);
        assert_eq!(bins[0].users, 1);
        assert_eq!(bins[0].label(), "[1,20)");
        assert_eq!(bins[0].map, 1.0);
        assert!(bins[1].map.is_nan());
        assert_eq!(bins[5].users, 1);
    }
}
