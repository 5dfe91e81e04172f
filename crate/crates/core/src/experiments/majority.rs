//! Predicting held-out relation signs from the votes of trusted neighbors.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;

use crate::data::{Edge, Sign, SocialGraph};
use crate::error::{Error, Result};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    TrustMajority,
    DistrustMajority,
    Tie,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::TrustMajority, Regime::DistrustMajority, Regime::Tie];

    pub fn of(n_plus: usize, n_minus: usize) -> Regime {
        match n_plus.cmp(&n_minus) {
            std::cmp::Ordering::Greater => Regime::TrustMajority,
            std::cmp::Ordering::Less => Regime::DistrustMajority,
            std::cmp::Ordering::Equal => Regime::Tie,
        }
    }

    /// The predicted sign; `None` means abstain.
    pub fn prediction(self) -> Option<Sign> {
        match self {
            Regime::TrustMajority => Some(Sign::Trust),
            Regime::DistrustMajority => Some(Sign::Distrust),
            Regime::Tie => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::TrustMajority => "n+>n-",
            Regime::DistrustMajority => "n+<n-",
            Regime::Tie => "n+=n-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub edge: Edge,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl Vote {
    pub fn regime(&self) -> Regime {
        Regime::of(self.n_plus, self.n_minus)
    }
}

/// Opinions about `w` among the users `u` trusts in `train`.
pub fn count_votes(train: &SocialGraph, u: usize, w: usize) -> (usize, usize) {
    let mut plus = 0;
    let mut minus = 0;
    for &v in train.trusts(u) {
        match train.sign_of(v, w) {
            Some(Sign::Trust) => plus += 1,
            Some(Sign::Distrust) => minus += 1,
            None => {}
        }
    }
    (plus, minus)
}

/// Removes `held` from `graph` and tallies the votes for each held edge.
pub fn vote_on_holdout(graph: &SocialGraph, held: &[Edge]) -> Vec<Vote> {
    let held_set: HashSet<(usize, usize)> = held.iter().map(|e| (e.from, e.to)).collect();
    let train = graph.filter_edges(|e| !held_set.contains(&(e.from, e.to)));
    held.iter()
        .map(|&edge| {
            let (n_plus, n_minus) = count_votes(&train, edge.from, edge.to);
            Vote {
                edge,
                n_plus,
                n_minus,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentRow {
    pub regime: Regime,
    pub sign: Sign,
    pub count: usize,
    /// Percentage of all held-out relations.
    pub share_pct: f64,
    /// Percentage of the regime's relations with this sign; none for ties.
    pub alignment_pct: Option<f64>,
}

/// Six rows: each regime crossed with each true sign.
pub fn alignment_table(votes: &[Vote]) -> Vec<AlignmentRow> {
    let total = votes.len() as f64;
    let mut rows = Vec::with_capacity(6);
    for regime in Regime::ALL {
        let in_regime: Vec<&Vote> = votes.iter().filter(|v| v.regime() == regime).collect();
        for sign in [Sign::Trust, Sign::Distrust] {
            let count = in_regime.iter().filter(|v| v.edge.sign == sign).count();
            let alignment_pct = (regime != Regime::Tie && !in_regime.is_empty())
                .then(|| 100.0 * count as f64 / in_regime.len() as f64);
            rows.push(AlignmentRow {
                regime,
                sign,
                count,
                share_pct: if total > 0.0 { 100.0 * count as f64 / total } else { 0.0 },
                alignment_pct,
            });
        }
    }
    rows
}

/// Holds out `round(fraction * |E|)` edges (at least one) and votes on them.
pub fn majority_vote_eval(
    graph: &SocialGraph,
    fraction: f64,
    seed: u64,
    repetition: u64,
) -> Result<Vec<AlignmentRow>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("holdout fraction must lie in (0, 1), got {fraction}")));
    }
    let edges: Vec<Edge> = graph.edges().collect();
    if edges.is_empty() {
        return Err(Error::invalid("majority vote needs a non-empty social graph"));
    }
    let count = ((fraction * edges.len() as f64).round() as usize).clamp(1, edges.len());
    let mut picked = index::sample(&mut substream(seed, stream::HOLDOUT, repetition), edges.len(), count)
        .into_vec();
    picked.sort_unstable();
    let held: Vec<Edge> = picked.into_iter().map(|i| edges[i]).collect();
    Ok(alignment_table(&vote_on_holdout(graph, &held)))
}
