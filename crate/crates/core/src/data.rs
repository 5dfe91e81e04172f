//! Ratings and the signed social graph.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Inclusive bounds of the rating scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("bad rating scale [{min}, {max}]")));
        }
        Ok(RatingScale { min, max })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1.0, max: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// Partially observed user-item rating matrix, stored as its observed entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRatings {
    n_users: usize,
    n_items: usize,
    entries: Vec<Rating>,
    scale: RatingScale,
}

impl SparseRatings {
    /// Builds a rating set, rejecting out-of-range indices, out-of-scale values
    /// and duplicate (user, item) pairs.
    pub fn new(
        n_users: usize,
        n_items: usize,
        entries: Vec<Rating>,
        scale: RatingScale,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for r in &entries {
            check_index("user", r.user, n_users)?;
            check_index("item", r.item, n_items)?;
            if !scale.contains(r.value) {
                return Err(Error::invalid(format!(
                    "rating {} for ({}, {}) outside [{}, {}]",
                    r.value, r.user, r.item, scale.min, scale.max
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::invalid(format!(
                    "duplicate rating for ({}, {})",
                    r.user, r.item
                )));
            }
        }
        Ok(SparseRatings {
            n_users,
            n_items,
            entries,
            scale,
        })
    }

    /// Like [`SparseRatings::new`] but resolves duplicate pairs by keeping the
    /// last occurrence. Returns the number of dropped duplicates alongside.
    pub fn new_last_wins(
        n_users: usize,
        n_items: usize,
        entries: Vec<Rating>,
        scale: RatingScale,
    ) -> Result<(Self, usize)> {
        let total = entries.len();
        let mut seen = HashSet::with_capacity(total);
        let mut kept: Vec<Rating> = Vec::with_capacity(total);
        for r in entries.into_iter().rev() {
            if seen.insert((r.user, r.item)) {
                kept.push(r);
            }
        }
        kept.reverse();
        let dropped = total - kept.len();
        let ratings = SparseRatings::new(n_users, n_items, kept, scale)?;
        Ok((ratings, dropped))
    }

    pub fn empty(n_users: usize, n_items: usize, scale: RatingScale) -> Self {
        SparseRatings {
            n_users,
            n_items,
            entries: Vec::new(),
            scale,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    /// A rating set over the same index space holding the selected entries.
    pub fn select(&self, indices: &[usize]) -> SparseRatings {
        SparseRatings {
            n_users: self.n_users,
            n_items: self.n_items,
            entries: indices.iter().map(|&i| self.entries[i]).collect(),
            scale: self.scale,
        }
    }

    /// A rating set over the same index space holding the entries that pass `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Rating) -> bool) -> SparseRatings {
        SparseRatings {
            n_users: self.n_users,
            n_items: self.n_items,
            entries: self.entries.iter().copied().filter(|r| keep(r)).collect(),
            scale: self.scale,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|r| r.value).sum::<f64>() / self.entries.len() as f64)
        }
    }

    /// Number of ratings per user.
    pub fn user_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_users];
        for r in &self.entries {
            counts[r.user] += 1;
        }
        counts
    }

    /// Per-user `(item, rating)` lists sorted by item.
    pub fn by_user(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n_users];
        for r in &self.entries {
            rows[r.user].push((r.item, r.value));
        }
        for row in &mut rows {
            row.sort_by_key(|&(item, _)| item);
        }
        rows
    }

    /// Per-item lists of raters, sorted by user.
    pub fn by_item(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_items];
        for r in &self.entries {
            cols[r.item].push((r.user, r.value));
        }
        for col in &mut cols {
            col.sort_by_key(|&(user, _)| user);
        }
        cols
    }
}

pub(crate) fn check_index(kind: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { kind, index, size })
    }
}

/// Sign of a social relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Trust,
    Distrust,
}

impl Sign {
    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Trust),
            -1 => Some(Sign::Distrust),
            _ => None,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Trust => 1,
            Sign::Distrust => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Trust => "+",
            Sign::Distrust => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub sign: Sign,
}

/// Signed directed graph over users. `trusts(u)` is N+(u) and `distrusts(u)`
/// is N-(u), both kept in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    trust: Vec<Vec<usize>>,
    distrust: Vec<Vec<usize>>,
}

impl SocialGraph {
    pub fn new(n_users: usize) -> Self {
        SocialGraph {
            trust: vec![Vec::new(); n_users],
            distrust: vec![Vec::new(); n_users],
        }
    }

    pub fn from_edges(n_users: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut graph = SocialGraph::new(n_users);
        for e in edges {
            graph.add_edge(e.from, e.to, e.sign)?;
        }
        Ok(graph)
    }

    /// Adds `from -> to`. Returns `Ok(false)` when the identical edge is
    /// already present; errors on self-edges and on sign conflicts.
    pub fn add_edge(&mut self, from: usize, to: usize, sign: Sign) -> Result<bool> {
        let n = self.n_users();
        check_index("user", from, n)?;
        check_index("user", to, n)?;
        if from == to {
            return Err(Error::invalid(format!("self-edge on user {from}")));
        }
        let (same, other) = match sign {
            Sign::Trust => (&self.trust, &self.distrust),
            Sign::Distrust => (&self.distrust, &self.trust),
        };
        if other[from].contains(&to) {
            return Err(Error::invalid(format!(
                "user {from} both trusts and distrusts user {to}"
            )));
        }
        if same[from].contains(&to) {
            return Ok(false);
        }
        match sign {
            Sign::Trust => self.trust[from].push(to),
            Sign::Distrust => self.distrust[from].push(to),
        }
        Ok(true)
    }

    pub fn n_users(&self) -> usize {
        self.trust.len()
    }

    pub fn trusts(&self, u: usize) -> &[usize] {
        &self.trust[u]
    }

    pub fn distrusts(&self, u: usize) -> &[usize] {
        &self.distrust[u]
    }

    pub fn neighbors(&self, u: usize, sign: Sign) -> &[usize] {
        match sign {
            Sign::Trust => &self.trust[u],
            Sign::Distrust => &self.distrust[u],
        }
    }

    pub fn sign_of(&self, from: usize, to: usize) -> Option<Sign> {
        if self.trust[from].contains(&to) {
            Some(Sign::Trust)
        } else if self.distrust[from].contains(&to) {
            Some(Sign::Distrust)
        } else {
            None
        }
    }

    pub fn trust_edge_count(&self) -> usize {
        self.trust.iter().map(Vec::len).sum()
    }

    pub fn distrust_edge_count(&self) -> usize {
        self.distrust.iter().map(Vec::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.trust_edge_count() + self.distrust_edge_count()
    }

    /// All edges; per user, trust edges precede distrust edges.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n_users()).flat_map(move |u| {
            let t = self.trust[u].iter().map(move |&v| Edge {
                from: u,
                to: v,
                sign: Sign::Trust,
            });
            let d = self.distrust[u].iter().map(move |&v| Edge {
                from: u,
                to: v,
                sign: Sign::Distrust,
            });
            t.chain(d)
        })
    }

    /// Same users, only the edges that pass `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> SocialGraph {
        let mut out = SocialGraph::new(self.n_users());
        for e in self.edges() {
            if keep(&e) {
                match e.sign {
                    Sign::Trust => out.trust[e.from].push(e.to),
                    Sign::Distrust => out.distrust[e.from].push(e.to),
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(user: usize, item: usize, value: f64) -> Rating {
        Rating { user, item, value }
    }

    #[test]
    fn rejects_invalid_ratings() {
        let s = RatingScale::default();
        assert!(SparseRatings::new(2, 2, vec![r(2, 0, 3.0)], s).is_err());
        assert!(SparseRatings::new(2, 2, vec![r(0, 0, 6.0)], s).is_err());
        assert!(SparseRatings::new(2, 2, vec![r(0, 0, 3.0), r(0, 0, 4.0)], s).is_err());
        assert!(SparseRatings::new(2, 2, vec![r(0, 0, 3.0), r(1, 0, 4.0)], s).is_ok());
    }

    #[test]
    fn last_occurrence_wins() {
        let s = RatingScale::default();
        let (ratings, dropped) = SparseRatings::new_last_wins(
            2,
            2,
            vec![r(0, 0, 3.0), r(1, 1, 2.0), r(0, 0, 5.0)],
            s,
        )
        .unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(ratings.entries(), &[r(1, 1, 2.0), r(0, 0, 5.0)]);
    }

    #[test]
    fn graph_rejects_self_edges_and_conflicts() {
        let mut g = SocialGraph::new(3);
        assert!(g.add_edge(0, 0, Sign::Trust).is_err());
        assert!(g.add_edge(0, 1, Sign::Trust).unwrap());
        assert!(!g.add_edge(0, 1, Sign::Trust).unwrap());
        assert!(g.add_edge(0, 1, Sign::Distrust).is_err());
        assert!(g.add_edge(1, 0, Sign::Distrust).unwrap());
        assert_eq!(g.trust_edge_count(), 1);
        assert_eq!(g.distrust_edge_count(), 1);
        assert_eq!(g.sign_of(1, 0), Some(Sign::Distrust));
        assert_eq!(g.sign_of(2, 0), None);
    }
}
