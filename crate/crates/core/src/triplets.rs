//! The social constraint set: every `(i, j, k)` where user `i` trusts `j` and
//! distrusts `k`.
//!
//! The set has `sum_u |N+(u)| * |N-(u)|` members, which is far too many to
//! hold in memory on large graphs. A store is therefore either materialized
//! (every triplet listed, needed for full gradients) or lazy (only per-user
//! counts, enough to draw uniform samples).

use rand::Rng as _;

use crate::data::SocialGraph;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub user: usize,
    pub trusted: usize,
    pub distrusted: usize,
}

impl Triplet {
    pub fn new(user: usize, trusted: usize, distrusted: usize) -> Self {
        Triplet {
            user,
            trusted,
            distrusted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    Materialized,
    Lazy,
}

#[derive(Debug, Clone)]
enum Storage {
    Materialized(Vec<Triplet>),
    Lazy(LazyIndex),
}

#[derive(Debug, Clone)]
struct LazyIndex {
    users: Vec<usize>,
    cumulative: Vec<u64>,
    trust: Vec<Vec<usize>>,
    distrust: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct TripletStore {
    counts: Vec<u64>,
    total: u64,
    storage: Storage,
}

fn per_user_counts(graph: &SocialGraph) -> Vec<u64> {
    (0..graph.n_users())
        .map(|u| graph.trusts(u).len() as u64 * graph.distrusts(u).len() as u64)
        .collect()
}

/// Enumerates every triplet: users ascending, then trusted and distrusted
/// users in adjacency order.
pub fn extract_triplets(graph: &SocialGraph) -> TripletStore {
    let counts = per_user_counts(graph);
    let total = counts.iter().sum();
    let mut triplets = Vec::with_capacity(total as usize);
    for u in 0..graph.n_users() {
        for &j in graph.trusts(u) {
            for &k in graph.distrusts(u) {
                triplets.push(Triplet::new(u, j, k));
            }
        }
    }
    TripletStore {
        counts,
        total,
        storage: Storage::Materialized(triplets),
    }
}

impl TripletStore {
    /// Count-only store; samples are drawn on demand.
    pub fn lazy(graph: &SocialGraph) -> TripletStore {
        let counts = per_user_counts(graph);
        let mut index = LazyIndex {
            users: Vec::new(),
            cumulative: Vec::new(),
            trust: Vec::new(),
            distrust: Vec::new(),
        };
        let mut running = 0u64;
        for (u, &c) in counts.iter().enumerate() {
            if c > 0 {
                running += c;
                index.users.push(u);
                index.cumulative.push(running);
                index.trust.push(graph.trusts(u).to_vec());
                index.distrust.push(graph.distrusts(u).to_vec());
            }
        }
        TripletStore {
            counts,
            total: running,
            storage: Storage::Lazy(index),
        }
    }

    pub fn build(graph: &SocialGraph, mode: StoreMode) -> TripletStore {
        match mode {
            StoreMode::Materialized => extract_triplets(graph),
            StoreMode::Lazy => TripletStore::lazy(graph),
        }
    }

    pub fn mode(&self) -> StoreMode {
        match self.storage {
            Storage::Materialized(_) => StoreMode::Materialized,
            Storage::Lazy(_) => StoreMode::Lazy,
        }
    }

    /// |Omega_S|.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// c(u) = |N+(u)| * |N-(u)|.
    pub fn count_for(&self, user: usize) -> u64 {
        self.counts[user]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// The full list, when materialized.
    pub fn triplets(&self) -> Option<&[Triplet]> {
        match &self.storage {
            Storage::Materialized(t) => Some(t),
            Storage::Lazy(_) => None,
        }
    }

    /// One triplet drawn uniformly from the whole set.
    pub fn sample(&self, rng: &mut Rng) -> Result<Triplet> {
        if self.total == 0 {
            return Err(Error::NoSocialConstraints);
        }
        match &self.storage {
            Storage::Materialized(t) => Ok(t[rng.random_range(0..t.len())]),
            Storage::Lazy(index) => {
                // user drawn with probability c(u) / total, then j and k uniform
                let r = rng.random_range(0..self.total);
                let slot = index.cumulative.partition_point(|&c| c <= r);
                let trust = &index.trust[slot];
                let distrust = &index.distrust[slot];
                Ok(Triplet::new(
                    index.users[slot],
                    trust[rng.random_range(0..trust.len())],
                    distrust[rng.random_range(0..distrust.len())],
                ))
            }
        }
    }

    /// Fills `out` with `batch` independent uniform draws (with replacement).
    pub fn sample_batch(&self, rng: &mut Rng, batch: usize, out: &mut Vec<Triplet>) -> Result<()> {
        out.clear();
        for _ in 0..batch {
            out.push(self.sample(rng)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sign;
    use crate::rng::{stream, substream};

    fn four_two_user() -> SocialGraph {
        // user 0 trusts 1, 3, 5, 6 and distrusts 2, 4
        let mut g = SocialGraph::new(7);
        for v in [1, 3, 5, 6] {
            g.add_edge(0, v, Sign::Trust).unwrap();
        }
        for v in [2, 4] {
            g.add_edge(0, v, Sign::Distrust).unwrap();
        }
        g
    }

    #[test]
    fn four_trusted_two_distrusted_give_eight_triplets() {
        let store = extract_triplets(&four_two_user());
        assert_eq!(store.total(), 8);
        let t = store.triplets().unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.iter().all(|t| t.user == 0));
        assert_eq!(t[0], Triplet::new(0, 1, 2));
        assert_eq!(t[1], Triplet::new(0, 1, 4));
        assert_eq!(t[7], Triplet::new(0, 6, 4));
    }

    #[test]
    fn trust_only_graph_is_empty() {
        let mut g = SocialGraph::new(3);
        g.add_edge(0, 1, Sign::Trust).unwrap();
        g.add_edge(1, 2, Sign::Trust).unwrap();
        let store = extract_triplets(&g);
        assert!(store.is_empty());
        let mut rng = substream(1, stream::SGD, 0);
        assert!(matches!(store.sample(&mut rng), Err(Error::NoSocialConstraints)));
        assert!(matches!(
            TripletStore::lazy(&g).sample(&mut rng),
            Err(Error::NoSocialConstraints)
        ));
    }

    #[test]
    fn two_by_three_cartesian_product() {
        let mut g = SocialGraph::new(6);
        g.add_edge(0, 1, Sign::Trust).unwrap();
        g.add_edge(0, 2, Sign::Trust).unwrap();
        for v in [3, 4, 5] {
            g.add_edge(0, v, Sign::Distrust).unwrap();
        }
        let store = extract_triplets(&g);
        let mut expected = Vec::new();
        for j in [1, 2] {
            for k in [3, 4, 5] {
                expected.push(Triplet::new(0, j, k));
            }
        }
        assert_eq!(store.triplets().unwrap(), expected.as_slice());
    }

    #[test]
    fn single_triplet_always_sampled() {
        let mut g = SocialGraph::new(3);
        g.add_edge(0, 1, Sign::Trust).unwrap();
        g.add_edge(0, 2, Sign::Distrust).unwrap();
        let mut rng = substream(3, stream::SGD, 0);
        for store in [extract_triplets(&g), TripletStore::lazy(&g)] {
            for _ in 0..50 {
                assert_eq!(store.sample(&mut rng).unwrap(), Triplet::new(0, 1, 2));
            }
        }
    }

    #[test]
    fn lazy_counts_match_materialized() {
        let g = four_two_user();
        let lazy = TripletStore::lazy(&g);
        assert_eq!(lazy.mode(), StoreMode::Lazy);
        assert_eq!(lazy.total(), 8);
        assert_eq!(lazy.count_for(0), 8);
        assert!(lazy.triplets().is_none());
    }
}
