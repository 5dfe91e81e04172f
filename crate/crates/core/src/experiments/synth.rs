//! Planted low-rank ratings with a cluster-aligned signed social graph.
//!
//! Latent dimension 0 is a shared bias that centres ratings near 3. The
//! remaining dimensions place each cluster at its own point on a circle, so
//! users in one cluster rate alike and users in different clusters do not.
//! Trust edges stay inside a cluster; distrust edges cross clusters.

use std::collections::HashSet;
use std::f64::consts::TAU;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::data::{Rating, RatingScale, Sign, SocialGraph, SparseRatings};
use crate::error::{Error, Result};
use crate::rng::{stream, substream, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub rank: usize,
    pub clusters: usize,
    /// Mean fraction of items each user rates.
    pub density: f64,
    pub noise: f64,
    pub trust_edges: usize,
    pub distrust_edges: usize,
    /// Round ratings to whole stars.
    pub quantize: bool,
    /// Spread of per-user activity; 0 gives every user the same count.
    pub activity_skew: f64,
    pub scale: RatingScale,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_users: 200,
            n_items: 150,
            rank: 3,
            clusters: 4,
            density: 0.2,
            noise: 0.1,
            trust_edges: 1000,
            distrust_edges: 1000,
            quantize: false,
            activity_skew: 0.0,
            scale: RatingScale::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub ratings: SparseRatings,
    pub graph: SocialGraph,
    pub users: Array2<f64>,
    pub items: Array2<f64>,
    pub clusters: Vec<usize>,
}

const BIAS_USER: f64 = 1.5;
const BIAS_ITEM: f64 = 2.0;
const CLUSTER_RADIUS: f64 = 1.0;
const USER_JITTER: f64 = 0.15;
const ITEM_SPREAD: f64 = 0.6;

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_users < 2 || self.n_items == 0 || self.rank == 0 || self.clusters == 0 {
            return Err(Error::invalid(
                "synthetic data needs at least 2 users, 1 item, rank 1 and 1 cluster",
            ));
        }
        if self.clusters > self.n_users {
            return Err(Error::invalid("more clusters than users"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::invalid(format!("density {} outside (0, 1]", self.density)));
        }
        if !(self.noise >= 0.0 && self.activity_skew >= 0.0) {
            return Err(Error::invalid("noise and activity skew must be >= 0"));
        }
        Ok(())
    }
}

/// Cluster of each user, balanced round-robin.
pub fn assign_clusters(n_users: usize, clusters: usize) -> Vec<usize> {
    (0..n_users).map(|u| u % clusters).collect()
}

/// Planted `U*` (n x rank) and `V*` (m x rank).
pub fn planted_factors(
    spec: &SyntheticSpec,
    clusters: &[usize],
    rng: &mut Rng,
) -> (Array2<f64>, Array2<f64>) {
    let k = spec.rank;
    let jitter = Normal::new(0.0, USER_JITTER).expect("valid normal");
    let spread = Normal::new(0.0, ITEM_SPREAD).expect("valid normal");
    let center = |c: usize, d: usize| -> f64 {
        let angle = TAU * c as f64 / spec.clusters as f64;
        match d {
            1 => CLUSTER_RADIUS * angle.cos(),
            2 => CLUSTER_RADIUS * angle.sin(),
            _ => 0.0,
        }
    };
    let mut users = Array2::zeros((spec.n_users, k));
    for (u, &c) in clusters.iter().enumerate() {
        users[[u, 0]] = BIAS_USER;
        for d in 1..k {
            users[[u, d]] = center(c, d) + jitter.sample(rng);
        }
    }
    let mut items = Array2::zeros((spec.n_items, k));
    for i in 0..spec.n_items {
        items[[i, 0]] = BIAS_ITEM;
        for d in 1..k {
            items[[i, d]] = spread.sample(rng);
        }
    }
    (users, items)
}

/// Samples each user's rated items, then `clamp(U* V*^T + noise)`.
pub fn ratings_from_factors(
    users: &Array2<f64>,
    items: &Array2<f64>,
    spec: &SyntheticSpec,
    rng: &mut Rng,
) -> Result<SparseRatings> {
    let (n, m) = (users.nrows(), items.nrows());
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let activity: Vec<f64> = if spec.activity_skew > 0.0 {
        let z = Normal::new(0.0, spec.activity_skew).expect("valid normal");
        let raw: Vec<f64> = (0..n).map(|_| z.sample(rng).exp()).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        raw.into_iter().map(|a| a / mean).collect()
    } else {
        vec![1.0; n]
    };
    let mut entries = Vec::new();
    for (u, a) in activity.into_iter().enumerate() {
        let count = ((spec.density * m as f64 * a).round() as usize).clamp(1, m);
        let mut chosen = index::sample(rng, m, count).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            let mut value = users.row(u).dot(&items.row(i)) + noise.sample(rng);
            if spec.quantize {
                value = value.round();
            }
            entries.push(Rating {
                user: u,
                item: i,
                value: spec.scale.clamp(value),
            });
        }
    }
    SparseRatings::new(n, m, entries, spec.scale)
}

fn sample_pairs(
    count: usize,
    candidates: usize,
    draw: impl Fn(&mut Rng) -> (usize, usize),
    enumerate: impl Fn() -> Vec<(usize, usize)>,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    if count * 2 <= candidates {
        let mut seen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let pair = draw(rng);
            if seen.insert(pair) {
                out.push(pair);
            }
        }
        out
    } else {
        let mut all = enumerate();
        all.shuffle(rng);
        all.truncate(count);
        all
    }
}

/// Trust edges inside clusters, distrust edges across clusters, each drawn
/// uniformly without replacement.
pub fn cluster_graph(
    clusters: &[usize],
    trust_edges: usize,
    distrust_edges: usize,
    rng: &mut Rng,
) -> Result<SocialGraph> {
    let n = clusters.len();
    let n_clusters = clusters.iter().max().map_or(0, |&c| c + 1);
    let mut members = vec![Vec::new(); n_clusters];
    for (u, &c) in clusters.iter().enumerate() {
        members[c].push(u);
    }
    let max_trust: usize = members.iter().map(|m| m.len() * m.len().saturating_sub(1)).sum();
    let max_distrust: usize = clusters.iter().map(|&c| n - members[c].len()).sum();
    if trust_edges > max_trust || distrust_edges > max_distrust {
        return Err(Error::invalid(format!(
            "requested {trust_edges} trust / {distrust_edges} distrust edges, \
             but the clusters allow at most {max_trust} / {max_distrust}"
        )));
    }

    let trust = sample_pairs(
        trust_edges,
        max_trust,
        |rng| loop {
            let u = rng.random_range(0..n);
            let group = &members[clusters[u]];
            let v = group[rng.random_range(0..group.len())];
            if v != u {
                return (u, v);
            }
        },
        || {
            let mut all = Vec::new();
            for u in 0..n {
                for &v in &members[clusters[u]] {
                    if v != u {
                        all.push((u, v));
                    }
                }
            }
            all
        },
        rng,
    );
    let distrust = sample_pairs(
        distrust_edges,
        max_distrust,
        |rng| loop {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if clusters[u] != clusters[v] {
                return (u, v);
            }
        },
        || {
            let mut all = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if clusters[u] != clusters[v] {
                        all.push((u, v));
                    }
                }
            }
            all
        },
        rng,
    );

    let mut graph = SocialGraph::new(n);
    for (u, v) in trust {
        graph.add_edge(u, v, Sign::Trust)?;
    }
    for (u, v) in distrust {
        graph.add_edge(u, v, Sign::Distrust)?;
    }
    Ok(graph)
}

pub fn synth_generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let clusters = assign_clusters(spec.n_users, spec.clusters);
    let mut rng = substream(spec.seed, stream::SYNTH, 0);
    let (users, items) = planted_factors(spec, &clusters, &mut rng);
    let ratings = ratings_from_factors(&users, &items, spec, &mut rng)?;
    let mut graph_rng = substream(spec.seed, stream::SYNTH, 1);
    let graph = cluster_graph(&clusters, spec.trust_edges, spec.distrust_edges, &mut graph_rng)?;
    Ok(Synthetic {
        ratings,
        graph,
        users,
        items,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_model_gives_constant_ratings() {
        let spec = SyntheticSpec {
            n_users: 3,
            n_items: 4,
            rank: 1,
            density: 1.0,
            noise: 0.0,
            quantize: true,
            ..SyntheticSpec::default()
        };
        let users = Array2::from_elem((3, 1), 1.0);
        let items = Array2::from_elem((4, 1), 4.0);
        let mut rng = substream(0, stream::SYNTH, 0);
        let r = ratings_from_factors(&users, &items, &spec, &mut rng).unwrap();
        assert_eq!(r.len(), 12);
        assert!(r.entries().iter().all(|e| e.value == 4.0));
    }

    #[test]
    fn edges_respect_clusters() {
        let s = synth_generate(&SyntheticSpec {
            seed: 9,
            ..SyntheticSpec::default()
        })
        .unwrap();
        assert_eq!(s.graph.trust_edge_count(), 1000);
        assert_eq!(s.graph.distrust_edge_count(), 1000);
        for e in s.graph.edges() {
            let same = s.clusters[e.from] == s.clusters[e.to];
            assert_eq!(same, e.sign == Sign::Trust);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec {
            n_users: 30,
            n_items: 20,
            trust_edges: 40,
            distrust_edges: 40,
            seed: 4,
            ..SyntheticSpec::default()
        };
        let a = synth_generate(&spec).unwrap();
        let b = synth_generate(&spec).unwrap();
        assert_eq!(a.ratings, b.ratings);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.users, b.users);
    }

    #[test]
    fn infeasible_edge_counts_error() {
        let spec = SyntheticSpec {
            n_users: 4,
            clusters: 2,
            trust_edges: 5,
            distrust_edges: 0,
            ..SyntheticSpec::default()
        };
        assert!(synth_generate(&spec).is_err());
    }

    #[test]
    fn dense_edge_requests_use_enumeration() {
        let clusters = assign_clusters(6, 2);
        let mut rng = substream(1, stream::SYNTH, 1);
        let g = cluster_graph(&clusters, 12, 18, &mut rng).unwrap();
        assert_eq!(g.trust_edge_count(), 12);
        assert_eq!(g.distrust_edge_count(), 18);
    }
}
