//! Memory-based predictors built on Pearson similarity and an optional
//! propagated web of trust.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{check_index, RatingScale, SocialGraph, SparseRatings};
use crate::error::{Error, Result};

/// Fewest co-rated items for a similarity entry to exist.
pub const MIN_CORATED: usize = 3;

/// Pearson correlation over the co-rated items of two item-sorted rating
/// rows, with both means taken over the co-rated set. `None` when fewer than
/// `min_corated` items are shared or either side has zero variance.
pub fn pearson(a: &[(usize, f64)], b: &[(usize, f64)], min_corated: usize) -> Option<f64> {
    let mut pairs = Vec::new();
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                pairs.push((a[x].1, b[y].1));
                x += 1;
                y += 1;
            }
        }
    }
    if pairs.is_empty() || pairs.len() < min_corated {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for &(ra, rb) in &pairs {
        cov += (ra - ma) * (rb - mb);
        va += (ra - ma) * (ra - ma);
        vb += (rb - mb) * (rb - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similar {
    pub user: usize,
    pub weight: f64,
    pub corated: usize,
}

/// Symmetric sparse PCC table.
#[derive(Debug, Clone)]
pub struct SimilarityCache {
    rows: Vec<Vec<Similar>>,
    min_corated: usize,
}

impl SimilarityCache {
    pub fn build(ratings: &SparseRatings, min_corated: usize) -> Self {
        let by_user = ratings.by_user();
        let by_item = ratings.by_item();
        let n = ratings.n_users();

        // upper triangle per user, then mirrored
        let upper: Vec<Vec<Similar>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0usize; n], Vec::new()),
                |(counts, touched), u| {
                    for &(item, _) in &by_user[u] {
                        for &(v, _) in &by_item[item] {
                            if v > u {
                                if counts[v] == 0 {
                                    touched.push(v);
                                }
                                counts[v] += 1;
                            }
                        }
                    }
                    touched.sort_unstable();
                    let mut row = Vec::new();
                    for &v in touched.iter() {
                        let c = counts[v];
                        counts[v] = 0;
                        if c < min_corated.max(1) {
                            continue;
                        }
                        if let Some(w) = pearson(&by_user[u], &by_user[v], min_corated) {
                            row.push(Similar {
                                user: v,
                                weight: w,
                                corated: c,
                            });
                        }
                    }
                    touched.clear();
                    row
                },
            )
            .collect();

        let mut rows: Vec<Vec<Similar>> = vec![Vec::new(); n];
        for (u, row) in upper.iter().enumerate() {
            for s in row {
                rows[s.user].push(Similar {
                    user: u,
                    weight: s.weight,
                    corated: s.corated,
                });
            }
        }
        for (u, row) in upper.into_iter().enumerate() {
            rows[u].extend(row);
        }
        SimilarityCache { rows, min_corated }
    }

    pub fn min_corated(&self) -> usize {
        self.min_corated
    }

    /// Entries of `u`, sorted by the other user.
    pub fn neighbors(&self, u: usize) -> &[Similar] {
        &self.rows[u]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let row = &self.rows[u];
        row.binary_search_by_key(&v, |s| s.user)
            .ok()
            .map(|idx| row[idx].weight)
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Breadth-first trust closure of `u` up to depth `p`, as `(user, depth)`
/// in admission order.
pub fn trust_closure(graph: &SocialGraph, u: usize, p: usize) -> Vec<(usize, usize)> {
    let mut seen = vec![false; graph.n_users()];
    seen[u] = true;
    let mut out = Vec::new();
    let mut queue = VecDeque::from([(u, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == p {
            continue;
        }
        for &w in graph.trusts(v) {
            if !seen[w] {
                seen[w] = true;
                out.push((w, d + 1));
                queue.push_back((w, d + 1));
            }
        }
    }
    out
}

/// Users reachable by a trust path of length `0..q` followed by one distrust
/// edge, sorted, never containing `u`.
pub fn distrust_closure(graph: &SocialGraph, u: usize, q: usize) -> Vec<usize> {
    let mut out = BTreeSet::new();
    let sources = std::iter::once(u).chain(
        trust_closure(graph, u, q.saturating_sub(1))
            .into_iter()
            .map(|(v, _)| v),
    );
    for v in sources {
        out.extend(graph.distrusts(v).iter().copied().filter(|&w| w != u));
    }
    out.into_iter().collect()
}

fn check_depth(name: &str, depth: usize) -> Result<()> {
    if depth == 0 {
        Err(Error::invalid(format!("{name} must be >= 1")))
    } else {
        Ok(())
    }
}

/// Trust closure of every user.
pub fn propagate_trust(graph: &SocialGraph, p: usize) -> Result<Vec<Vec<usize>>> {
    check_depth("trust depth p", p)?;
    Ok((0..graph.n_users())
        .map(|u| trust_closure(graph, u, p).into_iter().map(|(v, _)| v).collect())
        .collect())
}

/// Distrust closure of every user.
pub fn propagate_distrust(graph: &SocialGraph, q: usize) -> Result<Vec<Vec<usize>>> {
    check_depth("distrust depth q", q)?;
    Ok((0..graph.n_users())
        .map(|u| distrust_closure(graph, u, q))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbVariant {
    Nb,
    NbT,
    NbTdF,
    NbTdD,
}

impl NbVariant {
    pub const ALL: [NbVariant; 4] = [
        NbVariant::Nb,
        NbVariant::NbT,
        NbVariant::NbTdF,
        NbVariant::NbTdD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NbVariant::Nb => "nb",
            NbVariant::NbT => "nb-t",
            NbVariant::NbTdF => "nb-td-f",
            NbVariant::NbTdD => "nb-td-d",
        }
    }
}

impl fmt::Display for NbVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NbVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NbVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Candidate neighbors of `u` before the similarity and rated-item filters.
/// `None` for the plain variant, whose pool is every similar user.
pub fn social_pool(
    graph: &SocialGraph,
    u: usize,
    variant: NbVariant,
    p: usize,
    q: usize,
) -> Option<Vec<usize>> {
    if variant == NbVariant::Nb {
        return None;
    }
    let trusted = trust_closure(graph, u, p);
    let pool = match variant {
        NbVariant::Nb => unreachable!(),
        NbVariant::NbT => trusted.into_iter().map(|(v, _)| v).collect(),
        NbVariant::NbTdF => {
            let blocked = distrust_closure(graph, u, q);
            trusted
                .into_iter()
                .map(|(v, _)| v)
                .filter(|v| blocked.binary_search(v).is_err())
                .collect()
        }
        NbVariant::NbTdD => trusted
            .into_iter()
            .filter(|&(v, depth)| depth < 2 || !graph.distrusts(u).contains(&v))
            .map(|(v, _)| v)
            .collect(),
    };
    Some(pool)
}

/// `mean_u + sum w (r_v - mean_v) / sum w` over `(w, r_v, mean_v)` with
/// `w > 0`; `None` when no term qualifies.
pub fn resnick(user_mean: f64, contributions: &[(f64, f64, f64)]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for &(w, r, m) in contributions {
        if w > 0.0 {
            num += w * (r - m);
            den += w;
        }
    }
    (den > 0.0).then(|| user_mean + num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NbConfig {
    pub variant: NbVariant,
    pub p: usize,
    pub q: usize,
    pub min_corated: usize,
    pub clamp: bool,
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig {
            variant: NbVariant::Nb,
            p: 1,
            q: 1,
            min_corated: MIN_CORATED,
            clamp: true,
        }
    }
}

/// A fitted neighborhood predictor.
#[derive(Debug, Clone)]
pub struct NeighborhoodModel {
    config: NbConfig,
    by_user: Vec<Vec<(usize, f64)>>,
    user_means: Vec<Option<f64>>,
    global_mean: f64,
    scale: RatingScale,
    sims: SimilarityCache,
    pools: Option<Vec<Vec<usize>>>,
}

impl NeighborhoodModel {
    pub fn fit(ratings: &SparseRatings, graph: &SocialGraph, config: NbConfig) -> Result<Self> {
        check_depth("trust depth p", config.p)?;
        check_depth("distrust depth q", config.q)?;
        if graph.n_users() != ratings.n_users() {
            return Err(Error::invalid(format!(
                "ratings cover {} users but the social graph has {}",
                ratings.n_users(),
                graph.n_users()
            )));
        }
        let by_user = ratings.by_user();
        let user_means = by_user
            .iter()
            .map(|row| {
                (!row.is_empty()).then(|| row.iter().map(|r| r.1).sum::<f64>() / row.len() as f64)
            })
            .collect();
        let scale = ratings.scale();
        let global_mean = ratings.mean().unwrap_or((scale.min + scale.max) / 2.0);
        let sims = SimilarityCache::build(ratings, config.min_corated);
        let pools = (config.variant != NbVariant::Nb).then(|| {
            (0..graph.n_users())
                .into_par_iter()
                .map(|u| {
                    let mut pool = social_pool(graph, u, config.variant, config.p, config.q)
                        .unwrap_or_default();
                    pool.sort_unstable();
                    pool
                })
                .collect()
        });
        Ok(NeighborhoodModel {
            config,
            by_user,
            user_means,
            global_mean,
            scale,
            sims,
            pools,
        })
    }

    pub fn config(&self) -> NbConfig {
        self.config
    }

    pub fn similarities(&self) -> &SimilarityCache {
        &self.sims
    }

    pub fn n_users(&self) -> usize {
        self.by_user.len()
    }

    /// The variant's neighbor pool of `u`, sorted.
    pub fn pool(&self, u: usize) -> Vec<usize> {
        match &self.pools {
            Some(pools) => pools[u].clone(),
            None => self.sims.neighbors(u).iter().map(|s| s.user).collect(),
        }
    }

    fn rating_of(&self, v: usize, item: usize) -> Option<f64> {
        let row = &self.by_user[v];
        row.binary_search_by_key(&item, |r| r.0).ok().map(|idx| row[idx].1)
    }

    pub fn predict(&self, u: usize, item: usize) -> Result<f64> {
        check_index("user", u, self.n_users())?;
        let mut contributions = Vec::new();
        let mut push = |v: usize, w: f64| {
            if w > 0.0 {
                if let (Some(r), Some(m)) = (self.rating_of(v, item), self.user_means[v]) {
                    contributions.push((w, r, m));
                }
            }
        };
        match &self.pools {
            Some(pools) => {
                for &v in &pools[u] {
                    if let Some(w) = self.sims.weight(u, v) {
                        push(v, w);
                    }
                }
            }
            None => {
                for s in self.sims.neighbors(u) {
                    push(s.user, s.weight);
                }
            }
        }
        let raw = match self.user_means[u] {
            Some(mean) => resnick(mean, &contributions).unwrap_or(mean),
            None => self.global_mean,
        };
        Ok(if self.config.clamp {
            self.scale.clamp(raw)
        } else {
            raw
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Rating, Sign};

    fn row(values: &[f64]) -> Vec<(usize, f64)> {
        values.iter().copied().enumerate().collect()
    }

    #[test]
    fn pearson_examples() {
        let a = row(&[1.0, 2.0, 3.0]);
        assert!((pearson(&a, &a, 3).unwrap() - 1.0).abs() < 1e-12);
        let b = row(&[3.0, 2.0, 1.0]);
        assert!((pearson(&a, &b, 3).unwrap() + 1.0).abs() < 1e-12);
        let flat = row(&[4.0, 4.0, 4.0]);
        assert_eq!(pearson(&a, &flat, 3), None);
        assert_eq!(pearson(&a[..2], &b[..2], 3), None);
    }

    fn graph(n: usize, trust: &[(usize, usize)], distrust: &[(usize, usize)]) -> SocialGraph {
        let mut g = SocialGraph::new(n);
        for &(a, b) in trust {
            g.add_edge(a, b, Sign::Trust).unwrap();
        }
        for &(a, b) in distrust {
            g.add_edge(a, b, Sign::Distrust).unwrap();
        }
        g
    }

    #[test]
    fn trust_propagation_examples() {
        let chain = graph(3, &[(0, 1), (1, 2)], &[]);
        assert_eq!(propagate_trust(&chain, 2).unwrap()[0], vec![1, 2]);
        assert_eq!(propagate_trust(&chain, 1).unwrap()[0], vec![1]);
        let cycle = graph(2, &[(0, 1), (1, 0)], &[]);
        assert_eq!(propagate_trust(&cycle, 3).unwrap()[0], vec![1]);
        assert!(propagate_trust(&chain, 0).is_err());
    }

    #[test]
    fn distrust_propagation_examples() {
        let direct = graph(2, &[], &[(0, 1)]);
        assert_eq!(propagate_distrust(&direct, 1).unwrap()[0], vec![1]);
        let via_trust = graph(3, &[(0, 1)], &[(1, 2)]);
        assert_eq!(propagate_distrust(&via_trust, 2).unwrap()[0], vec![2]);
        assert!(propagate_distrust(&via_trust, 1).unwrap()[0].is_empty());
        let chained = graph(3, &[], &[(0, 1), (1, 2)]);
        assert_eq!(propagate_distrust(&chained, 3).unwrap()[0], vec![1]);
    }

    #[test]
    fn resnick_worked_example() {
        assert_eq!(resnick(3.0, &[(1.0, 4.0, 4.0)]), Some(3.0));
        assert_eq!(resnick(2.5, &[]), None);
        assert_eq!(resnick(2.5, &[(-0.5, 5.0, 1.0)]), None);
    }

    #[test]
    fn empty_pool_falls_back_to_user_then_global_mean() {
        let ratings = SparseRatings::new(
            3,
            2,
            vec![
                Rating { user: 0, item: 0, value: 2.0 },
                Rating { user: 0, item: 1, value: 3.0 },
                Rating { user: 1, item: 0, value: 5.0 },
            ],
            RatingScale::default(),
        )
        .unwrap();
        let g = SocialGraph::new(3);
        let model = NeighborhoodModel::fit(&ratings, &g, NbConfig::default()).unwrap();
        assert_eq!(model.predict(0, 1).unwrap(), 2.5);
        assert!((model.predict(2, 0).unwrap() - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn debug_variant_drops_contradicted_admissions() {
        // 0 -> 1 -> 2 in trust, and 0 distrusts 2
        let g = graph(3, &[(0, 1), (1, 2)], &[(0, 2)]);
        assert_eq!(social_pool(&g, 0, NbVariant::NbT, 2, 1).unwrap(), vec![1, 2]);
        assert_eq!(social_pool(&g, 0, NbVariant::NbTdD, 2, 1).unwrap(), vec![1]);
        assert_eq!(social_pool(&g, 0, NbVariant::NbTdF, 2, 1).unwrap(), vec![1]);
    }

    #[test]
    fn similarity_cache_is_symmetric() {
        let mut entries = Vec::new();
        for u in 0..4 {
            for i in 0..5 {
                entries.push(Rating {
                    user: u,
                    item: i,
                    value: 1.0 + ((u * 3 + i * i) % 5) as f64,
                });
            }
        }
        let ratings = SparseRatings::new(4, 5, entries, RatingScale::default()).unwrap();
        let cache = SimilarityCache::build(&ratings, 3);
        for u in 0..4 {
            for s in cache.neighbors(u) {
                assert_eq!(cache.weight(s.user, u), Some(s.weight));
                assert!(s.weight.abs() <= 1.0);
                assert_eq!(s.corated, 5);
            }
        }
    }
}
