//! How far distrust edges can stand in for missing trust edges.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::{Edge, Sign, SocialGraph, SparseRatings};
use crate::error::{Error, Result};
use crate::experiments::evaluate_predictor;
use crate::metrics::Accuracy;
use crate::registry::{MethodConfig, Registry, TrainingData};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub method: &'static str,
    pub trust_fraction: f64,
    pub distrust_fraction: f64,
    pub accuracy: Accuracy,
}

fn keep_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).min(total)
}

/// Trust edges subsampled once; each distrust fraction keeps a prefix of
/// one fixed permutation, so larger fractions add edges to smaller ones.
pub fn tradeoff_graphs(
    graph: &SocialGraph,
    trust_keep: f64,
    distrust_fractions: &[f64],
    seed: u64,
) -> Result<Vec<SocialGraph>> {
    for &f in std::iter::once(&trust_keep).chain(distrust_fractions) {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid(format!("fraction {f} outside [0, 1]")));
        }
    }
    let mut trust: Vec<Edge> = graph.edges().filter(|e| e.sign == Sign::Trust).collect();
    let mut distrust: Vec<Edge> = graph.edges().filter(|e| e.sign == Sign::Distrust).collect();
    trust.shuffle(&mut substream(seed, stream::SWEEP, 0));
    distrust.shuffle(&mut substream(seed, stream::SWEEP, 1));
    trust.truncate(keep_count(trust_keep, trust.len()));
    distrust_fractions
        .iter()
        .map(|&f| {
            let kept = &distrust[..keep_count(f, distrust.len())];
            SocialGraph::from_edges(graph.n_users(), trust.iter().chain(kept).copied())
        })
        .collect()
}

/// One MF+TD fit per distrust fraction, plus an MF+T reference row on the
/// full trust graph.
pub fn distrust_tradeoff_run(
    train: &SparseRatings,
    test: &SparseRatings,
    graph: &SocialGraph,
    trust_keep: f64,
    distrust_fractions: &[f64],
    config: &MethodConfig,
) -> Result<Vec<TradeoffRow>> {
    let registry = Registry::builtin();
    let graphs = tradeoff_graphs(graph, trust_keep, distrust_fractions, config.seed)?;
    let fit = |method: &'static str, g: &SocialGraph| -> Result<Accuracy> {
        let data = TrainingData {
            ratings: train,
            graph: g,
            validation: None,
        };
        let predictor = registry.get(method)?.fit(data, config)?;
        evaluate_predictor(predictor.as_ref(), test)
    };
    let mut rows: Vec<TradeoffRow> = graphs
        .par_iter()
        .zip(distrust_fractions.par_iter())
        .map(|(g, &f)| {
            Ok(TradeoffRow {
                method: "mf-td",
                trust_fraction: trust_keep,
                distrust_fraction: f,
                accuracy: fit("mf-td", g)?,
            })
        })
        .collect::<Result<_>>()?;
    rows.push(TradeoffRow {
        method: "mf-t",
        trust_fraction: 1.0,
        distrust_fraction: 0.0,
        accuracy: fit("mf-t", graph)?,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distrust_subsets_are_nested() {
        let mut g = SocialGraph::new(10);
        for u in 0..9 {
            g.add_edge(u, u + 1, Sign::Trust).unwrap();
            g.add_edge(u + 1, u, Sign::Distrust).unwrap();
        }
        let graphs = tradeoff_graphs(&g, 0.5, &[0.0, 0.3, 1.0], 2).unwrap();
        assert_eq!(graphs[0].distrust_edge_count(), 0);
        assert_eq!(graphs[1].distrust_edge_count(), 3);
        assert_eq!(graphs[2].distrust_edge_count(), 9);
        for g in &graphs {
            assert_eq!(g.trust_edge_count(), 5);
        }
        for e in graphs[1].edges() {
            assert_eq!(graphs[2].sign_of(e.from, e.to), Some(e.sign));
        }
        assert!(tradeoff_graphs(&g, 1.5, &[0.1], 0).is_err());
    }
}
