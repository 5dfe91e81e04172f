//! Gradient descent against mini-batch SGD at several batch sizes, all from
//! one shared initialization.

use rayon::prelude::*;

use crate::data::{SocialGraph, SparseRatings};
use crate::error::Result;
use crate::factors::FactorModel;
use crate::metrics::Accuracy;
use crate::optimize::FitReport;
use crate::registry::{fit_factors, MethodConfig, OptimizerKind, TrainingData};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRun {
    /// `None` for full gradient descent.
    pub batch_size: Option<usize>,
    pub report: FitReport,
}

impl BatchRun {
    pub fn label(&self) -> String {
        match self.batch_size {
            None => "gd".to_string(),
            Some(b) => format!("sgd-{b}"),
        }
    }

    pub fn final_accuracy(&self) -> Option<Accuracy> {
        self.report.records.last().and_then(|r| r.validation)
    }
}

/// Batch sizes `max(1, round(f * total))`.
pub fn batch_sizes_from_fractions(total: u64, fractions: &[f64]) -> Vec<usize> {
    fractions
        .iter()
        .map(|&f| ((f * total as f64).round() as usize).max(1))
        .collect()
}

/// Fits MF+TD once with full gradients and once per batch size, tracking test
/// accuracy every iteration.
pub fn batch_study(
    train: &SparseRatings,
    test: &SparseRatings,
    graph: &SocialGraph,
    config: &MethodConfig,
    batch_sizes: &[usize],
) -> Result<Vec<BatchRun>> {
    let init = FactorModel::random(train.n_users(), train.n_items(), config.hp.rank, config.seed);
    let data = TrainingData {
        ratings: train,
        graph,
        validation: Some(test),
    };
    let social = config.hp.triplet_margin();
    let settings: Vec<Option<usize>> = std::iter::once(None)
        .chain(batch_sizes.iter().copied().map(Some))
        .collect();
    settings
        .par_iter()
        .map(|&batch_size| {
            let mut cfg = config.clone();
            cfg.patience = None;
            match batch_size {
                None => cfg.optimizer = OptimizerKind::Gd,
                Some(b) => {
                    cfg.optimizer = OptimizerKind::Sgd;
                    cfg.hp.batch_size = b;
                }
            }
            let (_, report) = fit_factors(data, &cfg, social, init.clone())?;
            Ok(BatchRun { batch_size, report })
        })
        .collect()
}
