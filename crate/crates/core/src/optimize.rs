//! Full-batch gradient descent and mini-batch SGD over an [`Objective`].
//!
//! Both loops share the same skeleton: compute a descent direction, take the
//! step into fresh buffers, reject the step if it produced a non-finite or
//! huge entry, then record telemetry. SGD differs only in how the triplet part
//! of the direction is formed.

use std::fmt;
use std::time::{Duration, Instant};

use crate::data::SparseRatings;
use crate::error::{Error, Result};
use crate::factors::FactorModel;
use crate::metrics::{evaluate, Accuracy};
use crate::objective::{Gradient, Objective, SocialTerm};
use crate::params::{BatchScaling, Hyperparams};
use crate::rng::{stream, substream, Rng};
use crate::triplets::Triplet;

/// Any factor entry above this magnitude counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    EarlyStop,
    Divergence,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxIters => "max-iters",
            StopReason::EarlyStop => "early-stop",
            StopReason::Divergence => "divergence",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Exact objective, or a sampled estimate when the triplet store is lazy.
    pub objective: f64,
    pub train_rmse: f64,
    pub validation: Option<Accuracy>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

/// One record with the wall-clock stripped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub objective: f64,
    pub train_rmse: f64,
    pub validation: Option<Accuracy>,
}

impl FitReport {
    /// Records minus timing, for reproducibility comparisons.
    pub fn trajectory(&self) -> Vec<TrajectoryPoint> {
        self.records
            .iter()
            .map(|r| TrajectoryPoint {
                iteration: r.iteration,
                objective: r.objective,
                train_rmse: r.train_rmse,
                validation: r.validation,
            })
            .collect()
    }

    /// Objective values starting with the initial one.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective)
            .chain(self.records.iter().map(|r| r.objective))
            .collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }
}

/// Stops after validation RMSE fails to improve on its best value for
/// `patience` consecutive evaluations (at least one).
#[derive(Debug, Clone)]
pub struct EarlyStopMonitor {
    patience: usize,
    best: f64,
    misses: usize,
}

impl EarlyStopMonitor {
    pub fn new(patience: usize) -> Self {
        EarlyStopMonitor {
            patience: patience.max(1),
            best: f64::INFINITY,
            misses: 0,
        }
    }

    /// Feeds one evaluation; returns true when training should stop.
    pub fn observe(&mut self, rmse: f64) -> bool {
        if rmse < self.best {
            self.best = rmse;
            self.misses = 0;
        } else {
            self.misses += 1;
        }
        self.misses >= self.patience
    }
}

/// Replays `history` through a fresh monitor; `Some(index)` of the evaluation
/// at which it first signals a stop.
pub fn early_stop_monitor(history: &[f64], patience: usize) -> Option<usize> {
    let mut monitor = EarlyStopMonitor::new(patience);
    history.iter().position(|&v| monitor.observe(v))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions<'a> {
    pub validation: Option<&'a SparseRatings>,
    /// Early stopping on validation RMSE; ignored without a validation set.
    pub patience: Option<usize>,
    /// Seed of the triplet-sampling stream.
    pub seed: u64,
}

/// Full-gradient descent. A triplet-margin objective needs a materialized
/// store.
pub fn fit_gd(
    obj: &Objective<'_>,
    hp: &Hyperparams,
    init: FactorModel,
    opts: &FitOptions<'_>,
) -> Result<(FactorModel, FitReport)> {
    hp.validate()?;
    obj.check_shapes(&init)?;
    if matches!(obj.social, SocialTerm::TripletMargin { .. })
        && !obj.triplets.is_empty()
        && obj.triplets.triplets().is_none()
    {
        return Err(Error::LazyFullGradient);
    }
    run(obj, hp, init, opts, |model| {
        let grad = obj.gradient(model)?;
        Ok((grad, obj.value_after_step_is_exact()))
    })
}

/// Mini-batch SGD: the rating and pairwise terms use full gradients, the
/// triplet term uses `batch_size` uniform draws with replacement.
pub fn fit_sgd(
    obj: &Objective<'_>,
    hp: &Hyperparams,
    init: FactorModel,
    opts: &FitOptions<'_>,
) -> Result<(FactorModel, FitReport)> {
    hp.validate()?;
    obj.check_shapes(&init)?;
    let uses_triplets =
        matches!(obj.social, SocialTerm::TripletMargin { .. }) && !obj.triplets.is_empty();
    if uses_triplets && hp.batch_size as u64 > obj.triplets.total() {
        return Err(Error::invalid(format!(
            "batch size {} exceeds the {} available triplets",
            hp.batch_size,
            obj.triplets.total()
        )));
    }
    let mut rng: Rng = substream(opts.seed, stream::SGD, 0);
    let mut batch: Vec<Triplet> = Vec::with_capacity(hp.batch_size);
    run(obj, hp, init, opts, |model| {
        if uses_triplets {
            obj.triplets.sample_batch(&mut rng, hp.batch_size, &mut batch)?;
        } else {
            batch.clear();
        }
        let grad = minibatch_gradient(obj, model, &batch, hp.batch_scaling);
        Ok((grad, obj.value_after_step_is_exact()))
    })
}

/// SGD descent direction for a given batch. With the unbiased scaling and the
/// batch equal to the whole enumerated set this is the full gradient.
pub fn minibatch_gradient(
    obj: &Objective<'_>,
    model: &FactorModel,
    batch: &[Triplet],
    scaling: BatchScaling,
) -> Gradient {
    let mut grad = Gradient::zeros_like(model);
    obj.add_smooth_gradient(model, &mut grad);
    if let SocialTerm::TripletMargin { lambda_s, .. } = obj.social {
        if !batch.is_empty() {
            let b = batch.len() as f64;
            let scale = match scaling {
                BatchScaling::Unbiased => lambda_s / b,
                BatchScaling::PaperLiteral => lambda_s / (b * obj.triplets.total() as f64),
            };
            obj.add_triplet_batch_gradient(model.users(), batch, scale, &mut grad.users);
        }
    }
    grad
}

impl Objective<'_> {
    // Walking every triplet of a lazy store is what lazy mode exists to avoid.
    fn value_after_step_is_exact(&self) -> bool {
        !matches!(self.social, SocialTerm::TripletMargin { .. })
            || self.triplets.triplets().is_some()
            || self.triplets.is_empty()
    }

    fn sampled_value(&self, model: &FactorModel, rng: &mut Rng, draws: usize) -> Result<f64> {
        let base = self.rating_loss(model) + self.frobenius_penalty(model);
        if let SocialTerm::TripletMargin {
            lambda_s,
            loss,
            convention,
        } = self.social
        {
            let mut sum = 0.0;
            for _ in 0..draws {
                let t = self.triplets.sample(rng)?;
                sum += crate::objective::triplet_term(model.users(), t, loss, convention);
            }
            return Ok(base + lambda_s * sum / draws as f64);
        }
        Ok(base + self.social_value(model))
    }
}

fn train_rmse(obj: &Objective<'_>, model: &FactorModel, hp: &Hyperparams) -> f64 {
    if obj.ratings.is_empty() {
        return 0.0;
    }
    let clamp = hp.clamp_predictions.then(|| obj.ratings.scale());
    evaluate(obj.ratings, |u, i| clamped(model, u, i, clamp))
        .map(|a| a.rmse)
        .unwrap_or(0.0)
}

fn clamped(model: &FactorModel, u: usize, i: usize, clamp: Option<crate::data::RatingScale>) -> f64 {
    let raw = model.score(u, i);
    clamp.map_or(raw, |s| s.clamp(raw))
}

const ESTIMATE_DRAWS: usize = 1024;

fn run(
    obj: &Objective<'_>,
    hp: &Hyperparams,
    init: FactorModel,
    opts: &FitOptions<'_>,
    mut direction: impl FnMut(&FactorModel) -> Result<(Gradient, bool)>,
) -> Result<(FactorModel, FitReport)> {
    let start = Instant::now();
    let schedule = hp.schedule();
    let clamp = hp.clamp_predictions.then(|| obj.ratings.scale());
    let mut estimate_rng = substream(opts.seed, stream::SGD, 1);
    let mut value = |model: &FactorModel, exact: bool| -> Result<f64> {
        if exact {
            Ok(obj.value(model))
        } else {
            obj.sampled_value(model, &mut estimate_rng, ESTIMATE_DRAWS)
        }
    };

    let mut model = init;
    let initial_objective = value(&model, obj.value_after_step_is_exact())?;
    let mut monitor = opts.patience.map(EarlyStopMonitor::new);
    let mut records = Vec::with_capacity(hp.epochs);
    let mut stop_reason = StopReason::MaxIters;

    for t in 1..=hp.epochs {
        let (grad, exact) = direction(&model)?;
        let eta = schedule.rate(t);
        let users = model.users() - &(grad.users * eta);
        let items = model.items() - &(grad.items * eta);
        let next = FactorModel::from_parts(users, items, model.seed())?;
        if !next.is_finite() || next.max_abs() > DIVERGENCE_LIMIT {
            stop_reason = StopReason::Divergence;
            break;
        }
        model = next;

        let validation = match opts.validation {
            Some(v) if !v.is_empty() => Some(evaluate(v, |u, i| clamped(&model, u, i, clamp))?),
            _ => None,
        };
        records.push(IterationRecord {
            iteration: t,
            objective: value(&model, exact)?,
            train_rmse: train_rmse(obj, &model, hp),
            validation,
            elapsed: start.elapsed(),
        });
        if let (Some(m), Some(acc)) = (monitor.as_mut(), validation) {
            if m.observe(acc.rmse) {
                stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }

    Ok((
        model,
        FitReport {
            initial_objective,
            records,
            stop_reason,
        },
    ))
}
