//! Named recommendation methods behind two object-safe traits, so the CLI and
//! the experiment drivers can select a method by string.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{RatingScale, SocialGraph, SparseRatings};
use crate::error::{Error, Result};
use crate::factors::FactorModel;
use crate::neighborhood::{NbConfig, NbVariant, NeighborhoodModel, MIN_CORATED};
use crate::objective::{Objective, SocialTerm};
use crate::optimize::{fit_gd, fit_sgd, FitOptions, FitReport};
use crate::params::Hyperparams;
use crate::triplets::{StoreMode, TripletStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Gd,
    Sgd,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::invalid(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Factorization,
    Neighborhood,
}

/// Everything a method may read; each family ignores the other's fields.
#[derive(Debug, Clone)]
pub struct MethodConfig {
    pub hp: Hyperparams,
    pub optimizer: OptimizerKind,
    pub store_mode: StoreMode,
    pub p: usize,
    pub q: usize,
    pub min_corated: usize,
    pub seed: u64,
    pub patience: Option<usize>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            hp: Hyperparams::default(),
            optimizer: OptimizerKind::Gd,
            store_mode: StoreMode::Materialized,
            p: 1,
            q: 1,
            min_corated: MIN_CORATED,
            seed: 0,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub ratings: &'a SparseRatings,
    pub graph: &'a SocialGraph,
    pub validation: Option<&'a SparseRatings>,
}

pub trait Predictor: Send + Sync {
    fn predict(&self, user: usize, item: usize) -> Result<f64>;

    fn factors(&self) -> Option<&FactorModel> {
        None
    }

    fn report(&self) -> Option<&FitReport> {
        None
    }
}

pub trait Recommender: Send + Sync {
    fn name(&self) -> &'static str;

    fn family(&self) -> Family;

    fn fit(&self, data: TrainingData<'_>, config: &MethodConfig) -> Result<Box<dyn Predictor>>;
}

pub struct FactorPredictor {
    pub model: FactorModel,
    pub report: FitReport,
    pub clamp: Option<RatingScale>,
}

impl Predictor for FactorPredictor {
    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        self.model.predict_rating(user, item, self.clamp)
    }

    fn factors(&self) -> Option<&FactorModel> {
        Some(&self.model)
    }

    fn report(&self) -> Option<&FitReport> {
        Some(&self.report)
    }
}

impl Predictor for NeighborhoodModel {
    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        NeighborhoodModel::predict(self, user, item)
    }
}

/// Plain, trust-pull, distrust-push or triplet-margin factorization.
pub struct FactorizationMethod {
    name: &'static str,
    social: fn(&Hyperparams) -> SocialTerm,
}

impl FactorizationMethod {
    pub fn social_term(&self, hp: &Hyperparams) -> SocialTerm {
        (self.social)(hp)
    }
}

/// Fits factors from `init` with the configured optimizer.
pub fn fit_factors(
    data: TrainingData<'_>,
    config: &MethodConfig,
    social: SocialTerm,
    init: FactorModel,
) -> Result<(FactorModel, FitReport)> {
    let store = match social {
        SocialTerm::TripletMargin { .. } => TripletStore::build(data.graph, config.store_mode),
        _ => TripletStore::lazy(&SocialGraph::new(data.graph.n_users())),
    };
    let obj = Objective::new(
        data.ratings,
        data.graph,
        &store,
        config.hp.regularization(),
        social,
    );
    let opts = FitOptions {
        validation: data.validation,
        patience: config.patience,
        seed: config.seed,
    };
    match config.optimizer {
        OptimizerKind::Gd => fit_gd(&obj, &config.hp, init, &opts),
        OptimizerKind::Sgd => fit_sgd(&obj, &config.hp, init, &opts),
    }
}

impl Recommender for FactorizationMethod {
    fn name(&self) -> &'static str {
        self.name
    }

    fn family(&self) -> Family {
        Family::Factorization
    }

    fn fit(&self, data: TrainingData<'_>, config: &MethodConfig) -> Result<Box<dyn Predictor>> {
        let init = FactorModel::random(
            data.ratings.n_users(),
            data.ratings.n_items(),
            config.hp.rank,
            config.seed,
        );
        let (model, report) = fit_factors(data, config, self.social_term(&config.hp), init)?;
        Ok(Box::new(FactorPredictor {
            model,
            report,
            clamp: config.hp.clamp_predictions.then(|| data.ratings.scale()),
        }))
    }
}

pub struct NeighborhoodMethod {
    variant: NbVariant,
}

impl Recommender for NeighborhoodMethod {
    fn name(&self) -> &'static str {
        self.variant.name()
    }

    fn family(&self) -> Family {
        Family::Neighborhood
    }

    fn fit(&self, data: TrainingData<'_>, config: &MethodConfig) -> Result<Box<dyn Predictor>> {
        let nb = NbConfig {
            variant: self.variant,
            p: config.p,
            q: config.q,
            min_corated: config.min_corated,
            clamp: config.hp.clamp_predictions,
        };
        Ok(Box::new(NeighborhoodModel::fit(data.ratings, data.graph, nb)?))
    }
}

pub struct Registry {
    methods: BTreeMap<&'static str, Box<dyn Recommender>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            methods: BTreeMap::new(),
        }
    }

    /// The eight built-in methods.
    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(FactorizationMethod {
            name: "mf",
            social: |_| SocialTerm::None,
        }));
        r.register(Box::new(FactorizationMethod {
            name: "mf-t",
            social: |hp| SocialTerm::TrustPull { alpha: hp.alpha },
        }));
        r.register(Box::new(FactorizationMethod {
            name: "mf-d",
            social: |hp| SocialTerm::DistrustPush { beta: hp.beta },
        }));
        r.register(Box::new(FactorizationMethod {
            name: "mf-td",
            social: Hyperparams::triplet_margin,
        }));
        for variant in NbVariant::ALL {
            r.register(Box::new(NeighborhoodMethod { variant }));
        }
        r
    }

    /// Adds or replaces a method under its own name.
    pub fn register(&mut self, method: Box<dyn Recommender>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Recommender> {
        self.methods
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let r = Registry::builtin();
        let names: Vec<_> = r.names().collect();
        assert_eq!(
            names,
            ["mf", "mf-d", "mf-t", "mf-td", "nb", "nb-t", "nb-td-d", "nb-td-f"]
        );
        assert_eq!(r.get("nb-t").unwrap().family(), Family::Neighborhood);
        assert!(matches!(r.get("svd"), Err(Error::UnknownMethod(_))));
    }
}
