use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::objective::{LossKind, Regularization, SignConvention, SocialTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    #[default]
    Constant,
    InverseSqrt,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ScheduleKind::Constant),
            "inverse-sqrt" => Ok(ScheduleKind::InverseSqrt),
            other => Err(Error::invalid(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Step size per iteration, `t` counted from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub eta0: f64,
}

impl StepSchedule {
    pub fn rate(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self.kind {
            ScheduleKind::Constant => self.eta0,
            ScheduleKind::InverseSqrt => self.eta0 / (t as f64).sqrt(),
        }
    }
}

/// How a mini-batch of triplet gradients is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchScaling {
    /// `lambda_s / B`: unbiased for the full `lambda_s / |Omega_S|` term.
    #[default]
    Unbiased,
    /// `lambda_s / (B |Omega_S|)`, as printed in the mini-batch update rule.
    PaperLiteral,
}

impl FromStr for BatchScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(BatchScaling::Unbiased),
            "paper-literal" => Ok(BatchScaling::PaperLiteral),
            other => Err(Error::invalid(format!("unknown batch scaling `{other}`"))),
        }
    }
}

impl fmt::Display for BatchScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchScaling::Unbiased => "unbiased",
            BatchScaling::PaperLiteral => "paper-literal",
        })
    }
}

/// Every knob of the factorization methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub rank: usize,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub lambda_s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta0: f64,
    pub schedule: ScheduleKind,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub sign_convention: SignConvention,
    pub batch_scaling: BatchScaling,
    pub clamp_predictions: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            rank: 10,
            lambda_u: 5.0,
            lambda_v: 5.0,
            lambda_s: 14.8,
            alpha: 1.0,
            beta: 10.0,
            eta0: 0.01,
            schedule: ScheduleKind::Constant,
            batch_size: 64,
            epochs: 200,
            loss: LossKind::Hinge,
            sign_convention: SignConvention::Figure1,
            batch_scaling: BatchScaling::Unbiased,
            clamp_predictions: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda-u", self.lambda_u),
            ("lambda-v", self.lambda_v),
            ("lambda-s", self.lambda_s),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eta", self.eta0),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.rank == 0 {
            return Err(Error::invalid("latent dimension k must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> StepSchedule {
        StepSchedule {
            kind: self.schedule,
            eta0: self.eta0,
        }
    }

    pub fn regularization(&self) -> Regularization {
        Regularization {
            lambda_u: self.lambda_u,
            lambda_v: self.lambda_v,
        }
    }

    pub fn triplet_margin(&self) -> SocialTerm {
        SocialTerm::TripletMargin {
            lambda_s: self.lambda_s,
            loss: self.loss,
            convention: self.sign_convention,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        let c = StepSchedule {
            kind: ScheduleKind::Constant,
            eta0: 0.5,
        };
        assert_eq!(c.rate(1), 0.5);
        assert_eq!(c.rate(100), 0.5);
        let s = StepSchedule {
            kind: ScheduleKind::InverseSqrt,
            eta0: 0.5,
        };
        assert_eq!(s.rate(1), 0.5);
        assert_eq!(s.rate(4), 0.25);
    }

    #[test]
    fn negative_regularization_rejected() {
        let hp = Hyperparams {
            lambda_s: -1.0,
            ..Hyperparams::default()
        };
        assert!(hp.validate().is_err());
        assert!(Hyperparams::default().validate().is_ok());
    }
}
