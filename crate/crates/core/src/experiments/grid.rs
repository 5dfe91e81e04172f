use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::evaluate_predictor;
use crate::optimize::StopReason;
use crate::registry::{MethodConfig, Recommender, TrainingData};

/// The regularizer swept against `lambda_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    LambdaV,
    LambdaU,
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridAxis::LambdaV => "lambda_v",
            GridAxis::LambdaU => "lambda_u",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda_s: f64,
    pub second: f64,
    /// Validation RMSE; infinite for diverged fits.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub axis: GridAxis,
    /// `lambda_s` outer, second parameter inner.
    pub surface: Vec<GridPoint>,
    pub best: GridPoint,
}

/// Lowest RMSE; ties go to smaller `lambda_s`, then smaller second value.
pub fn argmin(surface: &[GridPoint]) -> Option<GridPoint> {
    surface.iter().copied().min_by(|a, b| {
        a.rmse
            .total_cmp(&b.rmse)
            .then(a.lambda_s.total_cmp(&b.lambda_s))
            .then(a.second.total_cmp(&b.second))
    })
}

/// Fits `method` at every `(lambda_s, second)` pair and scores it on the
/// validation set. Points run in parallel; the surface order is fixed.
pub fn grid_search(
    method: &dyn Recommender,
    data: TrainingData<'_>,
    base: &MethodConfig,
    axis: GridAxis,
    lambda_s: &[f64],
    second: &[f64],
) -> Result<GridResult> {
    let validation = data
        .validation
        .ok_or_else(|| Error::invalid("grid search needs a validation set"))?;
    if lambda_s.is_empty() || second.is_empty() {
        return Err(Error::invalid("grid must have at least one point"));
    }
    let points: Vec<(f64, f64)> = lambda_s
        .iter()
        .flat_map(|&s| second.iter().map(move |&x| (s, x)))
        .collect();
    let fit_data = TrainingData {
        validation: None,
        ..data
    };
    let surface = points
        .par_iter()
        .map(|&(s, x)| {
            let mut config = base.clone();
            config.hp.lambda_s = s;
            match axis {
                GridAxis::LambdaV => config.hp.lambda_v = x,
                GridAxis::LambdaU => config.hp.lambda_u = x,
            }
            let predictor = method.fit(fit_data, &config)?;
            let diverged = predictor
                .report()
                .is_some_and(|r| r.stop_reason == StopReason::Divergence);
            let rmse = if diverged {
                f64::INFINITY
            } else {
                let r = evaluate_predictor(predictor.as_ref(), validation)?.rmse;
                if r.is_finite() {
                    r
                } else {
                    f64::INFINITY
                }
            };
            Ok(GridPoint {
                lambda_s: s,
                second: x,
                rmse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = argmin(&surface).expect("non-empty grid");
    Ok(GridResult {
        axis,
        surface,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda_s: f64, second: f64, rmse: f64) -> GridPoint {
        GridPoint {
            lambda_s,
            second,
            rmse,
        }
    }

    #[test]
    fn argmin_breaks_ties_toward_small_values() {
        let surface = [p(2.0, 1.0, 0.5), p(1.0, 3.0, 0.5), p(1.0, 2.0, 0.5), p(0.0, 0.0, 0.7)];
        assert_eq!(argmin(&surface), Some(p(1.0, 2.0, 0.5)));
        assert_eq!(argmin(&[p(0.0, 0.0, f64::INFINITY)]).unwrap().lambda_s, 0.0);
    }
}
