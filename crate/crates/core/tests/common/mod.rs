//! Seeded random instances shared by the integration targets.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng as _;
use trustfactor::data::{Rating, RatingScale, Sign, SocialGraph, SparseRatings};
use trustfactor::rng::Rng;

/// Graph on `n` users where each ordered pair gets trust with probability
/// `p_trust`, otherwise distrust with probability `p_distrust`.
pub fn random_graph(rng: &mut Rng, n: usize, p_trust: f64, p_distrust: f64) -> SocialGraph {
    let mut g = SocialGraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let x: f64 = rng.random();
            if x < p_trust {
                g.add_edge(u, v, Sign::Trust).unwrap();
            } else if x < p_trust + p_distrust {
                g.add_edge(u, v, Sign::Distrust).unwrap();
            }
        }
    }
    g
}

/// Each cell observed with probability `density`, values uniform on the
/// default 1..5 scale.
pub fn random_ratings(rng: &mut Rng, n: usize, m: usize, density: f64) -> SparseRatings {
    let mut entries = Vec::new();
    for user in 0..n {
        for item in 0..m {
            if rng.random::<f64>() < density {
                entries.push(Rating {
                    user,
                    item,
                    value: rng.random_range(1.0..=5.0),
                });
            }
        }
    }
    SparseRatings::new(n, m, entries, RatingScale::default()).unwrap()
}

pub fn uniform_matrix(rng: &mut Rng, rows: usize, cols: usize, half_width: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-half_width..half_width))
}
