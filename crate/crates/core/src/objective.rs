//! Training objective: squared rating error, Frobenius penalties and one
//! social term.
//!
//! The social term is one of
//!
//! * none (plain factorization),
//! * trust pull: `(alpha/2) sum_u sum_{v in N+(u)} |U_u - U_v|^2`,
//! * distrust push: `-(beta/2) sum_u sum_{v in N-(u)} |U_u - U_v|^2`,
//! * triplet margin: `(lambda_s/|Omega_S|) sum_{(i,j,k)} loss(z_ijk)`, where
//!   `z` compares the squared distances from `U_i` to its trusted `U_j` and to
//!   its distrusted `U_k`.
//!
//! Gradients of the triplet term touch exactly three user rows per triplet, so
//! the sparse n x n constraint matrix of each triplet never has to be formed.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};

use crate::data::{SocialGraph, SparseRatings};
use crate::error::{Error, Result};
use crate::factors::FactorModel;
use crate::triplets::{Triplet, TripletStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// `max(0, 1 - z)`
    #[default]
    Hinge,
    /// `ln(1 + e^{-z})`
    Logistic,
}

impl LossKind {
    pub fn value(self, z: f64) -> f64 {
        match self {
            LossKind::Hinge => (1.0 - z).max(0.0),
            LossKind::Logistic => {
                if z > 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                }
            }
        }
    }

    /// d loss / dz. The hinge is taken as flat at its kink `z = 1`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            LossKind::Hinge => {
                if z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Logistic => {
                if z >= 0.0 {
                    let e = (-z).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + z.exp())
                }
            }
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::invalid(format!("unknown loss `{other}`"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        })
    }
}

/// `loss(z)` for the given kind.
pub fn loss_value(kind: LossKind, z: f64) -> f64 {
    kind.value(z)
}

/// Which way round the two squared distances enter the margin argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    /// `z = d(i,k) - d(i,j)`: the distrusted user must be farther away than
    /// the trusted one by at least the margin.
    #[default]
    Figure1,
    /// `z = d(i,j) - d(i,k)`, the argument order as printed in the hinge and
    /// logistic objectives.
    PaperLiteral,
}

impl SignConvention {
    fn orientation(self) -> f64 {
        match self {
            SignConvention::Figure1 => 1.0,
            SignConvention::PaperLiteral => -1.0,
        }
    }

    pub fn margin(self, dist_trusted: f64, dist_distrusted: f64) -> f64 {
        self.orientation() * (dist_distrusted - dist_trusted)
    }
}

impl FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "figure1" => Ok(SignConvention::Figure1),
            "paper-literal" => Ok(SignConvention::PaperLiteral),
            other => Err(Error::invalid(format!("unknown sign convention `{other}`"))),
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::Figure1 => "figure1",
            SignConvention::PaperLiteral => "paper-literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SocialTerm {
    None,
    TrustPull {
        alpha: f64,
    },
    DistrustPush {
        beta: f64,
    },
    TripletMargin {
        lambda_s: f64,
        loss: LossKind,
        convention: SignConvention,
    },
}

impl SocialTerm {
    pub fn name(&self) -> &'static str {
        match self {
            SocialTerm::None => "none",
            SocialTerm::TrustPull { .. } => "trust-pull",
            SocialTerm::DistrustPush { .. } => "distrust-push",
            SocialTerm::TripletMargin { .. } => "triplet-margin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub lambda_u: f64,
    pub lambda_v: f64,
}

pub fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Margin argument `z` of one triplet.
pub fn triplet_margin(users: &Array2<f64>, t: Triplet, convention: SignConvention) -> f64 {
    let d_trusted = squared_distance(users.row(t.user), users.row(t.trusted));
    let d_distrusted = squared_distance(users.row(t.user), users.row(t.distrusted));
    convention.margin(d_trusted, d_distrusted)
}

/// Unweighted loss contributed by one triplet.
pub fn triplet_term(
    users: &Array2<f64>,
    t: Triplet,
    loss: LossKind,
    convention: SignConvention,
) -> f64 {
    loss.value(triplet_margin(users, t, convention))
}

/// `Tr(C G)` for the triplet's sparse constraint matrix `C` and the user Gram
/// matrix `G = U U^T`, evaluated from the six nonzero entries of `C`. Equals
/// `|U_i - U_j|^2 - |U_i - U_k|^2`.
pub fn trace_identity_check(users: &Array2<f64>, t: Triplet) -> f64 {
    let (i, j, k) = (t.user, t.trusted, t.distrusted);
    let gram = |a: usize, b: usize| users.row(a).dot(&users.row(b));
    let entries = [
        (i, k, 1.0),
        (k, i, 1.0),
        (j, j, 1.0),
        (k, k, -1.0),
        (i, j, -1.0),
        (j, i, -1.0),
    ];
    entries.iter().map(|&(a, b, c)| c * gram(b, a)).sum()
}

/// Adds `weight * d loss(z) / dU` for one triplet into `grad`.
pub fn accumulate_triplet_gradient(
    users: &Array2<f64>,
    t: Triplet,
    loss: LossKind,
    convention: SignConvention,
    weight: f64,
    grad: &mut Array2<f64>,
) {
    let z = triplet_margin(users, t, convention);
    let slope = loss.derivative(z);
    if slope == 0.0 {
        return;
    }
    // dz/dU_i = 2(U_j - U_k), dz/dU_j = 2(U_i - U_j), dz/dU_k = 2(U_k - U_i)
    // for figure1; the literal convention flips all three.
    let c = 2.0 * weight * slope * convention.orientation();
    let (ui, uj, uk) = (
        users.row(t.user),
        users.row(t.trusted),
        users.row(t.distrusted),
    );
    for d in 0..users.ncols() {
        let (a, b, e) = (ui[d], uj[d], uk[d]);
        grad[[t.user, d]] += c * (b - e);
        grad[[t.trusted, d]] += c * (a - b);
        grad[[t.distrusted, d]] += c * (e - a);
    }
}

/// Gradient with respect to both factor matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub users: Array2<f64>,
    pub items: Array2<f64>,
}

impl Gradient {
    pub fn zeros_like(model: &FactorModel) -> Self {
        Gradient {
            users: Array2::zeros(model.users().dim()),
            items: Array2::zeros(model.items().dim()),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.users
            .iter()
            .chain(self.items.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// The objective bound to one training set.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub ratings: &'a SparseRatings,
    pub graph: &'a SocialGraph,
    pub triplets: &'a TripletStore,
    pub regularization: Regularization,
    pub social: SocialTerm,
}

impl<'a> Objective<'a> {
    pub fn new(
        ratings: &'a SparseRatings,
        graph: &'a SocialGraph,
        triplets: &'a TripletStore,
        regularization: Regularization,
        social: SocialTerm,
    ) -> Self {
        Objective {
            ratings,
            graph,
            triplets,
            regularization,
            social,
        }
    }

    pub fn check_shapes(&self, model: &FactorModel) -> Result<()> {
        if model.n_users() != self.ratings.n_users()
            || model.n_items() != self.ratings.n_items()
            || model.n_users() != self.graph.n_users()
        {
            return Err(Error::invalid(format!(
                "model is {}x{} but data is {}x{} with {} social users",
                model.n_users(),
                model.n_items(),
                self.ratings.n_users(),
                self.ratings.n_items(),
                self.graph.n_users()
            )));
        }
        Ok(())
    }

    /// `1/2 sum (R_ij - U_i . V_j)^2` over the observed ratings.
    pub fn rating_loss(&self, model: &FactorModel) -> f64 {
        0.5 * self
            .ratings
            .entries()
            .iter()
            .map(|r| {
                let e = r.value - model.score(r.user, r.item);
                e * e
            })
            .sum::<f64>()
    }

    pub fn frobenius_penalty(&self, model: &FactorModel) -> f64 {
        let sq = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>();
        0.5 * self.regularization.lambda_u * sq(model.users())
            + 0.5 * self.regularization.lambda_v * sq(model.items())
    }

    pub fn social_value(&self, model: &FactorModel) -> f64 {
        let users = model.users();
        match self.social {
            SocialTerm::None => 0.0,
            SocialTerm::TrustPull { alpha } => 0.5 * alpha * self.edge_distance_sum(users, true),
            SocialTerm::DistrustPush { beta } => -0.5 * beta * self.edge_distance_sum(users, false),
            SocialTerm::TripletMargin {
                lambda_s,
                loss,
                convention,
            } => {
                if self.triplets.is_empty() {
                    return 0.0;
                }
                let mut sum = 0.0;
                self.for_each_triplet(|t| sum += triplet_term(users, t, loss, convention));
                lambda_s / self.triplets.total() as f64 * sum
            }
        }
    }

    pub fn value(&self, model: &FactorModel) -> f64 {
        self.rating_loss(model) + self.frobenius_penalty(model) + self.social_value(model)
    }

    /// Full gradient. The triplet-margin term needs a materialized store.
    pub fn gradient(&self, model: &FactorModel) -> Result<Gradient> {
        let mut grad = Gradient::zeros_like(model);
        self.add_smooth_gradient(model, &mut grad);
        if let SocialTerm::TripletMargin {
            lambda_s,
            loss,
            convention,
        } = self.social
        {
            if !self.triplets.is_empty() {
                let triplets = self.triplets.triplets().ok_or(Error::LazyFullGradient)?;
                let weight = lambda_s / self.triplets.total() as f64;
                for &t in triplets {
                    accumulate_triplet_gradient(
                        model.users(),
                        t,
                        loss,
                        convention,
                        weight,
                        &mut grad.users,
                    );
                }
            }
        }
        Ok(grad)
    }

    /// Everything except the triplet-margin term: rating residuals, Frobenius
    /// penalties and the pairwise trust/distrust terms.
    pub fn add_smooth_gradient(&self, model: &FactorModel, grad: &mut Gradient) {
        self.add_rating_gradient(model, grad);
        grad.users.scaled_add(self.regularization.lambda_u, model.users());
        grad.items.scaled_add(self.regularization.lambda_v, model.items());
        match self.social {
            SocialTerm::TrustPull { alpha } => {
                self.add_edge_gradient(model.users(), true, alpha, &mut grad.users)
            }
            SocialTerm::DistrustPush { beta } => {
                self.add_edge_gradient(model.users(), false, -beta, &mut grad.users)
            }
            SocialTerm::None | SocialTerm::TripletMargin { .. } => {}
        }
    }

    pub fn add_rating_gradient(&self, model: &FactorModel, grad: &mut Gradient) {
        let users = model.users();
        let items = model.items();
        for r in self.ratings.entries() {
            let u = users.row(r.user);
            let v = items.row(r.item);
            let e = u.dot(&v) - r.value;
            for d in 0..users.ncols() {
                grad.users[[r.user, d]] += e * v[d];
                grad.items[[r.item, d]] += e * u[d];
            }
        }
    }

    /// Mini-batch estimate of the triplet-term gradient: `scale` times the
    /// summed per-triplet gradients of `batch`, added into `grad_users`.
    pub fn add_triplet_batch_gradient(
        &self,
        users: &Array2<f64>,
        batch: &[Triplet],
        scale: f64,
        grad_users: &mut Array2<f64>,
    ) {
        if let SocialTerm::TripletMargin {
            loss, convention, ..
        } = self.social
        {
            for &t in batch {
                accumulate_triplet_gradient(users, t, loss, convention, scale, grad_users);
            }
        }
    }

    fn for_each_triplet(&self, mut f: impl FnMut(Triplet)) {
        match self.triplets.triplets() {
            Some(list) => list.iter().copied().for_each(f),
            None => {
                for u in 0..self.graph.n_users() {
                    for &j in self.graph.trusts(u) {
                        for &k in self.graph.distrusts(u) {
                            f(Triplet::new(u, j, k));
                        }
                    }
                }
            }
        }
    }

    fn edge_distance_sum(&self, users: &Array2<f64>, trust: bool) -> f64 {
        let mut sum = 0.0;
        for u in 0..self.graph.n_users() {
            let nbrs = if trust {
                self.graph.trusts(u)
            } else {
                self.graph.distrusts(u)
            };
            for &v in nbrs {
                sum += squared_distance(users.row(u), users.row(v));
            }
        }
        sum
    }

    // d/dU of (w/2) sum |U_u - U_v|^2 over the chosen edge set
    fn add_edge_gradient(&self, users: &Array2<f64>, trust: bool, w: f64, grad: &mut Array2<f64>) {
        for u in 0..self.graph.n_users() {
            let nbrs = if trust {
                self.graph.trusts(u)
            } else {
                self.graph.distrusts(u)
            };
            for &v in nbrs {
                for d in 0..users.ncols() {
                    let diff = users[[u, d]] - users[[v, d]];
                    grad[[u, d]] += w * diff;
                    grad[[v, d]] -= w * diff;
                }
            }
        }
    }
}
