use ndarray::{Array2, ArrayView1};
use rand_distr::{Distribution, Normal};

use crate::data::{check_index, RatingScale};
use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Standard deviation of the Gaussian used to initialize both factor matrices.
pub const INIT_STD: f64 = 0.01;

/// Latent user (n x k) and item (m x k) features.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    users: Array2<f64>,
    items: Array2<f64>,
    seed: u64,
}

impl FactorModel {
    pub fn from_parts(users: Array2<f64>, items: Array2<f64>, seed: u64) -> Result<Self> {
        if users.ncols() != items.ncols() {
            return Err(Error::invalid(format!(
                "latent dimension mismatch: users have {}, items have {}",
                users.ncols(),
                items.ncols()
            )));
        }
        Ok(FactorModel { users, items, seed })
    }

    /// I.i.d. N(0, 0.01^2) entries drawn from the `init` stream of `seed`.
    pub fn random(n_users: usize, n_items: usize, rank: usize, seed: u64) -> Self {
        let mut rng = substream(seed, stream::INIT, 0);
        let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
        let users = Array2::from_shape_simple_fn((n_users, rank), || normal.sample(&mut rng));
        let items = Array2::from_shape_simple_fn((n_items, rank), || normal.sample(&mut rng));
        FactorModel { users, items, seed }
    }

    pub fn zeros(n_users: usize, n_items: usize, rank: usize) -> Self {
        FactorModel {
            users: Array2::zeros((n_users, rank)),
            items: Array2::zeros((n_items, rank)),
            seed: 0,
        }
    }

    pub fn users(&self) -> &Array2<f64> {
        &self.users
    }

    pub fn items(&self) -> &Array2<f64> {
        &self.items
    }

    pub fn users_mut(&mut self) -> &mut Array2<f64> {
        &mut self.users
    }

    pub fn items_mut(&mut self) -> &mut Array2<f64> {
        &mut self.items
    }

    pub fn n_users(&self) -> usize {
        self.users.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.items.nrows()
    }

    pub fn rank(&self) -> usize {
        self.users.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn user(&self, u: usize) -> ArrayView1<'_, f64> {
        self.users.row(u)
    }

    pub fn item(&self, i: usize) -> ArrayView1<'_, f64> {
        self.items.row(i)
    }

    /// Raw `U_u . V_i`; no bounds checks beyond ndarray's.
    #[inline]
    pub fn score(&self, user: usize, item: usize) -> f64 {
        self.users.row(user).dot(&self.items.row(item))
    }

    /// `U_u . V_i`, clipped to `clamp` when given.
    pub fn predict_rating(
        &self,
        user: usize,
        item: usize,
        clamp: Option<RatingScale>,
    ) -> Result<f64> {
        check_index("user", user, self.n_users())?;
        check_index("item", item, self.n_items())?;
        let raw = self.score(user, item);
        Ok(match clamp {
            Some(scale) => scale.clamp(raw),
            None => raw,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(self.items.iter()).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.users
            .iter()
            .chain(self.items.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn one_by_one(u: &[f64], v: &[f64]) -> FactorModel {
        let users = Array2::from_shape_vec((1, u.len()), u.to_vec()).unwrap();
        let items = Array2::from_shape_vec((1, v.len()), v.to_vec()).unwrap();
        FactorModel::from_parts(users, items, 0).unwrap()
    }

    #[test]
    fn prediction_examples() {
        let scale = RatingScale::default();
        let m = one_by_one(&[1.0, 2.0], &[3.0, 1.0]);
        assert_eq!(m.predict_rating(0, 0, None).unwrap(), 5.0);
        assert_eq!(m.predict_rating(0, 0, Some(scale)).unwrap(), 5.0);

        let m = one_by_one(&[0.0, 0.0], &[3.0, 1.0]);
        assert_eq!(m.predict_rating(0, 0, None).unwrap(), 0.0);
        assert_eq!(m.predict_rating(0, 0, Some(scale)).unwrap(), 1.0);

        let m = one_by_one(&[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(m.predict_rating(0, 0, None).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_prediction_errors() {
        let m = FactorModel::zeros(2, 3, 1);
        assert!(m.predict_rating(2, 0, None).is_err());
        assert!(m.predict_rating(0, 3, None).is_err());
    }

    #[test]
    fn random_init_is_seeded_and_small() {
        let a = FactorModel::random(20, 10, 4, 11);
        let b = FactorModel::random(20, 10, 4, 11);
        let c = FactorModel::random(20, 10, 4, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.max_abs() < 0.1);
        assert_eq!(a.users().dim(), (20, 4));
        assert_eq!(a.items().dim(), (10, 4));
    }

    #[test]
    fn rank_mismatch_rejected() {
        assert!(FactorModel::from_parts(array![[1.0, 2.0]], array![[1.0]], 0).is_err());
    }
}
