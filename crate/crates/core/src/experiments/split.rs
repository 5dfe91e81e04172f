use rand::seq::SliceRandom;

use crate::data::SparseRatings;
use crate::error::{Error, Result};
use crate::rng::{stream, substream};

fn check_fraction(name: &str, fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1), got {fraction}")))
    }
}

/// Uniform random partition of the observed ratings. The train side gets
/// `floor(fraction * |ratings|)` entries; `repetition` selects an
/// independent shuffle under the same seed.
pub fn split_ratings(
    ratings: &SparseRatings,
    fraction: f64,
    seed: u64,
    repetition: u64,
) -> Result<(SparseRatings, SparseRatings)> {
    check_fraction("train fraction", fraction)?;
    let total = ratings.len();
    let n_train = (fraction * total as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train == total {
        return Err(Error::invalid(format!(
            "train fraction {fraction} of {total} ratings leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut substream(seed, stream::SPLIT, repetition));
    let (train, test) = order.split_at(n_train);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((ratings.select(&train), ratings.select(&test)))
}

#[derive(Debug, Clone)]
pub struct ColdStartSplit {
    pub train: SparseRatings,
    pub test: SparseRatings,
    /// Sorted indices of the users whose ratings were all withheld.
    pub cold_users: Vec<usize>,
}

/// Withholds every rating of `round(fraction * rated users)` users (at least
/// one) chosen uniformly among users with ratings.
pub fn cold_start_split(
    ratings: &SparseRatings,
    fraction: f64,
    seed: u64,
    repetition: u64,
) -> Result<ColdStartSplit> {
    check_fraction("cold-start fraction", fraction)?;
    let counts = ratings.user_counts();
    let mut rated: Vec<usize> = (0..counts.len()).filter(|&u| counts[u] > 0).collect();
    if rated.len() < 2 {
        return Err(Error::invalid("cold-start split needs at least two rated users"));
    }
    let n_cold = ((fraction * rated.len() as f64).round() as usize).clamp(1, rated.len() - 1);
    rated.shuffle(&mut substream(seed, stream::SPLIT, repetition));
    let mut cold_users = rated[..n_cold].to_vec();
    cold_users.sort_unstable();
    let mut is_cold = vec![false; counts.len()];
    for &u in &cold_users {
        is_cold[u] = true;
    }
    Ok(ColdStartSplit {
        train: ratings.filter(|r| !is_cold[r.user]),
        test: ratings.filter(|r| is_cold[r.user]),
        cold_users,
    })
}
