//! Seeded splits and samples.
//!
//! Every operation shuffles with PCG64 (XSL-RR 128/64, the `pcg64` generator
//! of the PCG reference implementation) and a Fisher–Yates pass that walks
//! from the last position down, drawing each swap partner with Lemire's
//! multiply-and-reject bounded integer method. The generator state is the seed
//! and the stream selects the operation, so a split and a sample under the
//! same seed are not the same permutation:
//!
//! | operation        | stream |
//! |------------------|--------|
//! | `split_dataset`  | 1      |
//! | `sample_fraction`| 2      |
//! | `sample_shots`   | 3      |
//! | test reservation | 4      |

use std::collections::HashSet;
use std::hash::Hash;

use num_rational::Ratio;
use rand_core::RngCore;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use super::RepairInstance;

pub const SPLIT_STREAM: u128 = 1;
pub const FRACTION_STREAM: u128 = 2;
pub const SHOTS_STREAM: u128 = 3;
pub const RESERVE_STREAM: u128 = 4;

pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

/// The generator used for `stream` under `seed`.
pub fn rng(seed: u64, stream: u128) -> Pcg64 {
    Pcg64::new(u128::from(seed), stream)
}

/// Uniform integer in `0..n` by Lemire's method.
pub fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    assert!(n > 0);
    let mut m = u128::from(rng.next_u64()) * u128::from(n);
    if (m as u64) < n {
        let threshold = n.wrapping_neg() % n;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(n);
        }
    }
    (m >> 64) as u64
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

fn shuffled<T: Clone>(items: &[T], seed: u64, stream: u128) -> Vec<T> {
    let mut out = items.to_vec();
    shuffle(&mut out, &mut rng(seed, stream));
    out
}

/// Train/validation/test partition of instance ids. Serialized as the split
/// manifest `{seed, train, val, test}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn source_count(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplingError {
    #[error("splitting needs at least 10 instances, got {0}")]
    TooFewToSplit(usize),
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("cannot sample from an empty id list")]
    Empty,
    #[error("fraction must lie in (0, 1], got {0}")]
    BadFraction(Ratio<u64>),
    #[error("cannot draw {k} shots from {available} ids")]
    TooFewForShots { k: usize, available: usize },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("seed list must be non-empty and pairwise distinct")]
    BadSeeds,
}

/// Shuffles ids, then gives floor(N/10) to validation, the next floor(N/10)
/// to test and the rest to train.
pub fn split_dataset(instances: &[RepairInstance], seed: u64) -> Result<DatasetSplit, SamplingError> {
    let ids: Vec<String> = instances.iter().map(|i| i.id.clone()).collect();
    split_ids(&ids, seed)
}

pub fn split_ids(ids: &[String], seed: u64) -> Result<DatasetSplit, SamplingError> {
    if ids.len() < 10 {
        return Err(SamplingError::TooFewToSplit(ids.len()));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(SamplingError::DuplicateId(dup.clone()));
    }
    let order = shuffled(ids, seed, SPLIT_STREAM);
    let tenth = ids.len() / 10;
    let (val, rest) = order.split_at(tenth);
    let (test, train) = rest.split_at(tenth);
    Ok(DatasetSplit { seed, train: train.to_vec(), val: val.to_vec(), test: test.to_vec() })
}

/// Number of ids a fraction keeps: floor(fraction·n), at least 1.
pub fn fraction_size(n: usize, fraction: Ratio<u64>) -> usize {
    let kept = (Ratio::from_integer(n as u64) * fraction).to_integer() as usize;
    kept.max(1)
}

/// The first max(1, floor(fraction·N)) ids of a seeded shuffle, in shuffle order.
pub fn sample_fraction<T: Clone>(ids: &[T], fraction: Ratio<u64>, seed: u64) -> Result<Vec<T>, SamplingError> {
    if ids.is_empty() {
        return Err(SamplingError::Empty);
    }
    if fraction <= Ratio::from_integer(0) || fraction > Ratio::from_integer(1) {
        return Err(SamplingError::BadFraction(fraction));
    }
    let mut out = shuffled(ids, seed, FRACTION_STREAM);
    out.truncate(fraction_size(ids.len(), fraction));
    Ok(out)
}

/// Exactly `k` ids from a seeded shuffle. Draws for different `k` are
/// independent, not nested.
pub fn sample_shots<T: Clone>(ids: &[T], k: usize, seed: u64) -> Result<Vec<T>, SamplingError> {
    if k == 0 {
        return Err(SamplingError::ZeroShots);
    }
    if k > ids.len() {
        return Err(SamplingError::TooFewForShots { k, available: ids.len() });
    }
    let mut out = shuffled(ids, seed, SHOTS_STREAM);
    out.truncate(k);
    Ok(out)
}

/// [`sample_shots`] over the ids not in `reserved`.
pub fn sample_shots_excluding<T: Clone + Eq + Hash>(
    ids: &[T],
    reserved: &HashSet<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<T>, SamplingError> {
    let pool: Vec<T> = ids.iter().filter(|id| !reserved.contains(*id)).cloned().collect();
    sample_shots(&pool, k, seed)
}

/// A fixed-size test set drawn before any shots, so shot draws can exclude it.
pub fn reserve_test<T: Clone>(ids: &[T], size: usize, seed: u64) -> Result<Vec<T>, SamplingError> {
    if size > ids.len() {
        return Err(SamplingError::TooFewForShots { k: size, available: ids.len() });
    }
    let mut out = shuffled(ids, seed, RESERVE_STREAM);
    out.truncate(size);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    Fraction { fraction: Ratio<u64> },
    Shots { shot_count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    #[serde(flatten)]
    pub mode: SamplingMode,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_test_size: Option<usize>,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if self.seeds.is_empty() || distinct.len() != self.seeds.len() {
            return Err(SamplingError::BadSeeds);
        }
        match self.mode {
            SamplingMode::Fraction { fraction } if fraction <= Ratio::from_integer(0) || fraction > Ratio::from_integer(1) => {
                Err(SamplingError::BadFraction(fraction))
            }
            SamplingMode::Shots { shot_count: 0 } => Err(SamplingError::ZeroShots),
            _ => Ok(()),
        }
    }

    /// Full manifest for `seed` over `ids`. With `fixed_test_size` the test
    /// set is reserved first and training ids come from the rest (no
    /// validation set); otherwise the test set is the split's and training
    /// ids are drawn from the split's train part.
    pub fn manifest(&self, ids: &[String], seed: u64) -> Result<DatasetSplit, SamplingError> {
        let Some(size) = self.fixed_test_size else {
            let split = split_ids(ids, seed)?;
            let train = self.draw(&split.train, seed)?;
            return Ok(DatasetSplit { seed, train, val: split.val, test: split.test });
        };
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(SamplingError::DuplicateId(dup.clone()));
        }
        let test = reserve_test(ids, size, seed)?;
        let reserved: HashSet<String> = test.iter().cloned().collect();
        let train = match self.mode {
            SamplingMode::Shots { shot_count } => sample_shots_excluding(ids, &reserved, shot_count, seed)?,
            SamplingMode::Fraction { .. } => {
                let rest: Vec<String> = ids.iter().filter(|i| !reserved.contains(*i)).cloned().collect();
                self.draw(&rest, seed)?
            }
        };
        Ok(DatasetSplit { seed, train, val: Vec::new(), test })
    }

    /// Training ids for `seed`: a fraction or a shot sample of `pool`.
    pub fn draw<T: Clone>(&self, pool: &[T], seed: u64) -> Result<Vec<T>, SamplingError> {
        match self.mode {
            SamplingMode::Fraction { fraction } => sample_fraction(pool, fraction, seed),
            SamplingMode::Shots { shot_count } => sample_shots(pool, shot_count, seed),
        }
    }
}
