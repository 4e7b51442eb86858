//! Row-selection schedules: reshuffled, shuffled once, fixed order, and
//! norm-weighted sampling with replacement.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A bijection on `0..m`, stored as the visiting order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Validates that `order` visits every index of `0..order.len()` once.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::domain("permutation of zero elements"));
        }
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("{order:?} is not a permutation")));
            }
        }
        Ok(Self(order))
    }

    /// Converts 1-based indices (as printed in tables) to a permutation.
    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        let zero = order
            .iter()
            .map(|&i| i.checked_sub(1).ok_or_else(|| Error::invalid("index 0 in 1-based order")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// Printed 1-based, the way tables of rates are usually read.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

/// Uniform random permutation of `0..m` by Fisher-Yates.
pub fn random_permutation(m: usize, rng: &mut Rng) -> Result<Permutation> {
    if m == 0 {
        return Err(Error::domain("random permutation of zero rows"));
    }
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    Ok(Permutation(order))
}

pub fn identity_permutation(m: usize) -> Result<Permutation> {
    if m == 0 {
        return Err(Error::domain("identity permutation of zero rows"));
    }
    Ok(Permutation((0..m).collect()))
}

/// Inverse-CDF sampler over fixed nonnegative weights.
#[derive(Clone, Debug)]
pub struct WeightedSampler {
    prefix: Vec<f64>,
}

impl WeightedSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::domain(format!("invalid sampling weight {w}")));
        }
        let mut acc = 0.0;
        let prefix: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if acc <= 0.0 {
            return Err(Error::domain("all sampling weights are zero"));
        }
        Ok(Self { prefix })
    }

    pub fn total(&self) -> f64 {
        *self.prefix.last().expect("nonempty")
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let target = rng.next_f64() * self.total();
        // First index whose cumulative weight exceeds the target; zero-weight
        // entries share their predecessor's prefix and are never selected.
        self.prefix
            .partition_point(|&p| p <= target)
            .min(self.prefix.len() - 1)
    }
}

/// Draws `i` with probability `weights[i] / Σ weights`.
pub fn weighted_row_index(squared_row_norms: &[f64], rng: &mut Rng) -> Result<usize> {
    Ok(WeightedSampler::new(squared_row_norms)?.sample(rng))
}
