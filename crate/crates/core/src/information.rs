//! Exact information measures on finite distributions and on processes.
//!
//! All entropies are in bits (base-2 logarithms) with the convention
//! 0 log 0 = 0.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::process::{ProcessSpec, Word};

/// Distributions must sum to 1 within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// Default cap on |A|^L when enumerating word blocks. Override with the
/// `EM_BLOCK_GUARD` environment variable.
pub const DEFAULT_BLOCK_GUARD: u64 = 1 << 20;

/// Current block guard, honoring `EM_BLOCK_GUARD` when set to a valid u64.
pub fn block_guard() -> u64 {
    std::env::var("EM_BLOCK_GUARD")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_BLOCK_GUARD)
}

fn check_block(symbols: usize, length: usize) -> Result<()> {
    let guard = block_guard();
    let mut total: u64 = 1;
    for _ in 0..length {
        total = match total.checked_mul(symbols as u64) {
            Some(t) if t <= guard => t,
            _ => {
                return Err(Error::BlockTooLarge {
                    symbols,
                    length,
                    guard,
                })
            }
        };
    }
    Ok(())
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        // `+ 0.0` turns the -0.0 of a point mass into +0.0.
        -p * p.log2() + 0.0
    } else {
        0.0
    }
}

/// A probability distribution over a finite set of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T: Ord> {
    weights: BTreeMap<T, f64>,
}

impl<T: Ord> Distribution<T> {
    /// Validate weights: nonnegative, summing to 1 within tolerance.
    /// Zero-weight outcomes are dropped.
    pub fn new(weights: BTreeMap<T, f64>) -> Result<Self> {
        let mut total = 0.0;
        for w in weights.values() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {w} is negative or not finite"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let weights = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        Ok(Distribution { weights })
    }

    /// Point mass on a single outcome.
    pub fn point(outcome: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(outcome, 1.0);
        Distribution { weights }
    }

    /// Plug-in distribution from empirical counts.
    pub fn from_counts(counts: &BTreeMap<T, u64>) -> Result<Self>
    where
        T: Clone,
    {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no observations".into()));
        }
        let weights = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k.clone(), c as f64 / total as f64))
            .collect();
        Ok(Distribution { weights })
    }

    pub fn prob(&self, outcome: &T) -> f64 {
        self.weights.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.weights.iter().map(|(k, &v)| (k, v))
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    /// Number of positive-probability outcomes.
    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.weights.values().map(|&p| plogp(p)).sum()
    }

    /// Total-variation distance: half the L1 distance.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut l1 = 0.0;
        for (k, &p) in &self.weights {
            l1 += (p - other.prob(k)).abs();
        }
        for (k, &q) in &other.weights {
            if !self.weights.contains_key(k) {
                l1 += q;
            }
        }
        l1 / 2.0
    }

    /// Pointwise mixture `sum_i c_i * d_i`. Coefficients must be a
    /// probability vector.
    pub fn mixture(parts: &[(f64, &Distribution<T>)]) -> Result<Self>
    where
        T: Clone,
    {
        let mut weights: BTreeMap<T, f64> = BTreeMap::new();
        for (c, d) in parts {
            for (k, p) in d.iter() {
                *weights.entry(k.clone()).or_insert(0.0) += c * p;
            }
        }
        Distribution::new(weights)
    }
}

/// A joint probability table over pairs of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<X: Ord, Y: Ord> {
    weights: BTreeMap<(X, Y), f64>,
}

impl<X: Ord + Clone, Y: Ord + Clone> JointTable<X, Y> {
    pub fn new(weights: BTreeMap<(X, Y), f64>) -> Result<Self> {
        let mut total = 0.0;
        for w in weights.values() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "joint weight {w} is negative or not finite"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "joint weights sum to {total}, not 1"
            )));
        }
        let weights = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        Ok(JointTable { weights })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(X, Y), f64)> {
        self.weights.iter().map(|(k, &v)| (k, v))
    }

    pub fn marginal_x(&self) -> Distribution<X> {
        let mut weights: BTreeMap<X, f64> = BTreeMap::new();
        for ((x, _), &p) in &self.weights {
            *weights.entry(x.clone()).or_insert(0.0) += p;
        }
        Distribution::new(weights).expect("marginal of a valid joint table")
    }

    pub fn marginal_y(&self) -> Distribution<Y> {
        let mut weights: BTreeMap<Y, f64> = BTreeMap::new();
        for ((_, y), &p) in &self.weights {
            *weights.entry(y.clone()).or_insert(0.0) += p;
        }
        Distribution::new(weights).expect("marginal of a valid joint table")
    }

    /// Joint entropy H[X, Y] in bits.
    pub fn joint_entropy(&self) -> f64 {
        self.weights.values().map(|&p| plogp(p)).sum()
    }

    /// Conditional entropy H[X | Y] = H[X, Y] - H[Y].
    pub fn conditional_entropy(&self) -> f64 {
        let h = self.joint_entropy() - self.marginal_y().entropy();
        if h < 0.0 {
            0.0
        } else {
            h
        }
    }

    /// Mutual information I[X; Y] = H[X] + H[Y] - H[X, Y]. Tiny negative
    /// values from rounding are clamped to zero.
    pub fn mutual_information(&self) -> f64 {
        let mi = self.marginal_x().entropy() + self.marginal_y().entropy() - self.joint_entropy();
        if mi < 0.0 && mi > -DISTRIBUTION_TOL {
            0.0
        } else {
            mi
        }
    }
}

/// Exact entropy of the length-`l` word distribution, H[Future^L].
///
/// H(0) = 0; guards the enumeration at |A|^L words.
pub fn block_entropy(spec: &ProcessSpec, l: usize) -> Result<f64> {
    check_block(spec.alphabet().len(), l)?;
    Ok(block_distribution(spec, l)?.entropy())
}

/// Exact distribution over length-`l` words.
pub fn block_distribution(spec: &ProcessSpec, l: usize) -> Result<Distribution<Word>> {
    check_block(spec.alphabet().len(), l)?;
    spec.conditional_future_distribution(&Word::empty(), l)
}

/// Exact joint table over (length-`l` past, length-`l` future) word pairs.
pub fn past_future_table(spec: &ProcessSpec, l: usize) -> Result<JointTable<Word, Word>> {
    check_block(spec.alphabet().len(), 2 * l)?;
    let blocks = spec.conditional_future_distribution(&Word::empty(), 2 * l)?;
    let mut weights = BTreeMap::new();
    for (w, p) in blocks.iter() {
        let (past, future) = w.split_at(l);
        *weights.entry((past, future)).or_insert(0.0) += p;
    }
    JointTable::new(weights)
}

/// Finite-horizon excess entropy estimate E(L) = I[Past^L; Future^L].
pub fn excess_entropy_estimate(spec: &ProcessSpec, l: usize) -> Result<f64> {
    if l == 0 {
        return Ok(0.0);
    }
    Ok(past_future_table(spec, l)?.mutual_information())
}
