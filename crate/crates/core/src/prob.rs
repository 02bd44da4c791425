//! Categorical distributions, (tempered) softmax, KL and Jensen-Shannon divergences.
//!
//! Divergences are measured in bits, so `jsd` lies in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied inside logarithms on the training-gradient path only.
pub const LOG_FLOOR: f64 = 1e-12;

/// A probability vector over `K >= 2` classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CategoricalDistribution<T: Scalar> {
    probs: Vec<T>,
}

impl<T: Scalar> CategoricalDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidDistribution("entries must be finite and nonnegative".into()));
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::sum_tolerance(probs.len()) {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 2, "uniform distribution needs K >= 2");
        Self {
            probs: vec![T::one() / T::of_usize(k); k],
        }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Index of the largest probability (first on ties).
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Unnormalized class scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Logits<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> Logits<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLogits);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn shift(&self, offset: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v + offset).collect(),
        }
    }
}

/// Max-shifted softmax over a raw slice.
pub(crate) fn softmax_slice<T: Scalar>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax<T: Scalar>(z: &Logits<T>) -> CategoricalDistribution<T> {
    CategoricalDistribution {
        probs: softmax_slice(z.values()),
    }
}

/// `softmax(z / temperature)`.
pub fn tempered_softmax<T: Scalar>(z: &Logits<T>, temperature: T) -> Result<CategoricalDistribution<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::NonPositiveTemperature(temperature.as_f64()));
    }
    Ok(softmax(&z.scale(T::one() / temperature)))
}

fn check_dims<T: Scalar>(p: &CategoricalDistribution<T>, q: &CategoricalDistribution<T>) -> Result<()> {
    if p.num_classes() != q.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: p.num_classes(),
            got: q.num_classes(),
        });
    }
    Ok(())
}

fn kl_slices<T: Scalar>(p: &[T], q: &[T]) -> T {
    let mut total = T::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return T::infinity();
        }
        total += pi * (pi / qi).log2();
    }
    total.max(T::zero())
}

/// `sum p_i log2(p_i / q_i)`; infinite when `q_i = 0 < p_i`.
pub fn kl_divergence<T: Scalar>(p: &CategoricalDistribution<T>, q: &CategoricalDistribution<T>) -> Result<T> {
    check_dims(p, q)?;
    Ok(kl_slices(p.probs(), q.probs()))
}

/// Jensen-Shannon divergence in bits; symmetric, finite and within `[0, 1]`.
pub fn jsd<T: Scalar>(p: &CategoricalDistribution<T>, q: &CategoricalDistribution<T>) -> Result<T> {
    check_dims(p, q)?;
    Ok(jsd_slices(p.probs(), q.probs()))
}

pub(crate) fn jsd_slices<T: Scalar>(p: &[T], q: &[T]) -> T {
    let half = T::of(0.5);
    let m: Vec<T> = p.iter().zip(q).map(|(&a, &b)| (a + b) * half).collect();
    let v = half * kl_slices(p, &m) + half * kl_slices(q, &m);
    v.max(T::zero()).min(T::one())
}

/// Maximum softmax probability.
pub fn msp<T: Scalar>(d: &CategoricalDistribution<T>) -> T {
    d.probs().iter().copied().fold(T::neg_infinity(), T::max)
}

/// JSD between `softmax(z)` and uniform, with its gradient w.r.t. `z`.
///
/// Uses `dJSD/dp_i = 0.5 * log2(2 p_i / (p_i + 1/K))`, with `LOG_FLOOR` on
/// the log arguments, pushed through the softmax Jacobian.
pub fn jsd_to_uniform_with_grad<T: Scalar>(z: &[T]) -> (T, Vec<T>) {
    let p = softmax_slice(z);
    let k = p.len();
    let u = T::one() / T::of_usize(k);
    let floor = T::of(LOG_FLOOR);
    let two = T::of(2.0);
    let half = T::of(0.5);
    let dp: Vec<T> = p
        .iter()
        .map(|&pi| half * ((two * pi).max(floor) / (pi + u)).log2())
        .collect();
    let mean: T = p.iter().zip(&dp).map(|(&pi, &g)| pi * g).sum();
    let grad = p.iter().zip(&dp).map(|(&pi, &g)| pi * (g - mean)).collect();
    let uniform = vec![u; k];
    (jsd_slices(&p, &uniform), grad)
}
