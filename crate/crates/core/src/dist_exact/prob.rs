use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::groups::StepDistribution;

use super::ExactError;

/// Arithmetic used for exact law tables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Double,
    Rational,
}

/// Probability mass type of a law table: `f64` or an exact rational.
pub trait Probability: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn from_count(count: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn step_masses(mu: &StepDistribution) -> Result<Vec<Self>, ExactError>;
    fn is_exact() -> bool;
}

impl Probability for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn from_count(count: u64) -> Self {
        count as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn step_masses(mu: &StepDistribution) -> Result<Vec<Self>, ExactError> {
        Ok(mu.probabilities())
    }
    fn is_exact() -> bool {
        false
    }
}

impl Probability for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn from_count(count: u64) -> Self {
        BigRational::from_integer(count.into())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn step_masses(mu: &StepDistribution) -> Result<Vec<Self>, ExactError> {
        mu.exact_probabilities()
            .map(|p| p.to_vec())
            .ok_or(ExactError::NotRational)
    }
    fn is_exact() -> bool {
        true
    }
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Shannon entropy (nats) of a collection of probabilities, `0 ln 0 = 0`.
pub fn entropy_of<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let h = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .collect::<CompensatedSum>()
        .value();
    h.max(0.0)
}
