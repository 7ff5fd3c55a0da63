//! Binary inclusion vectors over the candidate predictors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the `p` candidate predictors enter the linear predictor.
///
/// The intercept is not part of the indicator; every model carries one.
/// Ordering is lexicographic on the bit string with `0 < 1`, which is the
/// tie-break used when reporting the most visited model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ModelIndicator(Vec<bool>);

impl ModelIndicator {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn null(p: usize) -> Self {
        Self(vec![false; p])
    }

    pub fn full(p: usize) -> Self {
        Self(vec![true; p])
    }

    pub fn from_active(p: usize, active: &[usize]) -> Self {
        let mut bits = vec![false; p];
        for &j in active {
            bits[j] = true;
        }
        Self(bits)
    }

    /// All `2^p` models in increasing bit-string order.
    pub fn enumerate(p: usize) -> impl Iterator<Item = ModelIndicator> {
        assert!(p < 32, "model space too large to enumerate");
        (0u64..(1u64 << p)).map(move |code| {
            Self((0..p).map(|j| code >> (p - 1 - j) & 1 == 1).collect())
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.0[j] = value;
    }

    pub fn with(&self, j: usize, value: bool) -> Self {
        let mut out = self.clone();
        out.0[j] = value;
        out
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Number of active predictors, `p_γ`.
    pub fn size(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Number of coefficients including the intercept, `d_γ = p_γ + 1`.
    pub fn dim(&self) -> usize {
        self.size() + 1
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    pub fn inactive(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| !b).map(|(j, _)| j)
    }

    /// Columns of the full design (intercept at 0, predictor `j` at `j + 1`)
    /// that belong to this model.
    pub fn columns(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.active().map(|j| j + 1)).collect()
    }

    /// Compact cache key. Panics beyond 64 predictors.
    pub fn key(&self) -> u64 {
        assert!(self.0.len() <= 64);
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Coefficients of the active block, intercept first, from a full
    /// length-`p + 1` vector.
    pub fn active_coefficients(&self, beta: &DVector<f64>) -> DVector<f64> {
        let cols = self.columns();
        DVector::from_iterator(cols.len(), cols.iter().map(|&c| beta[c]))
    }
}

impl fmt::Display for ModelIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ModelIndicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!(
                    "model bit string may only contain 0/1, found `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<ModelIndicator> for String {
    fn from(m: ModelIndicator) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ModelIndicator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Copies the listed columns of `x` into a new matrix.
pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, k| x[(i, cols[k])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_include_intercept() {
        let m = ModelIndicator::from_active(4, &[1, 3]);
        assert_eq!(m.columns(), vec![0, 2, 4]);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.to_string(), "0101");
    }

    #[test]
    fn enumeration_is_exhaustive_and_ordered() {
        let all: Vec<_> = ModelIndicator::enumerate(3).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].to_string(), "000");
        assert_eq!(all[7].to_string(), "111");
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parse_round_trip() {
        let m: ModelIndicator = "1100110".parse().unwrap();
        assert_eq!(m.size(), 4);
        assert_eq!(m.to_string(), "1100110");
        assert!("10x".parse::<ModelIndicator>().is_err());
    }
}
