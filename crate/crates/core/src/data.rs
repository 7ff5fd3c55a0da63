//! Response, design matrix and predictor labels.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::model::{select_columns, ModelIndicator};

/// A GLM data set with an intercept column followed by centered covariates.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub family: GlmFamily,
    pub y: DVector<f64>,
    /// `n × (p + 1)`: a column of ones, then covariates minus `means`.
    pub x: DMatrix<f64>,
    /// Covariates as supplied, `n × p`.
    pub raw: DMatrix<f64>,
    /// Values subtracted from each covariate column.
    pub means: Vec<f64>,
    pub names: Vec<String>,
    pub response_name: String,
}

fn column_means(raw: &DMatrix<f64>) -> Vec<f64> {
    raw.column_iter().map(|c| c.mean()).collect()
}

impl Dataset {
    /// Builds a data set, centering every covariate on its sample mean.
    pub fn new(family: GlmFamily, y: DVector<f64>, raw: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let means = column_means(&raw);
        Self::with_means(family, y, raw, names, means)
    }

    /// Builds a data set centered on externally supplied means, e.g. the
    /// training means for a held-out test set.
    pub fn with_means(
        family: GlmFamily,
        y: DVector<f64>,
        raw: DMatrix<f64>,
        names: Vec<String>,
        means: Vec<f64>,
    ) -> Result<Self> {
        let n = y.len();
        let p = raw.ncols();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if raw.nrows() != n {
            return Err(Error::Dimension(format!(
                "{} covariate rows for {n} responses",
                raw.nrows()
            )));
        }
        if names.len() != p || means.len() != p {
            return Err(Error::Dimension(format!(
                "{p} covariates but {} names and {} means",
                names.len(),
                means.len()
            )));
        }
        if let GlmFamily::Binomial { trials } = &family {
            if trials.len() != n {
                return Err(Error::Dimension(format!(
                    "{} trial counts for {n} responses",
                    trials.len()
                )));
            }
        }
        family.validate_response(&y)?;
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("covariates must be finite".into()));
        }
        let x = DMatrix::from_fn(n, p + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                raw[(i, j - 1)] - means[j - 1]
            }
        });
        Ok(Self {
            family,
            y,
            x,
            raw,
            means,
            names,
            response_name: "y".into(),
        })
    }

    pub fn with_response_name(mut self, name: impl Into<String>) -> Self {
        self.response_name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of candidate predictors.
    pub fn p(&self) -> usize {
        self.raw.ncols()
    }

    /// Design columns of model `gamma`, intercept first.
    pub fn design_for(&self, gamma: &ModelIndicator) -> DMatrix<f64> {
        select_columns(&self.x, &gamma.columns())
    }

    /// Total number of Bernoulli trials, or `n` for other families.
    pub fn total_trials(&self) -> f64 {
        (0..self.n()).map(|i| self.family.trials(i)).sum()
    }

    /// The listed rows, centered on `means`.
    pub fn subset(&self, rows: &[usize], means: Vec<f64>) -> Result<Self> {
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        let raw = select_rows(&self.raw, rows);
        Ok(Self::with_means(self.family.subset(rows), y, raw, self.names.clone(), means)?
            .with_response_name(self.response_name.clone()))
    }

    /// Seeded random split into halves (the first gets `⌈n/2⌉` rows).
    /// Training covariates are re-centered on their own means and the test
    /// half is centered on the same training means.
    pub fn split_half(&self, seed: u64) -> Result<(Self, Self)> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = self.n().div_ceil(2);
        let (mut train_rows, mut test_rows) = (idx[..cut].to_vec(), idx[cut..].to_vec());
        train_rows.sort_unstable();
        test_rows.sort_unstable();
        if test_rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let train_means = column_means(&select_rows(&self.raw, &train_rows));
        let train = self.subset(&train_rows, train_means.clone())?;
        let test = self.subset(&test_rows, train_means)?;
        Ok((train, test))
    }
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}
