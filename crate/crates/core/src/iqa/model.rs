//! Pluggable regressors that turn a feature vector into a quality score.
//!
//! Features are min-max normalized per dimension, `z = (f - min) / (max -
//! min)`, then fed to either a linear model or an RBF support vector
//! regressor.

use alloc::vec;
use alloc::vec::Vec;

use super::IqaError;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `score = w . z + bias`
    Linear { weights: Vec<f64> },
    /// `score = sum_k coef_k exp(-gamma |sv_k - z|^2) + bias`
    SvrRbf {
        gamma: f64,
        support_vectors: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
    },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linear { .. } => "linear",
            ModelKind::SvrRbf { .. } => "svr-rbf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringModel {
    pub kind: ModelKind,
    pub feature_count: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub bias: f64,
}

impl ScoringModel {
    pub fn new(kind: ModelKind, min: Vec<f64>, max: Vec<f64>, bias: f64) -> Result<Self, IqaError> {
        let model = Self {
            feature_count: min.len(),
            kind,
            min,
            max,
            bias,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), IqaError> {
        if self.feature_count == 0 {
            return Err(IqaError::InvalidModel("feature_count must be positive"));
        }
        if self.min.len() != self.feature_count || self.max.len() != self.feature_count {
            return Err(IqaError::InvalidModel("normalization arrays must have feature_count entries"));
        }
        if self.min.iter().zip(&self.max).any(|(lo, hi)| !(lo < hi)) {
            return Err(IqaError::InvalidModel("every normalization pair needs min < max"));
        }
        if !self.bias.is_finite() {
            return Err(IqaError::InvalidModel("bias must be finite"));
        }
        match &self.kind {
            ModelKind::Linear { weights } => {
                if weights.len() != self.feature_count {
                    return Err(IqaError::InvalidModel("weights must have feature_count entries"));
                }
            }
            ModelKind::SvrRbf {
                gamma,
                support_vectors,
                coefficients,
            } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(IqaError::InvalidModel("gamma must be positive"));
                }
                if support_vectors.len() != coefficients.len() {
                    return Err(IqaError::InvalidModel("one coefficient per support vector"));
                }
                if support_vectors.iter().any(|sv| sv.len() != self.feature_count) {
                    return Err(IqaError::InvalidModel("support vectors must have feature_count entries"));
                }
            }
        }
        Ok(())
    }

    /// Bounds `[0, 1]` on every feature, i.e. no rescaling.
    pub fn identity_normalization(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; n], vec![1.0; n])
    }

    pub fn normalize(&self, features: &[f64]) -> Result<Vec<f64>, IqaError> {
        if features.len() != self.feature_count {
            return Err(IqaError::FeatureCountMismatch {
                expected: self.feature_count,
                actual: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&f, (&lo, &hi))| (f - lo) / (hi - lo))
            .collect())
    }

    pub fn score(&self, features: &[f64]) -> Result<f64, IqaError> {
        let z = self.normalize(features)?;
        let raw = match &self.kind {
            ModelKind::Linear { weights } => weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>(),
            ModelKind::SvrRbf {
                gamma,
                support_vectors,
                coefficients,
            } => support_vectors
                .iter()
                .zip(coefficients)
                .map(|(sv, c)| {
                    let d2: f64 = sv.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                    c * libm::exp(-gamma * d2)
                })
                .sum::<f64>(),
        };
        Ok(raw + self.bias)
    }
}

/// Ridge least-squares fit of a linear scorer. Normalization bounds come
/// from the training features; a constant feature gets a unit range.
pub fn fit_linear(samples: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<ScoringModel, IqaError> {
    let n = samples.len();
    if n == 0 || n != targets.len() {
        return Err(IqaError::InvalidModel("need one target per training sample"));
    }
    let d = samples[0].len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(IqaError::InvalidModel("ragged training features"));
    }
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for s in samples {
        for j in 0..d {
            min[j] = min[j].min(s[j]);
            max[j] = max[j].max(s[j]);
        }
    }
    for j in 0..d {
        if !(max[j] > min[j]) {
            max[j] = min[j] + 1.0;
        }
    }

    // normal equations over [z, 1]; the intercept is not penalized
    let m = d + 1;
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut row = vec![0.0; m];
    for (s, &t) in samples.iter().zip(targets) {
        for j in 0..d {
            row[j] = (s[j] - min[j]) / (max[j] - min[j]);
        }
        row[d] = 1.0;
        for i in 0..m {
            rhs[i] += row[i] * t;
            for k in 0..m {
                a[i * m + k] += row[i] * row[k];
            }
        }
    }
    for j in 0..d {
        a[j * m + j] += ridge;
    }
    let sol = solve(a, rhs, m)?;
    ScoringModel::new(
        ModelKind::Linear {
            weights: sol[..d].to_vec(),
        },
        min,
        max,
        sol[d],
    )
}

/// Gaussian elimination with partial pivoting on a dense `m x m` system.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, m: usize) -> Result<Vec<f64>, IqaError> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(IqaError::Singular);
        }
        if pivot != col {
            for k in 0..m {
                a.swap(pivot * m + k, col * m + k);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..m {
            let f = a[r * m + col] / a[col * m + col];
            if f != 0.0 {
                for k in col..m {
                    a[r * m + k] -= f * a[col * m + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut acc = b[r];
        for k in r + 1..m {
            acc -= a[r * m + k] * x[k];
        }
        x[r] = acc / a[r * m + r];
    }
    Ok(x)
}
