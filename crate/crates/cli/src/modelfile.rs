//! Scorer weight files.
//!
//! A model file is TOML:
//!
//! ```toml
//! kind = "linear"          # or "svr-rbf"
//! feature_count = 5
//! bias = 0.5
//! min = [0.0, 0.0, 0.0, 0.0, 0.0]
//! max = [1.0, 1.0, 1.0, 1.0, 1.0]
//! weights = [0.1, 0.2, 0.3, 0.4, 0.5]   # linear only
//! # svr-rbf only:
//! # gamma = 0.5
//! # support_vectors = [[...], ...]
//! # coefficients = [...]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use smo_enhance_core::{ModelKind, ScoringModel};

/// Test scorers fitted on the synthetic fixtures by `fit-models`.
pub const BUNDLED_BRISQUE: &str = include_str!("../models/brisque_test.toml");
pub const BUNDLED_CEIQ: &str = include_str!("../models/ceiq_test.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: String,
    feature_count: usize,
    bias: f64,
    min: Vec<f64>,
    max: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support_vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
}

/// Parses model text and checks it has `expected_features` inputs.
pub fn parse(text: &str, expected_features: usize) -> Result<ScoringModel> {
    let f: ModelFile = toml::from_str(text).context("malformed model file")?;
    let kind = match f.kind.as_str() {
        "linear" => {
            if f.gamma.is_some() || f.support_vectors.is_some() || f.coefficients.is_some() {
                bail!("linear model must not carry svr-rbf fields");
            }
            ModelKind::Linear {
                weights: f.weights.context("linear model needs weights")?,
            }
        }
        "svr-rbf" => {
            if f.weights.is_some() {
                bail!("svr-rbf model must not carry weights");
            }
            ModelKind::SvrRbf {
                gamma: f.gamma.context("svr-rbf model needs gamma")?,
                support_vectors: f.support_vectors.context("svr-rbf model needs support_vectors")?,
                coefficients: f.coefficients.context("svr-rbf model needs coefficients")?,
            }
        }
        other => bail!("unknown model kind {other:?} (linear, svr-rbf)"),
    };
    if f.feature_count != expected_features {
        bail!("model has {} features, expected {expected_features}", f.feature_count);
    }
    let model = ScoringModel {
        kind,
        feature_count: f.feature_count,
        min: f.min,
        max: f.max,
        bias: f.bias,
    };
    model.validate()?;
    Ok(model)
}

pub fn load(path: &Path, expected_features: usize) -> Result<ScoringModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, expected_features)
}

pub fn to_toml(model: &ScoringModel) -> String {
    let mut f = ModelFile {
        kind: model.kind.name().into(),
        feature_count: model.feature_count,
        bias: model.bias,
        min: model.min.clone(),
        max: model.max.clone(),
        weights: None,
        gamma: None,
        support_vectors: None,
        coefficients: None,
    };
    match &model.kind {
        ModelKind::Linear { weights } => f.weights = Some(weights.clone()),
        ModelKind::SvrRbf {
            gamma,
            support_vectors,
            coefficients,
        } => {
            f.gamma = Some(*gamma);
            f.support_vectors = Some(support_vectors.clone());
            f.coefficients = Some(coefficients.clone());
        }
    }
    toml::to_string(&f).expect("model serializes")
}
