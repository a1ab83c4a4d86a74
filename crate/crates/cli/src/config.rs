//! TOML run configuration.
//!
//! Every section and key is optional; missing values take the defaults
//! below. Command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use smo_enhance_core::optim::{PsoConfig, SearchSpace, SmoConfig};
use smo_enhance_core::pipeline::{PipelineConfig, PmdSharing, EME_BLOCK};
use smo_enhance_core::{Mode, ScoringModel};

use crate::modelfile;

/// Model path value that selects the scorer compiled into the binary.
pub const BUNDLED: &str = "bundled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: Run,
    pub pmd: Pmd,
    pub clahe: Clahe,
    pub smo: Smo,
    pub pso: Pso,
    pub models: Models,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    /// `pmd-only`, `clahe-only` or `hybrid`.
    pub mode: String,
    pub seed: u64,
    /// `csv` or `json`.
    pub report: String,
    /// `smo`, `pso` or `both` (optimize command only).
    pub optimizer: String,
    /// Worker threads for corpus runs, 0 = one per core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pmd {
    pub niter: [u32; 2],
    pub kappa: [f64; 2],
    pub lambda: [f64; 2],
    /// `shared` or `per-channel`.
    pub sharing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Clahe {
    pub clip_limit: [f64; 2],
    pub tiles: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smo {
    pub population: usize,
    pub iterations: usize,
    pub max_groups: usize,
    /// Defaults to 3 x population.
    pub local_leader_limit: Option<usize>,
    /// Defaults to population / 2.
    pub global_leader_limit: Option<usize>,
    pub perturbation_rate: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pso {
    pub population: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Models {
    /// Path to a model file, or `bundled`.
    pub brisque: String,
    pub ceiq: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Metrics {
    pub eme_block: usize,
}

impl Default for Run {
    fn default() -> Self {
        Self {
            mode: Mode::Hybrid.name().into(),
            seed: 0,
            report: "csv".into(),
            optimizer: "smo".into(),
            workers: 0,
        }
    }
}

impl Default for Pmd {
    fn default() -> Self {
        Self {
            niter: [5, 30],
            kappa: [10.0, 100.0],
            lambda: [0.1, 0.25],
            sharing: PmdSharing::Shared.name().into(),
        }
    }
}

impl Default for Clahe {
    fn default() -> Self {
        Self {
            clip_limit: [0.01, 4.0],
            tiles: [2, 16],
        }
    }
}

impl Default for Smo {
    fn default() -> Self {
        let d = SmoConfig::for_dims(3);
        Self {
            population: d.population,
            iterations: d.iterations,
            max_groups: d.max_groups,
            local_leader_limit: None,
            global_leader_limit: None,
            perturbation_rate: [d.perturbation_rate.0, d.perturbation_rate.1],
        }
    }
}

impl Default for Pso {
    fn default() -> Self {
        let d = PsoConfig::default();
        Self {
            population: d.population,
            iterations: d.iterations,
            inertia: d.inertia,
            cognitive: d.cognitive,
            social: d.social,
            velocity_fraction: d.velocity_fraction,
        }
    }
}

impl Default for Models {
    fn default() -> Self {
        Self {
            brisque: BUNDLED.into(),
            ceiq: BUNDLED.into(),
        }
    }
}

impl Default for Metrics {
    fn default() -> Self {
        Self { eme_block: EME_BLOCK }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            run: Run::default(),
            pmd: Pmd::default(),
            clahe: Clahe::default(),
            smo: Smo::default(),
            pso: Pso::default(),
            models: Models::default(),
            metrics: Metrics::default(),
        }
    }
}

/// Report format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl Config {
    /// Reads a config file. Relative model paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in [&mut cfg.models.brisque, &mut cfg.models.ceiq] {
            if m != BUNDLED && Path::new(m.as_str()).is_relative() {
                *m = base.join(m.as_str()).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mode(&self) -> Result<Mode> {
        Mode::parse(&self.run.mode).ok_or_else(|| anyhow!("unknown mode {:?} (pmd-only, clahe-only, hybrid)", self.run.mode))
    }

    pub fn format(&self) -> Result<Format> {
        match self.run.report.as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown report format {other:?} (csv, json)"),
        }
    }

    /// Optimizer names requested for the optimize command.
    pub fn optimizers(&self) -> Result<Vec<&'static str>> {
        match self.run.optimizer.as_str() {
            "smo" => Ok(vec!["smo"]),
            "pso" => Ok(vec!["pso"]),
            "both" => Ok(vec!["smo", "pso"]),
            other => bail!("unknown optimizer {other:?} (smo, pso, both)"),
        }
    }

    pub fn smo_config(&self) -> SmoConfig {
        let n = self.smo.population;
        SmoConfig {
            population: n,
            iterations: self.smo.iterations,
            max_groups: self.smo.max_groups,
            local_leader_limit: self.smo.local_leader_limit.unwrap_or(3 * n),
            global_leader_limit: self.smo.global_leader_limit.unwrap_or(n / 2),
            perturbation_rate: (self.smo.perturbation_rate[0], self.smo.perturbation_rate[1]),
            seed: self.run.seed,
        }
    }

    pub fn pso_config(&self) -> PsoConfig {
        PsoConfig {
            population: self.pso.population,
            iterations: self.pso.iterations,
            inertia: self.pso.inertia,
            cognitive: self.pso.cognitive,
            social: self.pso.social,
            velocity_fraction: self.pso.velocity_fraction,
            seed: self.run.seed,
        }
    }

    pub fn pmd_space(&self) -> Result<SearchSpace> {
        let p = &self.pmd;
        Ok(SearchSpace::new(
            vec![p.niter[0] as f64, p.kappa[0], p.lambda[0]],
            vec![p.niter[1] as f64, p.kappa[1], p.lambda[1]],
            vec![true, false, false],
        )?)
    }

    pub fn clahe_space(&self) -> Result<SearchSpace> {
        let c = &self.clahe;
        Ok(SearchSpace::new(
            vec![c.clip_limit[0], c.tiles[0] as f64],
            vec![c.clip_limit[1], c.tiles[1] as f64],
            vec![false, true],
        )?)
    }

    pub fn brisque_model(&self) -> Result<ScoringModel> {
        load_model(&self.models.brisque, modelfile::BUNDLED_BRISQUE, "BRISQUE", 36)
    }

    pub fn ceiq_model(&self) -> Result<ScoringModel> {
        load_model(&self.models.ceiq, modelfile::BUNDLED_CEIQ, "CEIQ", 5)
    }

    /// Pipeline configuration for `mode`, loading only the models the mode
    /// needs plus any that are available for reporting.
    pub fn pipeline(&self, mode: Mode) -> Result<PipelineConfig> {
        let sharing = PmdSharing::parse(&self.pmd.sharing)
            .ok_or_else(|| anyhow!("unknown pmd sharing {:?} (shared, per-channel)", self.pmd.sharing))?;
        let cfg = PipelineConfig {
            pmd_space: self.pmd_space()?,
            clahe_space: self.clahe_space()?,
            smo: self.smo_config(),
            brisque_model: Some(self.brisque_model()?),
            ceiq_model: Some(self.ceiq_model()?),
            mode,
            pmd_sharing: sharing,
            eme_block: self.metrics.eme_block,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_model(path: &str, bundled: &str, name: &str, count: usize) -> Result<ScoringModel> {
    if path == BUNDLED {
        log::warn!("using the bundled {name} test scorer (fitted on synthetic fixtures); pass a model file for real data");
        return modelfile::parse(bundled, count).with_context(|| format!("bundled {name} model"));
    }
    modelfile::load(&PathBuf::from(path), count).with_context(|| format!("{name} model {path}"))
}
