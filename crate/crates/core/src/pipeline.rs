//! LAB split, optimized diffusion on all three planes, optimized CLAHE on
//! lightness, recombination and scoring.
//!
//! The diffusion stage minimizes the BRISQUE score of the recombined
//! image's luminance. The CLAHE stage maximizes the CEIQ score of the
//! equalized, quantized lightness (the optimizer sees the negated score).
//! In hybrid mode CLAHE runs on the already denoised lightness; the a/b
//! planes are only ever touched by diffusion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::clahe::{clahe_apply, ClaheError, ClaheParams, MAX_CLIP_LIMIT, MAX_TILES, MIN_CLIP_LIMIT, MIN_TILES};
use crate::colorspace::{l_to_u8, lab_to_rgb, rgb_to_lab, u8_to_l, LabImage};
use crate::diffusion::{pmd_filter, DiffusionError, PmdParams};
use crate::image::{luminance, ChannelF64, ChannelU8, ImageError, RgbImage8};
use crate::iqa::{
    brisque_features, brisque_score, ceiq_features, ceiq_score, coc, cross_entropy, eme, entropy, michelson, mse,
    psnr_from_mse, rms_contrast, ssim, std_dev, IqaError, MetricsReport, ScoringModel,
};
use crate::optim::{pso_run, smo_run, Objective, ObjectiveError, OptimError, PsoConfig, SearchSpace, SmoConfig};

/// Block size used for the EME entry of a [`MetricsReport`].
pub const EME_BLOCK: usize = 8;

pub const NITER_RANGE: (f64, f64) = (5.0, 30.0);
pub const KAPPA_RANGE: (f64, f64) = (10.0, 100.0);
pub const LAMBDA_RANGE: (f64, f64) = (0.1, 0.25);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Clahe(#[from] ClaheError),
    #[error(transparent)]
    Iqa(#[from] IqaError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("mode {mode} needs a {model} scoring model")]
    MissingModel { mode: &'static str, model: &'static str },
    #[error("search space must have {expected} dimensions, got {actual}")]
    SpaceDims { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    PmdOnly,
    ClaheOnly,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::PmdOnly, Mode::ClaheOnly, Mode::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Mode::PmdOnly => "pmd-only",
            Mode::ClaheOnly => "clahe-only",
            Mode::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn uses_pmd(self) -> bool {
        self != Mode::ClaheOnly
    }

    pub fn uses_clahe(self) -> bool {
        self != Mode::PmdOnly
    }
}

/// How diffusion parameters are tuned across the L, a and b planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmdSharing {
    /// One optimization run, one parameter triple for all planes.
    #[default]
    Shared,
    /// Three sequential runs: L, then a, then b, each scored on the
    /// recombined image with the other planes held at their current state.
    PerChannel,
}

impl PmdSharing {
    pub fn name(self) -> &'static str {
        match self {
            PmdSharing::Shared => "shared",
            PmdSharing::PerChannel => "per-channel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [PmdSharing::Shared, PmdSharing::PerChannel].into_iter().find(|m| m.name() == s)
    }
}

/// Which minimizer drives a stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Smo(SmoConfig),
    Pso(PsoConfig),
}

impl Optimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Smo(_) => "smo",
            Optimizer::Pso(_) => "pso",
        }
    }

    fn run<O: Objective>(&self, objective: &mut O, space: &SearchSpace) -> Result<crate::optim::OptResult, OptimError> {
        match self {
            Optimizer::Smo(c) => smo_run(objective, space, c),
            Optimizer::Pso(c) => pso_run(objective, space, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `(niter, kappa, lambda)`, niter integer.
    pub pmd_space: SearchSpace,
    /// `(clip_limit, tiles)`, tiles integer.
    pub clahe_space: SearchSpace,
    pub smo: SmoConfig,
    pub brisque_model: Option<ScoringModel>,
    pub ceiq_model: Option<ScoringModel>,
    pub mode: Mode,
    pub pmd_sharing: PmdSharing,
    /// Block size of the EME entry in reports.
    pub eme_block: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pmd_space: default_pmd_space(),
            clahe_space: default_clahe_space(),
            smo: SmoConfig::for_dims(3),
            brisque_model: None,
            ceiq_model: None,
            mode: Mode::Hybrid,
            pmd_sharing: PmdSharing::Shared,
            eme_block: EME_BLOCK,
        }
    }
}

pub fn default_pmd_space() -> SearchSpace {
    SearchSpace::new(
        vec![NITER_RANGE.0, KAPPA_RANGE.0, LAMBDA_RANGE.0],
        vec![NITER_RANGE.1, KAPPA_RANGE.1, LAMBDA_RANGE.1],
        vec![true, false, false],
    )
    .expect("valid default bounds")
}

pub fn default_clahe_space() -> SearchSpace {
    SearchSpace::new(
        vec![MIN_CLIP_LIMIT, MIN_TILES as f64],
        vec![MAX_CLIP_LIMIT, MAX_TILES as f64],
        vec![false, true],
    )
    .expect("valid default bounds")
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        check_dims(&self.pmd_space, 3)?;
        check_dims(&self.clahe_space, 2)?;
        self.smo.validate()?;
        if self.eme_block == 0 {
            return Err(IqaError::InvalidBlock.into());
        }
        if self.mode.uses_pmd() && self.brisque_model.is_none() {
            return Err(PipelineError::MissingModel {
                mode: self.mode.name(),
                model: "BRISQUE",
            });
        }
        if self.mode.uses_clahe() && self.ceiq_model.is_none() {
            return Err(PipelineError::MissingModel {
                mode: self.mode.name(),
                model: "CEIQ",
            });
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self { mode, ..self.clone() }
    }
}

fn check_dims(space: &SearchSpace, expected: usize) -> Result<(), PipelineError> {
    if space.dims() != expected {
        return Err(PipelineError::SpaceDims {
            expected,
            actual: space.dims(),
        });
    }
    Ok(())
}

/// Memoizes a pure objective on the exact bits of each (already rounded)
/// point. Batch misses are evaluated concurrently with the `parallel`
/// feature; the cache is filled in input order either way.
pub struct CachedObjective<F> {
    f: F,
    cache: BTreeMap<Vec<u64>, f64>,
    hits: usize,
}

impl<F> CachedObjective<F>
where
    F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            cache: BTreeMap::new(),
            hits: 0,
        }
    }

    /// Number of evaluations answered from the cache.
    pub fn hits(&self) -> usize {
        self.hits
    }

    fn key(x: &[f64]) -> Vec<u64> {
        x.iter().map(|v| v.to_bits()).collect()
    }
}

impl<F> Objective for CachedObjective<F>
where
    F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
{
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let key = Self::key(x);
        if let Some(&v) = self.cache.get(&key) {
            self.hits += 1;
            return Ok(v);
        }
        let v = (self.f)(x)?;
        self.cache.insert(key, v);
        Ok(v)
    }

    fn evaluate_batch(&mut self, xs: &[Vec<f64>]) -> Vec<Result<f64, ObjectiveError>> {
        let keys: Vec<Vec<u64>> = xs.iter().map(|x| Self::key(x)).collect();
        let mut pending: Vec<usize> = Vec::new();
        let mut queued: BTreeMap<&[u64], ()> = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && queued.insert(k.as_slice(), ()).is_none() {
                pending.push(i);
            }
        }
        let computed: Vec<Result<f64, ObjectiveError>> = {
            let f = &self.f;
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                pending.par_iter().map(|&i| f(&xs[i])).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                pending.iter().map(|&i| f(&xs[i])).collect()
            }
        };
        let mut failures: BTreeMap<usize, ObjectiveError> = BTreeMap::new();
        for (&i, r) in pending.iter().zip(computed) {
            match r {
                Ok(v) => {
                    self.cache.insert(keys[i].clone(), v);
                }
                Err(e) => {
                    failures.insert(i, e);
                }
            }
        }
        let fresh: BTreeMap<usize, ()> = pending.iter().map(|&i| (i, ())).collect();
        keys.iter()
            .enumerate()
            .map(|(i, k)| {
                if let Some(e) = failures.get(&i) {
                    return Err(e.clone());
                }
                match self.cache.get(k) {
                    Some(&v) => {
                        if !fresh.contains_key(&i) {
                            self.hits += 1;
                        }
                        Ok(v)
                    }
                    None => Err(ObjectiveError("duplicate of a failed evaluation".to_string())),
                }
            })
            .collect()
    }
}

fn objective_error(e: impl core::fmt::Display) -> ObjectiveError {
    ObjectiveError(format!("{e}"))
}

/// `[niter, kappa, lambda]` (niter already integral) to parameters.
pub fn pmd_params_from(x: &[f64]) -> Result<PmdParams, DiffusionError> {
    let niter = if x[0] <= 0.0 { 0 } else { x[0] as u32 };
    PmdParams::new(niter, x[1], x[2])
}

/// `[clip_limit, tiles]` (tiles already integral) to parameters.
pub fn clahe_params_from(x: &[f64]) -> Result<ClaheParams, ClaheError> {
    let tiles = if x[1] <= 0.0 { 0 } else { x[1] as usize };
    ClaheParams::new(x[0], tiles)
}

/// Luminance of the RGB rendering of `lab`.
pub fn lab_luminance(lab: &LabImage) -> ChannelU8 {
    luminance(&lab_to_rgb(lab))
}

fn brisque_of(lab: &LabImage, model: &ScoringModel) -> Result<f64, IqaError> {
    brisque_score(&brisque_features(&lab_luminance(lab))?, model)
}

fn ceiq_of(img: &ChannelU8, model: &ScoringModel) -> Result<f64, IqaError> {
    ceiq_score(&ceiq_features(img)?, model)
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    /// `pmd`, `pmd-l`, `pmd-a`, `pmd-b` or `clahe`.
    pub stage: &'static str,
    pub optimizer: &'static str,
    /// Best objective after each iteration (CLAHE: negated CEIQ).
    pub history: Vec<f64>,
    pub best_objective: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmdOutcome {
    /// Parameters applied to L, a and b.
    pub params: [PmdParams; 3],
    pub lab: LabImage,
    pub traces: Vec<StageTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaheOutcome {
    pub params: ClaheParams,
    pub l: ChannelF64,
    pub trace: StageTrace,
}

fn filter_planes(lab: &LabImage, params: &[PmdParams; 3]) -> Result<LabImage, PipelineError> {
    Ok(LabImage::new(
        pmd_filter(&lab.l, &params[0])?,
        pmd_filter(&lab.a, &params[1])?,
        pmd_filter(&lab.b, &params[2])?,
    )?)
}

/// Diffusion stage driven by `optimizer`.
pub fn optimize_pmd_with(
    lab: &LabImage,
    space: &SearchSpace,
    model: &ScoringModel,
    sharing: PmdSharing,
    optimizer: &Optimizer,
) -> Result<PmdOutcome, PipelineError> {
    check_dims(space, 3)?;
    match sharing {
        PmdSharing::Shared => {
            let mut objective = CachedObjective::new(|x: &[f64]| {
                let p = pmd_params_from(x).map_err(objective_error)?;
                let out = filter_planes(lab, &[p; 3]).map_err(objective_error)?;
                brisque_of(&out, model).map_err(objective_error)
            });
            let r = optimizer.run(&mut objective, space)?;
            let p = pmd_params_from(&r.best_position)?;
            let params = [p; 3];
            Ok(PmdOutcome {
                lab: filter_planes(lab, &params)?,
                params,
                traces: vec![StageTrace {
                    stage: "pmd",
                    optimizer: optimizer.name(),
                    history: r.history,
                    best_objective: r.best_objective,
                    evaluations: r.evaluations,
                }],
            })
        }
        PmdSharing::PerChannel => {
            let mut current = lab.clone();
            let mut params = [PmdParams::new(0, KAPPA_RANGE.0, LAMBDA_RANGE.0)?; 3];
            let mut traces = Vec::with_capacity(3);
            for (c, stage) in ["pmd-l", "pmd-a", "pmd-b"].into_iter().enumerate() {
                let base = current.clone();
                let source = [&lab.l, &lab.a, &lab.b][c];
                let with_plane = |plane: ChannelF64| -> Result<LabImage, ImageError> {
                    let mut planes = [base.l.clone(), base.a.clone(), base.b.clone()];
                    planes[c] = plane;
                    let [l, a, b] = planes;
                    LabImage::new(l, a, b)
                };
                let mut objective = CachedObjective::new(|x: &[f64]| {
                    let p = pmd_params_from(x).map_err(objective_error)?;
                    let plane = pmd_filter(source, &p).map_err(objective_error)?;
                    let out = with_plane(plane).map_err(objective_error)?;
                    brisque_of(&out, model).map_err(objective_error)
                });
                let r = optimizer.run(&mut objective, space)?;
                params[c] = pmd_params_from(&r.best_position)?;
                current = with_plane(pmd_filter(source, &params[c])?)?;
                traces.push(StageTrace {
                    stage,
                    optimizer: optimizer.name(),
                    history: r.history,
                    best_objective: r.best_objective,
                    evaluations: r.evaluations,
                });
            }
            Ok(PmdOutcome {
                params,
                lab: current,
                traces,
            })
        }
    }
}

/// SMO-tuned diffusion of all three planes.
pub fn optimize_pmd(lab: &LabImage, cfg: &PipelineConfig) -> Result<PmdOutcome, PipelineError> {
    let model = cfg.brisque_model.as_ref().ok_or(PipelineError::MissingModel {
        mode: cfg.mode.name(),
        model: "BRISQUE",
    })?;
    optimize_pmd_with(lab, &cfg.pmd_space, model, cfg.pmd_sharing, &Optimizer::Smo(cfg.smo.clone()))
}

/// CLAHE stage on lightness driven by `optimizer`.
pub fn optimize_clahe_with(
    l: &ChannelF64,
    space: &SearchSpace,
    model: &ScoringModel,
    optimizer: &Optimizer,
) -> Result<ClaheOutcome, PipelineError> {
    check_dims(space, 2)?;
    let q = l_to_u8(l)?;
    let mut objective = CachedObjective::new(|x: &[f64]| {
        let p = clahe_params_from(x).map_err(objective_error)?;
        let out = clahe_apply(&q, &p).map_err(objective_error)?;
        ceiq_of(&out, model).map(|s| -s).map_err(objective_error)
    });
    let r = optimizer.run(&mut objective, space)?;
    let params = clahe_params_from(&r.best_position)?;
    Ok(ClaheOutcome {
        l: u8_to_l(&clahe_apply(&q, &params)?),
        params,
        trace: StageTrace {
            stage: "clahe",
            optimizer: optimizer.name(),
            history: r.history,
            best_objective: r.best_objective,
            evaluations: r.evaluations,
        },
    })
}

/// SMO-tuned CLAHE of a lightness plane.
pub fn optimize_clahe(l: &ChannelF64, cfg: &PipelineConfig) -> Result<ClaheOutcome, PipelineError> {
    let model = cfg.ceiq_model.as_ref().ok_or(PipelineError::MissingModel {
        mode: cfg.mode.name(),
        model: "CEIQ",
    })?;
    optimize_clahe_with(l, &cfg.clahe_space, model, &Optimizer::Smo(cfg.smo.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceResult {
    pub mode: Mode,
    pub enhanced: RgbImage8,
    /// L, a, b diffusion parameters; absent in clahe-only mode.
    pub chosen_pmd: Option<[PmdParams; 3]>,
    /// Absent in pmd-only mode.
    pub chosen_clahe: Option<ClaheParams>,
    pub metrics: MetricsReport,
    /// One entry per optimization run, in execution order.
    pub objective_trace: Vec<StageTrace>,
}

/// Stage labels passed to observers, in execution order.
pub const STAGE_PMD: &str = "pmd-opt";
pub const STAGE_CLAHE: &str = "clahe-opt";
pub const STAGE_METRICS: &str = "metrics";

/// Runs the configured mode on one image.
pub fn enhance(img: &RgbImage8, cfg: &PipelineConfig) -> Result<EnhanceResult, PipelineError> {
    enhance_observed(img, cfg, &mut |_| {})
}

/// [`enhance`], calling `observe` with [`STAGE_PMD`], [`STAGE_CLAHE`] and
/// [`STAGE_METRICS`] as each stage that runs completes.
pub fn enhance_observed(
    img: &RgbImage8,
    cfg: &PipelineConfig,
    observe: &mut dyn FnMut(&'static str),
) -> Result<EnhanceResult, PipelineError> {
    cfg.validate()?;
    let lab = rgb_to_lab(img);
    let pmd = if cfg.mode.uses_pmd() {
        let o = optimize_pmd(&lab, cfg)?;
        observe(STAGE_PMD);
        Some(o)
    } else {
        None
    };
    finish(img, lab, pmd, cfg, observe)
}

/// Runs all three modes on one image. The diffusion stage is optimized once
/// and shared by pmd-only and hybrid, which is what two separate
/// [`enhance`] calls with the same seed would compute.
pub fn enhance_all_modes(img: &RgbImage8, cfg: &PipelineConfig) -> Result<[EnhanceResult; 3], PipelineError> {
    enhance_all_modes_observed(img, cfg, &mut |_, _| {})
}

/// [`enhance_all_modes`] with a stage observer that also receives the mode
/// the stage belongs to. The shared diffusion stage is reported once, for
/// [`Mode::PmdOnly`].
pub fn enhance_all_modes_observed(
    img: &RgbImage8,
    cfg: &PipelineConfig,
    observe: &mut dyn FnMut(Mode, &'static str),
) -> Result<[EnhanceResult; 3], PipelineError> {
    cfg.with_mode(Mode::Hybrid).validate()?;
    let lab = rgb_to_lab(img);
    let pmd = optimize_pmd(&lab, cfg)?;
    observe(Mode::PmdOnly, STAGE_PMD);
    let mut run = |mode: Mode, pmd: Option<PmdOutcome>| {
        finish(img, lab.clone(), pmd, &cfg.with_mode(mode), &mut |s| observe(mode, s))
    };
    let pmd_only = run(Mode::PmdOnly, Some(pmd.clone()))?;
    let clahe_only = run(Mode::ClaheOnly, None)?;
    let hybrid = run(Mode::Hybrid, Some(pmd))?;
    Ok([pmd_only, clahe_only, hybrid])
}

fn finish(
    img: &RgbImage8,
    lab: LabImage,
    pmd: Option<PmdOutcome>,
    cfg: &PipelineConfig,
    observe: &mut dyn FnMut(&'static str),
) -> Result<EnhanceResult, PipelineError> {
    let mut traces = Vec::new();
    let (chosen_pmd, mut lab) = match pmd {
        Some(o) => {
            traces.extend(o.traces);
            (Some(o.params), o.lab)
        }
        None => (None, lab),
    };
    let chosen_clahe = if cfg.mode.uses_clahe() {
        let o = optimize_clahe(&lab.l, cfg)?;
        lab.l = o.l;
        traces.push(o.trace);
        observe(STAGE_CLAHE);
        Some(o.params)
    } else {
        None
    };
    let enhanced = lab_to_rgb(&lab);
    let metrics = evaluate_config(img, &enhanced, cfg)?;
    observe(STAGE_METRICS);
    Ok(EnhanceResult {
        mode: cfg.mode,
        enhanced,
        chosen_pmd,
        chosen_clahe,
        metrics,
        objective_trace: traces,
    })
}

/// Fixed-parameter pipeline: optional diffusion of all planes, optional
/// CLAHE on lightness, no optimization.
pub fn apply_fixed(
    img: &RgbImage8,
    pmd: Option<&[PmdParams; 3]>,
    clahe: Option<&ClaheParams>,
) -> Result<RgbImage8, PipelineError> {
    let mut lab = rgb_to_lab(img);
    if let Some(p) = pmd {
        lab = filter_planes(&lab, p)?;
    }
    if let Some(c) = clahe {
        lab.l = u8_to_l(&clahe_apply(&l_to_u8(&lab.l)?, c)?);
    }
    Ok(lab_to_rgb(&lab))
}

/// Metrics between two RGB images on their luminance planes, without the
/// model-based scores.
pub fn evaluate(original: &RgbImage8, enhanced: &RgbImage8) -> Result<MetricsReport, PipelineError> {
    evaluate_with(original, enhanced, None, None)
}

/// Metrics with the models and EME block of `cfg`.
pub fn evaluate_config(original: &RgbImage8, enhanced: &RgbImage8, cfg: &PipelineConfig) -> Result<MetricsReport, PipelineError> {
    evaluate_with_block(
        original,
        enhanced,
        cfg.brisque_model.as_ref(),
        cfg.ceiq_model.as_ref(),
        cfg.eme_block,
    )
}

/// [`evaluate_with_block`] with the default EME block.
pub fn evaluate_with(
    original: &RgbImage8,
    enhanced: &RgbImage8,
    brisque_model: Option<&ScoringModel>,
    ceiq_model: Option<&ScoringModel>,
) -> Result<MetricsReport, PipelineError> {
    evaluate_with_block(original, enhanced, brisque_model, ceiq_model, EME_BLOCK)
}

/// Full-reference values compare `original` to `enhanced`; single-image
/// values describe `enhanced`. Constant inputs give a NaN `coc`.
pub fn evaluate_with_block(
    original: &RgbImage8,
    enhanced: &RgbImage8,
    brisque_model: Option<&ScoringModel>,
    ceiq_model: Option<&ScoringModel>,
    eme_block: usize,
) -> Result<MetricsReport, PipelineError> {
    original.same_dims(enhanced)?;
    let x = luminance(original);
    let y = luminance(enhanced);
    let m = mse(&x, &y)?;
    let c = match coc(&x, &y) {
        Ok(v) => v,
        Err(IqaError::ConstantImage) => f64::NAN,
        Err(e) => return Err(e.into()),
    };
    Ok(MetricsReport {
        mse: m,
        psnr_db: psnr_from_mse(m),
        ssim: ssim(&x, &y)?,
        entropy_bits: entropy(&y),
        eme: eme(&y, eme_block)?,
        michelson: michelson(&y),
        rms_contrast: rms_contrast(&y),
        coc: c,
        std_dev: std_dev(&y),
        cross_entropy: cross_entropy(&x, &y),
        ceiq: ceiq_model.map(|mdl| ceiq_of(&y, mdl)).transpose()?,
        brisque: brisque_model
            .map(|mdl| brisque_features(&y).and_then(|f| brisque_score(&f, mdl)))
            .transpose()?,
    })
}
