//! Subcommand implementations. Each returns an [`Outcome`]; per-image
//! failures become failed rows rather than errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use smo_enhance_core::colorspace::rgb_to_lab;
use smo_enhance_core::pipeline::{
    enhance_all_modes_observed, enhance_observed, evaluate_config, optimize_clahe_with, optimize_pmd_with, EnhanceResult,
    Optimizer, StageTrace, STAGE_CLAHE, STAGE_METRICS, STAGE_PMD,
};
use smo_enhance_core::{synth, ClaheParams, MetricsReport, Mode, PmdParams};

use crate::config::{Config, Format};
use crate::imageio::{check_output_dir, expand_inputs, read_rgb, write_rgb};
use crate::modelfile;
use crate::report::{column_means, Cell, Table};

/// Quality columns first, then the contrast roster, then the remaining metrics.
pub const METRIC_COLUMNS: [&str; 12] = [
    "mse",
    "ssim",
    "psnr_db",
    "entropy",
    "brisque",
    "eme",
    "michelson",
    "rms_contrast",
    "ceiq",
    "coc",
    "std_dev",
    "cross_entropy",
];

pub const PARAM_COLUMNS: [&str; 11] = [
    "pmd_l_niter",
    "pmd_l_kappa",
    "pmd_l_lambda",
    "pmd_a_niter",
    "pmd_a_kappa",
    "pmd_a_lambda",
    "pmd_b_niter",
    "pmd_b_kappa",
    "pmd_b_lambda",
    "clahe_clip_limit",
    "clahe_tiles",
];

/// Label of the summary row in enhance and compare reports.
pub const AVERAGE: &str = "Average";
/// Label of the summed row in timing files.
pub const TOTAL: &str = "Total";

/// What to run on and where to write.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub config: Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub total: usize,
    pub failed: usize,
    /// Report files written, main report first.
    pub reports: Vec<PathBuf>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

pub fn metric_cells(m: &MetricsReport) -> Vec<Cell> {
    vec![
        Cell::Num(m.mse),
        Cell::Num(m.ssim),
        Cell::Num(m.psnr_db),
        Cell::Num(m.entropy_bits),
        Cell::opt(m.brisque),
        Cell::Num(m.eme),
        Cell::Num(m.michelson),
        Cell::Num(m.rms_contrast),
        Cell::opt(m.ceiq),
        Cell::Num(m.coc),
        Cell::Num(m.std_dev),
        Cell::Num(m.cross_entropy),
    ]
}

fn param_cells(pmd: Option<&[PmdParams; 3]>, clahe: Option<&ClaheParams>) -> Vec<Cell> {
    let mut out = Vec::with_capacity(PARAM_COLUMNS.len());
    for c in 0..3 {
        match pmd {
            Some(p) => out.extend([Cell::Int(p[c].niter as i64), Cell::Num(p[c].kappa), Cell::Num(p[c].lambda)]),
            None => out.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
        }
    }
    match clahe {
        Some(c) => out.extend([Cell::Num(c.clip_limit), Cell::Int(c.tiles as i64)]),
        None => out.extend([Cell::Empty, Cell::Empty]),
    }
    out
}

fn result_columns() -> Vec<&'static str> {
    let mut cols = vec!["image", "mode", "seed", "status", "error"];
    cols.extend(METRIC_COLUMNS);
    cols.extend(PARAM_COLUMNS);
    cols
}

fn result_row(image: &str, mode: Mode, seed: u64, r: &Result<EnhanceResult, String>) -> Vec<Cell> {
    let mut row = vec![Cell::text(image), Cell::text(mode.name()), Cell::Int(seed as i64)];
    match r {
        Ok(r) => {
            row.extend([Cell::text("ok"), Cell::Empty]);
            row.extend(metric_cells(&r.metrics));
            row.extend(param_cells(r.chosen_pmd.as_ref(), r.chosen_clahe.as_ref()));
        }
        Err(e) => {
            row.extend([Cell::text("failed"), Cell::text(e.clone())]);
            row.extend(std::iter::repeat_n(Cell::Empty, METRIC_COLUMNS.len() + PARAM_COLUMNS.len()));
        }
    }
    row
}

/// Appends the per-metric mean over the successful rows in `rows`.
fn push_average(table: &mut Table, rows: &[usize], mode: Mode, seed: u64) {
    let ok: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| table.rows[r][table.column("status").unwrap()] == Cell::text("ok"))
        .collect();
    let mut row = vec![Cell::text(AVERAGE), Cell::text(mode.name()), Cell::Int(seed as i64), Cell::Empty, Cell::Empty];
    row.extend(column_means(table, &ok, &METRIC_COLUMNS).into_iter().map(Cell::opt));
    row.extend(std::iter::repeat_n(Cell::Empty, PARAM_COLUMNS.len()));
    table.push(row);
}

/// Seconds spent in each stage of one run, keyed by stage label.
#[derive(Debug, Clone, Default)]
struct Timing {
    stages: Vec<(&'static str, f64)>,
    total: f64,
}

struct Clock {
    start: Instant,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let s = (now - self.last).as_secs_f64();
        self.last = now;
        s
    }

    fn total(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

const TIMING_STAGES: [&str; 3] = [STAGE_PMD, STAGE_CLAHE, STAGE_METRICS];

fn timing_columns() -> Vec<&'static str> {
    vec!["image", "mode", "pmd_opt_s", "clahe_opt_s", "metrics_s", "total_s"]
}

fn timing_row(image: &str, mode: &str, t: &Timing) -> Vec<Cell> {
    let mut row = vec![Cell::text(image), Cell::text(mode)];
    for s in TIMING_STAGES {
        row.push(t.stages.iter().find(|(n, _)| *n == s).map_or(Cell::Empty, |(_, v)| Cell::Num(*v)));
    }
    row.push(Cell::Num(t.total));
    row
}

fn push_timing_total(table: &mut Table, mode: &str) {
    let rows: Vec<usize> = (0..table.rows.len()).collect();
    let cols = ["pmd_opt_s", "clahe_opt_s", "metrics_s", "total_s"];
    let mut row = vec![Cell::text(TOTAL), Cell::text(mode)];
    for c in cols {
        let i = table.column(c).unwrap();
        let vals: Vec<f64> = rows.iter().filter_map(|&r| table.rows[r][i].as_f64()).collect();
        row.push(if vals.is_empty() { Cell::Empty } else { Cell::Num(vals.iter().sum()) });
    }
    table.push(row);
}

fn pool_map<T: Send>(workers: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}

/// File name shown in reports, and the stem used for output images.
fn names(inputs: &[PathBuf]) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    inputs
        .iter()
        .map(|p| {
            let display = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            let stem = p.file_stem().map_or_else(|| display.clone(), |s| s.to_string_lossy().into_owned());
            if !seen.insert(stem.clone()) {
                bail!("two inputs share the output name {stem:?}");
            }
            Ok((display, stem))
        })
        .collect()
}

fn describe(e: &anyhow::Error) -> String {
    format!("{e:#}")
}

struct Prepared {
    inputs: Vec<PathBuf>,
    names: Vec<(String, String)>,
    format: Format,
}

fn prepare(m: &Manifest) -> Result<Prepared> {
    let inputs = expand_inputs(&m.inputs)?;
    check_output_dir(&m.out, &inputs)?;
    Ok(Prepared {
        names: names(&inputs)?,
        inputs,
        format: m.config.format()?,
    })
}

/// Enhances every input with the configured mode. Writes `<stem>.png`,
/// `enhance_report` and `enhance_timing` into the output directory.
pub fn cmd_enhance(m: &Manifest) -> Result<Outcome> {
    let cfg = &m.config;
    let mode = cfg.mode()?;
    let pcfg = cfg.pipeline(mode)?;
    let p = prepare(m)?;

    let results = pool_map(cfg.run.workers, p.inputs.len(), |i| {
        let run = || -> Result<(EnhanceResult, Timing)> {
            let img = read_rgb(&p.inputs[i])?;
            let mut clock = Clock::new();
            let mut stages = Vec::new();
            let r = enhance_observed(&img, &pcfg, &mut |s| stages.push((s, clock.lap())))?;
            let t = Timing { stages, total: clock.total() };
            write_rgb(&m.out.join(format!("{}.png", p.names[i].1)), &r.enhanced)?;
            Ok((r, t))
        };
        run().map_err(|e| describe(&e))
    })?;

    let mut table = Table::new(&result_columns());
    let mut timing = Table::new(&timing_columns());
    let mut failed = 0;
    for (i, r) in results.into_iter().enumerate() {
        let name = &p.names[i].0;
        if let Err(e) = &r {
            log::error!("{name}: {e}");
            failed += 1;
        }
        let (res, t) = match r {
            Ok((res, t)) => (Ok(res), Some(t)),
            Err(e) => (Err(e), None),
        };
        table.push(result_row(name, mode, cfg.run.seed, &res));
        if let Some(t) = t {
            timing.push(timing_row(name, mode.name(), &t));
        }
    }
    let rows: Vec<usize> = (0..table.rows.len()).collect();
    push_average(&mut table, &rows, mode, cfg.run.seed);
    push_timing_total(&mut timing, mode.name());

    Ok(Outcome {
        total: p.inputs.len(),
        failed,
        reports: vec![
            table.write(&m.out, "enhance_report", cfg, p.format)?,
            timing.write(&m.out, "enhance_timing", cfg, p.format)?,
        ],
    })
}

/// Runs all three modes per input with one seed. Writes `<mode>/<stem>.png`,
/// per-image rows in `compare_report`, the metric-by-mode table of averages
/// in `compare_summary`, and `compare_timing`.
pub fn cmd_compare(m: &Manifest) -> Result<Outcome> {
    let cfg = &m.config;
    let pcfg = cfg.pipeline(Mode::Hybrid)?;
    let p = prepare(m)?;
    for mode in Mode::ALL {
        std::fs::create_dir_all(m.out.join(mode.name()))?;
    }

    let results = pool_map(cfg.run.workers, p.inputs.len(), |i| {
        let run = || -> Result<([EnhanceResult; 3], [Timing; 3])> {
            let img = read_rgb(&p.inputs[i])?;
            let mut clock = Clock::new();
            let mut timings: [Timing; 3] = Default::default();
            let rs = enhance_all_modes_observed(&img, &pcfg, &mut |mode, s| {
                let k = Mode::ALL.iter().position(|&x| x == mode).unwrap();
                let lap = clock.lap();
                timings[k].stages.push((s, lap));
                timings[k].total += lap;
            })?;
            for r in &rs {
                write_rgb(&m.out.join(r.mode.name()).join(format!("{}.png", p.names[i].1)), &r.enhanced)?;
            }
            Ok((rs, timings))
        };
        run().map_err(|e| describe(&e))
    })?;

    let mut table = Table::new(&result_columns());
    let mut timing = Table::new(&timing_columns());
    let mut failed = 0;
    for r in &results {
        if r.is_err() {
            failed += 1;
        }
    }
    let mut averages = Vec::new();
    for (k, mode) in Mode::ALL.into_iter().enumerate() {
        let first = table.rows.len();
        for (i, r) in results.iter().enumerate() {
            let name = &p.names[i].0;
            let res = match r {
                Ok((rs, t)) => {
                    timing.push(timing_row(name, mode.name(), &t[k]));
                    Ok(rs[k].clone())
                }
                Err(e) => {
                    if k == 0 {
                        log::error!("{name}: {e}");
                    }
                    Err(e.clone())
                }
            };
            table.push(result_row(name, mode, cfg.run.seed, &res));
        }
        let rows: Vec<usize> = (first..table.rows.len()).collect();
        push_average(&mut table, &rows, mode, cfg.run.seed);
        averages.push(table.rows.len() - 1);
    }
    push_timing_total(&mut timing, "all");

    let mut summary_cols = vec!["metric"];
    summary_cols.extend(Mode::ALL.iter().map(|m| m.name()));
    let mut summary = Table::new(&summary_cols);
    for metric in METRIC_COLUMNS {
        let c = table.column(metric).unwrap();
        let mut row = vec![Cell::text(metric)];
        row.extend(averages.iter().map(|&r| table.rows[r][c].clone()));
        summary.push(row);
    }
    let ok = (p.inputs.len() - failed) as i64;
    let mut images = vec![Cell::text("images")];
    images.extend(std::iter::repeat_n(Cell::Int(ok), 3));
    summary.push(images);

    Ok(Outcome {
        total: p.inputs.len(),
        failed,
        reports: vec![
            summary.write(&m.out, "compare_summary", cfg, p.format)?,
            table.write(&m.out, "compare_report", cfg, p.format)?,
            timing.write(&m.out, "compare_timing", cfg, p.format)?,
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pmd,
    Clahe,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Pmd => "pmd",
            Stage::Clahe => "clahe",
        }
    }
}

/// One optimization run of one stage.
struct StageRun {
    traces: Vec<StageTrace>,
    /// Parameter cells per trace.
    params: Vec<Vec<Cell>>,
    seconds: f64,
}

fn optimize_columns(stage: Stage) -> Vec<&'static str> {
    let mut cols = vec!["image", "stage", "optimizer", "seed", "status", "error", "best_objective", "evaluations"];
    match stage {
        Stage::Pmd => cols.extend(["niter", "kappa", "lambda"]),
        Stage::Clahe => cols.extend(["clip_limit", "tiles"]),
    }
    cols.push("trace");
    cols
}

/// Tunes one stage on each input with SMO and/or PSO. The clahe stage works
/// on the input's own lightness. Writes `optimize_<stage>` (one row per
/// optimization run; per-channel diffusion gives three) and
/// `optimize_<stage>_timing`.
pub fn cmd_optimize(m: &Manifest, stage: Stage) -> Result<Outcome> {
    let cfg = &m.config;
    let pcfg = cfg.pipeline(Mode::Hybrid)?;
    let optimizers: Vec<Optimizer> = cfg
        .optimizers()?
        .into_iter()
        .map(|o| match o {
            "pso" => Optimizer::Pso(cfg.pso_config()),
            _ => Optimizer::Smo(cfg.smo_config()),
        })
        .collect();
    let p = prepare(m)?;

    let jobs: Vec<(usize, usize)> = (0..p.inputs.len())
        .flat_map(|i| (0..optimizers.len()).map(move |o| (i, o)))
        .collect();
    let results = pool_map(cfg.run.workers, jobs.len(), |j| {
        let (i, o) = jobs[j];
        let run = || -> Result<StageRun> {
            let img = read_rgb(&p.inputs[i])?;
            let lab = rgb_to_lab(&img);
            let start = Instant::now();
            let (traces, params) = match stage {
                Stage::Pmd => {
                    let model = pcfg.brisque_model.as_ref().unwrap();
                    let r = optimize_pmd_with(&lab, &pcfg.pmd_space, model, pcfg.pmd_sharing, &optimizers[o])?;
                    let params = (0..r.traces.len())
                        .map(|c| {
                            let q = r.params[c];
                            vec![Cell::Int(q.niter as i64), Cell::Num(q.kappa), Cell::Num(q.lambda)]
                        })
                        .collect();
                    (r.traces, params)
                }
                Stage::Clahe => {
                    let model = pcfg.ceiq_model.as_ref().unwrap();
                    let r = optimize_clahe_with(&lab.l, &pcfg.clahe_space, model, &optimizers[o])?;
                    let q = r.params;
                    (vec![r.trace], vec![vec![Cell::Num(q.clip_limit), Cell::Int(q.tiles as i64)]])
                }
            };
            Ok(StageRun {
                traces,
                params,
                seconds: start.elapsed().as_secs_f64(),
            })
        };
        run().map_err(|e| describe(&e))
    })?;

    let cols = optimize_columns(stage);
    let n_params = cols.len() - 9;
    let mut table = Table::new(&cols);
    let mut timing = Table::new(&["image", "optimizer", "seconds"]);
    let mut failed_images = BTreeSet::new();
    for (j, r) in results.iter().enumerate() {
        let (i, o) = jobs[j];
        let name = &p.names[i].0;
        let opt = optimizers[o].name();
        let head = |label: &str| vec![Cell::text(name.as_str()), Cell::text(label), Cell::text(opt), Cell::Int(cfg.run.seed as i64)];
        match r {
            Ok(run) => {
                for (t, params) in run.traces.iter().zip(&run.params) {
                    let mut row = head(t.stage);
                    row.extend([
                        Cell::text("ok"),
                        Cell::Empty,
                        Cell::Num(t.best_objective),
                        Cell::Int(t.evaluations as i64),
                    ]);
                    row.extend(params.iter().cloned());
                    row.push(Cell::List(t.history.clone()));
                    table.push(row);
                }
                timing.push(vec![Cell::text(name.as_str()), Cell::text(opt), Cell::Num(run.seconds)]);
            }
            Err(e) => {
                log::error!("{name} ({opt}): {e}");
                failed_images.insert(i);
                let mut row = head(stage.name());
                row.extend([Cell::text("failed"), Cell::text(e.clone()), Cell::Empty, Cell::Empty]);
                row.extend(std::iter::repeat_n(Cell::Empty, n_params + 1));
                table.push(row);
            }
        }
    }
    for opt in &optimizers {
        let sum: f64 = timing
            .rows
            .iter()
            .filter(|r| r[1] == Cell::text(opt.name()) && r[0] != Cell::text(TOTAL))
            .filter_map(|r| r[2].as_f64())
            .sum();
        timing.push(vec![Cell::text(TOTAL), Cell::text(opt.name()), Cell::Num(sum)]);
    }

    let stem = format!("optimize_{}", stage.name());
    Ok(Outcome {
        total: p.inputs.len(),
        failed: failed_images.len(),
        reports: vec![
            table.write(&m.out, &stem, cfg, p.format)?,
            timing.write(&m.out, &format!("{stem}_timing"), cfg, p.format)?,
        ],
    })
}

/// Metrics between two image files as a one-row report.
pub fn metrics_report(original: &Path, enhanced: &Path, cfg: &Config) -> Result<String> {
    let pcfg = cfg.pipeline(cfg.mode()?)?;
    let a = read_rgb(original)?;
    let b = read_rgb(enhanced)?;
    if (a.width(), a.height()) != (b.width(), b.height()) {
        bail!(
            "dimension mismatch: {} is {}x{}, {} is {}x{}",
            original.display(),
            a.width(),
            a.height(),
            enhanced.display(),
            b.width(),
            b.height()
        );
    }
    let report = evaluate_config(&a, &b, &pcfg)?;
    let mut cols = vec!["original", "enhanced"];
    cols.extend(METRIC_COLUMNS);
    let mut table = Table::new(&cols);
    let mut row = vec![Cell::text(original.display().to_string()), Cell::text(enhanced.display().to_string())];
    row.extend(metric_cells(&report));
    table.push(row);
    Ok(table.render(cfg, cfg.format()?))
}

/// Writes the synthetic fixture corpus as `fixture_NN.png`.
pub fn write_fixtures(out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    (0..synth::CORPUS_LEN)
        .map(|i| {
            let p = out.join(format!("fixture_{i:02}.png"));
            write_rgb(&p, &synth::corpus_image(i))?;
            Ok(p)
        })
        .collect()
}

/// Refits the bundled test scorers and writes them as model files.
pub fn fit_models(out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let b = out.join("brisque_test.toml");
    let c = out.join("ceiq_test.toml");
    std::fs::write(&b, modelfile::to_toml(&synth::fit_brisque_test_model()?))?;
    std::fs::write(&c, modelfile::to_toml(&synth::fit_ceiq_test_model()?))?;
    Ok(vec![b, c])
}
