//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Every criterion always runs and prints its measured values. The process
//! exits nonzero on any FAIL only when `ACCEPTANCE_STRICT=1` is set, so the
//! full table is visible in a normal `cargo test` run.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smo_enhance::commands::{cmd_compare, cmd_enhance, write_fixtures, Manifest, AVERAGE, METRIC_COLUMNS};
use smo_enhance::config::Config;
use smo_enhance::report::parse_file;
use smo_enhance_core::clahe::{clahe_apply, clip_histogram, clipped_lut, Histogram256, UNITS_PER_COUNT};
use smo_enhance_core::diffusion::{pmd_filter, pmd_step};
use smo_enhance_core::image::{to_real, to_u8, ChannelF64, ChannelU8};
use smo_enhance_core::iqa::{
    brisque_features, brisque_features_real, coc, cross_entropy, downsample2, entropy, michelson, psnr, psnr_from_mse,
    rms_contrast, scale_features, ssim, std_dev,
};
use smo_enhance_core::optim::{pso_run, selection_probability, smo_run, FnObjective, SearchSpace};
use smo_enhance_core::synth;
use smo_enhance_core::{ClaheParams, OptResult, PmdParams, PsoConfig, SmoConfig};

const SEED: u64 = 42;

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { ok: true, notes: Vec::new() }
    }

    fn expect(&mut self, cond: bool, what: impl Into<String>) {
        let what = what.into();
        if !cond {
            self.ok = false;
            self.notes.push(format!("MISS {what}"));
        } else {
            self.notes.push(what);
        }
    }
}

struct Outcome {
    id: u32,
    title: &'static str,
    check: Check,
    elapsed: Duration,
    budget: Duration,
}

fn run(id: u32, title: &'static str, budget_s: u64, f: impl FnOnce(&mut Check)) -> Outcome {
    let start = Instant::now();
    let mut check = Check::new();
    f(&mut check);
    Outcome {
        id,
        title,
        check,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_s),
    }
}

fn report(o: &Outcome) -> bool {
    let in_time = o.elapsed <= o.budget;
    let pass = o.check.ok && in_time;
    println!(
        "criterion {}: {} {} ({:.1} s, budget {} s)",
        o.id,
        if pass { "PASS" } else { "FAIL" },
        o.title,
        o.elapsed.as_secs_f64(),
        o.budget.as_secs()
    );
    for n in &o.check.notes {
        println!("    {n}");
    }
    if !in_time {
        println!("    MISS runtime budget");
    }
    pass
}

fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize, levels: u32) -> ChannelU8 {
    ChannelU8::from_fn(w, h, |_, _| rng.random_range(0..levels) as u8).unwrap()
}

fn criterion_1(c: &mut Check) {
    for (mse, want) in [(0.043389455, 61.75696), (0.025031866, 64.14587)] {
        let got = psnr_from_mse(mse);
        c.expect((got - want).abs() <= 1e-4, format!("psnr({mse}) = {got:.6} dB, expected {want} +- 1e-4"));
    }
}

fn criterion_2(c: &mut Check) {
    let ramp = ChannelU8::from_fn(16, 16, |x, y| (y * 16 + x) as u8).unwrap();
    c.expect(entropy(&ramp) == 8.0, format!("entropy(uniform 256-level) = {}", entropy(&ramp)));
    let flat = ChannelU8::filled(20, 20, 93).unwrap();
    c.expect(entropy(&flat) == 0.0, format!("entropy(constant) = {}", entropy(&flat)));
    let full = ChannelU8::from_fn(8, 8, |x, _| if x < 4 { 0 } else { 255 }).unwrap();
    c.expect(michelson(&full) == 1.0, format!("michelson(full range) = {}", michelson(&full)));
    c.expect(rms_contrast(&flat) == 0.0, format!("rms_contrast(constant) = {}", rms_contrast(&flat)));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut same = 0;
    let mut ssim_one = 0;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(8..64), rng.random_range(8..64));
        let levels = rng.random_range(2..=256);
        let img = random_plane(&mut rng, w, h, levels);
        same += usize::from(std_dev(&img) == rms_contrast(&img));
        ssim_one += usize::from((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }
    c.expect(same == 100, format!("std_dev == rms_contrast on {same}/100 random images"));
    c.expect(ssim_one == 100, format!("ssim(x, x) = 1 on {ssim_one}/100 random images"));

    let x = random_plane(&mut rng, 40, 30, 127);
    let y = ChannelU8::from_fn(40, 30, |i, j| 2 * x.get(i, j) + 3).unwrap();
    let r = coc(&x, &y).unwrap();
    c.expect((r - 1.0).abs() <= 1e-10, format!("coc(x, 2x + 3) - 1 = {:e}", r - 1.0));

    let mut gibbs = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let (lx, ly) = (rng.random_range(2..=256), rng.random_range(2..=256));
        let a = random_plane(&mut rng, 32, 32, lx);
        let b = random_plane(&mut rng, 32, 32, ly);
        let gap = cross_entropy(&a, &b) - entropy(&a);
        worst = worst.min(gap);
        gibbs += usize::from(gap >= 0.0);
    }
    c.expect(gibbs == 100, format!("cross_entropy(x, y) >= entropy(x) on {gibbs}/100 pairs, min gap {worst:.4}"));
}

/// Heat-equation step with the same zero-flux border: out-of-image
/// neighbours contribute nothing.
fn heat_step(img: &ChannelF64, lambda: f64) -> ChannelF64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    ChannelF64::from_fn(img.width(), img.height(), |x, y| {
        let c = img.get(x, y);
        let mut acc = 0.0;
        for (dx, dy) in [(0isize, -1isize), (0, 1), (1, 0), (-1, 0)] {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                acc += img.get(nx as usize, ny as usize) - c;
            }
        }
        c + lambda * acc
    })
    .unwrap()
}

fn criterion_3(c: &mut Check) {
    let mut fixed = true;
    for v in [0.0, 17.25, 128.0, 255.0] {
        let flat = ChannelF64::filled(33, 21, v).unwrap();
        for lambda in [0.1, 0.25] {
            fixed &= pmd_filter(&flat, &PmdParams::new(30, 10.0, lambda).unwrap()).unwrap() == flat;
        }
    }
    c.expect(fixed, "constant planes are exact fixed points");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut held = 0;
    for _ in 0..100 {
        let img = to_real(&random_plane(&mut rng, 64, 64, 256));
        let (lo, hi) = img.data().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let ok = [0.1, 0.25].iter().all(|&lambda| {
            let out = pmd_filter(&img, &PmdParams::new(10, 30.0, lambda).unwrap()).unwrap();
            out.data().iter().all(|&v| v >= lo && v <= hi)
        });
        held += usize::from(ok);
    }
    c.expect(held == 100, format!("maximum principle on {held}/100 random 64x64 images, lambda 0.1 and 0.25"));

    let img = to_real(&random_plane(&mut rng, 37, 29, 256));
    let worst = [0.1, 0.25]
        .iter()
        .map(|&lambda| {
            let a = pmd_step(&img, 1e9, lambda).unwrap();
            let b = heat_step(&img, lambda);
            a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    c.expect(worst <= 1e-10, format!("kappa = 1e9 vs heat stencil max diff {worst:e}"));

    let (clean, noisy) = synth::gray_noise_pair(10.0, SEED);
    let out = pmd_filter(&noisy, &PmdParams::new(10, 30.0, 0.2).unwrap()).unwrap();
    let before = psnr(&to_u8(&clean), &to_u8(&noisy)).unwrap();
    let after = psnr(&to_u8(&clean), &to_u8(&out)).unwrap();
    c.expect(
        after - before >= 1.0,
        format!("sigma 10 fixture: {before:.2} dB -> {after:.2} dB, gain {:.2} dB", after - before),
    );
}

fn criterion_4(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut conserved = 0;
    let mut monotone = 0;
    for _ in 0..1000 {
        let mut h = Histogram256::default();
        let spike = rng.random_range(0..256);
        let occupied = rng.random_range(1..=256);
        for _ in 0..rng.random_range(1..5000) {
            let bin = if rng.random_bool(0.3) { spike } else { rng.random_range(0..occupied) };
            h.counts[bin] += 1;
        }
        let beta = rng.random_range(1.0..(h.total() as f64).max(2.0));
        let clipped = clip_histogram(&h, beta);
        conserved += usize::from(clipped.total_units() == h.total() * UNITS_PER_COUNT);
        let lut = clipped_lut(&clipped).unwrap();
        monotone += usize::from(lut.windows(2).all(|w| w[0] <= w[1]));
    }
    c.expect(conserved == 1000, format!("mass conserved on {conserved}/1000 random histograms"));
    c.expect(monotone == 1000, format!("monotone LUT on {monotone}/1000 random histograms"));

    let mut constant = true;
    for tiles in 2..=16 {
        let img = ChannelU8::filled(tiles * 6, tiles * 4, 117).unwrap();
        for clip in [0.01, 0.5, 2.0, 4.0] {
            let out = clahe_apply(&img, &ClaheParams::new(clip, tiles).unwrap()).unwrap();
            constant &= out.data().iter().all(|&v| v == out.data()[0]);
        }
    }
    c.expect(constant, "constant image stays constant (equal tiles, tiles 2..16, 4 clip limits)");

    let low = synth::low_contrast_gray(SEED);
    let out = clahe_apply(&low, &ClaheParams::new(2.0, 8).unwrap()).unwrap();
    let (e0, e1) = (entropy(&low), entropy(&out));
    let (r0, r1) = (rms_contrast(&low), rms_contrast(&out));
    c.expect(e1 > e0, format!("entropy {e0:.3} -> {e1:.3} (tiles 8, clip 2)"));
    c.expect(r1 > r0, format!("rms contrast {r0:.3} -> {r1:.3}"));
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn non_increasing(r: &OptResult) -> bool {
    r.history.windows(2).all(|w| w[1] <= w[0])
}

fn criterion_5(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut in_range = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let fit: Vec<f64> = (0..n).map(|_| 1.0 / (1.0 + rng.random_range(0.0..1e3))).collect();
        let max = fit.iter().copied().fold(0.0, f64::max);
        in_range &= fit.iter().all(|&f| (0.1..=1.0).contains(&selection_probability(f, max)));
    }
    c.expect(in_range, "selection probability in [0.1, 1] on 1000 random fitness vectors");

    let space = SearchSpace::continuous(vec![-5.12; 2], vec![5.12; 2]).unwrap();
    let mut monotone = true;
    let mut reached = [0usize; 2];
    let mut finals = [Vec::new(), Vec::new()];
    for seed in 1..=5u64 {
        let smo = smo_run(
            &mut FnObjective(sphere),
            &space,
            &SmoConfig {
                population: 50,
                iterations: 100,
                seed,
                ..SmoConfig::for_dims(2)
            },
        )
        .unwrap();
        let pso = pso_run(
            &mut FnObjective(sphere),
            &space,
            &PsoConfig {
                population: 50,
                iterations: 100,
                seed,
                ..PsoConfig::default()
            },
        )
        .unwrap();
        for (k, r) in [smo, pso].iter().enumerate() {
            monotone &= non_increasing(r);
            reached[k] += usize::from(r.best_objective < 1e-3);
            finals[k].push(format!("{:.1e}", r.best_objective));
        }
    }
    c.expect(monotone, "best-so-far history non-increasing on every run");
    c.expect(reached[0] >= 4, format!("SMO sphere < 1e-3 on {}/5 seeds: {}", reached[0], finals[0].join(" ")));
    c.expect(reached[1] >= 4, format!("PSO sphere < 1e-3 on {}/5 seeds: {}", reached[1], finals[1].join(" ")));

    let cfg = SmoConfig {
        population: 50,
        iterations: 30,
        seed: 9,
        ..SmoConfig::for_dims(2)
    };
    let a = smo_run(&mut FnObjective(sphere), &space, &cfg).unwrap();
    let b = smo_run(&mut FnObjective(sphere), &space, &cfg).unwrap();
    let bits = |r: &OptResult| -> Vec<u64> {
        r.best_position
            .iter()
            .chain(&r.history)
            .chain([&r.best_objective])
            .map(|v| v.to_bits())
            .collect()
    };
    c.expect(a == b && bits(&a) == bits(&b), "identical seeds give bit-identical results");
}

fn criterion_6(c: &mut Check) {
    let noise = synth::gaussian_plane(512, 512, SEED);
    let quantized = to_u8(&noise.map(|v| v + 128.0));
    let shape = brisque_features(&quantized).unwrap()[0];
    c.expect(
        (shape - 2.0).abs() <= 0.2,
        format!("MSCN GGD shape {shape:.3} on 8-bit 512x512 unit Gaussian noise (128 + N(0,1))"),
    );
    let real_shape = brisque_features_real(&noise).unwrap()[0];
    c.notes.push(format!("note: the unquantized real plane gives {real_shape:.3} (MSCN stabilizer 1 on unit variance)"));

    let flat = ChannelU8::filled(64, 64, 200).unwrap();
    let f = brisque_features(&flat);
    c.expect(
        f.as_ref().is_ok_and(|f| f.iter().all(|v| v.is_finite())),
        "constant image gives finite features without error",
    );

    let img = to_real(&synth::low_contrast_gray(SEED));
    let full = brisque_features_real(&img).unwrap();
    let split = full[..18] == scale_features(&img) && full[18..] == scale_features(&downsample2(&img));
    c.expect(split, "features = scale features at full and half resolution");
    let doubled = ChannelF64::from_fn(2 * img.width(), 2 * img.height(), |x, y| img.get(x / 2, y / 2)).unwrap();
    c.expect(
        downsample2(&doubled) == img && brisque_features_real(&doubled).unwrap()[18..] == full[..18],
        "half scale of a pixel-doubled image reproduces the full-scale features",
    );
}

fn manifest(inputs: &Path, out: &Path) -> Manifest {
    let mut config = Config::default();
    config.run.seed = SEED;
    Manifest {
        inputs: vec![inputs.to_path_buf()],
        out: out.to_path_buf(),
        config,
    }
}

fn summary_value(dir: &Path, metric: &str, mode: &str) -> f64 {
    let r = parse_file(&dir.join("compare_summary.csv")).unwrap();
    let row = (0..r.rows.len()).find(|&i| r.get(i, "metric") == Some(metric)).unwrap();
    r.num(row, mode).unwrap()
}

fn criterion_7(c: &mut Check, fixtures: &Path, out: &Path) {
    let o = cmd_compare(&manifest(fixtures, out)).unwrap();
    c.expect(o.success() && o.total == synth::CORPUS_LEN, format!("{} images, {} failed", o.total, o.failed));
    let v = |m: &str, mode: &str| summary_value(out, m, mode);
    let (eh, ec, ep) = (v("eme", "hybrid"), v("eme", "clahe-only"), v("eme", "pmd-only"));
    c.expect(eh > ec, format!("EME hybrid {eh:.4} > clahe-only {ec:.4}"));
    c.expect(ec > ep, format!("EME clahe-only {ec:.4} > pmd-only {ep:.4}"));
    let (nh, np) = (v("entropy", "hybrid"), v("entropy", "pmd-only"));
    c.expect(nh > np, format!("entropy hybrid {nh:.4} > pmd-only {np:.4}"));
    let (rh, rp) = (v("rms_contrast", "hybrid"), v("rms_contrast", "pmd-only"));
    c.expect(rh > rp, format!("RMS hybrid {rh:.4} > pmd-only {rp:.4}"));
}

fn criterion_8(c: &mut Check, fixtures: &Path, out: &Path) {
    let o = cmd_enhance(&manifest(fixtures, out)).unwrap();
    c.expect(o.success(), format!("{} images enhanced, {} failed", o.total, o.failed));
    let r = parse_file(&o.reports[0]).unwrap();
    let avg = (0..r.rows.len()).find(|&i| r.get(i, "image") == Some(AVERAGE)).unwrap();
    let images: Vec<usize> = (0..r.rows.len()).filter(|&i| i != avg).collect();
    c.expect(images.len() == synth::CORPUS_LEN, format!("{} per-image rows", images.len()));
    let mut worst: f64 = 0.0;
    let mut complete = true;
    for m in METRIC_COLUMNS {
        let vals: Vec<f64> = images.iter().filter_map(|&i| r.num(i, m)).collect();
        complete &= vals.len() == images.len();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        worst = worst.max((mean - r.num(avg, m).unwrap()).abs());
    }
    c.expect(complete, "every metric populated on every row");
    c.expect(worst <= 1e-12, format!("Average row vs recomputed means, max diff {worst:e} (PSNR averaged over rows)"));
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn criterion_9(c: &mut Check, fixtures: &Path, first: &Path, second: &Path) {
    cmd_compare(&manifest(fixtures, second)).unwrap();
    let a: Vec<PathBuf> = files(first).into_iter().filter(|p| !p.to_string_lossy().contains("_timing")).collect();
    let b: Vec<PathBuf> = files(second).into_iter().filter(|p| !p.to_string_lossy().contains("_timing")).collect();
    let rel = |base: &Path, v: &[PathBuf]| -> Vec<PathBuf> { v.iter().map(|p| p.strip_prefix(base).unwrap().to_path_buf()).collect() };
    c.expect(rel(first, &a) == rel(second, &b), format!("same {} output files", a.len()));
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.strip_prefix(first).unwrap().display().to_string())
        .collect();
    c.expect(differing.is_empty(), format!("byte-identical images and reports (differing: {differing:?})"));
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = dir.path().join("fixtures");
    write_fixtures(&fixtures).unwrap();
    let (first, second, single) = (dir.path().join("compare-a"), dir.path().join("compare-b"), dir.path().join("enhance"));

    let mut outcomes = vec![
        run(1, "PSNR-MSE consistency", 1, criterion_1),
        run(2, "metric unit suite", 10, criterion_2),
        run(3, "diffusion property suite", 30, criterion_3),
        run(4, "CLAHE property suite", 10, criterion_4),
        run(5, "SMO and PSO suite", 20, criterion_5),
        run(6, "BRISQUE feature sanity", 10, criterion_6),
    ];
    let seven = run(7, "mode ordering on the fixture corpus", 600, |c| criterion_7(c, &fixtures, &first));
    let seven_time = seven.elapsed;
    outcomes.push(seven);
    outcomes.push(run(8, "per-image enhance report with Average row", 600, |c| criterion_8(c, &fixtures, &single)));
    let mut nine = run(9, "end-to-end determinism of compare", 1200, |c| criterion_9(c, &fixtures, &first, &second));
    nine.elapsed += seven_time;
    outcomes.push(nine);

    let passed = outcomes.iter().map(report).filter(|&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if passed < outcomes.len() && std::env::var("ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
