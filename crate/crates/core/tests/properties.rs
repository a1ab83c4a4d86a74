//! Randomized invariants across the public surface.

use proptest::prelude::*;
use smo_enhance_core::clahe::{
    clahe_apply, clip_histogram, clip_limit_count, clipped_lut, he_lut, Histogram256, UNITS_PER_COUNT,
};
use smo_enhance_core::colorspace::{lab_to_rgb, rgb_to_lab};
use smo_enhance_core::diffusion::pmd_filter;
use smo_enhance_core::image::{to_real, ChannelF64, ChannelU8, RgbImage8};
use smo_enhance_core::iqa::{cross_entropy, entropy, michelson, rms_contrast, ssim, std_dev};
use smo_enhance_core::optim::{pso_run, selection_probability, smo_run, FnObjective, SearchSpace};
use smo_enhance_core::{ClaheParams, PmdParams, PsoConfig, SmoConfig};

fn plane(max_side: usize) -> impl Strategy<Value = ChannelU8> {
    (8..=max_side, 8..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| ChannelU8::new(w, h, d).unwrap())
    })
}

fn histogram() -> impl Strategy<Value = Histogram256> {
    prop::collection::vec(0u32..500, 256).prop_map(|v| {
        let mut h = Histogram256::default();
        h.counts.copy_from_slice(&v);
        h
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clipping_conserves_mass(h in histogram(), beta in 1.0f64..400.0) {
        let c = clip_histogram(&h, beta);
        prop_assert_eq!(c.total_units(), h.total() * UNITS_PER_COUNT);
        // each bin ends at its clipped level plus one share of the excess
        let ceiling = (beta * UNITS_PER_COUNT as f64) as u64;
        let excess: u64 = h.counts.iter().map(|&v| (u64::from(v) * UNITS_PER_COUNT).saturating_sub(ceiling)).sum();
        for (&u, &v) in c.units.iter().zip(h.counts.iter()) {
            prop_assert!(u <= (u64::from(v) * UNITS_PER_COUNT).min(ceiling) + excess / 256 + 1);
        }
    }

    #[test]
    fn lut_is_monotone(h in histogram(), beta in 1.0f64..400.0) {
        prop_assume!(h.total() > 0);
        for lut in [he_lut(&h).unwrap(), clipped_lut(&clip_histogram(&h, beta)).unwrap()] {
            prop_assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn clip_ceiling_is_floored(clip in 0.01f64..4.0, px in 1usize..100_000) {
        let b = clip_limit_count(&ClaheParams::new(clip, 2).unwrap(), px);
        prop_assert!(b >= 1.0);
        prop_assert!(b >= clip * px as f64 / 256.0 - 1e-9);
    }

    #[test]
    fn clahe_output_is_defined_everywhere(img in plane(40), clip in 0.01f64..4.0, tiles in 2usize..=16) {
        prop_assume!(img.width() >= tiles && img.height() >= tiles);
        let out = clahe_apply(&img, &ClaheParams::new(clip, tiles).unwrap()).unwrap();
        prop_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
    }

    #[test]
    fn diffusion_obeys_maximum_principle(img in plane(24), niter in 0u32..8, kappa in 1.0f64..200.0, lambda in 0.01f64..=0.25) {
        let x = to_real(&img);
        let y = pmd_filter(&x, &PmdParams::new(niter, kappa, lambda).unwrap()).unwrap();
        let (lo, hi) = x.data().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(y.data().iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
        let mean = |c: &ChannelF64| c.data().iter().sum::<f64>() / c.len() as f64;
        prop_assert!((mean(&x) - mean(&y)).abs() < 1e-9);
    }

    #[test]
    fn constant_planes_are_diffusion_fixed_points(v in 0.0f64..255.0, niter in 0u32..10) {
        let x = ChannelF64::filled(12, 9, v).unwrap();
        let y = pmd_filter(&x, &PmdParams::new(niter, 20.0, 0.25).unwrap()).unwrap();
        prop_assert_eq!(y, x);
    }

    #[test]
    fn single_image_metrics_are_in_range(img in plane(32)) {
        let e = entropy(&img);
        prop_assert!((0.0..=8.0).contains(&e));
        prop_assert_eq!(std_dev(&img), rms_contrast(&img));
        prop_assert!((0.0..=1.0).contains(&michelson(&img)));
        prop_assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_bounds_entropy(a in plane(16), seed in any::<u64>()) {
        let b = smo_enhance_core::synth::uniform_plane(a.width(), a.height(), seed);
        prop_assert!(cross_entropy(&a, &b) >= entropy(&a) - 1e-9);
    }

    #[test]
    fn lab_round_trip_is_within_one_level(px in prop::collection::vec(any::<u8>(), 3 * 16)) {
        let img = RgbImage8::new(4, 4, px).unwrap();
        let back = lab_to_rgb(&rgb_to_lab(&img));
        prop_assert!(img.data().iter().zip(back.data()).all(|(&a, &b)| a.abs_diff(b) <= 1));
    }

    #[test]
    fn selection_probability_is_bounded(fit in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let max = fit + extra;
        prop_assume!(max > 0.0);
        let p = selection_probability(fit, max);
        prop_assert!((0.1..=1.0).contains(&p));
    }

    #[test]
    fn evaluation_points_respect_the_box(x in prop::collection::vec(-50.0f64..50.0, 3)) {
        let s = SearchSpace::new(vec![5.0, 10.0, 0.1], vec![30.0, 100.0, 0.25], vec![true, false, false]).unwrap();
        let p = s.evaluation_point(&x);
        prop_assert!(s.contains(&p));
        prop_assert_eq!(p[0], p[0].round());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn optimizer_histories_never_increase(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let space = SearchSpace::continuous(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let f = |x: &[f64]| (x[0] - shift).powi(2) + (x[1] + shift).abs();
        let smo = smo_run(&mut FnObjective(f), &space, &SmoConfig { population: 10, iterations: 8, seed, ..SmoConfig::for_dims(2) }).unwrap();
        let pso = pso_run(&mut FnObjective(f), &space, &PsoConfig { population: 10, iterations: 8, seed, ..PsoConfig::default() }).unwrap();
        for r in [smo, pso] {
            prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(space.contains(&r.best_position));
            prop_assert_eq!(r.best_objective, *r.history.last().unwrap());
        }
    }
}
