use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wienerjam_core::analytic::{analytic_bmse, bmse_two_tone, dirichlet};
use wienerjam_core::optimizer::*;
use wienerjam_core::SystemParams;

fn scenario(taps: usize) -> SystemParams {
    SystemParams::from_db(-15.0, 25.0, taps).unwrap()
}

/// `argmin_Δ D_{L/2}(Δ)` on an n-point grid over `(0, π]`.
fn kernel_argmin(taps: usize, n: usize) -> f64 {
    (1..=n).map(|i| PI * i as f64 / n as f64).min_by(|a, b| dirichlet(taps / 2, *a).total_cmp(&dirichlet(taps / 2, *b))).unwrap()
}

/// Grid argmin polished by bisection on the kernel derivative.
fn kernel_minimizer(taps: usize) -> f64 {
    let n = 100_000;
    let x = kernel_argmin(taps, n);
    let (mut lo, mut hi) = (x - PI / n as f64, x + PI / n as f64);
    // D is decreasing left of the minimum, i.e. the ∂/∂ω_k form is positive there
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dirichlet_derivative(taps, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn two_tone_grid_search() {
    let n = 100_000;
    let step = 2.0 * PI / n as f64;
    for l in [4usize, 8, 16, 32, 64, 128] {
        let p = scenario(l);
        let (best, _) = (1..n)
            .map(|i| i as f64 * step)
            .map(|d| (d, bmse_two_tone(&p, d)))
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let star = kernel_minimizer(l);
        // the kernel is even about π, so either branch is an argmin
        let dist = (best - star).abs().min((best - (2.0 * PI - star)).abs());
        assert!(dist <= step, "L={l}: {best} vs {star}");
    }
}

#[test]
fn pair_spacing_approaches_nine_over_l_plus_one() {
    let gap = |l: usize| (kernel_minimizer(l) - optimal_two_tone_spacing(l)).abs();
    assert!(gap(4) > gap(8) && gap(8) > gap(16));
    for l in [16usize, 32, 64, 128, 256] {
        assert!(gap(l) < 5e-4, "L={l}: {}", gap(l));
    }
    // (L+1)Δ* crosses 9 between L = 8 and 16 and settles near 8.9868
    let scaled = |l: usize| kernel_minimizer(l) * (l as f64 + 1.0);
    assert!(scaled(8) > 9.0 && scaled(16) < 9.0);
    assert!((scaled(512) - 8.9868).abs() < 1e-3);
    assert!(gap(32) > gap(16));
}

#[test]
fn refined_pair_finds_kernel_minimum() {
    for l in [8usize, 16, 32] {
        let p = scenario(l);
        let init = init_structured(2, l, p.jammer_power, 0.4).unwrap();
        let r = refine_frequencies(&p, &init, &OptimizerConfig::default()).unwrap();
        let d = (r.tones.omega()[1] - r.tones.omega()[0]).rem_euclid(2.0 * PI);
        let d = d.min(2.0 * PI - d);
        assert!((d - kernel_minimizer(l)).abs() < 1e-3, "L={l}: {d}");
    }
}

#[test]
fn closed_form_pair_ignores_position() {
    let p = scenario(16);
    let reference = two_tone_closed_form(&p, 0.0, false).unwrap().bmse;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let w = rng.random_range(-PI..PI);
        for mirrored in [false, true] {
            let r = two_tone_closed_form(&p, w, mirrored).unwrap();
            assert!((r.bmse - reference).abs() < 1e-10 * reference);
            assert!((r.bmse - analytic_bmse(&p, &r.tones).unwrap()).abs() <= 1e-12 * reference);
        }
    }
}

#[test]
fn comb_ignores_position() {
    let p = scenario(16);
    let reference = uniform_comb(&p, 3, 0.0).unwrap().bmse;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let r = uniform_comb(&p, 3, rng.random_range(-PI..PI)).unwrap();
        assert!((r.bmse - reference).abs() < 1e-10 * reference);
    }
}

#[test]
fn restarts_recover_pair_optimum() {
    let p = scenario(8);
    let config = OptimizerConfig { restarts: 20, ..OptimizerConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inits = random_inits(2, p.jammer_power, &config, &mut rng).unwrap();
    let runs: Vec<DesignResult> = inits.iter().map(|i| optimize_from(&p, i, &config).unwrap()).collect();
    let best = best_of(runs.clone()).unwrap();
    assert!(runs.iter().all(|r| best.loss() <= r.loss()));
    let target = bmse_two_tone(&p, optimal_two_tone_spacing(8));
    assert!((best.bmse - target).abs() < 1e-3 * target, "{} vs {target}", best.bmse);
    for r in &runs {
        assert!(r.tones.satisfies_power(p.jammer_power));
        assert!(r.trace.len() <= config.max_iter);
    }
}

#[test]
fn structured_refinement_competes_with_restarts() {
    let p = scenario(16);
    let config = OptimizerConfig::default();
    let init = init_structured(6, 16, p.jammer_power, 0.0).unwrap();
    let refined = refine_frequencies(&p, &init, &config).unwrap();
    assert!(refined.bmse > analytic_bmse(&p, &init).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let best = optimize_random_restarts(&p, 6, &config, &mut rng).unwrap();
    assert!(refined.bmse >= 0.995 * best.bmse, "{} vs {}", refined.bmse, best.bmse);
}

#[test]
fn ratio_ordering() {
    let p = scenario(16);
    let config = OptimizerConfig::default();
    for k in 3..=8 {
        let init = init_structured(k, 16, p.jammer_power, 0.0).unwrap();
        let refined = refine_frequencies(&p, &init, &config).unwrap();
        let r = error_ratios(&p, &init, &refined.tones).unwrap();
        assert!(r.r >= 1.0);
        assert!(r.r_others >= r.r && r.r_others >= r.r0 && r.r_others >= r.r1, "K={k}: {r:?}");
        // N = N0 + 2N1 + rest, by construction
        let (n, n0, n1) = error_parts(&wienerjam_core::analytic::error_covariance(&p, &refined.tones).unwrap());
        assert!((n0 + 2.0 * n1 + (n - n0 - 2.0 * n1) - n).abs() <= 1e-12 * n);
    }
}

#[test]
fn design_results_report_their_own_bmse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let config = OptimizerConfig::default();
    for l in [8usize, 16] {
        let p = scenario(l);
        for k in 1..=10 {
            let d = design_jammer(&p, k, &config, &mut rng).unwrap();
            assert!(d.tones.satisfies_power(p.jammer_power));
            let b = analytic_bmse(&p, &d.tones).unwrap();
            assert!((d.bmse - b).abs() <= 1e-12 * b);
        }
    }
}
