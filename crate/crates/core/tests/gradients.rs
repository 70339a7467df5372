use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wienerjam_core::analytic::dirichlet;
use wienerjam_core::optimizer::{dirichlet_derivative, evaluate, loss};
use wienerjam_core::{SystemParams, ToneSet};

fn random_instance(rng: &mut ChaCha8Rng) -> (SystemParams, ToneSet) {
    let l = 2 * rng.random_range(1..=16usize);
    let k = rng.random_range(1..=8usize);
    let p = SystemParams::new(rng.random_range(0.5..2.0), rng.random_range(0.5..40.0), rng.random_range(1.0..300.0), l).unwrap();
    // keep tones apart so the loss is smooth at the finite-difference scale
    let omega: Vec<f64> = loop {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-PI..PI)).collect();
        let apart = (0..k).all(|i| (0..i).all(|j| (1.0 - ((w[i] - w[j]).cos())).sqrt() > 1e-2));
        if apart {
            break w;
        }
    };
    let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    let t = ToneSet::new(alpha, omega).unwrap();
    let a = wienerjam_core::optimizer::project_power(t.alpha(), p.jammer_power).unwrap();
    (p, ToneSet::new(a, t.omega().to_vec()).unwrap())
}

fn with_power(t: &ToneSet, k: usize, sq: f64) -> ToneSet {
    let mut a = t.alpha().to_vec();
    a[k] = sq.sqrt();
    ToneSet::new(a, t.omega().to_vec()).unwrap()
}

fn with_freq(t: &ToneSet, k: usize, w: f64) -> ToneSet {
    let mut o = t.omega().to_vec();
    o[k] = w;
    ToneSet::new(t.alpha().to_vec(), o).unwrap()
}

fn rel_err(analytic: f64, numeric: f64, scale: f64) -> f64 {
    (analytic - numeric).abs() / scale
}

#[test]
fn amplitude_gradient_vs_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (p, t) = random_instance(&mut rng);
        let g = evaluate(&p, &t).unwrap();
        let scale = g.alpha_sq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..t.len() {
            let a2 = t.alpha()[k].powi(2);
            let h = 1e-6 * a2.max(1.0);
            let fd = (loss(&p, &with_power(&t, k, a2 + h)).unwrap() - loss(&p, &with_power(&t, k, a2 - h)).unwrap()) / (2.0 * h);
            worst = worst.max(rel_err(g.alpha_sq[k], fd, scale));
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst:e}");
}

#[test]
fn frequency_gradient_vs_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (p, t) = random_instance(&mut rng);
        let g = evaluate(&p, &t).unwrap();
        let scale = g.omega.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            assert_eq!(t.len(), 1);
            continue;
        }
        for k in 0..t.len() {
            let w = t.omega()[k];
            let h = 1e-6;
            let fd = (loss(&p, &with_freq(&t, k, w + h)).unwrap() - loss(&p, &with_freq(&t, k, w - h)).unwrap()) / (2.0 * h);
            worst = worst.max(rel_err(g.omega[k], fd, scale));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn kernel_derivative_vs_central_difference() {
    for l in [2usize, 4, 8, 16, 32, 64] {
        for i in 1..200 {
            let d = -PI + 2.0 * PI * i as f64 / 200.0;
            let h = 1e-6;
            // derivative in ω_k of D(ω_k' − ω_k)
            let fd = (dirichlet(l / 2, d - h) - dirichlet(l / 2, d + h)) / (2.0 * h);
            let g = dirichlet_derivative(l, d);
            assert!((g - fd).abs() < 1e-6 * (l * l) as f64, "L={l} Δ={d}: {g} vs {fd}");
        }
    }
}
