//! Analytic gradients of the loss against central finite differences.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wienerjam_core::optimizer::{evaluate, loss, project_power};
use wienerjam_core::seed::child_seed;
use wienerjam_core::{SystemParams, ToneSet};

use crate::error::Result;

/// Finite-difference step in `α_k²`, relative to `max(α_k², 1)`.
pub const STEP_ALPHA_SQ: f64 = 1e-6;
/// Finite-difference step in `ω_k`.
pub const STEP_OMEGA: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckRow {
    pub case: usize,
    #[serde(rename = "K")]
    pub tones: usize,
    #[serde(rename = "L")]
    pub taps: usize,
    pub rel_err_alpha: f64,
    pub rel_err_omega: f64,
    pub max_abs_grad_omega: f64,
    pub pass: bool,
}

/// Random instance with `K ≤ 8`, `L ≤ 32` and tones at least `1e-2` apart.
pub fn random_instance(rng: &mut ChaCha8Rng, tones: Option<usize>) -> Result<(SystemParams, ToneSet)> {
    let l = 2 * rng.random_range(1..=16usize);
    let k = tones.unwrap_or_else(|| rng.random_range(1..=8usize));
    let p = SystemParams::new(rng.random_range(0.5..2.0), rng.random_range(0.5..40.0), rng.random_range(1.0..300.0), l)?;
    let omega: Vec<f64> = loop {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-PI..PI)).collect();
        let apart = (0..k).all(|i| (0..i).all(|j| (2.0 * (1.0 - (w[i] - w[j]).cos())).sqrt() > 1e-2));
        if apart {
            break w;
        }
    };
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    let alpha = project_power(&raw, p.jammer_power)?;
    Ok((p, ToneSet::new(alpha, omega)?))
}

fn max_rel(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs() / scale).fold(0.0, f64::max)
}

/// Central differences of the loss in every `α_k²` and `ω_k`.
pub fn finite_differences(params: &SystemParams, tones: &ToneSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = tones.len();
    let mut ga = Vec::with_capacity(k);
    let mut gw = Vec::with_capacity(k);
    for i in 0..k {
        let a2 = tones.alpha()[i].powi(2);
        let at = |v: f64| {
            let mut a = tones.alpha().to_vec();
            a[i] = v.sqrt();
            ToneSet::new(a, tones.omega().to_vec())
        };
        let h = STEP_ALPHA_SQ * a2.max(1.0);
        ga.push((loss(params, &at(a2 + h)?)? - loss(params, &at(a2 - h)?)?) / (2.0 * h));
        let wt = |v: f64| {
            let mut w = tones.omega().to_vec();
            w[i] = v;
            ToneSet::new(tones.alpha().to_vec(), w)
        };
        let w = tones.omega()[i];
        gw.push((loss(params, &wt(w + STEP_OMEGA)?)? - loss(params, &wt(w - STEP_OMEGA)?)?) / (2.0 * STEP_OMEGA));
    }
    Ok((ga, gw))
}

/// `cases` random instances; case `c` uses `child_seed(seed, [c])`.
pub fn run_gradcheck(cases: usize, tones: Option<usize>, seed: u64, alpha_threshold: f64, omega_threshold: f64) -> Result<Vec<GradcheckRow>> {
    (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, &[case as u64]));
            let (p, t) = random_instance(&mut rng, tones)?;
            let g = evaluate(&p, &t)?;
            let (fa, fw) = finite_differences(&p, &t)?;
            let rel_err_alpha = max_rel(&g.alpha_sq, &fa);
            let rel_err_omega = max_rel(&g.omega, &fw);
            Ok(GradcheckRow {
                case,
                tones: t.len(),
                taps: p.taps,
                rel_err_alpha,
                rel_err_omega,
                max_abs_grad_omega: g.omega.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                pass: rel_err_alpha < alpha_threshold && rel_err_omega < omega_threshold,
            })
        })
        .collect()
}
