//! Worst-case K-tone jammer design.
//!
//! The loss is `f(α, ω) = −BMSE`. With `E = A⁻¹` and `C = C_ε`:
//!
//! ```text
//! ∂f/∂α_k² = −(1ᵀ e_k)²
//! ∂f/∂ω_k  = (1/P) Σ_{k'≠k} g(ω_k' − ω_k) (u_k v_k' + u_k' v_k),   u = Cᵀ1, v = C1
//! ```
//!
//! where `g(Δ) = ∂D_{L/2}(ω_k' − ω_k)/∂ω_k` (see [`dirichlet_derivative`]).
//!
//! Projected Adam keeps `‖α‖² = J` after every step.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::analytic::{analytic_bmse, error_covariance, gamma_matrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Lu, RMatrix};
use crate::model::{validate_taps, wrap_angle, SystemParams, ToneSet};

/// Below this `|sin(Δ/2)|` the kernel derivative is summed term by term.
const KERNEL_DERIVATIVE_SMALL: f64 = 1e-2;

/// Spacing `9/(L+1)` between the two tones of the best 2-tone jammer.
pub fn optimal_two_tone_spacing(taps: usize) -> f64 {
    9.0 / (taps as f64 + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub mu_alpha: f64,
    pub mu_omega: f64,
    pub max_iter: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub restarts: usize,
    /// Stop once `|f_i − f_{i−window}| ≤ tol·|f_i|`.
    pub tol: f64,
    pub stall_window: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mu_alpha: 5e-2,
            mu_omega: 1e-2,
            max_iter: 1000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            restarts: 16,
            tol: 1e-10,
            stall_window: 20,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_alpha > 0.0 && self.mu_omega > 0.0) {
            return Err(invalid("step sizes must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return Err(invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(invalid("Adam epsilon must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(invalid("tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// `f = −BMSE`.
pub fn loss(params: &SystemParams, tones: &ToneSet) -> Result<f64> {
    Ok(-analytic_bmse(params, tones)?)
}

/// `∂D_{L/2}(ω_k' − ω_k)/∂ω_k` as a function of `Δ = ω_k' − ω_k`; odd in `Δ`
/// and 0 at `Δ ≡ 0`.
pub fn dirichlet_derivative(taps: usize, delta: f64) -> f64 {
    let half = taps / 2;
    let s = libm::sin(0.5 * delta);
    if libm::fabs(s) < KERNEL_DERIVATIVE_SMALL {
        let sum: f64 = (1..=half).map(|l| l as f64 * libm::sin(l as f64 * delta)).sum();
        return 2.0 * sum;
    }
    let c = libm::cos(0.5 * delta);
    let arg = 0.5 * (taps as f64 + 1.0) * delta;
    (0.5 * libm::sin(arg) * c - 0.5 * (taps as f64 + 1.0) * libm::cos(arg) * s) / (s * s)
}

/// Loss and gradients at one iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    /// `∂f/∂α_k²`.
    pub alpha_sq: Vec<f64>,
    /// `∂f/∂α_k = 2α_k ∂f/∂α_k²`.
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Gradients {
    /// Same point with the amplitude gradient zeroed.
    pub fn frequencies_only(mut self) -> Self {
        self.alpha.iter_mut().for_each(|g| *g = 0.0);
        self
    }
}

pub fn evaluate(params: &SystemParams, tones: &ToneSet) -> Result<Gradients> {
    params.validate()?;
    let k = tones.len();
    if k == 0 {
        return Err(invalid("a jammer needs at least one tone"));
    }
    let omega = tones.omega();
    let powers = tones.powers();
    let white = params.white_power();
    let gamma = gamma_matrix(omega, params.taps)?;
    let a = RMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } + powers[i] * gamma[(i, j)] / white);
    let lu = Lu::new(&a)?;
    // x = A⁻ᵀ1 holds the column sums of A⁻¹; v = A⁻¹ J 1 = C 1; u = J x = Cᵀ1
    let x = lu.solve_transpose(&vec![1.0; k]);
    let v = lu.solve(&powers);
    let u: Vec<f64> = powers.iter().zip(&x).map(|(p, xi)| p * xi).collect();
    let loss = -crate::linalg::compensated_sum(v.iter().copied());
    let alpha_sq: Vec<f64> = x.iter().map(|xi| -xi * xi).collect();
    let alpha = alpha_sq.iter().zip(tones.alpha()).map(|(g, a)| 2.0 * a * g).collect();
    let omega_grad = (0..k)
        .map(|i| {
            let acc: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| dirichlet_derivative(params.taps, omega[j] - omega[i]) * (u[i] * v[j] + u[j] * v[i]))
                .sum();
            acc / white
        })
        .collect();
    Ok(Gradients { loss, alpha_sq, alpha, omega: omega_grad })
}

pub fn grad_alpha(params: &SystemParams, tones: &ToneSet) -> Result<Vec<f64>> {
    Ok(evaluate(params, tones)?.alpha_sq)
}

pub fn grad_omega(params: &SystemParams, tones: &ToneSet) -> Result<Vec<f64>> {
    Ok(evaluate(params, tones)?.omega)
}

/// `√J · α/‖α‖₂`.
pub fn project_power(alpha: &[f64], jammer_power: f64) -> Result<Vec<f64>> {
    let norm = crate::linalg::norm2(alpha);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateIterate);
    }
    let scale = libm::sqrt(jammer_power) / norm;
    Ok(alpha.iter().map(|a| a * scale).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
    pub jammer_power: f64,
    pub m_alpha: Vec<f64>,
    pub v_alpha: Vec<f64>,
    pub m_omega: Vec<f64>,
    pub v_omega: Vec<f64>,
    pub iter: usize,
    pub loss_trace: Vec<f64>,
}

impl OptimizerState {
    pub fn new(init: &ToneSet, jammer_power: f64) -> Result<Self> {
        let k = init.len();
        Ok(Self {
            alpha: project_power(init.alpha(), jammer_power)?,
            omega: init.omega().to_vec(),
            jammer_power,
            m_alpha: vec![0.0; k],
            v_alpha: vec![0.0; k],
            m_omega: vec![0.0; k],
            v_omega: vec![0.0; k],
            iter: 0,
            loss_trace: Vec::new(),
        })
    }

    pub fn tones(&self) -> Result<ToneSet> {
        ToneSet::new(self.alpha.clone(), self.omega.clone())
    }
}

fn adam_update(theta: &mut [f64], m: &mut [f64], v: &mut [f64], grad: &[f64], mu: f64, t: i32, config: &OptimizerConfig) {
    let c1 = 1.0 - libm::pow(config.adam_beta1, t as f64);
    let c2 = 1.0 - libm::pow(config.adam_beta2, t as f64);
    for i in 0..theta.len() {
        m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * grad[i];
        v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
        let mhat = m[i] / c1;
        let vhat = v[i] / c2;
        theta[i] -= mu * mhat / (libm::sqrt(vhat) + config.adam_eps);
    }
}

/// One bias-corrected Adam step on `(α, ω)`, then `α ← P_S(|α|)` and `ω`
/// wrapped into `[−π, π)`. Appends `grads.loss` to the trace.
pub fn adam_step(mut state: OptimizerState, grads: &Gradients, config: &OptimizerConfig) -> Result<OptimizerState> {
    let k = state.alpha.len();
    if grads.alpha.len() != k || grads.omega.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: grads.alpha.len().min(grads.omega.len()) });
    }
    state.iter += 1;
    let t = state.iter.min(i32::MAX as usize) as i32;
    adam_update(&mut state.alpha, &mut state.m_alpha, &mut state.v_alpha, &grads.alpha, config.mu_alpha, t, config);
    adam_update(&mut state.omega, &mut state.m_omega, &mut state.v_omega, &grads.omega, config.mu_omega, t, config);
    // f depends on α², so the sign of a component is immaterial
    if grads.alpha.iter().any(|&g| g != 0.0) {
        let magnitudes: Vec<f64> = state.alpha.iter().map(|a| libm::fabs(*a)).collect();
        state.alpha = project_power(&magnitudes, state.jammer_power)?;
    }
    state.omega.iter_mut().for_each(|w| *w = wrap_angle(*w));
    state.loss_trace.push(grads.loss);
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DesignMethod {
    ClosedFormK1,
    ClosedFormK2,
    StructuredRefined,
    RandomRestart,
    UniformComb,
}

impl DesignMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignMethod::ClosedFormK1 => "closed_form_k1",
            DesignMethod::ClosedFormK2 => "closed_form_k2",
            DesignMethod::StructuredRefined => "structured_refined",
            DesignMethod::RandomRestart => "random_restart",
            DesignMethod::UniformComb => "uniform_comb",
        }
    }
}

impl core::fmt::Display for DesignMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignResult {
    pub tones: ToneSet,
    pub bmse: f64,
    pub method: DesignMethod,
    pub trace: Vec<f64>,
}

impl DesignResult {
    fn closed(params: &SystemParams, tones: ToneSet, method: DesignMethod) -> Result<Self> {
        let bmse = analytic_bmse(params, &tones)?;
        Ok(Self { tones, bmse, method, trace: Vec::new() })
    }

    pub fn loss(&self) -> f64 {
        -self.bmse
    }
}

fn stalled(trace: &[f64], current: f64, config: &OptimizerConfig) -> bool {
    let w = config.stall_window;
    if w == 0 || trace.len() < w {
        return false;
    }
    let past = trace[trace.len() - w];
    libm::fabs(current - past) <= config.tol * libm::fabs(current)
}

/// Projected Adam from `init`; returns the best-seen iterate and the loss of
/// every evaluated iterate.
pub fn run_adam(params: &SystemParams, init: &ToneSet, config: &OptimizerConfig, frequencies_only: bool) -> Result<(ToneSet, Vec<f64>)> {
    config.validate()?;
    let mut state = OptimizerState::new(init, params.jammer_power)?;
    let mut best: Option<(f64, ToneSet)> = None;
    loop {
        let tones = state.tones()?;
        let mut grads = evaluate(params, &tones)?;
        if frequencies_only {
            grads = grads.frequencies_only();
        }
        if best.as_ref().is_none_or(|(b, _)| grads.loss < *b) {
            best = Some((grads.loss, tones));
        }
        if state.loss_trace.len() + 1 >= config.max_iter || stalled(&state.loss_trace, grads.loss, config) {
            state.loss_trace.push(grads.loss);
            break;
        }
        state = adam_step(state, &grads, config)?;
    }
    let (_, tones) = best.expect("at least one iterate is evaluated");
    Ok((tones, state.loss_trace))
}

/// Equal powers `√(J/K)` with `ω_k = ω_1 + (k−1)·9/(L+1)`.
pub fn init_structured(tones: usize, taps: usize, jammer_power: f64, omega1: f64) -> Result<ToneSet> {
    if tones == 0 {
        return Err(invalid("a jammer needs at least one tone"));
    }
    validate_taps(taps)?;
    let spacing = optimal_two_tone_spacing(taps);
    let omega = (0..tones).map(|k| omega1 + k as f64 * spacing).collect();
    ToneSet::equal_power(jammer_power, omega)
}

/// Adam on `ω` only, amplitudes frozen at those of `init`.
pub fn refine_frequencies(params: &SystemParams, init: &ToneSet, config: &OptimizerConfig) -> Result<DesignResult> {
    let (tones, trace) = run_adam(params, init, config, true)?;
    let bmse = analytic_bmse(params, &tones)?;
    Ok(DesignResult { tones, bmse, method: DesignMethod::StructuredRefined, trace })
}

/// Random start: `α` uniform on the positive simplex then projected, `ω`
/// i.i.d. uniform on `[−π, π)`.
pub fn random_init<R: Rng + ?Sized>(tones: usize, jammer_power: f64, rng: &mut R) -> Result<ToneSet> {
    if tones == 0 {
        return Err(invalid("a jammer needs at least one tone"));
    }
    let raw: Vec<f64> = (0..tones).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let simplex: Vec<f64> = raw.iter().map(|e| e / total).collect();
    let alpha = project_power(&simplex, jammer_power)?;
    let omega = (0..tones).map(|_| rng.random_range(-PI..PI)).collect();
    ToneSet::new(alpha, omega)
}

/// `config.restarts` random starts, drawn in order from `rng`.
pub fn random_inits<R: Rng + ?Sized>(tones: usize, jammer_power: f64, config: &OptimizerConfig, rng: &mut R) -> Result<Vec<ToneSet>> {
    (0..config.restarts).map(|_| random_init(tones, jammer_power, rng)).collect()
}

/// Full `(α, ω)` projected Adam from one start.
pub fn optimize_from(params: &SystemParams, init: &ToneSet, config: &OptimizerConfig) -> Result<DesignResult> {
    let (tones, trace) = run_adam(params, init, config, false)?;
    let bmse = analytic_bmse(params, &tones)?;
    Ok(DesignResult { tones, bmse, method: DesignMethod::RandomRestart, trace })
}

/// Lowest-loss result; the earliest wins ties.
pub fn best_of(results: impl IntoIterator<Item = DesignResult>) -> Option<DesignResult> {
    results.into_iter().fold(None, |best: Option<DesignResult>, r| match best {
        Some(b) if b.bmse >= r.bmse => Some(b),
        _ => Some(r),
    })
}

pub fn optimize_random_restarts<R: Rng + ?Sized>(params: &SystemParams, tones: usize, config: &OptimizerConfig, rng: &mut R) -> Result<DesignResult> {
    if config.restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let inits = random_inits(tones, params.jammer_power, config, rng)?;
    let runs = inits.iter().map(|init| optimize_from(params, init, config)).collect::<Result<Vec<_>>>()?;
    Ok(best_of(runs).expect("restarts >= 1"))
}

/// Best 2-tone jammer: equal powers and spacing `9/(L+1)`, or `2π − 9/(L+1)`
/// when `mirrored`.
pub fn two_tone_closed_form(params: &SystemParams, omega1: f64, mirrored: bool) -> Result<DesignResult> {
    params.validate()?;
    let spacing = optimal_two_tone_spacing(params.taps);
    let delta = if mirrored { 2.0 * PI - spacing } else { spacing };
    let tones = ToneSet::equal_power(params.jammer_power, vec![omega1, omega1 + delta])?;
    DesignResult::closed(params, tones, DesignMethod::ClosedFormK2)
}

/// `K` equal-power tones spaced `2π/K`.
pub fn uniform_comb(params: &SystemParams, tones: usize, omega1: f64) -> Result<DesignResult> {
    params.validate()?;
    if tones == 0 {
        return Err(invalid("a jammer needs at least one tone"));
    }
    let spacing = 2.0 * PI / tones as f64;
    let omega = (0..tones).map(|k| omega1 + k as f64 * spacing).collect();
    let set = ToneSet::equal_power(params.jammer_power, omega)?;
    DesignResult::closed(params, set, DesignMethod::UniformComb)
}

/// Dispatch on the `K` regime; `ω_1` is drawn from `rng`.
pub fn design_jammer<R: Rng + ?Sized>(params: &SystemParams, tones: usize, config: &OptimizerConfig, rng: &mut R) -> Result<DesignResult> {
    params.validate()?;
    if tones == 0 {
        return Err(invalid("a jammer needs at least one tone"));
    }
    let omega1 = rng.random_range(-PI..PI);
    match tones {
        1 => {
            let set = ToneSet::equal_power(params.jammer_power, vec![omega1])?;
            DesignResult::closed(params, set, DesignMethod::ClosedFormK1)
        }
        2 => two_tone_closed_form(params, omega1, false),
        k if k > params.half_taps() => uniform_comb(params, k, omega1),
        k => {
            let init = init_structured(k, params.taps, params.jammer_power, omega1)?;
            refine_frequencies(params, &init, config)
        }
    }
}

/// Gains of a refined design over its start: total, diagonal, adjacent-pair
/// and remaining off-diagonal parts of `C_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRatios {
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    pub r_others: f64,
}

/// `(total, trace, adjacent off-diagonal sum)` of `C_ε`.
pub fn error_parts(ceps: &RMatrix) -> (f64, f64, f64) {
    let k = ceps.rows();
    let total = ceps.sum();
    let diag = ceps.trace();
    let adjacent: f64 = (0..k.saturating_sub(1)).map(|i| ceps[(i, i + 1)]).sum();
    (total, diag, adjacent)
}

pub fn error_ratios(params: &SystemParams, init: &ToneSet, refined: &ToneSet) -> Result<ErrorRatios> {
    if init.len() != refined.len() {
        return Err(Error::LengthMismatch { expected: init.len(), got: refined.len() });
    }
    let shared = init.alpha().iter().zip(refined.alpha()).all(|(a, b)| libm::fabs(a - b) <= 1e-9 * libm::fabs(*a).max(1.0));
    if !shared {
        return Err(invalid("both jammers must share the same amplitudes"));
    }
    let (n, n0, n1) = error_parts(&error_covariance(params, refined)?);
    let (d, d0, d1) = error_parts(&error_covariance(params, init)?);
    let ratio = |num: f64, den: f64, what: &'static str| if den == 0.0 { Err(Error::ZeroDenominator(what)) } else { Ok(num / den) };
    Ok(ErrorRatios {
        r: ratio(n, d, "R")?,
        r0: ratio(n0, d0, "R0")?,
        r1: ratio(n1, d1, "R1")?,
        r_others: ratio(n - n0 - 2.0 * n1, d - d0 - 2.0 * d1, "R_others")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{dirichlet, bmse_one_tone, bmse_two_tone, bmse_uniform_comb};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(taps: usize) -> SystemParams {
        SystemParams::from_db(-15.0, 25.0, taps).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        libm::fabs(a - b) <= rel * libm::fabs(b).max(1e-300)
    }

    #[test]
    fn loss_examples() {
        let p = scenario(8);
        let comb = ToneSet::equal_power(p.jammer_power, (0..5).map(|k| k as f64 * 2.0 * PI / 5.0).collect()).unwrap();
        assert!(close(loss(&p, &comb).unwrap(), -p.jammer_power, 1e-9));
        for w in [-2.0, 0.3, 1.7] {
            let one = ToneSet::equal_power(p.jammer_power, vec![w]).unwrap();
            assert!(close(loss(&p, &one).unwrap(), -bmse_one_tone(&p), 1e-12));
        }
    }

    #[test]
    fn single_tone_gradients() {
        let p = scenario(16);
        let one = ToneSet::equal_power(p.jammer_power, vec![0.4]).unwrap();
        let g = evaluate(&p, &one).unwrap();
        let expected = 1.0 / (1.0 + p.jammer_power * 16.0 / p.white_power());
        assert!(close(g.alpha_sq[0], -expected * expected, 1e-12));
        assert_eq!(g.omega, vec![0.0]);
    }

    #[test]
    fn symmetric_pair_gradients() {
        let p = scenario(8);
        let pair = ToneSet::equal_power(p.jammer_power, vec![0.2, 1.3]).unwrap();
        let g = evaluate(&p, &pair).unwrap();
        assert!(close(g.alpha_sq[0], g.alpha_sq[1], 1e-12));
        assert!(close(g.omega[0], -g.omega[1], 1e-12));
    }

    #[test]
    fn kernel_derivative_examples() {
        assert_eq!(dirichlet_derivative(16, 0.0), 0.0);
        for d in [0.7, 0.005, 2.9, 1e-4] {
            assert!(close(dirichlet_derivative(16, -d), -dirichlet_derivative(16, d), 1e-12));
        }
        // against a central difference of D(ω' − ω) in ω
        let h = 1e-6;
        let fd = (dirichlet(8, 0.7 - h) - dirichlet(8, 0.7 + h)) / (2.0 * h);
        assert!(close(dirichlet_derivative(16, 0.7), fd, 1e-6));
        // both branches agree at the switch
        let edge = 2.0 * libm::asin(KERNEL_DERIVATIVE_SMALL);
        let below = dirichlet_derivative(16, edge * (1.0 - 1e-9));
        let above = dirichlet_derivative(16, edge * (1.0 + 1e-9));
        assert!(close(below, above, 1e-6));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_power(&[3.0, 4.0], 25.0).unwrap(), vec![3.0, 4.0]);
        let p = project_power(&[1.0, 1.0], 4.0).unwrap();
        assert!(close(p[0], libm::sqrt(2.0), 1e-15) && close(p[1], libm::sqrt(2.0), 1e-15));
        assert_eq!(project_power(&[0.0, 0.0], 4.0).unwrap_err(), Error::DegenerateIterate);
    }

    #[test]
    fn zero_gradient_step_is_identity() {
        let p = scenario(8);
        let init = init_structured(3, 8, p.jammer_power, 0.1).unwrap();
        let state = OptimizerState::new(&init, p.jammer_power).unwrap();
        let zero = Gradients { loss: -1.0, alpha_sq: vec![0.0; 3], alpha: vec![0.0; 3], omega: vec![0.0; 3] };
        let next = adam_step(state.clone(), &zero, &OptimizerConfig::default()).unwrap();
        assert_eq!(next.alpha, state.alpha);
        assert_eq!(next.omega, state.omega);
        assert_eq!(next.loss_trace, vec![-1.0]);
    }

    #[test]
    fn one_step_from_structured_init_improves() {
        let p = scenario(16);
        let config = OptimizerConfig::default();
        let init = init_structured(6, 16, p.jammer_power, 0.0).unwrap();
        let g = evaluate(&p, &init).unwrap();
        let next = adam_step(OptimizerState::new(&init, p.jammer_power).unwrap(), &g, &config).unwrap();
        let tones = next.tones().unwrap();
        assert!(tones.satisfies_power(p.jammer_power));
        assert!(loss(&p, &tones).unwrap() < g.loss);
    }

    #[test]
    fn structured_init_examples() {
        let two = init_structured(2, 8, 10.0, 0.0).unwrap();
        assert!(close(two.omega()[1] - two.omega()[0], 1.0, 1e-15));
        assert!(close(two.power(), 10.0, 1e-12));
        let one = init_structured(1, 8, 10.0, 0.5).unwrap();
        assert_eq!(one.omega(), &[0.5]);
    }

    #[test]
    fn two_tone_closed_form_examples() {
        let p = scenario(8);
        let d = libm::sin(4.5) / libm::sin(0.5);
        assert!(libm::fabs(d + 2.0397) < 1e-3);
        let expected = p.white_power() / (p.white_power() / p.jammer_power + 3.5 + d / 2.0);
        let a = two_tone_closed_form(&p, 0.3, false).unwrap();
        let b = two_tone_closed_form(&p, 0.3, true).unwrap();
        assert!(close(a.bmse, expected, 1e-10));
        assert!(close(b.bmse, expected, 1e-10));
        assert!(close(bmse_two_tone(&p, 1.0), expected, 1e-12));
    }

    #[test]
    fn comb_examples() {
        let p = scenario(16);
        let c = uniform_comb(&p, 3, 0.2).unwrap();
        let expected = 1.0 / (1.0 / p.jammer_power + 4.0 / p.white_power());
        assert!(close(c.bmse, expected, 1e-10));
        assert!(close(bmse_uniform_comb(&p, 3), expected, 1e-15));
        let full = uniform_comb(&p, 9, -1.0).unwrap();
        assert!(close(full.bmse, p.jammer_power, 1e-9));
    }

    #[test]
    fn dispatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = OptimizerConfig::default();
        let p8 = scenario(8);
        let one = design_jammer(&p8, 1, &config, &mut rng).unwrap();
        assert_eq!(one.method, DesignMethod::ClosedFormK1);
        assert!(close(one.bmse, bmse_one_tone(&p8), 1e-12));
        let comb = design_jammer(&p8, 5, &config, &mut rng).unwrap();
        assert_eq!(comb.method, DesignMethod::UniformComb);
        assert!(close(comb.bmse, p8.jammer_power, 1e-9));
        let p16 = scenario(16);
        let five = design_jammer(&p16, 5, &config, &mut rng).unwrap();
        let two = design_jammer(&p16, 2, &config, &mut rng).unwrap();
        assert_eq!(five.method, DesignMethod::StructuredRefined);
        assert_eq!(two.method, DesignMethod::ClosedFormK2);
        assert!(five.bmse > two.bmse);
    }

    #[test]
    fn refinement_never_loses() {
        let p = scenario(16);
        let config = OptimizerConfig::default();
        let init = init_structured(6, 16, p.jammer_power, 0.0).unwrap();
        let refined = refine_frequencies(&p, &init, &config).unwrap();
        assert!(refined.bmse >= analytic_bmse(&p, &init).unwrap() - 1e-12);
        assert!(refined.trace.len() <= config.max_iter);
        assert_eq!(refined.tones.alpha(), init.alpha());
    }

    #[test]
    fn ratios_of_identical_designs_are_one() {
        let p = scenario(16);
        let init = init_structured(4, 16, p.jammer_power, 0.0).unwrap();
        let r = error_ratios(&p, &init, &init).unwrap();
        for v in [r.r, r.r0, r.r1, r.r_others] {
            assert!(close(v, 1.0, 1e-12));
        }
        let other = ToneSet::equal_power(p.jammer_power * 2.0, init.omega().to_vec()).unwrap();
        assert!(error_ratios(&p, &init, &other).is_err());
    }

    #[test]
    fn restart_selection_and_single_tone() {
        let p = scenario(8);
        let config = OptimizerConfig { restarts: 1, ..OptimizerConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = optimize_random_restarts(&p, 1, &config, &mut rng).unwrap();
        assert!(r.tones.satisfies_power(p.jammer_power));
        assert!(close(r.bmse, bmse_one_tone(&p), 1e-12));
    }
}
