//! Closed-form covariance objects, the Wiener interpolation filter and the
//! analytic BMSE of the interference estimate.
//!
//! With `P = S + σ_n²`, `J(α) = diag(α_k²)` and the steering matrix `Ψ(ω)`:
//!
//! ```text
//! C_rr = P·I_L + Ψ J Ψᴴ          C_rθ = Ψ J          w = C_rr⁻¹ C_rθ 1
//! Γ    = Ψᴴ Ψ,  Γ_kk' = D_{L/2}(ω_k' − ω_k) − 1
//! A    = I_K + J Γ / P           C_ε  = A⁻¹ J         BMSE = 1ᵀ C_ε 1
//! ```

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{norm2, CMatrix, Cholesky, Lu, RMatrix, C64};
use crate::model::{validate_taps, window_lags, SystemParams, ToneSet};

/// `|sin(x/2)|` below this switches the Dirichlet kernel to its limit value.
const DIRICHLET_SINGULAR: f64 = 1e-9;

/// Largest imaginary residue tolerated in quantities that are real in exact
/// arithmetic, relative to the quantity's scale.
const REAL_RESIDUE: f64 = 1e-9;

/// Dirichlet kernel `D_n(x) = sin((n + ½)x) / sin(x/2)`, equal to `2n + 1` at
/// `x ≡ 0 (mod 2π)`.
pub fn dirichlet(n: usize, x: f64) -> f64 {
    let den = libm::sin(0.5 * x);
    if libm::fabs(den) < DIRICHLET_SINGULAR {
        return (2 * n + 1) as f64;
    }
    libm::sin((n as f64 + 0.5) * x) / den
}

/// Steering matrix: column `k` is
/// `ψ(ω_k) = [e^{j(L/2)ω_k}, …, e^{jω_k}, e^{−jω_k}, …, e^{−j(L/2)ω_k}]ᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringMatrix {
    psi: CMatrix,
    omega: Vec<f64>,
    taps: usize,
}

impl SteeringMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.psi
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// `Ψᴴ Ψ` computed by explicit products, which must come out real.
    pub fn gram(&self) -> Result<RMatrix> {
        let g = self.psi.adjoint().matmul(&self.psi);
        g.to_real(REAL_RESIDUE * self.taps as f64)
    }
}

pub fn steering(omega: &[f64], taps: usize) -> Result<SteeringMatrix> {
    validate_taps(taps)?;
    let lags = window_lags(taps);
    let psi = CMatrix::from_fn(taps, omega.len(), |i, k| C64::from_polar(1.0, lags[i] as f64 * omega[k]));
    Ok(SteeringMatrix { psi, omega: omega.to_vec(), taps })
}

/// `Γ_kk' = D_{L/2}(ω_k' − ω_k) − 1`.
pub fn gamma_matrix(omega: &[f64], taps: usize) -> Result<RMatrix> {
    validate_taps(taps)?;
    let half = taps / 2;
    let k = omega.len();
    let mut g = RMatrix::zeros(k, k);
    for a in 0..k {
        g[(a, a)] = taps as f64;
        for b in (a + 1)..k {
            let v = dirichlet(half, omega[b] - omega[a]) - 1.0;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// `C_rr = (S + σ_n²) I_L + Ψ J Ψᴴ`.
pub fn build_crr(params: &SystemParams, tones: &ToneSet) -> Result<CMatrix> {
    params.validate()?;
    let taps = params.taps;
    let lags = window_lags(taps);
    let powers = tones.powers();
    let white = params.white_power();
    let mut crr = CMatrix::zeros(taps, taps);
    for a in 0..taps {
        for b in a..taps {
            let d = (lags[a] - lags[b]) as f64;
            let mut v = C64::new(if a == b { white } else { 0.0 }, 0.0);
            for (&p, &w) in powers.iter().zip(tones.omega()) {
                v += C64::from_polar(p, w * d);
            }
            crr[(a, b)] = v;
            crr[(b, a)] = v.conj();
        }
    }
    Ok(crr)
}

/// `C_rθ = Ψ J`: column `k` is `α_k² ψ(ω_k)`.
pub fn build_crtheta(tones: &ToneSet, taps: usize) -> Result<CMatrix> {
    validate_taps(taps)?;
    let lags = window_lags(taps);
    let powers = tones.powers();
    Ok(CMatrix::from_fn(taps, tones.len(), |i, k| C64::from_polar(powers[k], lags[i] as f64 * tones.omega()[k])))
}

/// Where a filter's coefficients came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterSource {
    Analytic,
    Blind,
}

/// Length-`L` interpolation filter; the estimate is `î_m = wᴴ r_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerFilter {
    pub w: Vec<C64>,
    pub source: FilterSource,
}

impl WienerFilter {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn estimate(&self, window: &[C64]) -> Result<C64> {
        estimate_interference(self, window)
    }
}

/// `w = C_rr⁻¹ C_rθ 1`, via a Cholesky solve.
pub fn wiener_filter(crr: &CMatrix, crtheta: &CMatrix) -> Result<WienerFilter> {
    if crtheta.rows() != crr.rows() {
        return Err(Error::LengthMismatch { expected: crr.rows(), got: crtheta.rows() });
    }
    let ones = alloc::vec![C64::new(1.0, 0.0); crtheta.cols()];
    let cross = crtheta.mul_vec(&ones);
    solve_filter(crr, &cross, FilterSource::Analytic)
}

/// Solves `C w = c` for a Hermitian positive definite `C`.
pub fn solve_filter(crr: &CMatrix, cross: &[C64], source: FilterSource) -> Result<WienerFilter> {
    if !crr.is_square() {
        return Err(Error::LengthMismatch { expected: crr.rows(), got: crr.cols() });
    }
    if cross.len() != crr.rows() {
        return Err(Error::LengthMismatch { expected: crr.rows(), got: cross.len() });
    }
    if !crr.is_hermitian(1e-9 * crr.max_abs().max(1.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = Cholesky::new(crr)?;
    Ok(WienerFilter { w: chol.solve(cross), source })
}

/// `wᴴ x`.
pub fn estimate_interference(filter: &WienerFilter, window: &[C64]) -> Result<C64> {
    if window.len() != filter.w.len() {
        return Err(Error::LengthMismatch { expected: filter.w.len(), got: window.len() });
    }
    Ok(filter.w.iter().zip(window).map(|(w, x)| w.conj() * x).sum())
}

/// Per-tone estimates `θ̂ = C_rθᴴ C_rr⁻¹ r_m`; their sum equals `wᴴ r_m`.
pub fn tone_estimates(crr: &CMatrix, crtheta: &CMatrix, window: &[C64]) -> Result<Vec<C64>> {
    if window.len() != crr.rows() {
        return Err(Error::LengthMismatch { expected: crr.rows(), got: window.len() });
    }
    let y = Cholesky::new(crr)?.solve(window);
    Ok(crtheta.adjoint().mul_vec(&y))
}

/// `A = I_K + (S + σ_n²)⁻¹ J Γ`.
pub fn a_matrix(params: &SystemParams, tones: &ToneSet, gamma: &RMatrix) -> RMatrix {
    let powers = tones.powers();
    let white = params.white_power();
    RMatrix::from_fn(tones.len(), tones.len(), |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + powers[i] * gamma[(i, j)] / white
    })
}

/// Minimum error covariance `C_ε = A⁻¹ J`.
pub fn error_covariance(params: &SystemParams, tones: &ToneSet) -> Result<RMatrix> {
    params.validate()?;
    let gamma = gamma_matrix(tones.omega(), params.taps)?;
    let a = a_matrix(params, tones, &gamma);
    let lu = Lu::new(&a)?;
    Ok(lu.solve_matrix(&RMatrix::diagonal(&tones.powers())))
}

/// Long-form route `J − J Ψᴴ C_rr⁻¹ Ψ J`, kept as an independent check on
/// [`error_covariance`].
pub fn error_covariance_direct(params: &SystemParams, tones: &ToneSet) -> Result<RMatrix> {
    let crr = build_crr(params, tones)?;
    let crtheta = build_crtheta(tones, params.taps)?;
    let chol = Cholesky::new(&crr)?;
    let solved = chol.solve_matrix(&crtheta);
    let reduction = crtheta.adjoint().matmul(&solved);
    let jmat = RMatrix::diagonal(&tones.powers()).to_complex();
    let ceps = jmat.sub(&reduction);
    ceps.to_real(REAL_RESIDUE * tones.power().max(1.0))
}

/// Every closed-form object for one `(params, tones)` pair.
#[derive(Clone, Debug)]
pub struct CovarianceModel {
    pub crr: CMatrix,
    pub crtheta: CMatrix,
    pub jmat: RMatrix,
    pub gamma: RMatrix,
    pub amat: RMatrix,
    pub ceps: RMatrix,
}

impl CovarianceModel {
    pub fn build(params: &SystemParams, tones: &ToneSet) -> Result<Self> {
        params.validate()?;
        let crr = build_crr(params, tones)?;
        let crtheta = build_crtheta(tones, params.taps)?;
        let jmat = RMatrix::diagonal(&tones.powers());
        let gamma = gamma_matrix(tones.omega(), params.taps)?;
        let amat = a_matrix(params, tones, &gamma);
        let ceps = Lu::new(&amat)?.solve_matrix(&jmat);
        Ok(Self { crr, crtheta, jmat, gamma, amat, ceps })
    }

    pub fn filter(&self) -> Result<WienerFilter> {
        wiener_filter(&self.crr, &self.crtheta)
    }

    pub fn bmse(&self) -> f64 {
        self.ceps.sum()
    }
}

/// `BMSE = 1ᵀ C_ε 1`.
pub fn analytic_bmse(params: &SystemParams, tones: &ToneSet) -> Result<f64> {
    if tones.is_empty() {
        return Ok(0.0);
    }
    Ok(error_covariance(params, tones)?.sum())
}

/// One tone of power `J`: `P / (P/J + L)`.
pub fn bmse_one_tone(params: &SystemParams) -> f64 {
    let white = params.white_power();
    white / (white / params.jammer_power + params.taps as f64)
}

/// Two equal-power tones separated by `delta`:
/// `P / (P/J + (L − 1)/2 + D_{L/2}(Δ)/2)`.
pub fn bmse_two_tone(params: &SystemParams, delta: f64) -> f64 {
    let white = params.white_power();
    let taps = params.taps as f64;
    let d = dirichlet(params.half_taps(), delta);
    white / (white / params.jammer_power + 0.5 * (taps - 1.0) + 0.5 * d)
}

/// `K` equal-power tones spaced `2π/K`: `[1/J + 2⌊L/2K⌋/P]⁻¹`.
pub fn bmse_uniform_comb(params: &SystemParams, tones: usize) -> f64 {
    assert!(tones > 0, "a comb needs at least one tone");
    let folds = (params.taps / (2 * tones)) as f64;
    1.0 / (1.0 / params.jammer_power + 2.0 * folds / params.white_power())
}

/// Residual `‖C_rr w − C_rθ 1‖ / ‖C_rθ 1‖` of a filter (0 when the target is 0).
pub fn filter_residual(crr: &CMatrix, crtheta: &CMatrix, filter: &WienerFilter) -> f64 {
    let ones = alloc::vec![C64::new(1.0, 0.0); crtheta.cols()];
    let target = crtheta.mul_vec(&ones);
    let got = crr.mul_vec(&filter.w);
    let diff: Vec<C64> = got.iter().zip(&target).map(|(a, b)| a - b).collect();
    let scale = norm2(&target);
    if scale == 0.0 {
        norm2(&diff)
    } else {
        norm2(&diff) / scale
    }
}
