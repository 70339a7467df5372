//! Receiver-side estimation of the filter from a finite block of received
//! samples.
//!
//! The window-to-center cross-covariance `E[r_m r_m*]` equals `C_rθ 1`
//! because `s` and `n` are white and the window excludes lag 0, so both
//! sides of the normal equations can be averaged directly from `r`.

use alloc::vec::Vec;

use crate::analytic::{solve_filter, FilterSource, WienerFilter};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Cholesky, C64};
use crate::model::{validate_taps, window_lags};

/// Smallest Cholesky pivot, relative to the mean diagonal, accepted by
/// [`blind_wiener`].
pub const MIN_RELATIVE_PIVOT: f64 = 1e-12;

/// `Ĉ_rr`, `ĉ_ri` averaged over `M` windows centered at `L/2 … L/2+M−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCovariances {
    pub crr_hat: CMatrix,
    pub cri_hat: Vec<C64>,
    pub windows: usize,
    pub block_len: usize,
}

impl SampleCovariances {
    /// Estimates from `r[..block_len]` with `M = N − L`.
    pub fn from_block(r: &[C64], taps: usize) -> Result<Self> {
        validate_taps(taps)?;
        if r.len() <= taps {
            return Err(Error::InsufficientSamples { needed: taps + 1, available: r.len() });
        }
        Self::estimate(r, taps, r.len() - taps)
    }

    /// Estimates from the first `L + M` samples of `r` with `M` windows.
    pub fn estimate(r: &[C64], taps: usize, windows: usize) -> Result<Self> {
        let (crr_hat, cri_hat) = accumulate(r, taps, windows)?;
        Ok(Self { crr_hat, cri_hat, windows, block_len: taps + windows })
    }

    pub fn taps(&self) -> usize {
        self.cri_hat.len()
    }
}

fn check_len(r: &[C64], taps: usize, windows: usize) -> Result<()> {
    validate_taps(taps)?;
    if windows == 0 {
        return Err(Error::InsufficientSamples { needed: taps + 1, available: r.len() });
    }
    let needed = taps + windows;
    if r.len() < needed {
        return Err(Error::InsufficientSamples { needed, available: r.len() });
    }
    Ok(())
}

fn accumulate(r: &[C64], taps: usize, windows: usize) -> Result<(CMatrix, Vec<C64>)> {
    check_len(r, taps, windows)?;
    let half = taps / 2;
    let lags = window_lags(taps);
    let mut crr = CMatrix::zeros(taps, taps);
    let mut cri = alloc::vec![C64::new(0.0, 0.0); taps];
    let mut window = alloc::vec![C64::new(0.0, 0.0); taps];
    for m in half..half + windows {
        for (slot, &lag) in window.iter_mut().zip(&lags) {
            *slot = r[(m as i64 + lag) as usize];
        }
        let center = r[m].conj();
        for a in 0..taps {
            let xa = window[a];
            cri[a] += xa * center;
            for b in a..taps {
                crr[(a, b)] += xa * window[b].conj();
            }
        }
    }
    let inv = 1.0 / windows as f64;
    for a in 0..taps {
        cri[a] *= inv;
        for b in a..taps {
            let v = crr[(a, b)] * inv;
            crr[(a, b)] = v;
            crr[(b, a)] = v.conj();
        }
        let d = crr[(a, a)].re;
        crr[(a, a)] = C64::new(d, 0.0);
    }
    Ok((crr, cri))
}

/// `Ĉ_rr = (1/M) Σ r_m r_mᴴ`.
pub fn sample_crr(r: &[C64], taps: usize, windows: usize) -> Result<CMatrix> {
    Ok(accumulate(r, taps, windows)?.0)
}

/// `ĉ_ri = (1/M) Σ r_m r_m*`.
pub fn sample_cri(r: &[C64], taps: usize, windows: usize) -> Result<Vec<C64>> {
    check_len(r, taps, windows)?;
    let half = taps / 2;
    let lags = window_lags(taps);
    let inv = 1.0 / windows as f64;
    Ok(lags
        .iter()
        .map(|&lag| {
            let acc: C64 = (half..half + windows).map(|m| r[(m as i64 + lag) as usize] * r[m].conj()).sum();
            acc * inv
        })
        .collect())
}

/// Solves `Ĉ_rr w = ĉ_ri`, optionally with diagonal loading `ε I`.
///
/// A Cholesky failure or a pivot below [`MIN_RELATIVE_PIVOT`] times the mean
/// diagonal is reported as [`Error::InsufficientAveraging`].
pub fn blind_wiener(cov: &SampleCovariances, loading: Option<f64>) -> Result<WienerFilter> {
    let taps = cov.taps();
    let mut crr = cov.crr_hat.clone();
    if let Some(eps) = loading {
        for i in 0..taps {
            crr[(i, i)] += C64::new(eps, 0.0);
        }
    }
    let chol = Cholesky::new(&crr).map_err(|_| Error::InsufficientAveraging)?;
    let mean_diag = crr.trace().re / taps as f64;
    let min_pivot = chol.pivots().into_iter().fold(f64::INFINITY, f64::min);
    if !(min_pivot > MIN_RELATIVE_PIVOT * mean_diag) {
        return Err(Error::InsufficientAveraging);
    }
    solve_filter(&crr, &cov.cri_hat, FilterSource::Blind)
}
