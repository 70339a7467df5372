//! Sampled signal world: QPSK-DSSS chips, complex AWGN, multi-tone and AR(1)
//! jammers, and the symmetric observation window around a center sample.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::C64;

/// Receiver-side constants: useful-signal power `S`, noise variance `σ_n²`,
/// jammer power `J` (all linear) and the number of filter taps `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub signal_power: f64,
    pub noise_power: f64,
    pub jammer_power: f64,
    pub taps: usize,
}

impl SystemParams {
    pub fn new(signal_power: f64, noise_power: f64, jammer_power: f64, taps: usize) -> Result<Self> {
        let params = Self { signal_power, noise_power, jammer_power, taps };
        params.validate()?;
        Ok(params)
    }

    /// Scenario in dB with the `S = 1` convention: SNR = S/σ_n², JSR = J/S.
    pub fn from_db(snr_db: f64, jsr_db: f64, taps: usize) -> Result<Self> {
        let signal_power = 1.0;
        Self::new(signal_power, signal_power / db_to_linear(snr_db), signal_power * db_to_linear(jsr_db), taps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_power > 0.0 && self.signal_power.is_finite()) {
            return Err(invalid("signal power S must be positive"));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(invalid("noise variance must be positive"));
        }
        if !(self.jammer_power > 0.0 && self.jammer_power.is_finite()) {
            return Err(invalid("jammer power J must be positive"));
        }
        validate_taps(self.taps)
    }

    /// `S + σ_n²`, the white part of the received power.
    pub fn white_power(&self) -> f64 {
        self.signal_power + self.noise_power
    }

    pub fn half_taps(&self) -> usize {
        self.taps / 2
    }

    pub fn with_taps(&self, taps: usize) -> Result<Self> {
        Self::new(self.signal_power, self.noise_power, self.jammer_power, taps)
    }

    pub fn with_jammer_power(&self, jammer_power: f64) -> Result<Self> {
        Self::new(self.signal_power, self.noise_power, jammer_power, self.taps)
    }
}

pub(crate) fn validate_taps(taps: usize) -> Result<()> {
    if taps < 2 || !taps.is_multiple_of(2) {
        return Err(invalid("filter length L must be even and at least 2"));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x - two_pi * libm::floor((x + PI) / two_pi);
    // floor can land exactly on the upper edge through rounding
    if y >= PI {
        y -= two_pi;
    }
    if y < -PI {
        y = -PI;
    }
    y
}

/// A K-tone jammer: moduli `α_k`, normalized angular frequencies `ω_k` and,
/// optionally, the initial phases `φ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToneSet {
    alpha: Vec<f64>,
    omega: Vec<f64>,
    phi: Option<Vec<f64>>,
}

impl ToneSet {
    /// Tone set with unresolved phases. Frequencies are wrapped into `[−π, π)`.
    pub fn new(alpha: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if alpha.len() != omega.len() {
            return Err(Error::LengthMismatch { expected: alpha.len(), got: omega.len() });
        }
        if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(invalid("tone moduli must be finite and nonnegative"));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(invalid("tone frequencies must be finite"));
        }
        let omega = omega.into_iter().map(wrap_angle).collect();
        Ok(Self { alpha, omega, phi: None })
    }

    /// `K` tones of equal power `J/K`.
    pub fn equal_power(jammer_power: f64, omega: Vec<f64>) -> Result<Self> {
        let k = omega.len();
        if k == 0 {
            return Err(invalid("a tone set needs at least one tone"));
        }
        let a = libm::sqrt(jammer_power / k as f64);
        Self::new(alloc::vec![a; k], omega)
    }

    pub fn with_phases(mut self, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != self.alpha.len() {
            return Err(Error::LengthMismatch { expected: self.alpha.len(), got: phi.len() });
        }
        self.phi = Some(phi.into_iter().map(wrap_angle).collect());
        Ok(self)
    }

    /// Copy of the tone set with fresh phases drawn uniformly on `[−π, π)`.
    pub fn draw_phases<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let phi = (0..self.len()).map(|_| rng.random_range(-PI..PI)).collect();
        Self { alpha: self.alpha.clone(), omega: self.omega.clone(), phi: Some(phi) }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn phi(&self) -> Option<&[f64]> {
        self.phi.as_deref()
    }

    /// Per-tone powers `α_k²`.
    pub fn powers(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a * a).collect()
    }

    /// `Σ α_k²`.
    pub fn power(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    /// Whether `Σ α_k² = J` within relative tolerance `1e−9`.
    pub fn satisfies_power(&self, jammer_power: f64) -> bool {
        libm::fabs(self.power() - jammer_power) <= 1e-9 * jammer_power
    }
}

/// Per-tone contributions `α_k e^{j(ω_k m + φ_k)}` at sample index `m`.
pub fn tone_contributions(tones: &ToneSet, m: i64) -> Result<Vec<C64>> {
    let phi = tones.phi().ok_or(Error::PhasesUnresolved)?;
    Ok(tones
        .alpha()
        .iter()
        .zip(tones.omega())
        .zip(phi)
        .map(|((&a, &w), &p)| C64::from_polar(a, w * m as f64 + p))
        .collect())
}

/// Jammer sample `i_m = Σ_k α_k e^{j(ω_k m + φ_k)}`.
pub fn jammer_sample(tones: &ToneSet, m: i64) -> Result<C64> {
    Ok(tone_contributions(tones, m)?.into_iter().sum())
}

/// Jammer samples for `m = 0..count`.
pub fn jammer_sequence(tones: &ToneSet, count: usize) -> Result<Vec<C64>> {
    let phi = tones.phi().ok_or(Error::PhasesUnresolved)?;
    let mut out = alloc::vec![C64::new(0.0, 0.0); count];
    for ((&a, &w), &p) in tones.alpha().iter().zip(tones.omega()).zip(phi) {
        // per-sample evaluation keeps the phase exact instead of accumulating rotations
        for (m, slot) in out.iter_mut().enumerate() {
            *slot += C64::from_polar(a, w * m as f64 + p);
        }
    }
    Ok(out)
}

/// QPSK chips `√S (±1 ± j)/√2`, so that `|s_m|² = S` exactly.
pub fn gen_qpsk_chips<R: Rng + ?Sized>(count: usize, signal_power: f64, rng: &mut R) -> Vec<C64> {
    let amp = libm::sqrt(signal_power / 2.0);
    (0..count)
        .map(|_| {
            let bits: u8 = rng.random();
            let i = if bits & 1 == 0 { amp } else { -amp };
            let q = if bits & 2 == 0 { amp } else { -amp };
            C64::new(i, q)
        })
        .collect()
}

/// Circularly-symmetric complex Gaussian noise of total variance `σ_n²`.
pub fn gen_awgn<R: Rng + ?Sized>(count: usize, noise_power: f64, rng: &mut R) -> Result<Vec<C64>> {
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        return Err(invalid("noise variance must be nonnegative"));
    }
    let sd = libm::sqrt(noise_power / 2.0);
    Ok((0..count).map(|_| complex_normal(rng) * sd).collect())
}

/// Stationary complex AR(1) process `x_m = a x_{m−1} + e_m` with covariance
/// `J a^{|k|}`. The first sample is drawn from the stationary law.
pub fn gen_ar1_jammer<R: Rng + ?Sized>(count: usize, jammer_power: f64, pole: f64, rng: &mut R) -> Result<Vec<C64>> {
    if !(pole > 0.0 && pole < 1.0) {
        return Err(invalid("AR(1) pole must lie in (0, 1)"));
    }
    if !(jammer_power >= 0.0) || !jammer_power.is_finite() {
        return Err(invalid("jammer power must be nonnegative"));
    }
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let stationary_sd = libm::sqrt(jammer_power / 2.0);
    let innovation_sd = libm::sqrt(jammer_power * (1.0 - pole * pole) / 2.0);
    let mut x = complex_normal(rng) * stationary_sd;
    out.push(x);
    for _ in 1..count {
        x = x * pole + complex_normal(rng) * innovation_sd;
        out.push(x);
    }
    Ok(out)
}

/// Autocovariance `ρ_k = J a^{|k|}` of the AR(1) jammer.
pub fn ar1_autocovariance(jammer_power: f64, pole: f64, lag: i64) -> f64 {
    jammer_power * libm::pow(pole, lag.unsigned_abs() as f64)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Useful chips, noise, jammer and their sum `r = s + n + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStream {
    s: Vec<C64>,
    n: Vec<C64>,
    i: Vec<C64>,
    r: Vec<C64>,
}

impl SampleStream {
    pub fn new(s: Vec<C64>, n: Vec<C64>, i: Vec<C64>) -> Result<Self> {
        if n.len() != s.len() {
            return Err(Error::LengthMismatch { expected: s.len(), got: n.len() });
        }
        if i.len() != s.len() {
            return Err(Error::LengthMismatch { expected: s.len(), got: i.len() });
        }
        let r = s.iter().zip(&n).zip(&i).map(|((a, b), c)| a + b + c).collect();
        Ok(Self { s, n, i, r })
    }

    /// Draws `count` samples of chips, noise, and the tone jammer with fresh phases.
    pub fn simulate_tones<R: Rng + ?Sized>(params: &SystemParams, tones: &ToneSet, count: usize, rng: &mut R) -> Result<Self> {
        let tones = tones.draw_phases(rng);
        let i = jammer_sequence(&tones, count)?;
        let s = gen_qpsk_chips(count, params.signal_power, rng);
        let n = gen_awgn(count, params.noise_power, rng)?;
        Self::new(s, n, i)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn useful(&self) -> &[C64] {
        &self.s
    }

    pub fn noise(&self) -> &[C64] {
        &self.n
    }

    pub fn jammer(&self) -> &[C64] {
        &self.i
    }

    pub fn received(&self) -> &[C64] {
        &self.r
    }

    pub fn window(&self, center: usize, taps: usize) -> Result<Vec<C64>> {
        received_window(&self.r, center, taps)
    }
}

/// Signed lag of each window position, `[L/2, …, 1, −1, …, −L/2]`.
pub fn window_lags(taps: usize) -> Vec<i64> {
    let half = (taps / 2) as i64;
    (1..=half).rev().chain((1..=half).map(|l| -l)).collect()
}

/// `[r_{m+L/2}, …, r_{m+1}, r_{m−1}, …, r_{m−L/2}]`: the `L` samples around
/// `m`, center excluded.
pub fn received_window(r: &[C64], center: usize, taps: usize) -> Result<Vec<C64>> {
    validate_taps(taps)?;
    let half = taps / 2;
    if center < half || center + half >= r.len() {
        return Err(Error::WindowOutOfBounds { center, taps, len: r.len() });
    }
    Ok(window_lags(taps).into_iter().map(|lag| r[(center as i64 + lag) as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn tone_contribution_examples() {
        let t = ToneSet::new(vec![1.0], vec![0.0]).unwrap().with_phases(vec![0.0]).unwrap();
        assert!(close(tone_contributions(&t, 7).unwrap()[0], C64::new(1.0, 0.0), 1e-15));

        let t = ToneSet::new(vec![2.0], vec![PI / 2.0]).unwrap().with_phases(vec![0.0]).unwrap();
        assert!(close(tone_contributions(&t, 1).unwrap()[0], C64::new(0.0, 2.0), 1e-15));

        let t = ToneSet::new(vec![1.0, 1.0], vec![PI / 4.0, -PI / 4.0]).unwrap().with_phases(vec![0.0, 0.0]).unwrap();
        let c = tone_contributions(&t, 2).unwrap();
        assert!(close(c[0], C64::new(0.0, 1.0), 1e-15));
        assert!(close(c[1], C64::new(0.0, -1.0), 1e-15));
        assert!(close(jammer_sample(&t, 2).unwrap(), C64::new(0.0, 0.0), 1e-15));
    }

    #[test]
    fn jammer_sample_examples() {
        let j: f64 = 316.0;
        let t = ToneSet::new(vec![j.sqrt()], vec![1.234]).unwrap().with_phases(vec![0.0]).unwrap();
        assert!(close(jammer_sample(&t, 0).unwrap(), C64::new(j.sqrt(), 0.0), 1e-12));

        let t = ToneSet::new(vec![1.0; 3], vec![0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0])
            .unwrap()
            .with_phases(vec![0.0; 3])
            .unwrap();
        assert!(close(jammer_sample(&t, 1).unwrap(), C64::new(0.0, 0.0), 1e-14));
    }

    #[test]
    fn unresolved_phases_are_an_error() {
        let t = ToneSet::new(vec![1.0], vec![0.3]).unwrap();
        assert_eq!(tone_contributions(&t, 0).unwrap_err(), Error::PhasesUnresolved);
        assert_eq!(jammer_sample(&t, 0).unwrap_err(), Error::PhasesUnresolved);
    }

    #[test]
    fn sequence_matches_pointwise_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = ToneSet::new(vec![1.0, 0.5, 2.0], vec![0.1, -2.0, 3.0]).unwrap().draw_phases(&mut rng);
        let seq = jammer_sequence(&t, 20).unwrap();
        for (m, v) in seq.iter().enumerate() {
            assert!(close(*v, jammer_sample(&t, m as i64).unwrap(), 1e-12));
        }
    }

    #[test]
    fn qpsk_is_constant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(gen_qpsk_chips(0, 1.0, &mut rng).is_empty());
        for s in gen_qpsk_chips(1000, 2.5, &mut rng) {
            assert!((s.norm_sqr() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn qpsk_mean_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = gen_qpsk_chips(1_000_000, 1.0, &mut rng);
        let p = s.iter().map(|x| x.norm_sqr()).sum::<f64>() / s.len() as f64;
        assert!((p - 1.0).abs() < 0.005);
    }

    #[test]
    fn awgn_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(gen_awgn(10, 0.0, &mut rng).unwrap().iter().all(|x| x.norm() == 0.0));
        assert!(gen_awgn(10, -1.0, &mut rng).is_err());
        let n = gen_awgn(1_000_000, 2.0, &mut rng).unwrap();
        let len = n.len() as f64;
        let p = n.iter().map(|x| x.norm_sqr()).sum::<f64>() / len;
        assert!((p - 2.0).abs() < 0.01, "power {p}");
        // per-axis variance is 1, so this is already the correlation coefficient
        let c = n.iter().map(|x| x.re * x.im).sum::<f64>() / len;
        assert!(c.abs() < 0.005, "re/im correlation {c}");
    }

    #[test]
    fn ar1_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(gen_ar1_jammer(10, 1.0, 1.0, &mut rng).is_err());
        assert!(gen_ar1_jammer(10, 1.0, 0.0, &mut rng).is_err());
        let x = gen_ar1_jammer(1_000_000, 1.0, 0.8, &mut rng).unwrap();
        let len = x.len() as f64;
        let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / len;
        let lag1 = x.windows(2).map(|w| (w[1] * w[0].conj()).re).sum::<f64>() / (len - 1.0);
        assert!((p - 1.0).abs() < 0.01, "power {p}");
        assert!((lag1 - 0.8).abs() < 0.01, "lag-1 {lag1}");
    }

    #[test]
    fn ar1_small_pole_is_nearly_white() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gen_ar1_jammer(200_000, 3.0, 1e-9, &mut rng).unwrap();
        let len = x.len() as f64;
        let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / len;
        let lag1 = x.windows(2).map(|w| (w[1] * w[0].conj()).re).sum::<f64>() / (len - 1.0);
        assert!((p - 3.0).abs() < 0.05);
        assert!(lag1.abs() < 0.05);
    }

    #[test]
    fn window_ordering() {
        let r: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 0.0)).collect();
        let w = received_window(&r, 2, 4).unwrap();
        let re: Vec<f64> = w.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![4.0, 3.0, 1.0, 0.0]);

        let abc = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)];
        let w = received_window(&abc, 1, 2).unwrap();
        assert_eq!(w, vec![abc[2], abc[0]]);
    }

    #[test]
    fn window_bounds() {
        let r = vec![C64::new(0.0, 0.0); 5];
        assert!(matches!(received_window(&r, 1, 4), Err(Error::WindowOutOfBounds { .. })));
        assert!(matches!(received_window(&r, 3, 4), Err(Error::WindowOutOfBounds { .. })));
        assert!(received_window(&r, 2, 3).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        for &x in &[-10.0, -PI, -1.0, 0.0, 1.0, PI, 3.0 * PI, 100.0] {
            let y = wrap_angle(x);
            assert!((-PI..PI).contains(&y), "{x} -> {y}");
            let k = (x - y) / (2.0 * PI);
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert_eq!(wrap_angle(PI), -PI);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.0, 1.0, 1.0, 8).is_ok());
        assert!(SystemParams::new(1.0, 1.0, 1.0, 7).is_err());
        assert!(SystemParams::new(1.0, 1.0, 1.0, 0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 1.0, 8).is_err());
        assert!(SystemParams::new(1.0, -1.0, 1.0, 8).is_err());
        let p = SystemParams::from_db(-15.0, 25.0, 16).unwrap();
        assert!((p.noise_power - 31.622776601683793).abs() < 1e-9);
        assert!((p.jammer_power - 316.22776601683796).abs() < 1e-9);
    }

    #[test]
    fn tone_set_validation() {
        assert!(ToneSet::new(vec![1.0], vec![0.0, 1.0]).is_err());
        assert!(ToneSet::new(vec![-1.0], vec![0.0]).is_err());
        let t = ToneSet::new(vec![3.0, 4.0], vec![4.0, -4.0]).unwrap();
        assert!(t.satisfies_power(25.0));
        assert!(t.omega().iter().all(|w| (-PI..PI).contains(w)));
    }
}
