//! Monte Carlo experiments: empirical BMSE of the Wiener excision module
//! under perfect knowledge and blind estimation, optimizer convergence
//! traces, estimate dispersion versus filter length, and the output-power
//! audit.
//!
//! Every trial draws from its own ChaCha8 stream seeded by
//! `child_seed(master, [jammer, L, trial, attempt])`. Trials are mapped in
//! parallel and reduced in index order, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use wienerjam_core::analytic::{analytic_bmse, build_crr, build_crtheta, solve_filter, wiener_filter, FilterSource, WienerFilter};
use wienerjam_core::blind::{blind_wiener, SampleCovariances};
use wienerjam_core::linalg::{compensated_sum, CMatrix};
use wienerjam_core::model::{
    ar1_autocovariance, gen_ar1_jammer, gen_awgn, gen_qpsk_chips, jammer_sequence, window_lags, wrap_angle, SampleStream,
};
use wienerjam_core::optimizer::{
    init_structured, optimize_from, random_inits, refine_frequencies, two_tone_closed_form, uniform_comb, OptimizerConfig,
};
use wienerjam_core::seed::child_seed;
use wienerjam_core::{Error, SystemParams, ToneSet, C64};

use crate::error::{config_error, HarnessError, Result};

/// Trials per reduction chunk in the streaming statistics.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Perfect,
    Blind,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Perfect => "perfect",
            Mode::Blind => "blind",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(Mode::Perfect),
            "blind" => Ok(Mode::Blind),
            other => Err(config_error(format!("unknown mode '{other}' (expected perfect or blind)"))),
        }
    }
}

/// Jammers of the `mc --figure5` comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JammerSpec {
    /// Structured init refined by the optimizer (closed form for K ≤ 2).
    Designed { tones: usize },
    /// Structured init without refinement.
    Structured { tones: usize },
    TwoTone,
    /// Uniform comb with `K = L/2 + 1`.
    Comb,
    Ketchum100,
    Li10,
    Random5 { seed: u64 },
    Ar1 { pole: f64 },
}

impl JammerSpec {
    pub fn figure5() -> Vec<JammerSpec> {
        vec![
            JammerSpec::Designed { tones: 5 },
            JammerSpec::Structured { tones: 5 },
            JammerSpec::TwoTone,
            JammerSpec::Comb,
            JammerSpec::Ketchum100,
            JammerSpec::Li10,
            JammerSpec::Random5 { seed: 5 },
            JammerSpec::Ar1 { pole: 0.8 },
        ]
    }

    pub fn label(&self) -> String {
        match self {
            JammerSpec::Designed { tones } => format!("designed{tones}"),
            JammerSpec::Structured { tones } => format!("structured{tones}"),
            JammerSpec::TwoTone => "two_tone".into(),
            JammerSpec::Comb => "comb".into(),
            JammerSpec::Ketchum100 => "ketchum100".into(),
            JammerSpec::Li10 => "li10".into(),
            JammerSpec::Random5 { seed } => format!("random5({seed})"),
            JammerSpec::Ar1 { pole } => format!("ar1({pole})"),
        }
    }

    pub fn is_comb(&self) -> bool {
        matches!(self, JammerSpec::Comb)
    }

    pub fn is_multi_tone(&self) -> bool {
        !matches!(self, JammerSpec::Ar1 { .. })
    }
}

impl fmt::Display for JammerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn parse_arg<T: FromStr>(s: &str, prefix: &str) -> Option<Option<T>> {
    let rest = s.strip_prefix(prefix)?;
    if rest.is_empty() {
        return Some(None);
    }
    let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
    inner.parse().ok().map(Some)
}

impl FromStr for JammerSpec {
    type Err = HarnessError;

    /// `designed5`, `designed(5)`, `structured5`, `two_tone`, `comb`,
    /// `ketchum100`, `li10`, `random5`, `random5(7)`, `ar1`, `ar1(0.8)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || config_error(format!("unknown jammer '{s}'"));
        match s {
            "two_tone" => return Ok(JammerSpec::TwoTone),
            "comb" => return Ok(JammerSpec::Comb),
            "ketchum100" => return Ok(JammerSpec::Ketchum100),
            "li10" => return Ok(JammerSpec::Li10),
            _ => {}
        }
        if let Some(seed) = parse_arg::<u64>(s, "random5") {
            return Ok(JammerSpec::Random5 { seed: seed.unwrap_or(5) });
        }
        if let Some(pole) = parse_arg::<f64>(s, "ar1") {
            return Ok(JammerSpec::Ar1 { pole: pole.unwrap_or(0.8) });
        }
        if let Some(k) = parse_arg::<usize>(s, "designed") {
            return Ok(JammerSpec::Designed { tones: k.ok_or_else(bad)? });
        }
        if let Some(k) = parse_arg::<usize>(s, "structured") {
            return Ok(JammerSpec::Structured { tones: k.ok_or_else(bad)? });
        }
        Err(bad())
    }
}

/// A realized jammer for one `(spec, L)` cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Jammer {
    Tones(ToneSet),
    Ar1 { pole: f64, power: f64 },
}

/// Tone positions of the 100-tone comb spanning `[−0.2π, 0.2π]`.
pub fn ketchum100_omega() -> Vec<f64> {
    let width = 0.4 * PI;
    (0..100).map(|k| -0.5 * width + k as f64 * width / 99.0).collect()
}

/// Ten tones spaced 3.6° = π/50, centered at 0.
pub fn li10_omega() -> Vec<f64> {
    let spacing = PI / 50.0;
    (0..10).map(|k| (k as f64 - 4.5) * spacing).collect()
}

pub fn baseline_jammer(spec: &JammerSpec, params: &SystemParams, optimizer: &OptimizerConfig) -> Result<Jammer> {
    let j = params.jammer_power;
    let tones = match *spec {
        JammerSpec::Designed { tones: 0 } | JammerSpec::Structured { tones: 0 } => {
            return Err(config_error("a designed jammer needs at least one tone"))
        }
        JammerSpec::Designed { tones: 1 } | JammerSpec::Structured { tones: 1 } => ToneSet::equal_power(j, vec![0.0])?,
        JammerSpec::Designed { tones: 2 } | JammerSpec::TwoTone => two_tone_closed_form(params, 0.0, false)?.tones,
        JammerSpec::Designed { tones } => {
            let init = init_structured(tones, params.taps, j, 0.0)?;
            refine_frequencies(params, &init, optimizer)?.tones
        }
        JammerSpec::Structured { tones } => init_structured(tones, params.taps, j, 0.0)?,
        JammerSpec::Comb => uniform_comb(params, params.half_taps() + 1, 0.0)?.tones,
        JammerSpec::Ketchum100 => ToneSet::equal_power(j, ketchum100_omega())?,
        JammerSpec::Li10 => ToneSet::equal_power(j, li10_omega())?,
        JammerSpec::Random5 { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ToneSet::equal_power(j, (0..5).map(|_| rng.random_range(-PI..PI)).collect())?
        }
        JammerSpec::Ar1 { pole } => {
            if !(pole > 0.0 && pole < 1.0) {
                return Err(config_error("AR(1) pole must lie in (0, 1)"));
            }
            return Ok(Jammer::Ar1 { pole, power: j });
        }
    };
    Ok(Jammer::Tones(tones))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub snr_db: f64,
    pub jsr_db: f64,
    pub signal_power: f64,
    pub taps: Vec<usize>,
    pub block_len: usize,
    pub trials: usize,
    pub modes: Vec<Mode>,
    pub jammers: Vec<JammerSpec>,
    pub master_seed: u64,
    /// Diagonal loading added to `Ĉ_rr` in blind mode.
    pub loading: Option<f64>,
    /// Ill-conditioned blind estimates tolerated per trial before giving up.
    pub max_redraws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            snr_db: -15.0,
            jsr_db: 25.0,
            signal_power: 1.0,
            taps: vec![8, 16, 32],
            block_len: 128,
            trials: 20_000,
            modes: vec![Mode::Perfect, Mode::Blind],
            jammers: JammerSpec::figure5(),
            master_seed: 1,
            loading: None,
            max_redraws: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_error("trials must be at least 1"));
        }
        if self.taps.is_empty() {
            return Err(config_error("at least one filter length is required"));
        }
        let max_taps = *self.taps.iter().max().unwrap();
        if self.block_len <= max_taps {
            return Err(config_error(format!("block length {} must exceed the largest filter length {max_taps}", self.block_len)));
        }
        if self.modes.is_empty() || self.jammers.is_empty() {
            return Err(config_error("at least one mode and one jammer are required"));
        }
        if let Some(eps) = self.loading {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(config_error("diagonal loading must be a non-negative number"));
            }
        }
        for &l in &self.taps {
            self.params(l)?;
        }
        Ok(())
    }

    /// `S`, `σ_n² = S/SNR`, `J = S·JSR`.
    pub fn params(&self, taps: usize) -> Result<SystemParams> {
        let s = self.signal_power;
        Ok(SystemParams::new(s, s / db_to_linear(self.snr_db), s * db_to_linear(self.jsr_db), taps)?)
    }
}

fn db_to_linear(db: f64) -> f64 {
    wienerjam_core::model::db_to_linear(db)
}

/// One `(jammer, L, mode)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub jammer: String,
    #[serde(rename = "L")]
    pub taps: usize,
    pub mode: Mode,
    pub empirical_bmse: f64,
    pub analytic_bmse: Option<f64>,
    pub normalized: f64,
    pub stderr: f64,
    pub trials: usize,
    pub cond_failures: usize,
}

/// Running mean / variance of a scalar over trials.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - n * self.mean() * self.mean()) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Mean in units of its standard error (0 when both vanish).
    pub fn z_score(&self) -> f64 {
        let se = self.std_error();
        if se == 0.0 {
            if self.mean() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.mean() / se
        }
    }
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

fn trial_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, path))
}

/// Draws `count` samples of chips, noise and the jammer (fresh phases or a
/// fresh AR(1) path).
pub fn draw_stream<R: Rng + ?Sized>(params: &SystemParams, jammer: &Jammer, count: usize, rng: &mut R) -> Result<SampleStream> {
    match jammer {
        Jammer::Tones(tones) => Ok(SampleStream::simulate_tones(params, tones, count, rng)?),
        Jammer::Ar1 { pole, power } => {
            let i = gen_ar1_jammer(count, *power, *pole, rng)?;
            let s = gen_qpsk_chips(count, params.signal_power, rng);
            let n = gen_awgn(count, params.noise_power, rng)?;
            Ok(SampleStream::new(s, n, i)?)
        }
    }
}

/// Exact Wiener filter from the jammer's covariance: tone jammers through
/// `C_rr`, `C_rθ`; AR(1) through its Toeplitz sequence `ρ_k = J a^|k|`.
pub fn perfect_filter(params: &SystemParams, jammer: &Jammer) -> Result<WienerFilter> {
    match jammer {
        Jammer::Tones(tones) => Ok(wiener_filter(&build_crr(params, tones)?, &build_crtheta(tones, params.taps)?)?),
        Jammer::Ar1 { pole, power } => {
            let lags = window_lags(params.taps);
            let white = params.white_power();
            let crr = CMatrix::from_fn(params.taps, params.taps, |a, b| {
                let rho = ar1_autocovariance(*power, *pole, lags[a] - lags[b]);
                C64::new(if a == b { rho + white } else { rho }, 0.0)
            });
            let cross: Vec<C64> = lags.iter().map(|&l| C64::new(ar1_autocovariance(*power, *pole, l), 0.0)).collect();
            Ok(solve_filter(&crr, &cross, FilterSource::Analytic)?)
        }
    }
}

/// `(1/(N−L)) Σ_m |i_m − wᴴ r_m|²` over every center with a full window.
pub fn block_error(stream: &SampleStream, filter: &WienerFilter, taps: usize) -> Result<f64> {
    let half = taps / 2;
    let centers = half..stream.len() - half;
    let count = centers.len();
    let errs = centers
        .map(|m| {
            let est = filter.estimate(&stream.window(m, taps)?)?;
            Ok((stream.jammer()[m] - est).norm_sqr())
        })
        .collect::<std::result::Result<Vec<f64>, Error>>()?;
    Ok(compensated_sum(errs) / count as f64)
}

struct TrialOutcome {
    error: f64,
    failures: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    config: &ExperimentConfig,
    params: &SystemParams,
    jammer: &Jammer,
    perfect: Option<&WienerFilter>,
    key: u64,
    trial: usize,
    cell: &str,
) -> Result<TrialOutcome> {
    let taps = params.taps;
    let mut failures = 0;
    loop {
        let mut rng = trial_rng(config.master_seed, &[key, taps as u64, trial as u64, failures as u64]);
        let stream = draw_stream(params, jammer, config.block_len, &mut rng)?;
        let estimated;
        let filter = match perfect {
            Some(f) => f,
            None => {
                let cov = SampleCovariances::from_block(stream.received(), taps)?;
                match blind_wiener(&cov, config.loading) {
                    Ok(f) => {
                        estimated = f;
                        &estimated
                    }
                    Err(Error::InsufficientAveraging) => {
                        failures += 1;
                        if failures > config.max_redraws {
                            return Err(HarnessError::TooManyRedraws { cell: cell.to_string(), trial, failures });
                        }
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        return Ok(TrialOutcome { error: block_error(&stream, filter, taps)?, failures });
    }
}

/// Empirical BMSE of one cell: mean of the per-trial block error, with the
/// standard error taken over trials.
pub fn empirical_bmse(config: &ExperimentConfig, spec: &JammerSpec, jammer: &Jammer, params: &SystemParams, mode: Mode) -> Result<ExperimentRecord> {
    let label = spec.label();
    let cell = format!("{label} L={} {mode}", params.taps);
    let key = fnv1a(&label);
    let perfect = match mode {
        Mode::Perfect => Some(perfect_filter(params, jammer)?),
        Mode::Blind => None,
    };
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, params, jammer, perfect.as_ref(), key, t, &cell))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    let failures = outcomes.iter().map(|o| o.failures).sum();
    let n = errors.len() as f64;
    let mean = compensated_sum(errors.iter().copied()) / n;
    let var = if errors.len() > 1 { compensated_sum(errors.iter().map(|e| (e - mean) * (e - mean))) / (n - 1.0) } else { 0.0 };
    let analytic = match jammer {
        Jammer::Tones(t) => Some(analytic_bmse(params, t)?),
        Jammer::Ar1 { .. } => None,
    };
    Ok(ExperimentRecord {
        jammer: label,
        taps: params.taps,
        mode,
        empirical_bmse: mean,
        analytic_bmse: analytic,
        normalized: mean / params.jammer_power,
        stderr: (var / n).sqrt(),
        trials: config.trials,
        cond_failures: failures,
    })
}

/// Every `(jammer, L, mode)` cell, in that nesting order.
pub fn run_figure5(config: &ExperimentConfig, optimizer: &OptimizerConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let mut rows = Vec::new();
    for spec in &config.jammers {
        for &taps in &config.taps {
            let params = config.params(taps)?;
            let jammer = baseline_jammer(spec, &params, optimizer)?;
            for &mode in &config.modes {
                rows.push(empirical_bmse(config, spec, &jammer, &params, mode)?);
            }
        }
    }
    Ok(rows)
}

/// Jammer labels ordered by decreasing normalized BMSE for one `(L, mode)`.
pub fn ranking(rows: &[ExperimentRecord], taps: usize, mode: Mode) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = rows.iter().filter(|r| r.taps == taps && r.mode == mode).map(|r| (r.jammer.clone(), r.normalized)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run: String,
    pub iteration: usize,
    pub loss: f64,
    pub normalized_bmse: f64,
    pub best_normalized_bmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub best_final: f64,
    pub structured_final: f64,
    /// Iterations for the structured run to come within 0.5% of `best_final`.
    pub structured_iterations: Option<usize>,
    /// Median over restarts of the same quantity (runs that never get there
    /// count as `max_iter`).
    pub median_restart_iterations: usize,
    pub structured_initial: f64,
    pub best_random_initial: f64,
}

/// Normalized BMSE per iteration for `restarts` random starts and the
/// structured start, all on the same `(K, L)`.
pub fn convergence_trace(params: &SystemParams, tones: usize, optimizer: &OptimizerConfig, seed: u64) -> Result<(Vec<TraceRow>, TraceSummary)> {
    let j = params.jammer_power;
    let mut rng = trial_rng(seed, &[fnv1a("trace"), tones as u64, params.taps as u64]);
    let inits = random_inits(tones, j, optimizer, &mut rng)?;
    let restarts = inits.par_iter().map(|init| optimize_from(params, init, optimizer)).collect::<std::result::Result<Vec<_>, Error>>()?;
    let structured = refine_frequencies(params, &init_structured(tones, params.taps, j, 0.0)?, optimizer)?;

    let mut runs: Vec<(String, &[f64])> = vec![("structured".into(), structured.trace.as_slice())];
    for (i, r) in restarts.iter().enumerate() {
        runs.push((format!("restart{i:02}"), r.trace.as_slice()));
    }
    let mut rows = Vec::new();
    for (name, trace) in &runs {
        let mut best = f64::NEG_INFINITY;
        for (it, &f) in trace.iter().enumerate() {
            best = best.max(-f / j);
            rows.push(TraceRow { run: name.clone(), iteration: it, loss: f, normalized_bmse: -f / j, best_normalized_bmse: best });
        }
    }
    let best_final = runs.iter().flat_map(|(_, t)| t.iter()).map(|f| -f / j).fold(f64::NEG_INFINITY, f64::max);
    let reach = |trace: &[f64]| trace.iter().position(|f| -f / j >= 0.995 * best_final);
    let mut restart_iters: Vec<usize> = restarts.iter().map(|r| reach(&r.trace).unwrap_or(optimizer.max_iter)).collect();
    restart_iters.sort_unstable();
    let median = if restart_iters.is_empty() { optimizer.max_iter } else { restart_iters[restart_iters.len() / 2] };
    let summary = TraceSummary {
        best_final,
        structured_final: structured.bmse / j,
        structured_iterations: reach(&structured.trace),
        median_restart_iterations: median,
        structured_initial: -structured.trace[0] / j,
        best_random_initial: restarts.iter().map(|r| -r.trace[0] / j).fold(f64::NEG_INFINITY, f64::max),
    };
    Ok((rows, summary))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    #[serde(rename = "L")]
    pub taps: usize,
    pub quantity: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    #[serde(rename = "L")]
    pub taps: usize,
    pub trials: usize,
    pub iqr_modulus: f64,
    /// IQR of `arg(î) − arg(i)` wrapped to `[−π, π)`.
    pub iqr_phase: f64,
    pub error_variance: f64,
    pub mean_estimate_re: f64,
    pub mean_estimate_im: f64,
    pub noise_free_re: f64,
    pub noise_free_im: f64,
    pub true_re: f64,
    pub true_im: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.75) - quantile(&v, 0.25)
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts.into_iter().enumerate().map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c)).collect()
}

/// Distribution of the center-sample estimate `î` with `{α, ω, φ}` fixed and
/// only `{s, n}` random, for each filter length.
pub fn pdf_dispersion_study(
    base: &SystemParams,
    tones: &ToneSet,
    taps_list: &[usize],
    trials: usize,
    bins: usize,
    seed: u64,
) -> Result<(Vec<HistogramRow>, Vec<DispersionRow>)> {
    if trials < 2 || bins == 0 {
        return Err(config_error("the dispersion study needs at least 2 trials and 1 bin"));
    }
    let phased = if tones.phi().is_some() { tones.clone() } else { tones.draw_phases(&mut trial_rng(seed, &[fnv1a("phases")])) };
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    for &taps in taps_list {
        let params = base.with_taps(taps)?;
        let filter = wiener_filter(&build_crr(&params, &phased)?, &build_crtheta(&phased, taps)?)?;
        let half = taps / 2;
        let i = jammer_sequence(&phased, taps + 1)?;
        let truth = i[half];
        let noise_free = filter.estimate(&wienerjam_core::model::received_window(&i, half, taps)?)?;
        let est: Vec<C64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, &[fnv1a("pdf"), taps as u64, t as u64]);
                let s = gen_qpsk_chips(taps + 1, params.signal_power, &mut rng);
                let n = gen_awgn(taps + 1, params.noise_power, &mut rng)?;
                let stream = SampleStream::new(s, n, i.clone())?;
                Ok(filter.estimate(&stream.window(half, taps)?)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let modulus: Vec<f64> = est.iter().map(|e| e.norm()).collect();
        let phase: Vec<f64> = est.iter().map(|e| wrap_angle(e.arg() - truth.arg())).collect();
        let mean = C64::new(
            compensated_sum(est.iter().map(|e| e.re)) / trials as f64,
            compensated_sum(est.iter().map(|e| e.im)) / trials as f64,
        );
        let err_var = compensated_sum(est.iter().map(|e| (e - truth).norm_sqr())) / trials as f64;
        summary.push(DispersionRow {
            taps,
            trials,
            iqr_modulus: iqr(&modulus),
            iqr_phase: iqr(&phase),
            error_variance: err_var,
            mean_estimate_re: mean.re,
            mean_estimate_im: mean.im,
            noise_free_re: noise_free.re,
            noise_free_im: noise_free.im,
            true_re: truth.re,
            true_im: truth.im,
        });
        estimates.push((taps, modulus, est.iter().map(|e| e.arg()).collect::<Vec<f64>>()));
    }
    let max_mod = estimates.iter().flat_map(|(_, m, _)| m.iter().copied()).fold(0.0, f64::max);
    let mut hist = Vec::new();
    for (taps, modulus, phase) in &estimates {
        for (lo, hi, count) in histogram(modulus, 0.0, max_mod * (1.0 + 1e-12), bins) {
            hist.push(HistogramRow { taps: *taps, quantity: "modulus".into(), bin_lo: lo, bin_hi: hi, count });
        }
        for (lo, hi, count) in histogram(phase, -PI, PI, bins) {
            hist.push(HistogramRow { taps: *taps, quantity: "phase".into(), bin_lo: lo, bin_hi: hi, count });
        }
    }
    Ok((hist, summary))
}

/// Output-power decomposition and orthogonality statistics for one tone
/// jammer, one center sample per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAudit {
    pub trials: usize,
    pub analytic_bmse: f64,
    /// `|i − î|²`.
    pub bmse: Moments,
    /// `|r − î|²`.
    pub output_power: Moments,
    /// `|y|² − (S + σ_n²) − |i − î|²`, zero-mean when the decomposition holds.
    pub decomposition: Moments,
    /// Real and imaginary parts of `(i − î)·r_l*` for each window tap.
    pub tap_correlation: Vec<(Moments, Moments)>,
    /// Real and imaginary parts of `(i − î)·î*`.
    pub output_correlation: (Moments, Moments),
}

#[derive(Clone, Default)]
struct AuditChunk {
    bmse: Moments,
    output_power: Moments,
    decomposition: Moments,
    taps: Vec<(Moments, Moments)>,
    out: (Moments, Moments),
}

pub fn power_audit(params: &SystemParams, tones: &ToneSet, trials: usize, seed: u64) -> Result<PowerAudit> {
    if trials < 2 {
        return Err(config_error("the audit needs at least 2 trials"));
    }
    let taps = params.taps;
    let half = taps / 2;
    let filter = wiener_filter(&build_crr(params, tones)?, &build_crtheta(tones, taps)?)?;
    let white = params.white_power();
    let chunks: Vec<AuditChunk> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = AuditChunk { taps: vec![Default::default(); taps], ..Default::default() };
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(seed, &[fnv1a("audit"), t as u64]);
                let stream = SampleStream::simulate_tones(params, tones, taps + 1, &mut rng)?;
                let window = stream.window(half, taps)?;
                let est = filter.estimate(&window)?;
                let err = stream.jammer()[half] - est;
                let y = stream.received()[half] - est;
                acc.bmse.push(err.norm_sqr());
                acc.output_power.push(y.norm_sqr());
                acc.decomposition.push(y.norm_sqr() - white - err.norm_sqr());
                for (slot, x) in acc.taps.iter_mut().zip(&window) {
                    let c = err * x.conj();
                    slot.0.push(c.re);
                    slot.1.push(c.im);
                }
                let c = err * est.conj();
                acc.out.0.push(c.re);
                acc.out.1.push(c.im);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = AuditChunk { taps: vec![Default::default(); taps], ..Default::default() };
    for c in &chunks {
        total.bmse.merge(&c.bmse);
        total.output_power.merge(&c.output_power);
        total.decomposition.merge(&c.decomposition);
        for (t, s) in total.taps.iter_mut().zip(&c.taps) {
            t.0.merge(&s.0);
            t.1.merge(&s.1);
        }
        total.out.0.merge(&c.out.0);
        total.out.1.merge(&c.out.1);
    }
    Ok(PowerAudit {
        trials,
        analytic_bmse: analytic_bmse(params, tones)?,
        bmse: total.bmse,
        output_power: total.output_power,
        decomposition: total.decomposition,
        tap_correlation: total.taps,
        output_correlation: total.out,
    })
}
