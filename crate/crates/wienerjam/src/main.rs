use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use wienerjam::config::{OptimizerSection, RunConfigFile, Settings};
use wienerjam::gradcheck::run_gradcheck;
use wienerjam::harness::{convergence_trace, pdf_dispersion_study, ranking, run_figure5, ExperimentConfig, JammerSpec, Mode};
use wienerjam::output::{json_sibling, tagged_sibling, write_csv, write_json, write_records_csv, VERSION};
use wienerjam::with_threads;
use wienerjam_core::analytic::error_covariance;
use wienerjam_core::optimizer::design_jammer;
use wienerjam_core::seed::child_seed;
use wienerjam_core::{SystemParams, ToneSet};

/// Worst-case multi-tone jammer design against the L-tap Wiener
/// interpolation filter, and Monte Carlo evaluation of the filter.
///
/// Powers follow S = 1 unless a config file says otherwise:
/// SNR = S/σ_n², JSR = J/S, both in dB.
#[derive(Parser)]
#[command(name = "wienerjam", version, about, long_about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "WIENERJAM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the worst-case K-tone jammer for an L-tap filter.
    Design(DesignArgs),
    /// Analytic BMSE of a given tone set.
    Bmse(BmseArgs),
    /// Compare analytic loss gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Monte Carlo experiments.
    Mc(McArgs),
}

#[derive(Args, Clone)]
struct Scenario {
    /// SNR = S/σ_n² in dB.
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// JSR = J/S in dB.
    #[arg(long = "jsr-db", allow_negative_numbers = true)]
    jsr_db: Option<f64>,
    /// JSON run configuration (unknown keys are rejected).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Number of tones.
    #[arg(long = "K")]
    tones: Option<usize>,
    /// Filter length (even).
    #[arg(long = "L")]
    taps: Option<usize>,
}

#[derive(Args)]
struct BmseArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Tone set file as written by `design`.
    #[arg(long, conflicts_with = "omega")]
    tones: Option<PathBuf>,
    /// Inline tone frequencies in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    omega: Option<Vec<f64>>,
    /// Inline tone moduli (default: equal power J/K).
    #[arg(long, value_delimiter = ',', requires = "omega")]
    alpha: Option<Vec<f64>>,
    #[arg(long = "L")]
    taps: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    scenario: Scenario,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Fix the number of tones (default: random 1..=8).
    #[arg(long = "K")]
    tones: Option<usize>,
    /// Relative error bound for the frequency gradient.
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    /// Relative error bound for the power gradient.
    #[arg(long, default_value_t = 1e-5)]
    alpha_threshold: f64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("study").required(true).args(["figure5", "trace", "pdf"])))]
struct McArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Empirical BMSE of every jammer × L × mode cell.
    #[arg(long)]
    figure5: bool,
    /// Per-iteration loss of random-restart and structured optimizer runs.
    #[arg(long)]
    trace: bool,
    /// Dispersion of the interference estimate versus L.
    #[arg(long)]
    pdf: bool,
    #[arg(long)]
    trials: Option<usize>,
    /// Filter lengths, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    taps: Option<Vec<usize>>,
    /// Restrict to one mode (default: both).
    #[arg(long)]
    mode: Option<String>,
    /// Jammers, comma separated (e.g. designed5,comb,ar1(0.8)).
    #[arg(long, value_delimiter = ',')]
    jammers: Option<Vec<String>>,
    /// Tones for --trace and --pdf.
    #[arg(long = "K")]
    tones: Option<usize>,
    #[arg(long)]
    block_len: Option<usize>,
    /// Diagonal loading for blind mode.
    #[arg(long)]
    loading: Option<f64>,
    /// Histogram bins for --pdf.
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

fn settings(scenario: &Scenario) -> anyhow::Result<Settings> {
    let mut s = match &scenario.config {
        Some(path) => RunConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?.settings()?,
        None => Settings::default(),
    };
    if let Some(x) = scenario.snr_db {
        s.experiment.snr_db = x;
    }
    if let Some(x) = scenario.jsr_db {
        s.experiment.jsr_db = x;
    }
    if let Some(x) = scenario.seed {
        s.experiment.master_seed = x;
    }
    Ok(s)
}

fn single_taps(flag: Option<usize>, s: &Settings) -> usize {
    flag.unwrap_or(s.experiment.taps[0])
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

#[derive(Serialize, Deserialize)]
struct ToneFile {
    alpha: Vec<f64>,
    omega_rad: Vec<f64>,
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    bmse: Option<f64>,
    #[serde(default, rename = "bmse_over_J")]
    bmse_over_j: Option<f64>,
    #[serde(default, rename = "K")]
    tones: Option<usize>,
    #[serde(default, rename = "L")]
    taps: Option<usize>,
    #[serde(default)]
    snr_db: Option<f64>,
    #[serde(default)]
    jsr_db: Option<f64>,
    #[serde(default)]
    version: Option<String>,
}

fn cmd_design(args: DesignArgs) -> anyhow::Result<()> {
    let s = settings(&args.scenario)?;
    let Some(k) = args.tones.or(s.tones) else { bail!("--K is required") };
    let taps = single_taps(args.taps, &s);
    let params = s.experiment.params(taps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(s.experiment.master_seed, &[k as u64, taps as u64]));
    let d = design_jammer(&params, k, &s.optimizer, &mut rng)?;
    let file = ToneFile {
        alpha: d.tones.alpha().to_vec(),
        omega_rad: d.tones.omega().to_vec(),
        method: Some(d.method.to_string()),
        bmse: Some(d.bmse),
        bmse_over_j: Some(d.bmse / params.jammer_power),
        tones: Some(k),
        taps: Some(taps),
        snr_db: Some(s.experiment.snr_db),
        jsr_db: Some(s.experiment.jsr_db),
        version: Some(VERSION.to_string()),
    };
    let mut w = sink(&args.scenario.out)?;
    serde_json::to_writer_pretty(&mut w, &file)?;
    writeln!(w)?;
    w.flush()?;
    eprintln!("K={k} L={taps} method={} bmse={} bmse_over_J={}", d.method, d.bmse, d.bmse / params.jammer_power);
    Ok(())
}

fn cmd_bmse(args: BmseArgs) -> anyhow::Result<()> {
    let s = settings(&args.scenario)?;
    let (tones, file_taps) = match (&args.tones, &args.omega) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let f: ToneFile = serde_json::from_str(&text).with_context(|| format!("malformed tone set {}", path.display()))?;
            (ToneSet::new(f.alpha, f.omega_rad)?, f.taps)
        }
        (None, Some(omega)) => {
            let set = match &args.alpha {
                Some(a) => ToneSet::new(a.clone(), omega.clone())?,
                None => ToneSet::equal_power(s.experiment.params(2)?.jammer_power, omega.clone())?,
            };
            (set, None)
        }
        (None, None) => bail!("give a tone set with --tones <file> or --omega <list>"),
    };
    let taps = args.taps.or(file_taps).unwrap_or(s.experiment.taps[0]);
    let params: SystemParams = s.experiment.params(taps)?;
    let ceps = error_covariance(&params, &tones)?;
    let bmse = ceps.sum();
    let mut w = sink(&args.scenario.out)?;
    writeln!(w, "L {taps}")?;
    writeln!(w, "bmse {bmse}")?;
    writeln!(w, "bmse_over_J {}", bmse / params.jammer_power)?;
    writeln!(w, "tone_power {}", tones.power())?;
    let diag: Vec<String> = ceps.diag().iter().map(|v| v.to_string()).collect();
    writeln!(w, "ceps_diag {}", diag.join(","))?;
    w.flush()?;
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs, threads: Option<usize>) -> anyhow::Result<bool> {
    let s = settings(&args.scenario)?;
    let seed = s.experiment.master_seed;
    let rows = with_threads(threads, || run_gradcheck(args.cases, args.tones, seed, args.alpha_threshold, args.threshold))??;
    let mut w = sink(&args.scenario.out)?;
    write_csv(&rows, &mut w)?;
    w.flush()?;
    let worst_a = rows.iter().max_by(|a, b| a.rel_err_alpha.total_cmp(&b.rel_err_alpha));
    let worst_w = rows.iter().max_by(|a, b| a.rel_err_omega.total_cmp(&b.rel_err_omega));
    let failed = rows.iter().filter(|r| !r.pass).count();
    if let (Some(a), Some(o)) = (worst_a, worst_w) {
        eprintln!(
            "{} cases, {failed} failed; worst alpha^2 error {:e} (case {}, K={}, L={}); worst omega error {:e} (case {}, K={}, L={})",
            rows.len(),
            a.rel_err_alpha,
            a.case,
            a.tones,
            a.taps,
            o.rel_err_omega,
            o.case,
            o.tones,
            o.taps
        );
    }
    Ok(failed == 0)
}

#[derive(Serialize)]
struct McEcho<'a> {
    experiment: &'a ExperimentConfig,
    optimizer: OptimizerSection,
    tones: Option<usize>,
}

fn cmd_mc(args: McArgs, threads: Option<usize>) -> anyhow::Result<()> {
    let mut s = settings(&args.scenario)?;
    let e = &mut s.experiment;
    if let Some(t) = args.trials {
        e.trials = t;
    }
    if let Some(l) = &args.taps {
        e.taps = l.clone();
    }
    if let Some(m) = &args.mode {
        e.modes = vec![m.parse::<Mode>()?];
    }
    if let Some(j) = &args.jammers {
        e.jammers = j.iter().map(|x| x.parse::<JammerSpec>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = args.block_len {
        e.block_len = n;
    }
    if args.loading.is_some() {
        e.loading = args.loading;
    }
    if args.tones.is_some() {
        s.tones = args.tones;
    }
    s.validate()?;
    let echo = McEcho { experiment: &s.experiment, optimizer: OptimizerSection::echo(&s.optimizer), tones: s.tones };
    let out = &args.scenario.out;

    if args.figure5 {
        let rows = with_threads(threads, || run_figure5(&s.experiment, &s.optimizer))??;
        let mut w = sink(out)?;
        write_records_csv(&rows, &mut w)?;
        w.flush()?;
        if let Some(p) = out {
            write_json("mc --figure5", &echo, &rows, create(&json_sibling(p))?)?;
        }
        for &taps in &s.experiment.taps {
            for &mode in &s.experiment.modes {
                let order: Vec<String> = ranking(&rows, taps, mode).iter().map(|(j, v)| format!("{j}={v:.4}")).collect();
                eprintln!("L={taps} {mode}: {}", order.join(" > "));
            }
        }
    } else if args.trace {
        let k = s.tones.unwrap_or(6);
        let taps = args.taps.as_ref().map_or(16, |l| l[0]);
        let params = s.experiment.params(taps)?;
        let (rows, summary) = with_threads(threads, || convergence_trace(&params, k, &s.optimizer, s.experiment.master_seed))??;
        let mut w = sink(out)?;
        write_csv(&rows, &mut w)?;
        w.flush()?;
        if let Some(p) = out {
            #[derive(Serialize)]
            struct TraceJson<'a, R: Serialize, S: Serialize> {
                summary: &'a S,
                rows: &'a R,
            }
            write_json("mc --trace", &echo, &TraceJson { summary: &summary, rows: &rows }, create(&json_sibling(p))?)?;
        }
        eprintln!(
            "K={k} L={taps}: best {:.5}, structured {:.5} (reaches 99.5% of best at iteration {}), median restart reaches it at {}",
            summary.best_final,
            summary.structured_final,
            summary.structured_iterations.map_or("never".to_string(), |i| i.to_string()),
            summary.median_restart_iterations
        );
    } else {
        let k = s.tones.unwrap_or(4);
        let taps_list = args.taps.clone().unwrap_or_else(|| vec![16, 32, 64]);
        let base = s.experiment.params(taps_list[0])?;
        let seed = s.experiment.master_seed;
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, &[k as u64]));
        let omega = (0..k).map(|_| rand::Rng::random_range(&mut rng, -std::f64::consts::PI..std::f64::consts::PI)).collect();
        let tones = ToneSet::equal_power(base.jammer_power, omega)?;
        let trials = args.trials.unwrap_or(10_000);
        let (hist, summary) = with_threads(threads, || pdf_dispersion_study(&base, &tones, &taps_list, trials, args.bins, seed))??;
        match out {
            Some(p) => {
                write_csv(&hist, create(p)?)?;
                write_csv(&summary, create(&tagged_sibling(p, "summary"))?)?;
                #[derive(Serialize)]
                struct PdfJson<'a, H: Serialize, S: Serialize> {
                    summary: &'a S,
                    histogram: &'a H,
                }
                write_json("mc --pdf", &echo, &PdfJson { summary: &summary, histogram: &hist }, create(&json_sibling(p))?)?;
            }
            None => {
                let mut w = sink(out)?;
                write_csv(&summary, &mut w)?;
                w.flush()?;
            }
        }
        for r in &summary {
            eprintln!("L={}: IQR |i_hat| {:.4}, IQR phase {:.4}, error variance {:.4}", r.taps, r.iqr_modulus, r.iqr_phase, r.error_variance);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let result = match cli.command {
        Command::Design(a) => cmd_design(a).map(|_| true),
        Command::Bmse(a) => cmd_bmse(a).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a, threads),
        Command::Mc(a) => cmd_mc(a, threads).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
