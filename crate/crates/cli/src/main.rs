//! `hfbgeo`: seeded experiments on Bogoliubov orbits of generalized
//! one-particle density matrices.
//!
//! Exit status is 0 when every asserted property holds, 1 when one fails and
//! 2 for configuration or input errors.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfbgeo::checks::{self, Sweep};
use hfbgeo::g1pdm::{diagonalize, spectral_data, G1pdm};
use hfbgeo::hfbopt::{build_hubbard, minimize_hfb, ModeConvention};
use hfbgeo::orbitgeo::{closed_range_constants, section_constants, BasePoint};
use serde::Serialize;

use config::Settings;
use report::{fmt_f64, report, write_json, write_summary_table, write_sweep};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config file or input data.
    Config(String),
    /// A computation that could not be carried out.
    Runtime(String),
    Io(String),
}

impl From<hfbgeo::Error> for Failure {
    fn from(e: hfbgeo::Error) -> Self {
        use hfbgeo::Error::*;
        match e {
            BadSpec(_) | InvalidInput(_) | NoTrials | DimensionMismatch { .. } | CapExceeded { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "hfbgeo", version, about = "Orbit geometry of generalized one-particle density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with settings; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    /// Truncation dimension
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated eigenvalues in [0, 1/2], cycled to length n
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct HubbardArgs {
    #[arg(long = "L")]
    sites: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "U")]
    u: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// spinless or spin-half
    #[arg(long)]
    convention: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize a g1-pdm read from JSON
    Diagonalize {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Recover orbit membership witnesses for random conjugates
    OrbitCheck {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Local cross section near the base point
    SectionTest {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-range and cross-section constants of a spectrum
    Constants {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Cocycle, Jacobi and invariance identities
    CocycleTest {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Radical of the symplectic form against the isotropy algebra
    RadicalTest {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Kähler polarization membership, isotropy and positivity
    PolarizationTest {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Geodesics through the vacuum against their closed form
    Geodesic {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Fock-space implementers, Wick identities and number statistics
    FockVerify {
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Minimize the HFB energy of a Hubbard chain
    HfbMinimize {
        #[command(flatten)]
        model: HubbardArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Every module's checks at small n, as one summary table
    Suite {
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn base(common: &Common) -> Settings {
    Settings { seed: common.seed, out: common.out.clone(), ..Settings::default() }
}

fn with_spec(s: Settings, spec: &SpecArgs) -> Settings {
    Settings { n: spec.n, spec: spec.spec.clone().map(config::SpecValue::Text), ..s }
}

fn parse_convention(s: &str) -> Result<ModeConvention, Failure> {
    match s {
        "spinless" => Ok(ModeConvention::Spinless),
        "spin-half" => Ok(ModeConvention::SpinHalf),
        _ => Err(Failure::Config(format!("unknown convention '{s}' (expected spinless or spin-half)"))),
    }
}

/// Flag layer, config file path and subcommand name.
fn flag_settings(cmd: &Command) -> Result<(Settings, Option<PathBuf>, &'static str), Failure> {
    Ok(match cmd {
        Command::Diagonalize { input, tol, common } => {
            (Settings { input: input.clone(), tol: *tol, ..base(common) }, common.config.clone(), "diagonalize")
        }
        Command::OrbitCheck { spec, trials, common } => (
            Settings { trials: trials.trials, ..with_spec(base(common), spec) },
            common.config.clone(),
            "orbit-check",
        ),
        Command::SectionTest { spec, trials, common } => (
            Settings { trials: trials.trials, ..with_spec(base(common), spec) },
            common.config.clone(),
            "section-test",
        ),
        Command::Constants { spec, common } => (with_spec(base(common), spec), common.config.clone(), "constants"),
        Command::CocycleTest { spec, trials, common } => (
            Settings { trials: trials.trials, ..with_spec(base(common), spec) },
            common.config.clone(),
            "cocycle-test",
        ),
        Command::RadicalTest { spec, common } => (with_spec(base(common), spec), common.config.clone(), "radical-test"),
        Command::PolarizationTest { spec, trials, common } => (
            Settings { trials: trials.trials, ..with_spec(base(common), spec) },
            common.config.clone(),
            "polarization-test",
        ),
        Command::Geodesic { n, points, common } => {
            (Settings { n: *n, points: *points, ..base(common) }, common.config.clone(), "geodesic")
        }
        Command::FockVerify { n, trials, common } => {
            (Settings { n: *n, trials: trials.trials, ..base(common) }, common.config.clone(), "fock-verify")
        }
        Command::HfbMinimize { model, common } => (
            Settings {
                sites: model.sites,
                t: model.t,
                u: model.u,
                mu: model.mu,
                convention: model.convention.as_deref().map(parse_convention).transpose()?,
                step: model.step,
                max_iter: model.max_iter,
                grad_tol: model.grad_tol,
                restarts: model.restarts,
                ..base(common)
            },
            common.config.clone(),
            "hfb-minimize",
        ),
        Command::Suite { trials, common } => {
            (Settings { trials: trials.trials, ..base(common) }, common.config.clone(), "suite")
        }
    })
}

fn spec_text(lambda: &[f64]) -> String {
    lambda.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

fn sweep_header(name: &str, n: usize, lambda: Option<&[f64]>, trials: usize, seed: u64) -> String {
    match lambda {
        Some(l) => format!("{name} n={n} spec={} trials={trials} seed={seed}", spec_text(l)),
        None => format!("{name} n={n} trials={trials} seed={seed}"),
    }
}

fn finish_sweep(cfg: &Settings, header: &str, sweep: &Sweep) -> Result<bool, Failure> {
    write_sweep(cfg.out.as_deref(), header, sweep)?;
    Ok(report(&sweep.summaries, Some(sweep), cfg.seed(), true))
}

#[derive(Serialize)]
struct ConstantsOut {
    lambda: Vec<f64>,
    distinct_values: Vec<f64>,
    has_half: bool,
    kernel_multiplicity: usize,
    /// Lower bound for the restricted-norm closed-range estimate.
    restricted_bound: f64,
    /// Lower bound for the operator-norm closed-range estimate.
    operator_bound: f64,
    c_one: f64,
    big_k: f64,
    radius: f64,
}

#[derive(Serialize)]
struct HfbOut<'a> {
    sites: usize,
    t: f64,
    u: f64,
    mu: f64,
    convention: ModeConvention,
    result: &'a hfbgeo::hfbopt::HfbResult,
}

fn run(cmd: Command) -> Result<bool, Failure> {
    let (flags, config_path, name) = flag_settings(&cmd)?;
    let file = match &config_path {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let cfg = flags.over(file);
    let seed = cfg.seed();
    let out = cfg.out.as_deref();
    match cmd {
        Command::Diagonalize { .. } => {
            let path = cfg.input.as_deref().ok_or_else(|| Failure::Config("diagonalize needs --in".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            let g: G1pdm = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("malformed JSON in {}: {e}", path.display())))?;
            let g = G1pdm::new(g.gamma, g.alpha)?;
            let validity = g.validation_residual();
            if validity > 1e-8 {
                return Err(Failure::Config(format!("input is not a g1-pdm (residual {})", fmt_f64(validity))));
            }
            let d = diagonalize(&g, cfg.tol(hfbgeo::g1pdm::DEFAULT_TOL)?)?;
            write_json(out, &d)?;
            let s = checks::CheckSummary::single("diagonalize residual", d.residual, 1e-9);
            Ok(report(&[s], None, seed, true))
        }
        Command::OrbitCheck { .. }
        | Command::SectionTest { .. }
        | Command::CocycleTest { .. }
        | Command::PolarizationTest { .. } => {
            let n = cfg.n(4)?;
            let lambda = cfg.spectrum(n)?;
            let trials = cfg.trials(100);
            let sweep = match cmd {
                Command::OrbitCheck { .. } => checks::orbit_sweep(&lambda, trials, seed)?,
                Command::SectionTest { .. } => checks::section_sweep(&lambda, trials, seed)?,
                Command::CocycleTest { .. } => checks::cocycle_sweep(&lambda, trials, seed)?,
                _ => checks::polarization_sweep(&lambda, trials, seed)?,
            };
            finish_sweep(&cfg, &sweep_header(name, n, Some(&lambda), trials, seed), &sweep)
        }
        Command::Constants { .. } => {
            let n = cfg.n(4)?;
            let lambda = cfg.spectrum(n)?;
            let b = BasePoint::new(&lambda, hfbgeo::g1pdm::DEFAULT_TOL)?;
            let spec = spectral_data(&lambda, hfbgeo::g1pdm::DEFAULT_TOL)?;
            let (restricted_bound, operator_bound) = closed_range_constants(&spec)?;
            let c = section_constants(&b)?;
            let body = ConstantsOut {
                distinct_values: spec.present_values(),
                has_half: spec.has_half(),
                kernel_multiplicity: spec.kernel_mult,
                lambda,
                restricted_bound,
                operator_bound,
                c_one: c.c_one,
                big_k: c.big_k,
                radius: c.radius,
            };
            write_json(out, &body)?;
            Ok(true)
        }
        Command::RadicalTest { .. } => {
            let spectra = match (&cfg.spec, cfg.n) {
                (None, None) => checks::standard_spectra(),
                _ => vec![cfg.spectrum(cfg.n(4)?)?],
            };
            let sweep = checks::radical_sweep(&spectra, seed)?;
            let header = format!("{name} spectra={} seed={seed}", spectra.len());
            finish_sweep(&cfg, &header, &sweep)
        }
        Command::Geodesic { .. } => {
            let n = cfg.n(3)?;
            let points = cfg.points.unwrap_or(20);
            let sweep = checks::geodesic_sweep(n, points, seed)?;
            finish_sweep(&cfg, &format!("{name} n={n} points={points} seed={seed}"), &sweep)
        }
        Command::FockVerify { .. } => {
            let n = cfg.n(4)?;
            let trials = cfg.trials(100);
            let sweep = checks::fock_sweep(n, trials, seed)?;
            write_sweep(out, &sweep_header(name, n, None, trials, seed), &sweep)?;
            let mut summaries = sweep.summaries.clone();
            summaries.extend(checks::wick_sweep(n, trials, seed)?.summaries);
            summaries.extend(checks::number_sweep(n, trials, seed)?.summaries);
            Ok(report(&summaries, Some(&sweep), seed, true))
        }
        Command::HfbMinimize { .. } => {
            let sites = cfg.sites.unwrap_or(2);
            let (t, u, mu) = (cfg.t.unwrap_or(1.0), cfg.u.unwrap_or(4.0), cfg.mu.unwrap_or(0.0));
            let convention = cfg.convention.unwrap_or(ModeConvention::SpinHalf);
            let params = cfg.hfb_params()?;
            let h = build_hubbard(sites, t, u, mu, convention)?;
            let r = minimize_hfb(&h, &G1pdm::p_minus(h.modes()), &params)?;
            write_json(out, &HfbOut { sites, t, u, mu, convention, result: &r })?;
            eprintln!(
                "E_HFB {} E_gs {} gap {} after {} iterations",
                fmt_f64(r.energy),
                fmt_f64(r.ground_energy),
                fmt_f64(r.gap),
                r.iterations
            );
            if !r.converged {
                eprintln!("not converged: gradient norm {} > {}", fmt_f64(r.gradient_norm), fmt_f64(params.grad_tol));
            }
            let monotone = r.history.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
            let summaries = [
                checks::CheckSummary::single("HFB variational bound", -r.gap, 1e-8),
                checks::CheckSummary::single("HFB monotone energy", monotone, 1e-14),
                checks::CheckSummary::single("HFB closed form vs Fock energy", (r.energy - r.oracle_energy).abs(), 1e-9),
            ];
            Ok(report(&summaries, None, seed, true))
        }
        Command::Suite { .. } => {
            let trials = cfg.trials(50);
            let summaries = checks::suite_all(seed, trials)?;
            write_summary_table(out, &format!("{name} trials={trials} seed={seed}"), &summaries)?;
            Ok(report(&summaries, None, seed, false))
        }
    }
}

fn set_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("HFBGEO_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| Failure::Config(format!("HFBGEO_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match set_threads().and_then(|()| run(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg) | Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
