//! Command-line front end: parameter entry, batch scans, machine-readable
//! CSV/JSON output.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error (the module
//! diagnostic is echoed verbatim on stderr).

mod config;
mod output;

use std::fs;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use kds_ringdown as kds;
use kds_ringdown::spectrum as sp;
use kds_ringdown::{Branch, Complex64, FitGrid, FitQuantity, SpacetimeParams};

use config::RunConfig;
use output::{to_csv, to_json, Cell, Table};

#[derive(Parser)]
#[command(
    name = "kds-ringdown",
    version,
    about = "Equatorial ringdown synthesis and parameter recovery for Kerr-de Sitter black holes",
    long_about = "Forward model: unstable equatorial photon orbits set the oscillation \
                  frequencies and damping rates of high-frequency modes.  Inverse model: \
                  recover (M, a) or (M, a, Lambda) from the real observable packages.\n\n\
                  All values are in geometric units G = c = 1.  Every subcommand accepts \
                  --config (flat key = value file mirroring the flags; flags override the \
                  file), --format csv|json, and --out PATH."
)]
struct Cli {
    /// Flat key = value run configuration; flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output format: csv (default) or json.
    #[arg(long, global = true, value_name = "FMT")]
    format: Option<String>,
    /// Write the table to PATH instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Default)]
struct ParamArgs {
    /// Mass M > 0.
    #[arg(long = "M")]
    mass: Option<f64>,
    /// Rotation parameter a (either sign).
    #[arg(long = "a", allow_hyphen_values = true)]
    spin: Option<f64>,
    /// Cosmological constant Lambda >= 0.
    #[arg(long = "Lambda")]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of the horizon quartic with surface gravities.
    ///
    /// Columns: m, a, lambda, r0, r_minus, r_e, r_c, kappa_e, kappa_c,
    /// l_sep, max_residual, missing_cosmological_horizon.
    Horizons(ParamArgs),
    /// One equatorial circular photon orbit.
    ///
    /// Columns: m, a, lambda, branch, r, omega, b, lyapunov, residual.
    Orbit {
        #[command(flatten)]
        params: ParamArgs,
        /// Rotation branch: co or counter (default co).
        #[arg(long)]
        branch: Option<String>,
    },
    /// Closed-form small-spin expansion coefficients.
    ///
    /// Columns: m, lambda, omega_ph, omega_ph_prime, c_z, c_omega2,
    /// c_lambda2, r1, r2, b0, b1, b2, beta2.
    Coeffs(ParamArgs),
    /// Synthesized equatorial frequency pair and observables, with
    /// optional additive frequency noise.
    ///
    /// Columns: m, a, lambda, n, ell, re_omega_plus, im_omega_plus,
    /// re_omega_minus, im_omega_minus, u, v, w_tilde, u_plus, abs_v.
    Forward {
        #[command(flatten)]
        params: ParamArgs,
        /// Overtone index n >= 0.
        #[arg(long = "n")]
        overtone: Option<u32>,
        /// Angular momentum ell >= 1.
        #[arg(long)]
        ell: Option<u32>,
        /// Real part of the co-rotating frequency error.
        #[arg(long = "eta-plus-re", allow_hyphen_values = true)]
        eta_plus_re: Option<f64>,
        /// Imaginary part of the co-rotating frequency error.
        #[arg(long = "eta-plus-im", allow_hyphen_values = true)]
        eta_plus_im: Option<f64>,
        /// Real part of the counter-rotating frequency error.
        #[arg(long = "eta-minus-re", allow_hyphen_values = true)]
        eta_minus_re: Option<f64>,
        /// Imaginary part of the counter-rotating frequency error.
        #[arg(long = "eta-minus-im", allow_hyphen_values = true)]
        eta_minus_im: Option<f64>,
    },
    /// Recover (M, a) from the two-mode package (U, V) at fixed Lambda.
    ///
    /// Columns: u, v, lambda, ell, n, m, a, iterations, residual,
    /// jacobian_det, stability_constant, spin_sign_ambiguous.
    Invert {
        /// Normalized average oscillation frequency.
        #[arg(long = "U", allow_hyphen_values = true)]
        u: Option<f64>,
        /// Normalized branch splitting (default 0).
        #[arg(long = "V", allow_hyphen_values = true)]
        v: Option<f64>,
        /// Cosmological constant held fixed during the inversion.
        #[arg(long = "Lambda")]
        lambda: Option<f64>,
        /// Angular momentum of the measured pair.
        #[arg(long)]
        ell: Option<u32>,
        /// Overtone index (default 0).
        #[arg(long = "n")]
        overtone: Option<u32>,
        /// Newton residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Newton iteration cap.
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Jacobian mode: fd or analytic.
        #[arg(long)]
        jacobian: Option<String>,
        /// Treat V as |V| and report the non-negative spin with an
        /// ambiguity flag.
        #[arg(long, action = ArgAction::SetTrue)]
        unlabeled: bool,
    },
    /// Recover (M, a, Lambda) from (U, V, W).
    ///
    /// Columns: u, v, w, ell, n, m, a, lambda, iterations, residual,
    /// jacobian_det, stability_constant.
    Invert3 {
        /// Normalized average oscillation frequency.
        #[arg(long = "U", allow_hyphen_values = true)]
        u: Option<f64>,
        /// Normalized branch splitting.
        #[arg(long = "V", allow_hyphen_values = true)]
        v: Option<f64>,
        /// Normalized damping observable W_tilde.
        #[arg(long = "W", allow_hyphen_values = true)]
        w: Option<f64>,
        /// Angular momentum of the measured pair.
        #[arg(long)]
        ell: Option<u32>,
        /// Overtone index (default 0).
        #[arg(long = "n")]
        overtone: Option<u32>,
        /// Newton residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Reject seeds with |a| below this floor.
        #[arg(long = "a-floor")]
        a_floor: Option<f64>,
        /// Lower end of the Lambda initialization scan.
        #[arg(long = "lambda-lo")]
        lambda_lo: Option<f64>,
        /// Upper end of the Lambda initialization scan.
        #[arg(long = "lambda-hi")]
        lambda_hi: Option<f64>,
        /// Number of log-spaced Lambda scan trials.
        #[arg(long = "scan-count")]
        scan_count: Option<usize>,
    },
    /// Sign-condition (univalence) scan over an (M, a) rectangle, with a
    /// brute-force image collision probe.
    ///
    /// Summary columns: m_min, m_max, a_min, a_max, grid_m, grid_a,
    /// lambda, ell, n, pass, minors_pass, nodes_evaluated, nodes_filtered,
    /// worst_minor_mu, worst_minor_av, worst_minor_det,
    /// min_image_separation, collisions, probe_tol.  With --per-node:
    /// m, a, minor_mu, minor_av, minor_det, pass.
    ScanPmatrix {
        /// Lower edge of the mass range.
        #[arg(long = "M-min")]
        m_min: Option<f64>,
        /// Upper edge of the mass range.
        #[arg(long = "M-max")]
        m_max: Option<f64>,
        /// Lower edge of the spin range.
        #[arg(long = "a-min", allow_hyphen_values = true)]
        a_min: Option<f64>,
        /// Upper edge of the spin range.
        #[arg(long = "a-max", allow_hyphen_values = true)]
        a_max: Option<f64>,
        /// Grid nodes along M (default 21).
        #[arg(long = "grid-M")]
        grid_m: Option<usize>,
        /// Grid nodes along a (default 21).
        #[arg(long = "grid-a")]
        grid_a: Option<usize>,
        /// Cosmological constant.
        #[arg(long = "Lambda")]
        lambda: Option<f64>,
        /// Angular momentum of the scanned map.
        #[arg(long)]
        ell: Option<u32>,
        /// Overtone index (default 0).
        #[arg(long = "n")]
        overtone: Option<u32>,
        /// Collision probe tolerance in the (U, V) plane.
        #[arg(long = "probe-tol")]
        probe_tol: Option<f64>,
        /// Emit one row per grid node instead of the summary row.
        #[arg(long = "per-node", action = ArgAction::SetTrue)]
        per_node: bool,
    },
    /// Fit small-spin series coefficients from solver outputs and compare
    /// against the closed forms.
    ///
    /// One row per coefficient order.  Columns: quantity, m, lambda,
    /// degree, parity_constrained, order, coefficient, uncertainty,
    /// reference, discrepancy, fit_residual, condition.  The reference and
    /// discrepancy are only defined for orders 1 and 2 (NaN otherwise).
    VerifySeries {
        /// omega_plus | lambda_plus | r_plus | u_geo | v_geo.
        #[arg(long)]
        quantity: Option<String>,
        #[arg(long = "M")]
        mass: Option<f64>,
        #[arg(long = "Lambda")]
        lambda: Option<f64>,
        /// Polynomial degree, 3..=5.
        #[arg(long)]
        degree: Option<usize>,
        /// Half width of the symmetric spin grid.
        #[arg(long = "half-width")]
        half_width: Option<f64>,
        /// Grid points per side.
        #[arg(long)]
        points: Option<usize>,
        /// Drop the parity constraint on u_geo / v_geo fits.
        #[arg(long, action = ArgAction::SetTrue)]
        unconstrained: bool,
    },
    /// Noise-to-parameter propagation table over (ell, eps) cells.
    ///
    /// Columns: m, a, lambda, n, ell, eps, trials, seed, max_error,
    /// error_ell_over_eps, stability_constant.  Noise directions are
    /// unit-magnitude complex phases from the recorded deterministic seed.
    NoiseStudy {
        #[command(flatten)]
        params: ParamArgs,
        /// Overtone index (default 0).
        #[arg(long = "n")]
        overtone: Option<u32>,
        /// Comma-separated angular momenta, e.g. 100,200.
        #[arg(long)]
        ells: Option<String>,
        /// Comma-separated noise amplitudes, e.g. 1e-4,1e-3.
        #[arg(long)]
        eps: Option<String>,
        /// Noise draws per (ell, eps) cell (default 32).
        #[arg(long)]
        trials: Option<u32>,
        /// Seed of the deterministic phase generator (default 42).
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Horizons(_) => "horizons",
            Command::Orbit { .. } => "orbit",
            Command::Coeffs(_) => "coeffs",
            Command::Forward { .. } => "forward",
            Command::Invert { .. } => "invert",
            Command::Invert3 { .. } => "invert3",
            Command::ScanPmatrix { .. } => "scan-pmatrix",
            Command::VerifySeries { .. } => "verify-series",
            Command::NoiseStudy { .. } => "noise-study",
        }
    }

    fn overlay(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        match self {
            Command::Horizons(p) | Command::Coeffs(p) => {
                cfg.mass = p.mass;
                cfg.spin = p.spin;
                cfg.lambda = p.lambda;
            }
            Command::Orbit { params, branch } => {
                cfg.mass = params.mass;
                cfg.spin = params.spin;
                cfg.lambda = params.lambda;
                cfg.branch = branch.clone();
            }
            Command::Forward {
                params,
                overtone,
                ell,
                eta_plus_re,
                eta_plus_im,
                eta_minus_re,
                eta_minus_im,
            } => {
                cfg.mass = params.mass;
                cfg.spin = params.spin;
                cfg.lambda = params.lambda;
                cfg.overtone = *overtone;
                cfg.ell = *ell;
                cfg.eta_plus_re = *eta_plus_re;
                cfg.eta_plus_im = *eta_plus_im;
                cfg.eta_minus_re = *eta_minus_re;
                cfg.eta_minus_im = *eta_minus_im;
            }
            Command::Invert {
                u,
                v,
                lambda,
                ell,
                overtone,
                tol,
                max_iter,
                jacobian,
                unlabeled,
            } => {
                cfg.u = *u;
                cfg.v = *v;
                cfg.lambda = *lambda;
                cfg.ell = *ell;
                cfg.overtone = *overtone;
                cfg.tol = *tol;
                cfg.max_iter = *max_iter;
                cfg.jacobian = jacobian.clone();
                if *unlabeled {
                    cfg.unlabeled = Some(true);
                }
            }
            Command::Invert3 {
                u,
                v,
                w,
                ell,
                overtone,
                tol,
                max_iter,
                a_floor,
                lambda_lo,
                lambda_hi,
                scan_count,
            } => {
                cfg.u = *u;
                cfg.v = *v;
                cfg.w = *w;
                cfg.ell = *ell;
                cfg.overtone = *overtone;
                cfg.tol = *tol;
                cfg.max_iter = *max_iter;
                cfg.a_floor = *a_floor;
                cfg.lambda_lo = *lambda_lo;
                cfg.lambda_hi = *lambda_hi;
                cfg.scan_count = *scan_count;
            }
            Command::ScanPmatrix {
                m_min,
                m_max,
                a_min,
                a_max,
                grid_m,
                grid_a,
                lambda,
                ell,
                overtone,
                probe_tol,
                per_node,
            } => {
                cfg.m_min = *m_min;
                cfg.m_max = *m_max;
                cfg.a_min = *a_min;
                cfg.a_max = *a_max;
                cfg.grid_m = *grid_m;
                cfg.grid_a = *grid_a;
                cfg.lambda = *lambda;
                cfg.ell = *ell;
                cfg.overtone = *overtone;
                cfg.probe_tol = *probe_tol;
                if *per_node {
                    cfg.per_node = Some(true);
                }
            }
            Command::VerifySeries {
                quantity,
                mass,
                lambda,
                degree,
                half_width,
                points,
                unconstrained,
            } => {
                cfg.quantity = quantity.clone();
                cfg.mass = *mass;
                cfg.lambda = *lambda;
                cfg.degree = *degree;
                cfg.half_width = *half_width;
                cfg.points = *points;
                if *unconstrained {
                    cfg.unconstrained = Some(true);
                }
            }
            Command::NoiseStudy {
                params,
                overtone,
                ells,
                eps,
                trials,
                seed,
            } => {
                cfg.mass = params.mass;
                cfg.spin = params.spin;
                cfg.lambda = params.lambda;
                cfg.overtone = *overtone;
                cfg.trials = *trials;
                cfg.seed = *seed;
                if let Some(list) = ells {
                    cfg.ells = Some(parse_list(list, "--ells")?);
                }
                if let Some(list) = eps {
                    cfg.eps = Some(parse_list(list, "--eps")?);
                }
            }
        }
        Ok(cfg)
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| CliError::Usage(format!("bad entry '{part}' in {flag}: {e}")))
        })
        .collect()
}

enum CliError {
    Usage(String),
    Domain(kds::Error),
}

impl From<kds::Error> for CliError {
    fn from(e: kds::Error) -> Self {
        CliError::Domain(e)
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(CliError::Usage)?
        }
        None => RunConfig::default(),
    };

    let (command, flag_cfg) = match &cli.command {
        Some(cmd) => (cmd.name().to_string(), cmd.overlay()?),
        None => {
            let name = file_cfg.command.clone().ok_or_else(|| {
                CliError::Usage("no subcommand given and no 'command' in --config".into())
            })?;
            (name, RunConfig::default())
        }
    };

    let mut flag_cfg = flag_cfg;
    if let Some(fmt) = &cli.format {
        flag_cfg.format = Some(fmt.clone());
    }
    if let Some(out) = &cli.out {
        flag_cfg.out = Some(out.display().to_string());
    }
    let cfg = file_cfg.overridden_by(flag_cfg);

    let table = match command.as_str() {
        "horizons" => run_horizons(&cfg)?,
        "orbit" => run_orbit(&cfg)?,
        "coeffs" => run_coeffs(&cfg)?,
        "forward" => run_forward(&cfg)?,
        "invert" => run_invert(&cfg)?,
        "invert3" => run_invert3(&cfg)?,
        "scan-pmatrix" => run_scan_pmatrix(&cfg)?,
        "verify-series" => run_verify_series(&cfg)?,
        "noise-study" => run_noise_study(&cfg)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown command '{other}' (expected one of horizons, orbit, coeffs, forward, \
                 invert, invert3, scan-pmatrix, verify-series, noise-study)"
            )))
        }
    };

    let rendered = match cfg.format.as_deref().unwrap_or("csv") {
        "csv" => to_csv(&table),
        "json" => to_json(&table),
        other => {
            return Err(CliError::Usage(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    };

    match &cfg.out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn require<T: Copy>(value: Option<T>, flag: &str, command: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("{flag} is required for {command}")))
}

fn spacetime(cfg: &RunConfig, command: &str) -> Result<SpacetimeParams, CliError> {
    let mass = require(cfg.mass, "--M", command)?;
    let lambda = require(cfg.lambda, "--Lambda", command)?;
    let spin = cfg.spin.unwrap_or(0.0);
    Ok(SpacetimeParams::new(mass, spin, lambda)?)
}

fn branch_of(cfg: &RunConfig) -> Result<Branch, CliError> {
    match cfg.branch.as_deref().unwrap_or("co") {
        "co" => Ok(Branch::Co),
        "counter" => Ok(Branch::Counter),
        other => Err(CliError::Usage(format!(
            "unknown branch '{other}' (expected co or counter)"
        ))),
    }
}

fn run_horizons(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = spacetime(cfg, "horizons")?;
    let h = kds::horizon_roots(&p)?;
    let mut t = Table::new(vec![
        "m",
        "a",
        "lambda",
        "r0",
        "r_minus",
        "r_e",
        "r_c",
        "kappa_e",
        "kappa_c",
        "l_sep",
        "max_residual",
        "missing_cosmological_horizon",
    ]);
    t.push(vec![
        p.mass.into(),
        p.spin.into(),
        p.lambda.into(),
        h.r0.into(),
        h.r_minus.into(),
        h.r_e.into(),
        h.r_c.into(),
        h.kappa_e.into(),
        h.kappa_c.into(),
        h.l_sep.into(),
        h.max_residual.into(),
        h.missing_cosmological_horizon.into(),
    ]);
    Ok(t)
}

/// Runs the full admissibility check so domain failures carry the first
/// failed condition rather than a downstream solver symptom.
fn check_admissible(p: &SpacetimeParams) -> Result<(), CliError> {
    let report = kds::is_subextremal(p);
    if !report.admissible {
        return Err(kds::Error::NotSubextremal(report.diagnostic).into());
    }
    Ok(())
}

fn run_orbit(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = spacetime(cfg, "orbit")?;
    check_admissible(&p)?;
    let branch = branch_of(cfg)?;
    let orbit = kds::solve_circular_orbit(&p, branch)?;
    let mut t = Table::new(vec![
        "m", "a", "lambda", "branch", "r", "omega", "b", "lyapunov", "residual",
    ]);
    t.push(vec![
        p.mass.into(),
        p.spin.into(),
        p.lambda.into(),
        branch.to_string().into(),
        orbit.r.into(),
        orbit.omega.into(),
        orbit.b.into(),
        orbit.lyapunov.into(),
        orbit.residual.into(),
    ]);
    Ok(t)
}

fn run_coeffs(cfg: &RunConfig) -> Result<Table, CliError> {
    let mass = require(cfg.mass, "--M", "coeffs")?;
    let lambda = require(cfg.lambda, "--Lambda", "coeffs")?;
    let c = kds::closed_form_coefficients(mass, lambda)?;
    let mut t = Table::new(vec![
        "m",
        "lambda",
        "omega_ph",
        "omega_ph_prime",
        "c_z",
        "c_omega2",
        "c_lambda2",
        "r1",
        "r2",
        "b0",
        "b1",
        "b2",
        "beta2",
    ]);
    t.push(vec![
        mass.into(),
        lambda.into(),
        c.omega_ph.into(),
        c.omega_ph_prime.into(),
        c.c_z.into(),
        c.c_omega2.into(),
        c.c_lambda2.into(),
        c.r1.into(),
        c.r2.into(),
        c.b0.into(),
        c.b1.into(),
        c.b2.into(),
        c.beta2.into(),
    ]);
    Ok(t)
}

fn run_forward(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = spacetime(cfg, "forward")?;
    check_admissible(&p)?;
    let ell = require(cfg.ell, "--ell", "forward")?;
    let overtone = cfg.overtone.unwrap_or(0);
    let noise = sp::NoiseSpec {
        eta_plus: Complex64::new(
            cfg.eta_plus_re.unwrap_or(0.0),
            cfg.eta_plus_im.unwrap_or(0.0),
        ),
        eta_minus: Complex64::new(
            cfg.eta_minus_re.unwrap_or(0.0),
            cfg.eta_minus_im.unwrap_or(0.0),
        ),
    };
    let pair = sp::equatorial_pair(&p, overtone, ell)?;
    let (plus, minus) = sp::apply_noise(pair, &noise);
    let two = sp::two_mode_from_frequencies(plus.omega, minus.omega, ell);
    let (w_tilde, u_plus) = sp::single_mode_from_frequency(plus.omega, overtone, ell);
    let mut t = Table::new(vec![
        "m",
        "a",
        "lambda",
        "n",
        "ell",
        "re_omega_plus",
        "im_omega_plus",
        "re_omega_minus",
        "im_omega_minus",
        "u",
        "v",
        "w_tilde",
        "u_plus",
        "abs_v",
    ]);
    t.push(vec![
        p.mass.into(),
        p.spin.into(),
        p.lambda.into(),
        overtone.into(),
        ell.into(),
        plus.omega.re.into(),
        plus.omega.im.into(),
        minus.omega.re.into(),
        minus.omega.im.into(),
        two.u.into(),
        two.v.into(),
        w_tilde.into(),
        u_plus.into(),
        two.v.abs().into(),
    ]);
    Ok(t)
}

fn invert_options(cfg: &RunConfig) -> Result<kds::InvertOptions, CliError> {
    let mut opts = kds::InvertOptions::default();
    if let Some(tol) = cfg.tol {
        opts.tol = tol;
    }
    if let Some(max_iter) = cfg.max_iter {
        opts.max_iter = max_iter;
    }
    opts.jacobian = match cfg.jacobian.as_deref().unwrap_or("fd") {
        "fd" => kds::JacobianMode::FiniteDifference,
        "analytic" => kds::JacobianMode::AnalyticChain,
        other => {
            return Err(CliError::Usage(format!(
                "unknown jacobian mode '{other}' (expected fd or analytic)"
            )))
        }
    };
    Ok(opts)
}

fn run_invert(cfg: &RunConfig) -> Result<Table, CliError> {
    let u = require(cfg.u, "--U", "invert")?;
    let v = cfg.v.unwrap_or(0.0);
    let lambda = require(cfg.lambda, "--Lambda", "invert")?;
    let ell = require(cfg.ell, "--ell", "invert")?;
    let overtone = cfg.overtone.unwrap_or(0);
    let opts = invert_options(cfg)?;
    let rec = if cfg.unlabeled.unwrap_or(false) {
        kds::unlabeled_invert(u, v, lambda, ell, overtone, &opts)?
    } else {
        let data = sp::TwoModeObservables { u, v };
        kds::newton_invert_two(&data, lambda, ell, overtone, &opts)?
    };
    let mut t = Table::new(vec![
        "u",
        "v",
        "lambda",
        "ell",
        "n",
        "m",
        "a",
        "iterations",
        "residual",
        "jacobian_det",
        "stability_constant",
        "spin_sign_ambiguous",
    ]);
    t.push(vec![
        u.into(),
        v.into(),
        lambda.into(),
        ell.into(),
        overtone.into(),
        rec.params.mass.into(),
        rec.params.spin.into(),
        rec.iterations.into(),
        rec.final_residual.into(),
        rec.jacobian_det.into(),
        rec.stability_constant.into(),
        rec.spin_sign_ambiguous.into(),
    ]);
    Ok(t)
}

fn run_invert3(cfg: &RunConfig) -> Result<Table, CliError> {
    let u = require(cfg.u, "--U", "invert3")?;
    let v = require(cfg.v, "--V", "invert3")?;
    let w = require(cfg.w, "--W", "invert3")?;
    let ell = require(cfg.ell, "--ell", "invert3")?;
    let overtone = cfg.overtone.unwrap_or(0);
    let mut opts = kds::Invert3Options::default();
    if let Some(tol) = cfg.tol {
        opts.tol = tol;
    }
    if let Some(max_iter) = cfg.max_iter {
        opts.max_iter = max_iter;
    }
    if let Some(floor) = cfg.a_floor {
        opts.spin_floor = floor;
    }
    if let Some(lo) = cfg.lambda_lo {
        opts.lambda_range.0 = lo;
    }
    if let Some(hi) = cfg.lambda_hi {
        opts.lambda_range.1 = hi;
    }
    if let Some(count) = cfg.scan_count {
        opts.lambda_scan_count = count;
    }
    let data = sp::ThreeObservables { u, v, w_tilde: w };
    let rec = kds::newton_invert_three(&data, ell, overtone, &opts)?;
    let mut t = Table::new(vec![
        "u",
        "v",
        "w",
        "ell",
        "n",
        "m",
        "a",
        "lambda",
        "iterations",
        "residual",
        "jacobian_det",
        "stability_constant",
    ]);
    t.push(vec![
        u.into(),
        v.into(),
        w.into(),
        ell.into(),
        overtone.into(),
        rec.params.mass.into(),
        rec.params.spin.into(),
        rec.params.lambda.into(),
        rec.iterations.into(),
        rec.final_residual.into(),
        rec.jacobian_det.into(),
        rec.stability_constant.into(),
    ]);
    Ok(t)
}

fn run_scan_pmatrix(cfg: &RunConfig) -> Result<Table, CliError> {
    let rect = kds::RectangleSpec {
        m_min: require(cfg.m_min, "--M-min", "scan-pmatrix")?,
        m_max: require(cfg.m_max, "--M-max", "scan-pmatrix")?,
        a_min: require(cfg.a_min, "--a-min", "scan-pmatrix")?,
        a_max: require(cfg.a_max, "--a-max", "scan-pmatrix")?,
        grid_m: cfg.grid_m.unwrap_or(21),
        grid_a: cfg.grid_a.unwrap_or(21),
    };
    let lambda = require(cfg.lambda, "--Lambda", "scan-pmatrix")?;
    let ell = require(cfg.ell, "--ell", "scan-pmatrix")?;
    let overtone = cfg.overtone.unwrap_or(0);
    let probe_tol = cfg.probe_tol.unwrap_or(1e-9);
    let report = kds::p_matrix_rectangle_scan(&rect, lambda, ell, overtone, probe_tol)?;

    if cfg.per_node.unwrap_or(false) {
        let mut t = Table::new(vec!["m", "a", "minor_mu", "minor_av", "minor_det", "pass"]);
        for node in &report.nodes {
            t.push(vec![
                node.mass.into(),
                node.spin.into(),
                node.minor_mu.into(),
                node.minor_av.into(),
                node.minor_det.into(),
                node.pass.into(),
            ]);
        }
        return Ok(t);
    }

    let mut t = Table::new(vec![
        "m_min",
        "m_max",
        "a_min",
        "a_max",
        "grid_m",
        "grid_a",
        "lambda",
        "ell",
        "n",
        "pass",
        "minors_pass",
        "nodes_evaluated",
        "nodes_filtered",
        "worst_minor_mu",
        "worst_minor_av",
        "worst_minor_det",
        "min_image_separation",
        "collisions",
        "probe_tol",
    ]);
    t.push(vec![
        rect.m_min.into(),
        rect.m_max.into(),
        rect.a_min.into(),
        rect.a_max.into(),
        rect.grid_m.into(),
        rect.grid_a.into(),
        lambda.into(),
        ell.into(),
        overtone.into(),
        report.pass.into(),
        report.minors_pass.into(),
        report.nodes_evaluated.into(),
        report.nodes_filtered.into(),
        report.worst_minor_mu.into(),
        report.worst_minor_av.into(),
        report.worst_minor_det.into(),
        report.min_image_separation.into(),
        report.collisions.into(),
        report.probe_tol.into(),
    ]);
    Ok(t)
}

fn run_verify_series(cfg: &RunConfig) -> Result<Table, CliError> {
    let quantity = match require(cfg.quantity.as_deref(), "--quantity", "verify-series")? {
        "omega_plus" => FitQuantity::OmegaPlus,
        "lambda_plus" => FitQuantity::LambdaPlus,
        "r_plus" => FitQuantity::RPlus,
        "u_geo" => FitQuantity::UGeo,
        "v_geo" => FitQuantity::VGeo,
        other => {
            return Err(CliError::Usage(format!(
            "unknown quantity '{other}' (expected omega_plus, lambda_plus, r_plus, u_geo, v_geo)"
        )))
        }
    };
    let mass = require(cfg.mass, "--M", "verify-series")?;
    let lambda = require(cfg.lambda, "--Lambda", "verify-series")?;
    let grid = FitGrid {
        half_width: cfg.half_width.unwrap_or(0.02),
        points_per_side: cfg.points.unwrap_or(4),
    };
    let degree = cfg.degree.unwrap_or(4);
    let constrained = !cfg.unconstrained.unwrap_or(false);
    let report = kds::fit_series_coefficients(quantity, mass, lambda, &grid, degree, constrained)?;

    let mut t = Table::new(vec![
        "quantity",
        "m",
        "lambda",
        "degree",
        "parity_constrained",
        "order",
        "coefficient",
        "uncertainty",
        "reference",
        "discrepancy",
        "fit_residual",
        "condition",
    ]);
    for order in 0..report.coefficients.len() {
        let (reference, discrepancy) = match order {
            1 => (report.reference_c1, report.discrepancy_c1),
            2 => (report.reference_c2, report.discrepancy_c2),
            _ => (f64::NAN, f64::NAN),
        };
        t.push(vec![
            quantity.to_string().into(),
            mass.into(),
            lambda.into(),
            degree.into(),
            report.parity_constrained.into(),
            order.into(),
            report.coefficients[order].into(),
            report.uncertainties[order].into(),
            reference.into(),
            discrepancy.into(),
            report.fit_residual.into(),
            report.condition.into(),
        ]);
    }
    Ok(t)
}

fn run_noise_study(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = spacetime(cfg, "noise-study")?;
    let overtone = cfg.overtone.unwrap_or(0);
    let ells = cfg
        .ells
        .clone()
        .ok_or_else(|| CliError::Usage("--ells is required for noise-study".into()))?;
    let eps = cfg
        .eps
        .clone()
        .ok_or_else(|| CliError::Usage("--eps is required for noise-study".into()))?;
    let trials = cfg.trials.unwrap_or(32);
    let seed = cfg.seed.unwrap_or(42);
    let rows = kds::noise_propagation_study(
        p.mass, p.spin, p.lambda, overtone, &ells, &eps, trials, seed,
    )?;
    let mut t = Table::new(vec![
        "m",
        "a",
        "lambda",
        "n",
        "ell",
        "eps",
        "trials",
        "seed",
        "max_error",
        "error_ell_over_eps",
        "stability_constant",
    ]);
    for row in rows {
        t.push(vec![
            p.mass.into(),
            p.spin.into(),
            p.lambda.into(),
            overtone.into(),
            row.ell.into(),
            row.eps.into(),
            trials.into(),
            Cell::I(seed as i64),
            row.max_error.into(),
            row.error_ell_over_eps.into(),
            row.stability_constant.into(),
        ]);
    }
    Ok(t)
}
