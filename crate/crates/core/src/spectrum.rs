//! Synthesized equatorial mode frequencies and the real observable maps
//! built from them.
//!
//! The model frequency of the equatorial mode `(n, ell)` on a branch is
//!
//! ```text
//! omega = Omega_sharp * (ell + 1/2) - i (n + 1/2) * lambda,
//! ```
//!
//! with `Omega_sharp` the positive branch frequency and `lambda` the branch
//! Lyapunov exponent.  The `(ell + 1/2)` factor against the `1/ell`
//! normalization of the observables injects a known `O(1/ell)` offset that
//! the inversion layer has to tolerate; it is deliberate.  Measurement
//! error enters only through [`NoiseSpec`].

use num_complex::Complex64;

use crate::metric::SpacetimeParams;
use crate::orbit::{solve_circular_orbit, Branch};
use crate::{Error, Result};

/// Mode label: overtone `n >= 0`, angular momentum `ell >= 1`, and the
/// equatorial branch (azimuthal index `+ell` or `-ell`).
///
/// Any overtone is accepted; fidelity of the synthesized frequency as a
/// mode approximation degrades once `n` is not small against `sqrt(ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    pub overtone: u32,
    pub ell: u32,
    pub branch: Branch,
}

impl ModeIndex {
    pub fn new(overtone: u32, ell: u32, branch: Branch) -> Result<Self> {
        if ell == 0 {
            return Err(Error::OutsideAdmissible("ell must be >= 1".into()));
        }
        Ok(Self {
            overtone,
            ell,
            branch,
        })
    }
}

/// One synthesized complex mode frequency; `Re > 0`, `Im < 0` in the
/// admissible regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pseudopole {
    pub omega: Complex64,
}

/// The two-mode real-part package `(U, V)`:
/// `U = Re((omega_+ + omega_-)/(2 ell))`, `V = Re((omega_+ - omega_-)/(2 ell))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeObservables {
    pub u: f64,
    pub v: f64,
}

/// `(U, V)` extended by the normalized damping observable
/// `W_tilde = -Im(omega_+)/(n + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeObservables {
    pub u: f64,
    pub v: f64,
    pub w_tilde: f64,
}

/// Additive frequency measurement errors for the two equatorial branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub eta_plus: Complex64,
    pub eta_minus: Complex64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            eta_plus: Complex64::new(0.0, 0.0),
            eta_minus: Complex64::new(0.0, 0.0),
        }
    }
}

/// Synthesizes the model frequency for one mode.  The overtone enters
/// only the imaginary part; the real part is `n`-independent.
pub fn synthesize_pseudopole(params: &SpacetimeParams, mode: &ModeIndex) -> Result<Pseudopole> {
    if mode.ell == 0 {
        return Err(Error::OutsideAdmissible("ell must be >= 1".into()));
    }
    let orbit = solve_circular_orbit(params, mode.branch)?;
    let omega_sharp = mode.branch.sign() * orbit.omega;
    let re = omega_sharp * (mode.ell as f64 + 0.5);
    let im = -(mode.overtone as f64 + 0.5) * orbit.lyapunov;
    Ok(Pseudopole {
        omega: Complex64::new(re, im),
    })
}

/// Both equatorial branch frequencies at `(n, ell)`.
pub fn equatorial_pair(
    params: &SpacetimeParams,
    overtone: u32,
    ell: u32,
) -> Result<(Pseudopole, Pseudopole)> {
    let plus = synthesize_pseudopole(params, &ModeIndex::new(overtone, ell, Branch::Co)?)?;
    let minus = synthesize_pseudopole(params, &ModeIndex::new(overtone, ell, Branch::Counter)?)?;
    Ok((plus, minus))
}

/// `(U, V)` from a pair of complex frequencies; the entry point for
/// noise-perturbed data.
pub fn two_mode_from_frequencies(
    omega_plus: Complex64,
    omega_minus: Complex64,
    ell: u32,
) -> TwoModeObservables {
    let two_ell = 2.0 * ell as f64;
    TwoModeObservables {
        u: (omega_plus.re + omega_minus.re) / two_ell,
        v: (omega_plus.re - omega_minus.re) / two_ell,
    }
}

/// `(W_tilde, U_plus)` from a single co-rotating frequency.
pub fn single_mode_from_frequency(omega_plus: Complex64, overtone: u32, ell: u32) -> (f64, f64) {
    (
        -omega_plus.im / (overtone as f64 + 0.5),
        omega_plus.re / ell as f64,
    )
}

pub fn three_from_frequencies(
    omega_plus: Complex64,
    omega_minus: Complex64,
    overtone: u32,
    ell: u32,
) -> ThreeObservables {
    let two = two_mode_from_frequencies(omega_plus, omega_minus, ell);
    let (w_tilde, _) = single_mode_from_frequency(omega_plus, overtone, ell);
    ThreeObservables {
        u: two.u,
        v: two.v,
        w_tilde,
    }
}

/// The equatorial two-mode package at `(n, ell)`.
pub fn two_mode_map(
    params: &SpacetimeParams,
    overtone: u32,
    ell: u32,
) -> Result<TwoModeObservables> {
    let (plus, minus) = equatorial_pair(params, overtone, ell)?;
    Ok(two_mode_from_frequencies(plus.omega, minus.omega, ell))
}

/// The single-mode observables `(W_tilde, U_plus)`.
///
/// In the noise-free model the `(n + 1/2)` normalization of `W_tilde`
/// cancels identically against the synthesis, so `W_tilde` is taken
/// directly from the orbit's Lyapunov exponent; the noisy path in
/// [`single_mode_from_frequency`] performs the division.
pub fn single_mode_map(params: &SpacetimeParams, overtone: u32, ell: u32) -> Result<(f64, f64)> {
    let mode = ModeIndex::new(overtone, ell, Branch::Co)?;
    let orbit = solve_circular_orbit(params, Branch::Co)?;
    let u_plus = orbit.omega * (mode.ell as f64 + 0.5) / mode.ell as f64;
    Ok((orbit.lyapunov, u_plus))
}

/// The three-component map `(U, V, W_tilde)`.
pub fn three_map(params: &SpacetimeParams, overtone: u32, ell: u32) -> Result<ThreeObservables> {
    let two = two_mode_map(params, overtone, ell)?;
    let (w_tilde, _) = single_mode_map(params, overtone, ell)?;
    Ok(ThreeObservables {
        u: two.u,
        v: two.v,
        w_tilde,
    })
}

/// The unlabeled package `(U, |V|)` available when the branch labels of the
/// two equatorial frequencies are unknown.
pub fn unlabeled_observables(
    params: &SpacetimeParams,
    overtone: u32,
    ell: u32,
) -> Result<(f64, f64)> {
    let two = two_mode_map(params, overtone, ell)?;
    Ok((two.u, two.v.abs()))
}

/// Adds the measurement errors to a frequency pair.  Downstream observables
/// are recomputed from the perturbed values via `*_from_frequencies`.
pub fn apply_noise(pair: (Pseudopole, Pseudopole), noise: &NoiseSpec) -> (Pseudopole, Pseudopole) {
    (
        Pseudopole {
            omega: pair.0.omega + noise.eta_plus,
        },
        Pseudopole {
            omega: pair.1.omega + noise.eta_minus,
        },
    )
}
