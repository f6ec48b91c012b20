//! Equatorial photon-orbit ringdown toolkit for Kerr-de Sitter black holes.
//!
//! The crate models the high-frequency equatorial ringdown of a rotating
//! black hole with positive cosmological constant through its unstable
//! circular photon orbits: orbital frequencies set the oscillation of the
//! modes, Lyapunov exponents set the damping.  On top of the forward model
//! it provides the inverse pipeline that recovers `(M, a)` - and, with one
//! damping observable added, `(M, a, Lambda)` - from finite mode packages,
//! plus a verification harness for every closed-form expansion coefficient
//! used along the way.
//!
//! Modules:
//! - [`metric`]: parameter vectors, the horizon quartic and its roots,
//!   equatorial metric coefficients.
//! - [`orbit`]: circular photon orbits on both rotation branches, radial
//!   potential, Lyapunov exponents, closed-form small-spin coefficients.
//! - [`spectrum`]: synthesized complex mode frequencies and the real
//!   observable maps built from them, with optional measurement noise.
//! - [`inversion`]: closed-form seeds, Newton refinement in two and three
//!   parameters, stability constants, rectangle injectivity scans.
//! - [`verify`]: series-coefficient fitting, Jacobian determinant limits,
//!   and the noise-propagation study.
//!
//! Geometric units `G = c = 1` throughout.  All operations are pure
//! functions of their inputs and safe to call concurrently.
//!
//! Forward-then-invert round trip:
//!
//! ```
//! use kds_ringdown::{
//!     newton_invert_two, two_mode_map, InvertOptions, SpacetimeParams,
//! };
//!
//! let truth = SpacetimeParams::new(1.0, 0.05, 0.04)?;
//! let data = two_mode_map(&truth, 0, 100)?;
//! let rec = newton_invert_two(&data, 0.04, 100, 0, &InvertOptions::default())?;
//! assert!((rec.params.mass - 1.0).abs() < 1e-10);
//! assert!((rec.params.spin - 0.05).abs() < 1e-10);
//! # Ok::<(), kds_ringdown::Error>(())
//! ```

// NaN-rejecting guards: `!(x > 0.0)` is true for NaN, `x <= 0.0` is not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod inversion;
pub mod metric;
pub mod orbit;
pub mod spectrum;
pub mod verify;

pub use num_complex::Complex64;

pub use inversion::{
    closed_form_seed, newton_invert_three, newton_invert_two, numeric_jacobian,
    p_matrix_rectangle_scan, stability_constants, unlabeled_invert, Invert3Options, InvertOptions,
    JacobianMode, PMatrixReport, ReconResult, RectangleSpec, Seed, StabilityConstants, StepSpec,
    TwoParamMap,
};
pub use metric::{
    equatorial_metric, evaluate_delta_r, horizon_roots, is_subextremal, AdmissibilityReport,
    DerivOrder, EquatorialMetric, HorizonData, SpacetimeParams,
};
pub use orbit::{
    closed_form_coefficients, lyapunov_exponent, null_quadratic, omega_sharp,
    radial_potential_suite, solve_circular_orbit, solve_circular_orbit_rb, Branch, CircularOrbit,
    RadialPotential, SeriesCoefficients,
};
pub use spectrum::{
    apply_noise, single_mode_map, synthesize_pseudopole, three_map, two_mode_map,
    unlabeled_observables, ModeIndex, NoiseSpec, Pseudopole, ThreeObservables, TwoModeObservables,
};
pub use verify::{
    fit_series_coefficients, jacobian_det_limit_check, noise_propagation_study, DetLimitReport,
    FitGrid, FitQuantity, NoiseStudyRow, SeriesFitReport,
};

/// Errors shared across the crate.  Domain failures carry a short
/// diagnostic naming the violated condition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The horizon quartic does not have the four distinct real roots of a
    /// subextremal configuration.
    #[error("not subextremal: {0}")]
    NotSubextremal(String),
    /// Two horizon roots are closer than the near-extremality guard.
    #[error("degenerate horizon roots: {0}")]
    DegenerateRoot(String),
    /// Newton iteration stalled before reaching its residual target.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// The orbit-system Jacobian fell below the slow-rotation guard.
    #[error("degenerate orbit Jacobian: {0}")]
    DegenerateJacobian(String),
    /// A radial evaluation was requested at or outside the horizons.
    #[error("radius outside the exterior region: {0}")]
    HorizonEvaluation(String),
    /// The radial potential has non-positive curvature at the orbit.
    #[error("non-positive potential curvature: {0}")]
    NegativeCurvature(String),
    /// Parameters fall outside the admissible family.
    #[error("outside admissible range: {0}")]
    OutsideAdmissible(String),
    /// A closed-form seed landed outside the admissible range.
    #[error("seed out of range: {0}")]
    OutOfRange(String),
    /// The observable-map Jacobian is too close to singular to invert.
    #[error("near-singular Jacobian: {0}")]
    SingularJacobian(String),
    /// The three-parameter map is degenerate (spin too close to zero).
    #[error("near-degenerate three-parameter map: {0}")]
    NearDegenerate(String),
    /// A grid study found no admissible nodes.
    #[error("empty region: {0}")]
    EmptyRegion(String),
    /// A least-squares fit was rejected as ill conditioned.
    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
