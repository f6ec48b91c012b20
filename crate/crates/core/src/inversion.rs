//! Parameter recovery from observable vectors: closed-form seeds, Newton
//! refinement in two and three parameters, unlabeled recovery, stability
//! constants over parameter grids, and the rectangle injectivity scan.
//!
//! The two-parameter seed is exact at leading order:
//!
//! ```text
//! M0 = 1 / (3 sqrt(Lambda + 3 U^2)),    a0 = V / c_Z(M0),
//! ```
//!
//! with error `O(a^2) + O(1/ell)`, after which Newton converges
//! quadratically because the observable-map Jacobian is uniformly
//! nondegenerate on slow-rotation sets (its determinant at `a = 0` is
//! `Omega_ph'(M) c_Z(M) < 0`).

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::metric::SpacetimeParams;
use crate::orbit::{
    closed_form_coefficients, omega_param_derivative, solve_circular_orbit, Branch,
};
use crate::spectrum::{three_map, two_mode_map, ThreeObservables, TwoModeObservables};
use crate::{Error, Result};

/// Leading-order inverse of the two-mode package.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub mass: f64,
    pub spin: f64,
}

/// `M0 = 1/(3 sqrt(Lambda + 3 U^2))`, `a0 = V / c_Z(M0)`.  Exact formula
/// evaluation; fails with [`Error::OutOfRange`] when the resulting mass
/// violates `9 Lambda M0^2 < 1` (which happens only for degenerate input
/// `U = 0`).
pub fn closed_form_seed(u: f64, v: f64, lambda: f64) -> Result<Seed> {
    let radicand = lambda + 3.0 * u * u;
    if !(radicand > 0.0) {
        return Err(Error::OutOfRange(format!(
            "Lambda + 3 U^2 = {radicand} must be > 0"
        )));
    }
    let mass = 1.0 / (3.0 * radicand.sqrt());
    // 9 Lambda M0^2 = Lambda / (Lambda + 3 U^2) reaches 1 only for the
    // degenerate input U = 0; the epsilon margin keeps the rejection
    // deterministic under rounding.
    if 1.0 - 9.0 * lambda * mass * mass <= f64::EPSILON {
        return Err(Error::OutOfRange(format!(
            "seed mass {mass} fails 9 Lambda M^2 < 1"
        )));
    }
    let c_z = (2.0 + 9.0 * lambda * mass * mass) / (27.0 * mass * mass);
    Ok(Seed {
        mass,
        spin: v / c_z,
    })
}

/// How the tangent map of the observables is obtained during Newton
/// refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Central differences on the observable map.
    FiniteDifference,
    /// Implicit-function derivative of `(r, Omega)` through the orbit
    /// solver, chained into the observables.
    AnalyticChain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMode,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 30,
            jacobian: JacobianMode::FiniteDifference,
            fd_step: 1e-6,
        }
    }
}

/// Recovered parameters with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconResult {
    pub params: SpacetimeParams,
    pub iterations: usize,
    pub final_residual: f64,
    /// Determinant of the observable-map Jacobian at the solution.
    pub jacobian_det: f64,
    /// `||J|| / |det J|`, the local data-to-parameter amplification bound.
    pub stability_constant: f64,
    /// Set by [`unlabeled_invert`]: the sign of the spin is undetermined.
    pub spin_sign_ambiguous: bool,
}

fn two_map_vec(mass: f64, spin: f64, lambda: f64, overtone: u32, ell: u32) -> Result<Vector2<f64>> {
    let p = SpacetimeParams::new(mass, spin, lambda)?;
    let obs = two_mode_map(&p, overtone, ell)?;
    Ok(Vector2::new(obs.u, obs.v))
}

fn two_map_jacobian(
    mass: f64,
    spin: f64,
    lambda: f64,
    overtone: u32,
    ell: u32,
    opts: &InvertOptions,
) -> Result<Matrix2<f64>> {
    match opts.jacobian {
        JacobianMode::FiniteDifference => {
            let h_m = opts.fd_step * mass.abs().max(1.0);
            let h_a = opts.fd_step * spin.abs().max(1.0);
            let dm = (two_map_vec(mass + h_m, spin, lambda, overtone, ell)?
                - two_map_vec(mass - h_m, spin, lambda, overtone, ell)?)
                / (2.0 * h_m);
            let da = (two_map_vec(mass, spin + h_a, lambda, overtone, ell)?
                - two_map_vec(mass, spin - h_a, lambda, overtone, ell)?)
                / (2.0 * h_a);
            Ok(Matrix2::new(dm.x, da.x, dm.y, da.y))
        }
        JacobianMode::AnalyticChain => {
            let p = SpacetimeParams::new(mass, spin, lambda)?;
            let scale = (ell as f64 + 0.5) / ell as f64;
            let co = solve_circular_orbit(&p, Branch::Co)?;
            let counter = solve_circular_orbit(&p, Branch::Counter)?;
            let (dco_dm, dco_da) = omega_param_derivative(&p, &co);
            let (dct_dm, dct_da) = omega_param_derivative(&p, &counter);
            // Omega_sharp_+ = Omega_co, Omega_sharp_- = -Omega_counter:
            // U = s (Omega_co - Omega_counter)/2, V = s (Omega_co + Omega_counter)/2.
            let du_dm = scale * (dco_dm - dct_dm) / 2.0;
            let du_da = scale * (dco_da - dct_da) / 2.0;
            let dv_dm = scale * (dco_dm + dct_dm) / 2.0;
            let dv_da = scale * (dco_da + dct_da) / 2.0;
            Ok(Matrix2::new(du_dm, du_da, dv_dm, dv_da))
        }
    }
}

/// Newton refinement of `(M, a)` from the two-mode package at fixed
/// `Lambda`.  Aborts with [`Error::SingularJacobian`] when the Jacobian
/// determinant drops below half of its leading value
/// `|Omega_ph'(M) c_Z(M)|`.
pub fn newton_invert_two(
    data: &TwoModeObservables,
    lambda: f64,
    ell: u32,
    overtone: u32,
    opts: &InvertOptions,
) -> Result<ReconResult> {
    if ell == 0 {
        return Err(Error::OutsideAdmissible("ell must be >= 1".into()));
    }
    let seed = closed_form_seed(data.u, data.v, lambda)?;
    let target = Vector2::new(data.u, data.v);
    let (mut mass, mut spin) = (seed.mass, seed.spin);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for _ in 0..=opts.max_iter {
        let f = two_map_vec(mass, spin, lambda, overtone, ell)? - target;
        residual = f.amax();
        if residual <= opts.tol {
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        let j = two_map_jacobian(mass, spin, lambda, overtone, ell, opts)?;
        let det = j.m11 * j.m22 - j.m12 * j.m21;
        let coeffs = closed_form_coefficients(mass, lambda)?;
        let guard = 0.5 * (coeffs.omega_ph_prime * coeffs.c_z).abs();
        if det.abs() < guard {
            return Err(Error::SingularJacobian(format!(
                "|det J| = {:e} below guard {guard:e}",
                det.abs()
            )));
        }
        let dm = (f.x * j.m22 - j.m12 * f.y) / det;
        let da = (j.m11 * f.y - j.m21 * f.x) / det;
        mass -= dm;
        spin -= da;
        iterations += 1;
    }

    if residual > opts.tol {
        return Err(Error::NoConvergence(format!(
            "two-parameter Newton residual {residual:e} > {:e} after {iterations} iterations",
            opts.tol
        )));
    }

    let j = two_map_jacobian(mass, spin, lambda, overtone, ell, opts)?;
    let det = j.m11 * j.m22 - j.m12 * j.m21;
    Ok(ReconResult {
        params: SpacetimeParams::new(mass, spin, lambda)?,
        iterations,
        final_residual: residual,
        jacobian_det: det,
        stability_constant: j.singular_values().max() / det.abs(),
        spin_sign_ambiguous: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invert3Options {
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds with `|a0|` below this floor are rejected: the
    /// three-parameter Jacobian vanishes like `a^2` at the axis.
    pub spin_floor: f64,
    /// Log-spaced scan range used to initialize `Lambda`.
    pub lambda_range: (f64, f64),
    pub lambda_scan_count: usize,
    pub fd_step: f64,
}

impl Default for Invert3Options {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 30,
            spin_floor: 0.05,
            lambda_range: (1e-3, 0.1),
            lambda_scan_count: 8,
            fd_step: 1e-6,
        }
    }
}

fn three_map_vec(x: &[f64; 3], overtone: u32, ell: u32) -> Result<DVector<f64>> {
    let p = SpacetimeParams::new(x[0], x[1], x[2])?;
    let obs = three_map(&p, overtone, ell)?;
    Ok(DVector::from_vec(vec![obs.u, obs.v, obs.w_tilde]))
}

/// Leading coefficient of the three-parameter Jacobian determinant,
/// `det D H = 5 (9 Lambda M^2 - 4) / (1458 M^5) * a^2 + O(a^3)`.
pub(crate) fn three_det_leading(mass: f64, lambda: f64) -> f64 {
    5.0 * (9.0 * lambda * mass * mass - 4.0) / (1458.0 * mass.powi(5))
}

/// Newton recovery of `(M, a, Lambda)` from `(U, V, W_tilde)`.
///
/// `Lambda` has no closed-form seed; a coarse log-spaced scan picks the
/// trials minimizing the data residual, and Newton (with step halving
/// whenever a full step would increase the residual) refines from there.
/// Near the axis the determinant degenerates like `a^2` and the solver
/// refuses to run.
pub fn newton_invert_three(
    data: &ThreeObservables,
    ell: u32,
    overtone: u32,
    opts: &Invert3Options,
) -> Result<ReconResult> {
    if ell == 0 {
        return Err(Error::OutsideAdmissible("ell must be >= 1".into()));
    }
    let target = DVector::from_vec(vec![data.u, data.v, data.w_tilde]);

    let (lo, hi) = opts.lambda_range;
    if !(lo > 0.0 && hi > lo && opts.lambda_scan_count >= 2) {
        return Err(Error::OutsideAdmissible(format!(
            "bad Lambda scan range ({lo}, {hi})"
        )));
    }
    let ratio = (hi / lo).powf(1.0 / (opts.lambda_scan_count as f64 - 1.0));
    let mut trials: Vec<(f64, [f64; 3])> = Vec::new();
    for k in 0..opts.lambda_scan_count {
        let lambda = lo * ratio.powi(k as i32);
        let Ok(seed) = closed_form_seed(data.u, data.v, lambda) else {
            continue;
        };
        let x = [seed.mass, seed.spin, lambda];
        let Ok(f) = three_map_vec(&x, overtone, ell) else {
            continue;
        };
        trials.push(((&f - &target).amax(), x));
    }
    if trials.is_empty() {
        return Err(Error::NoConvergence(
            "no admissible Lambda trial in the scan range".into(),
        ));
    }
    trials.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    if trials[0].1[1].abs() < opts.spin_floor {
        return Err(Error::NearDegenerate(format!(
            "seed |a| = {:e} below floor {:e}; det D H ~ a^2 degenerates there",
            trials[0].1[1].abs(),
            opts.spin_floor
        )));
    }

    let mut last_err: Option<Error> = None;
    for (_, start) in trials.iter().take(3) {
        match newton_three_from(*start, &target, overtone, ell, opts) {
            Ok(result) => return Ok(result),
            Err(e @ Error::NearDegenerate(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("three-parameter Newton failed".into())))
}

fn newton_three_from(
    mut x: [f64; 3],
    target: &DVector<f64>,
    overtone: u32,
    ell: u32,
    opts: &Invert3Options,
) -> Result<ReconResult> {
    let jacobian = |x: &[f64; 3]| -> Result<DMatrix<f64>> {
        let spec = StepSpec {
            relative_step: opts.fd_step,
            richardson: false,
            lower_bounds: Some(vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0]),
        };
        numeric_jacobian(
            |y| {
                let v = three_map_vec(&[y[0], y[1], y[2]], overtone, ell)?;
                Ok(v.iter().copied().collect())
            },
            &x[..],
            &spec,
        )
    };

    let mut iterations = 0;
    let mut f = three_map_vec(&x, overtone, ell)? - target;
    let mut residual = f.amax();

    while residual > opts.tol && iterations < opts.max_iter {
        let j = jacobian(&x)?;
        let det = det3(&j);
        let guard = 0.1 * three_det_leading(x[0], x[2]).abs() * x[1] * x[1];
        if det.abs() < guard {
            return Err(Error::NearDegenerate(format!(
                "|det D H| = {:e} below guard {guard:e}",
                det.abs()
            )));
        }
        let step = j
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::NearDegenerate("singular three-parameter Jacobian".into()))?;

        let mut factor = 1.0;
        let mut advanced = false;
        for _ in 0..8 {
            let cand = [
                x[0] - factor * step[0],
                x[1] - factor * step[1],
                x[2] - factor * step[2],
            ];
            if let Ok(fc) = three_map_vec(&cand, overtone, ell) {
                let rc = (&fc - target).amax();
                if rc < residual {
                    x = cand;
                    f = fc - target;
                    residual = rc;
                    advanced = true;
                    break;
                }
            }
            factor *= 0.5;
        }
        iterations += 1;
        if !advanced {
            break;
        }
    }

    if residual > opts.tol {
        return Err(Error::NoConvergence(format!(
            "three-parameter Newton residual {residual:e} > {:e}",
            opts.tol
        )));
    }

    let j = jacobian(&x)?;
    let det = det3(&j);
    Ok(ReconResult {
        params: SpacetimeParams::new(x[0], x[1], x[2])?,
        iterations,
        final_residual: residual,
        jacobian_det: det,
        stability_constant: j.singular_values().max() / det.abs(),
        spin_sign_ambiguous: false,
    })
}

fn det3(j: &DMatrix<f64>) -> f64 {
    j[(0, 0)] * (j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)])
        - j[(0, 1)] * (j[(1, 0)] * j[(2, 2)] - j[(1, 2)] * j[(2, 0)])
        + j[(0, 2)] * (j[(1, 0)] * j[(2, 1)] - j[(1, 1)] * j[(2, 0)])
}

/// Recovery of `(M, |a|)` from the unordered equatorial pair.  Unlabeled
/// data cannot fix the sign of the spin; the non-negative representative
/// is reported and the ambiguity flagged (absent only when `|V| = 0`).
pub fn unlabeled_invert(
    u: f64,
    abs_v: f64,
    lambda: f64,
    ell: u32,
    overtone: u32,
    opts: &InvertOptions,
) -> Result<ReconResult> {
    let data = TwoModeObservables { u, v: abs_v.abs() };
    let mut result = newton_invert_two(&data, lambda, ell, overtone, opts)?;
    result.params.spin = result.params.spin.abs();
    result.spin_sign_ambiguous = abs_v != 0.0;
    Ok(result)
}

/// Step control for [`numeric_jacobian`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepSpec {
    /// Step per coordinate is `relative_step * max(1, |x_j|)`.
    pub relative_step: f64,
    /// Halve the step once and extrapolate the two estimates.
    pub richardson: bool,
    /// Coordinates at their lower bound switch to a one-sided
    /// second-order difference; `None` means central everywhere.
    pub lower_bounds: Option<Vec<f64>>,
}

impl Default for StepSpec {
    fn default() -> Self {
        Self {
            relative_step: 1e-6,
            richardson: false,
            lower_bounds: None,
        }
    }
}

/// Central-difference Jacobian of `map` at `at`, one column per
/// coordinate.  A coordinate whose downward step would cross its lower
/// bound uses the second-order forward formula
/// `(-3 f(x) + 4 f(x+h) - f(x+2h)) / (2h)` instead.
pub fn numeric_jacobian<F>(map: F, at: &[f64], spec: &StepSpec) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let jac_at_step = |h_scale: f64| -> Result<DMatrix<f64>> {
        let base = map(at)?;
        let rows = base.len();
        let mut j = DMatrix::zeros(rows, at.len());
        for col in 0..at.len() {
            let h = h_scale * spec.relative_step * at[col].abs().max(1.0);
            let lb = spec
                .lower_bounds
                .as_ref()
                .map_or(f64::NEG_INFINITY, |b| b[col]);
            let column: Vec<f64> = if at[col] - h < lb {
                let mut x1 = at.to_vec();
                x1[col] += h;
                let f1 = map(&x1)?;
                let mut x2 = at.to_vec();
                x2[col] += 2.0 * h;
                let f2 = map(&x2)?;
                (0..rows)
                    .map(|i| (-3.0 * base[i] + 4.0 * f1[i] - f2[i]) / (2.0 * h))
                    .collect()
            } else {
                let mut xp = at.to_vec();
                xp[col] += h;
                let fp = map(&xp)?;
                let mut xm = at.to_vec();
                xm[col] -= h;
                let fm = map(&xm)?;
                (0..rows).map(|i| (fp[i] - fm[i]) / (2.0 * h)).collect()
            };
            for (i, v) in column.into_iter().enumerate() {
                j[(i, col)] = v;
            }
        }
        Ok(j)
    };

    let j_full = jac_at_step(1.0)?;
    if !spec.richardson {
        return Ok(j_full);
    }
    let j_half = jac_at_step(0.5)?;
    Ok((j_half * 4.0 - j_full) / 3.0)
}

/// Which two-parameter observable map a grid study runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoParamMap {
    /// The `ell -> infinity` limit `(U_geo, V_geo)` built from the orbit
    /// frequencies alone.
    Geometric { lambda: f64 },
    /// The finite-`ell` two-mode package.
    Pseudopole {
        lambda: f64,
        ell: u32,
        overtone: u32,
    },
}

impl TwoParamMap {
    pub fn eval(&self, mass: f64, spin: f64) -> Result<[f64; 2]> {
        match *self {
            TwoParamMap::Geometric { lambda } => {
                let p = SpacetimeParams::new(mass, spin, lambda)?;
                let plus = crate::orbit::omega_sharp(&p, Branch::Co)?;
                let minus = crate::orbit::omega_sharp(&p, Branch::Counter)?;
                Ok([(plus + minus) / 2.0, (plus - minus) / 2.0])
            }
            TwoParamMap::Pseudopole {
                lambda,
                ell,
                overtone,
            } => {
                let p = SpacetimeParams::new(mass, spin, lambda)?;
                let obs = two_mode_map(&p, overtone, ell)?;
                Ok([obs.u, obs.v])
            }
        }
    }

    pub fn jacobian(&self, mass: f64, spin: f64, spec: &StepSpec) -> Result<DMatrix<f64>> {
        numeric_jacobian(
            |x| self.eval(x[0], x[1]).map(|v| v.to_vec()),
            &[mass, spin],
            spec,
        )
    }
}

/// Rectangular `(M, a)` grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleSpec {
    pub m_min: f64,
    pub m_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub grid_m: usize,
    pub grid_a: usize,
}

impl RectangleSpec {
    fn axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        if count <= 1 || lo == hi {
            return vec![lo];
        }
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    }

    pub fn m_values(&self) -> Vec<f64> {
        Self::axis(self.m_min, self.m_max, self.grid_m)
    }

    pub fn a_values(&self) -> Vec<f64> {
        Self::axis(self.a_min, self.a_max, self.grid_a)
    }
}

/// Grid extrema of the observable-map Jacobian: `c_star = min |det J|`,
/// `l_star = max ||J||`, `c_big_star = l_star / c_star`.  Sample bounds on
/// a finite grid, not certified constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub c_star: f64,
    pub l_star: f64,
    pub c_big_star: f64,
    pub nodes_evaluated: usize,
    pub nodes_filtered: usize,
}

pub fn stability_constants(
    map: &TwoParamMap,
    rect: &RectangleSpec,
    spec: &StepSpec,
) -> Result<StabilityConstants> {
    let mut c_star = f64::INFINITY;
    let mut l_star: f64 = 0.0;
    let mut evaluated = 0;
    let mut filtered = 0;
    for m in rect.m_values() {
        for a in rect.a_values() {
            match map.jacobian(m, a, spec) {
                Ok(j) => {
                    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
                    c_star = c_star.min(det.abs());
                    l_star = l_star.max(j.singular_values().max());
                    evaluated += 1;
                }
                Err(_) => filtered += 1,
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyRegion(format!(
            "all {filtered} grid nodes inadmissible"
        )));
    }
    Ok(StabilityConstants {
        c_star,
        l_star,
        c_big_star: l_star / c_star,
        nodes_evaluated: evaluated,
        nodes_filtered: filtered,
    })
}

/// One node of the rectangle scan with the three sign conditions
/// `-dU/dM > 0`, `dV/da > 0`, `-det DG > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PMatrixNode {
    pub mass: f64,
    pub spin: f64,
    pub minor_mu: f64,
    pub minor_av: f64,
    pub minor_det: f64,
    pub pass: bool,
}

/// Result of [`p_matrix_rectangle_scan`].  `minors_pass` certifies the
/// sign conditions at every evaluated node; `collisions` counts grid-image
/// pairs closer than the probe tolerance; `pass` requires both.
#[derive(Debug, Clone, PartialEq)]
pub struct PMatrixReport {
    pub pass: bool,
    pub minors_pass: bool,
    pub nodes_evaluated: usize,
    pub nodes_filtered: usize,
    /// Some requested nodes were dropped as inadmissible.
    pub truncated: bool,
    pub worst_minor_mu: f64,
    pub worst_minor_av: f64,
    pub worst_minor_det: f64,
    pub min_image_separation: f64,
    pub collisions: usize,
    pub probe_tol: f64,
    pub nodes: Vec<PMatrixNode>,
}

/// Univalence scan: after the sign change `(U, V) -> (-U, V)` the two-mode
/// map has a P-matrix Jacobian wherever `-dU/dM`, `dV/da` and `-det` are
/// all strictly positive, which makes it injective on the rectangle.  A
/// brute-force collision probe over the grid images backs the minors.
pub fn p_matrix_rectangle_scan(
    rect: &RectangleSpec,
    lambda: f64,
    ell: u32,
    overtone: u32,
    probe_tol: f64,
) -> Result<PMatrixReport> {
    let map = TwoParamMap::Pseudopole {
        lambda,
        ell,
        overtone,
    };
    let spec = StepSpec::default();
    let mut nodes = Vec::new();
    let mut images = Vec::new();
    let mut filtered = 0;

    for m in rect.m_values() {
        for a in rect.a_values() {
            let (j, image) = match (map.jacobian(m, a, &spec), map.eval(m, a)) {
                (Ok(j), Ok(img)) => (j, img),
                _ => {
                    filtered += 1;
                    continue;
                }
            };
            let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
            let node = PMatrixNode {
                mass: m,
                spin: a,
                minor_mu: -j[(0, 0)],
                minor_av: j[(1, 1)],
                minor_det: -det,
                pass: -j[(0, 0)] > 0.0 && j[(1, 1)] > 0.0 && -det > 0.0,
            };
            nodes.push(node);
            images.push(image);
        }
    }

    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!(
            "all {filtered} rectangle nodes inadmissible"
        )));
    }

    let mut min_sep = f64::INFINITY;
    let mut collisions = 0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            let dist = (images[i][0] - images[j][0]).hypot(images[i][1] - images[j][1]);
            min_sep = min_sep.min(dist);
            if dist < probe_tol {
                collisions += 1;
            }
        }
    }

    let minors_pass = nodes.iter().all(|n| n.pass);
    let worst = |f: fn(&PMatrixNode) -> f64| nodes.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(PMatrixReport {
        pass: minors_pass && collisions == 0,
        minors_pass,
        nodes_evaluated: nodes.len(),
        nodes_filtered: filtered,
        truncated: filtered > 0,
        worst_minor_mu: worst(|n| n.minor_mu),
        worst_minor_av: worst(|n| n.minor_av),
        worst_minor_det: worst(|n| n.minor_det),
        min_image_separation: min_sep,
        collisions,
        probe_tol,
        nodes,
    })
}
