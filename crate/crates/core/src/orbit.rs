//! Equatorial circular photon orbits, their Lyapunov exponents, and the
//! closed-form small-spin expansion coefficients.
//!
//! A stationary circular curve `t -> (t, r, pi/2, Omega t)` is null when
//! `Phi(r, Omega) = g_tt + 2 Omega g_tphi + Omega^2 g_phiphi` vanishes and
//! is a geodesic when additionally `dPhi/dr = 0`.  The two solutions near
//! `(3M, +-Omega_ph)` are the co- and counter-rotating photon orbits.  The
//! same orbits arise as double roots of the radial potential
//! `R(r) = ((r^2+a^2) - a Xi b)^2 - Delta_r (Xi b - a)^2` at fixed impact
//! parameter `b = 1/Omega`; both formulations are implemented and must
//! agree, which is one of the stronger internal consistency checks.

use crate::metric::{
    delta_r, delta_r_prime, delta_r_second, horizon_roots, metric_jet, SpacetimeParams,
};
use crate::{Error, Result};

/// Residual target for the orbit Newton iterations.
const ORBIT_TOL: f64 = 1e-12;
const ORBIT_MAX_ITER: usize = 50;
/// Continuation step in the spin parameter, in units of `M`.
const CONTINUATION_STEP: f64 = 0.02;

/// Rotation branch of an equatorial orbit: co-rotating (`Omega > 0` near
/// `a = 0`) or counter-rotating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Co,
    Counter,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Co => 1.0,
            Branch::Counter => -1.0,
        }
    }

    pub fn flipped(self) -> Branch {
        match self {
            Branch::Co => Branch::Counter,
            Branch::Counter => Branch::Co,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Co => write!(f, "co"),
            Branch::Counter => write!(f, "counter"),
        }
    }
}

/// One equatorial circular photon orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularOrbit {
    pub branch: Branch,
    /// Boyer-Lindquist orbit radius.
    pub r: f64,
    /// Signed angular velocity `dphi/dt`.
    pub omega: f64,
    /// Impact parameter `b = 1/Omega`.
    pub b: f64,
    /// Coordinate-time instability rate of the orbit.
    pub lyapunov: f64,
    /// `max(|Phi|, |dPhi/dr|)` at the solution.
    pub residual: f64,
}

/// Small-spin expansion coefficients, all functions of `(M, Lambda)`:
///
/// ```text
/// Omega_+(a)  = Omega_ph + c_Z a + c_Omega2 a^2 + O(a^3)
/// lambda_+(a) = Omega_ph + c_lambda2 a^2 + O(a^3)
/// r_+(a)      = 3M + r1 a + r2 a^2 + O(a^3)
/// b_+(a)      = b0 + b1 a + b2 a^2 + O(a^3),   Xi b_+ = b0 + b1 a + beta2 a^2 + ...
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCoefficients {
    pub omega_ph: f64,
    pub omega_ph_prime: f64,
    pub c_z: f64,
    pub c_omega2: f64,
    pub c_lambda2: f64,
    pub r1: f64,
    pub r2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub beta2: f64,
}

/// `Phi` and its analytic first derivatives in `r` and `Omega`.
pub fn null_quadratic(params: &SpacetimeParams, r: f64, omega: f64) -> (f64, f64, f64) {
    let jet = orbit_system_jet(params, r, omega);
    (jet.phi, jet.phi_r, jet.phi_omega)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OrbitSystemJet {
    pub phi: f64,
    pub phi_r: f64,
    pub phi_omega: f64,
    pub phi_rr: f64,
    pub phi_r_omega: f64,
}

pub(crate) fn orbit_system_jet(params: &SpacetimeParams, r: f64, omega: f64) -> OrbitSystemJet {
    let m = metric_jet(params, r);
    OrbitSystemJet {
        phi: m.g[0] + 2.0 * omega * m.g[1] + omega * omega * m.g[2],
        phi_r: m.dg[0] + 2.0 * omega * m.dg[1] + omega * omega * m.dg[2],
        phi_omega: 2.0 * m.g[1] + 2.0 * omega * m.g[2],
        phi_rr: m.d2g[0] + 2.0 * omega * m.d2g[1] + omega * omega * m.d2g[2],
        phi_r_omega: 2.0 * m.dg[1] + 2.0 * omega * m.dg[2],
    }
}

/// Signed determinant of `D(Phi, dPhi/dr) / D(r, Omega)`.  Its magnitude at
/// `(3M, +-Omega_ph, a=0)` equals `4 Omega_ph`, the nondegeneracy scale of
/// the orbit system.
pub fn orbit_system_jacobian_det(params: &SpacetimeParams, r: f64, omega: f64) -> f64 {
    let jet = orbit_system_jet(params, r, omega);
    jet.phi_r * jet.phi_r_omega - jet.phi_omega * jet.phi_rr
}

fn omega_photon_sphere(params: &SpacetimeParams) -> Result<f64> {
    let s2 = 1.0 - 9.0 * params.lambda * params.mass * params.mass;
    if s2 <= 0.0 {
        return Err(Error::NotSubextremal("9 Lambda M^2 >= 1".into()));
    }
    Ok(s2.sqrt() / (3.0 * 3.0f64.sqrt() * params.mass))
}

struct NewtonOutcome {
    r: f64,
    omega: f64,
    residual: f64,
}

/// Damped-free Newton on `(Phi, dPhi/dr)` with the analytic Jacobian.
/// Iterates past the formal tolerance until the residual stagnates, so the
/// returned point is accurate to machine precision.
fn newton_orbit(
    params: &SpacetimeParams,
    seed_r: f64,
    seed_omega: f64,
    det_guard: f64,
) -> Result<NewtonOutcome> {
    let (mut r, mut omega) = (seed_r, seed_omega);
    let mut best: Option<NewtonOutcome> = None;
    let mut prev = f64::INFINITY;

    for _ in 0..ORBIT_MAX_ITER {
        if !(r.is_finite() && omega.is_finite()) || r <= 0.0 {
            break;
        }
        let jet = orbit_system_jet(params, r, omega);
        let residual = jet.phi.abs().max(jet.phi_r.abs());
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(NewtonOutcome { r, omega, residual });
        }
        if residual == 0.0 || (residual < 1e-13 && residual >= prev) {
            break;
        }
        prev = residual;

        let det = jet.phi_r * jet.phi_r_omega - jet.phi_omega * jet.phi_rr;
        if det.abs() < det_guard {
            return Err(Error::DegenerateJacobian(format!(
                "|det D(Phi, Phi_r)| = {:e} below guard {det_guard:e}",
                det.abs()
            )));
        }
        let dr = (jet.phi * jet.phi_r_omega - jet.phi_omega * jet.phi_r) / det;
        let domega = (jet.phi_r * jet.phi_r - jet.phi_rr * jet.phi) / det;
        r -= dr;
        omega -= domega;
    }

    let out = best.ok_or_else(|| Error::NoConvergence("orbit iteration diverged".into()))?;
    if out.residual > ORBIT_TOL {
        return Err(Error::NoConvergence(format!(
            "orbit residual {:e} > {ORBIT_TOL:e}",
            out.residual
        )));
    }
    Ok(out)
}

/// Solves the circular-orbit system for one branch.
///
/// The 2D Newton starts from the non-rotating seed `(3M, +-Omega_ph(M))`;
/// if the spin lies outside that basin, continuation in `a` with step
/// `<= 0.02 M` walks the connected branch out from `a = 0`.  The Jacobian
/// guard aborts with [`Error::DegenerateJacobian`] when the determinant
/// drops below `1e-3 * 4 Omega_ph`.
pub fn solve_circular_orbit(params: &SpacetimeParams, branch: Branch) -> Result<CircularOrbit> {
    let horizons = horizon_roots(params)?;
    let omega_ph = omega_photon_sphere(params)?;
    let det_guard = 1e-3 * 4.0 * omega_ph;
    let (seed_r, seed_omega) = (3.0 * params.mass, branch.sign() * omega_ph);

    let sol = newton_orbit(params, seed_r, seed_omega, det_guard).or_else(|direct_err| {
        continuation_in_spin(params, branch, det_guard).map_err(|_| direct_err)
    })?;

    if !(sol.r > horizons.r_e && sol.r < horizons.r_c) {
        return Err(Error::NoConvergence(format!(
            "orbit radius {} left the exterior region ({}, {})",
            sol.r, horizons.r_e, horizons.r_c
        )));
    }

    let b = 1.0 / sol.omega;
    let mut orbit = CircularOrbit {
        branch,
        r: sol.r,
        omega: sol.omega,
        b,
        lyapunov: 0.0,
        residual: sol.residual,
    };
    orbit.lyapunov = lyapunov_exponent(params, &orbit)?;
    Ok(orbit)
}

fn continuation_in_spin(
    params: &SpacetimeParams,
    branch: Branch,
    det_guard: f64,
) -> Result<NewtonOutcome> {
    let omega_ph = omega_photon_sphere(params)?;
    let steps = (params.spin.abs() / (CONTINUATION_STEP * params.mass)).ceil() as usize;
    let steps = steps.max(1);
    let mut sol = NewtonOutcome {
        r: 3.0 * params.mass,
        omega: branch.sign() * omega_ph,
        residual: f64::INFINITY,
    };
    for k in 1..=steps {
        let partial = SpacetimeParams {
            mass: params.mass,
            spin: params.spin * (k as f64) / (steps as f64),
            lambda: params.lambda,
        };
        sol = newton_orbit(&partial, sol.r, sol.omega, det_guard)?;
    }
    Ok(sol)
}

/// The radial potential `R` of equatorial null geodesics at impact
/// parameter `b`, its first two radial derivatives, and the coordinate-time
/// rate `t_dot`, all in closed form:
///
/// ```text
/// P     = (r^2 + a^2) - a Xi b
/// R     = P^2 - Delta_r (Xi b - a)^2
/// R'    = 4 r P - Delta_r' (Xi b - a)^2
/// R''   = 12 r^2 + 4 a^2 - 4 a Xi b - Delta_r'' (Xi b - a)^2
/// t_dot = (r^2 + a^2) P / (Delta_r r^2) + a (Xi b - a) / r^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPotential {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    pub t_dot: f64,
}

pub fn radial_potential_suite(params: &SpacetimeParams, r: f64, b: f64) -> Result<RadialPotential> {
    let horizons = horizon_roots(params)?;
    if !(r > horizons.r_e && r < horizons.r_c) {
        return Err(Error::HorizonEvaluation(format!(
            "r = {r} not strictly inside ({}, {})",
            horizons.r_e, horizons.r_c
        )));
    }
    let d = delta_r(params, r);
    if d == 0.0 {
        return Err(Error::HorizonEvaluation(format!("Delta_r({r}) = 0")));
    }
    Ok(radial_potential_unchecked(params, r, b))
}

fn radial_potential_unchecked(params: &SpacetimeParams, r: f64, b: f64) -> RadialPotential {
    let a = params.spin;
    let beta = params.xi() * b;
    let d = delta_r(params, r);
    let dp = delta_r_prime(params, r);
    let dpp = delta_r_second(params, r);
    let r2 = r * r;
    let p = (r2 + a * a) - a * beta;
    let w = beta - a;
    RadialPotential {
        value: p * p - d * w * w,
        first: 4.0 * r * p - dp * w * w,
        second: 12.0 * r2 + 4.0 * a * a - 4.0 * a * beta - dpp * w * w,
        t_dot: (r2 + a * a) * p / (d * r2) + a * w / r2,
    }
}

/// Coordinate-time Lyapunov exponent of an unstable circular orbit,
/// `lambda = sqrt(R'' / (2 r^4 t_dot^2))`.
///
/// The potential data are invariant under `(a, b) -> (-a, -b)`, so the
/// counter-rotating rate evaluated here coincides with the mirrored
/// co-rotating one, `lambda_-(M, a) = lambda_+(M, -a)`, exactly.
pub fn lyapunov_exponent(params: &SpacetimeParams, orbit: &CircularOrbit) -> Result<f64> {
    let pot = radial_potential_suite(params, orbit.r, orbit.b)?;
    if pot.second <= 0.0 {
        return Err(Error::NegativeCurvature(format!(
            "R''({}) = {} <= 0",
            orbit.r, pot.second
        )));
    }
    let r2 = orbit.r * orbit.r;
    Ok((pot.second / (2.0 * r2 * r2 * pot.t_dot * pot.t_dot)).sqrt())
}

/// Evaluates every printed small-spin coefficient from its closed form.
/// Requires `9 Lambda M^2 < 1` (with `Lambda = 0` allowed for the Kerr
/// limit); no numerics beyond scalar arithmetic.
pub fn closed_form_coefficients(mass: f64, lambda: f64) -> Result<SeriesCoefficients> {
    if !(mass > 0.0) || !(lambda >= 0.0) {
        return Err(Error::OutsideAdmissible(format!(
            "need M > 0 and Lambda >= 0, got M = {mass}, Lambda = {lambda}"
        )));
    }
    let lm2 = lambda * mass * mass;
    let s2 = 1.0 - 9.0 * lm2;
    if s2 <= 0.0 {
        return Err(Error::OutsideAdmissible("9 Lambda M^2 >= 1".into()));
    }
    let s = s2.sqrt();
    let sqrt3 = 3.0f64.sqrt();
    let m3 = mass * mass * mass;
    Ok(SeriesCoefficients {
        omega_ph: s / (3.0 * sqrt3 * mass),
        omega_ph_prime: -(s / (mass * mass) + 9.0 * lambda / s) / (3.0 * sqrt3),
        c_z: (2.0 + 9.0 * lm2) / (27.0 * mass * mass),
        c_omega2: sqrt3 * (11.0 - 45.0 * lm2) / (486.0 * m3 * s),
        c_lambda2: sqrt3 * (45.0 * lm2 - 2.0) / (243.0 * m3 * s),
        r1: -2.0 * s / sqrt3,
        r2: -(3.0 * lambda * mass + 2.0 / (9.0 * mass)),
        b0: 3.0 * sqrt3 * mass / s,
        b1: -(2.0 + 9.0 * lm2) / s2,
        b2: sqrt3 * (54.0 * lm2 * lm2 + 39.0 * lm2 - 1.0) / (6.0 * mass * s2 * s),
        beta2: sqrt3 * (45.0 * lm2 - 1.0) / (6.0 * mass * s2 * s),
    })
}

/// The positive frequency observable `Omega_sharp = sign(branch) * Omega`.
/// Both branch values coincide with `Omega_ph` at `a = 0` and expand as
/// `Omega_ph +- c_Z a + c_Omega2 a^2 + O(a^3)`.
pub fn omega_sharp(params: &SpacetimeParams, branch: Branch) -> Result<f64> {
    let orbit = solve_circular_orbit(params, branch)?;
    Ok(branch.sign() * orbit.omega)
}

/// Cross-check solver: 2D Newton on the double-root system
/// `R(r, b) = 0, R'(r, b) = 0` in the variables `(r, b)`.
///
/// Independent of the `(r, Omega)` formulation above except for sharing the
/// polynomial `Delta_r`; agreement between the two is asserted in tests.
pub fn solve_circular_orbit_rb(params: &SpacetimeParams, branch: Branch) -> Result<CircularOrbit> {
    let horizons = horizon_roots(params)?;
    let omega_ph = omega_photon_sphere(params)?;
    let xi = params.xi();
    let a = params.spin;

    let mut r = 3.0 * params.mass;
    let mut b = branch.sign() / omega_ph;
    let scale = (3.0 * params.mass).powi(4);
    let mut best: Option<(f64, f64, f64)> = None;
    let mut prev = f64::INFINITY;

    for _ in 0..ORBIT_MAX_ITER {
        if !(r.is_finite() && b.is_finite()) || r <= 0.0 {
            break;
        }
        let pot = radial_potential_unchecked(params, r, b);
        let residual = pot.value.abs().max(pot.first.abs() * r) / scale;
        if best.is_none_or(|(_, _, res)| residual < res) {
            best = Some((r, b, residual));
        }
        if residual == 0.0 || (residual < 1e-14 && residual >= prev) {
            break;
        }
        prev = residual;

        let d = delta_r(params, r);
        let dp = delta_r_prime(params, r);
        let w = xi * b - a;
        let p = (r * r + a * a) - a * xi * b;
        // d/db of (R, R') at fixed r.
        let drdb = 2.0 * p * (-a * xi) - 2.0 * d * w * xi;
        let drpdb = 4.0 * r * (-a * xi) - 2.0 * dp * w * xi;
        let det = pot.first * drpdb - drdb * pot.second;
        if det.abs() < 1e-12 * scale {
            return Err(Error::DegenerateJacobian(format!(
                "(r, b) system determinant {:e} too small",
                det.abs()
            )));
        }
        let dr = (pot.value * drpdb - drdb * pot.first) / det;
        let db = (pot.first * pot.first - pot.second * pot.value) / det;
        r -= dr;
        b -= db;
    }

    let (r, b, _) = best.ok_or_else(|| Error::NoConvergence("(r, b) iteration diverged".into()))?;
    if !(r > horizons.r_e && r < horizons.r_c) {
        return Err(Error::NoConvergence(format!(
            "(r, b) orbit radius {r} left the exterior region"
        )));
    }
    let omega = 1.0 / b;
    let jet = orbit_system_jet(params, r, omega);
    let residual = jet.phi.abs().max(jet.phi_r.abs());
    if residual > 1e-10 {
        return Err(Error::NoConvergence(format!(
            "(r, b) solution fails the null conditions: residual {residual:e}"
        )));
    }
    let mut orbit = CircularOrbit {
        branch,
        r,
        omega,
        b,
        lyapunov: 0.0,
        residual,
    };
    orbit.lyapunov = lyapunov_exponent(params, &orbit)?;
    Ok(orbit)
}

/// Parameter derivatives of the orbit system, for the analytic-chain
/// Jacobian of the observable maps: `d(Phi, Phi_r)/dM` and `/da` at fixed
/// `(r, Omega)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ParamGradient {
    pub dphi_dm: f64,
    pub dphir_dm: f64,
    pub dphi_da: f64,
    pub dphir_da: f64,
}

pub(crate) fn orbit_param_gradient(params: &SpacetimeParams, r: f64, omega: f64) -> ParamGradient {
    let (a, lam) = (params.spin, params.lambda);
    let xi = params.xi();
    let r2 = r * r;
    let a2 = a * a;
    let d = delta_r(params, r);
    let dp = delta_r_prime(params, r);

    // Phi = N(r) / r^2 with radius-independent couplings c1, c2.
    let c1 = 2.0 * omega * a / xi;
    let c2 = omega * omega / (xi * xi);

    // Mass enters only through Delta_r: dDelta/dM = -2r, dDelta'/dM = -2.
    let coupling = -1.0 + c1 - c2 * a2;
    let dn_dm = -2.0 * r * coupling;
    let dnp_dm = -2.0 * coupling;

    // Spin derivatives at fixed (r, Omega).
    let d_a = 2.0 * a * (1.0 - lam * r2 / 3.0);
    let dp_a = -4.0 * lam * a * r / 3.0;
    let xi_a = 2.0 * lam * a / 3.0;
    let c1_a = 2.0 * omega * (xi - a * xi_a) / (xi * xi);
    let c2_a = -2.0 * omega * omega * xi_a / (xi * xi * xi);
    let q1 = d - r2 - a2;
    let q2 = (r2 + a2) * (r2 + a2) - a2 * d;
    let q1p = dp - 2.0 * r;
    let q2p = 4.0 * r * (r2 + a2) - a2 * dp;
    let dn_da = (2.0 * a - d_a)
        + c1_a * q1
        + c1 * (d_a - 2.0 * a)
        + c2_a * q2
        + c2 * (4.0 * a * (r2 + a2) - 2.0 * a * d - a2 * d_a);
    let dnp_da =
        -dp_a + c1_a * q1p + c1 * dp_a + c2_a * q2p + c2 * (8.0 * a * r - 2.0 * a * dp - a2 * dp_a);

    ParamGradient {
        dphi_dm: dn_dm / r2,
        dphir_dm: dnp_dm / r2 - 2.0 * dn_dm / (r2 * r),
        dphi_da: dn_da / r2,
        dphir_da: dnp_da / r2 - 2.0 * dn_da / (r2 * r),
    }
}

/// Derivative of the branch angular velocity with respect to `(M, a)` via
/// the implicit function theorem on the orbit system at a converged orbit.
pub(crate) fn omega_param_derivative(
    params: &SpacetimeParams,
    orbit: &CircularOrbit,
) -> (f64, f64) {
    let jet = orbit_system_jet(params, orbit.r, orbit.omega);
    let grad = orbit_param_gradient(params, orbit.r, orbit.omega);
    let det = jet.phi_r * jet.phi_r_omega - jet.phi_omega * jet.phi_rr;
    // Solve J [dr/dq; dOmega/dq] = -[dPhi/dq; dPhi_r/dq] for q in {M, a}.
    let domega_dm = -(jet.phi_r * grad.dphir_dm - jet.phi_rr * grad.dphi_dm) / det;
    let domega_da = -(jet.phi_r * grad.dphir_da - jet.phi_rr * grad.dphi_da) / det;
    (domega_dm, domega_da)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen 50-digit oracle values
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(m: f64, a: f64, lam: f64) -> SpacetimeParams {
        SpacetimeParams::new(m, a, lam).unwrap()
    }

    // Frozen 50-digit reference values.
    const OMEGA_PH_L004: f64 = 0.15396007178390020;
    const OMEGA_PH_L0: f64 = 0.19245008972987526;

    #[test]
    fn null_quadratic_at_sds_photon_sphere() {
        let p = params(1.0, 0.0, 0.04);
        let (phi, phi_r, _) = null_quadratic(&p, 3.0, OMEGA_PH_L004);
        assert_abs_diff_eq!(phi, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi_r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn null_quadratic_reduces_to_g_tt_at_zero_omega() {
        let p = params(1.0, 0.0, 0.04);
        let (phi, _, _) = null_quadratic(&p, 3.0, 0.0);
        assert_relative_eq!(phi, -0.21333333333333333, max_relative = 1e-15);
    }

    #[test]
    fn null_quadratic_omega_derivative() {
        // dPhi/dOmega = 2 Omega r^2 at a = 0.
        let p = params(1.0, 0.0, 0.04);
        let (_, _, phi_om) = null_quadratic(&p, 3.0, OMEGA_PH_L004);
        assert_relative_eq!(phi_om, 2.0 * OMEGA_PH_L004 * 9.0, max_relative = 1e-14);
    }

    #[test]
    fn orbit_jet_derivatives_match_differences() {
        let p = params(1.0, 0.13, 0.03);
        let (r, om) = (2.9, 0.18);
        let h = 1e-6;
        let jet = orbit_system_jet(&p, r, om);
        let fd_rr = (null_quadratic(&p, r + h, om).1 - null_quadratic(&p, r - h, om).1) / (2.0 * h);
        let fd_rom =
            (null_quadratic(&p, r, om + h).1 - null_quadratic(&p, r, om - h).1) / (2.0 * h);
        assert_relative_eq!(jet.phi_rr, fd_rr, max_relative = 1e-8);
        assert_relative_eq!(jet.phi_r_omega, fd_rom, max_relative = 1e-8);
    }

    #[test]
    fn sds_orbit_closed_form() {
        let orbit = solve_circular_orbit(&params(1.0, 0.0, 0.04), Branch::Co).unwrap();
        assert_relative_eq!(orbit.r, 3.0, max_relative = 1e-13);
        assert_relative_eq!(orbit.omega, OMEGA_PH_L004, max_relative = 1e-13);
        assert_relative_eq!(orbit.b, 6.4951905283832899, max_relative = 1e-13);
        assert_relative_eq!(orbit.lyapunov, OMEGA_PH_L004, max_relative = 1e-13);
        assert!(orbit.residual <= 1e-12);
    }

    #[test]
    fn kerr_orbit_matches_bardeen() {
        // Prograde Kerr photon orbit, frozen from the closed form
        // r = 2M (1 + cos((2/3) acos(-a/M))), Omega = 1/(r^{3/2} + a).
        let orbit = solve_circular_orbit(&params(1.0, 0.1, 0.0), Branch::Co).unwrap();
        assert_relative_eq!(orbit.r, 2.8821937284436095, max_relative = 1e-12);
        assert_relative_eq!(orbit.omega, 0.20027608235127150, max_relative = 1e-12);
    }

    #[test]
    fn high_spin_kerr_matches_bardeen() {
        // Far outside the small-spin series regime; exercises the deep end
        // of the Newton basin (and continuation when it is not reached).
        for a in [0.5, 0.9] {
            for branch in [Branch::Co, Branch::Counter] {
                let orbit = solve_circular_orbit(&params(1.0, a, 0.0), branch).unwrap();
                let r_bardeen = 2.0 * (1.0 + ((2.0 / 3.0) * (-branch.sign() * a).acos()).cos());
                assert_relative_eq!(orbit.r, r_bardeen, max_relative = 1e-12);
                assert_relative_eq!(
                    orbit.omega,
                    branch.sign() / (r_bardeen.powf(1.5) + branch.sign() * a),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn continuation_walks_the_branch() {
        // The stepped walk from a = 0 must land on the same orbit as the
        // direct solve.
        let p = params(1.0, 0.9, 0.0);
        let omega_ph = 1.0 / (3.0 * 3.0f64.sqrt());
        let guard = 1e-3 * 4.0 * omega_ph;
        let walked = continuation_in_spin(&p, Branch::Co, guard).unwrap();
        let direct = solve_circular_orbit(&p, Branch::Co).unwrap();
        assert_relative_eq!(walked.r, direct.r, max_relative = 1e-12);
        assert_relative_eq!(walked.omega, direct.omega, max_relative = 1e-12);
    }

    #[test]
    fn kds_orbit_frozen_reference() {
        let co = solve_circular_orbit(&params(1.0, 0.05, 0.04), Branch::Co).unwrap();
        assert_relative_eq!(co.r, 2.9529411842522532, max_relative = 1e-12);
        assert_relative_eq!(co.omega, 0.15843610012274708, max_relative = 1e-12);
        assert_relative_eq!(co.lyapunov, 0.15395446409662983, max_relative = 1e-12);

        let counter = solve_circular_orbit(&params(1.0, 0.05, 0.04), Branch::Counter).unwrap();
        assert_relative_eq!(counter.r, 3.0453469138820656, max_relative = 1e-12);
        assert_relative_eq!(counter.omega, -0.14968917874776099, max_relative = 1e-12);
        assert_relative_eq!(counter.lyapunov, 0.15395666344509618, max_relative = 1e-12);
    }

    #[test]
    fn counter_branch_tracks_series() {
        // Omega_- ~ -Omega_ph + c_Z a - c_Omega2 a^2, solver within O(a^3).
        let orbit = solve_circular_orbit(&params(1.0, 0.05, 0.04), Branch::Counter).unwrap();
        let c = closed_form_coefficients(1.0, 0.04).unwrap();
        let series = -c.omega_ph + c.c_z * 0.05 - c.c_omega2 * 0.0025;
        assert_abs_diff_eq!(orbit.omega, series, epsilon = 3e-4);
    }

    #[test]
    fn impact_parameter_identity() {
        for (a, lam) in [(0.0, 0.04), (0.08, 0.04), (-0.1, 0.02), (0.1, 0.0)] {
            for branch in [Branch::Co, Branch::Counter] {
                let orbit = solve_circular_orbit(&params(1.0, a, lam), branch).unwrap();
                assert_relative_eq!(orbit.b * orbit.omega, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        let plus = params(1.0, 0.07, 0.04);
        let minus = params(1.0, -0.07, 0.04);
        let co = solve_circular_orbit(&plus, Branch::Co).unwrap();
        let counter = solve_circular_orbit(&minus, Branch::Co.flipped()).unwrap();
        assert_relative_eq!(co.r, counter.r, max_relative = 1e-12);
        assert_relative_eq!(co.omega, -counter.omega, max_relative = 1e-12);
        // The counter-rotating damping rate is the mirror of the co-rotating
        // one; the direct potential evaluation reproduces it bitwise.
        assert_eq!(co.lyapunov, counter.lyapunov);
    }

    #[test]
    fn radial_potential_sds_values() {
        let p = params(1.0, 0.0, 0.04);
        let b0 = 6.4951905283832899;
        let pot = radial_potential_suite(&p, 3.0, b0).unwrap();
        assert_abs_diff_eq!(pot.value / 81.0, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(pot.first / 108.0, 0.0, epsilon = 1e-13);
        assert_relative_eq!(pot.second, 84.375, max_relative = 1e-13);
        assert_relative_eq!(pot.t_dot, 4.6875, max_relative = 1e-13);
    }

    #[test]
    fn radial_potential_schwarzschild_values() {
        let p = params(1.0, 0.0, 1e-15);
        let pot = radial_potential_suite(&p, 3.0, 3.0 * 3.0f64.sqrt()).unwrap();
        assert_relative_eq!(pot.second, 54.0, max_relative = 1e-12);
        assert_relative_eq!(pot.t_dot, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn radial_potential_zero_impact_parameter() {
        // b = 0 leaves R = (r^2 + a^2)^2 - Delta_r a^2; at a = 0 just r^4.
        let p = params(1.0, 0.0, 0.04);
        let pot = radial_potential_suite(&p, 3.0, 0.0).unwrap();
        assert_relative_eq!(pot.value, 81.0, max_relative = 1e-15);

        let p = params(1.0, 0.2, 0.04);
        let r: f64 = 3.0;
        let d = crate::metric::evaluate_delta_r(&p, r, crate::metric::DerivOrder::Zeroth);
        let pot = radial_potential_suite(&p, r, 0.0).unwrap();
        let expected = (r * r + 0.04f64) * (r * r + 0.04) - d * 0.04;
        assert_relative_eq!(pot.value, expected, max_relative = 1e-14);
    }

    #[test]
    fn radial_potential_rejects_horizon_crossing() {
        let p = params(1.0, 0.0, 0.04);
        for r in [1.0, 2.1285927458325954, 9.0] {
            let err = radial_potential_suite(&p, r, 6.0).unwrap_err();
            assert!(matches!(err, Error::HorizonEvaluation(_)));
        }
    }

    #[test]
    fn lyapunov_schwarzschild_limit() {
        let orbit = solve_circular_orbit(&params(1.0, 0.0, 0.0), Branch::Co).unwrap();
        assert_relative_eq!(orbit.lyapunov, OMEGA_PH_L0, max_relative = 1e-13);
    }

    #[test]
    fn lyapunov_tracks_series() {
        let orbit = solve_circular_orbit(&params(1.0, 0.05, 0.04), Branch::Co).unwrap();
        let c = closed_form_coefficients(1.0, 0.04).unwrap();
        assert_abs_diff_eq!(
            orbit.lyapunov,
            c.omega_ph + c.c_lambda2 * 0.0025,
            epsilon = 1e-5
        );
    }

    #[test]
    fn closed_form_battery_lambda_zero() {
        let c = closed_form_coefficients(1.0, 0.0).unwrap();
        assert_relative_eq!(c.omega_ph, OMEGA_PH_L0, max_relative = 1e-14);
        assert_relative_eq!(c.omega_ph_prime, -OMEGA_PH_L0, max_relative = 1e-14);
        assert_relative_eq!(c.c_z, 2.0 / 27.0, max_relative = 1e-15);
        assert_relative_eq!(c.c_omega2, 0.039202796056085700, max_relative = 1e-14);
        assert_relative_eq!(c.c_lambda2, -0.014255562202212982, max_relative = 1e-14);
        assert_relative_eq!(c.r1, -1.1547005383792515, max_relative = 1e-14);
        assert_relative_eq!(c.r2, -2.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(c.b0, 5.1961524227066319, max_relative = 1e-14);
        assert_relative_eq!(c.b1, -2.0, max_relative = 1e-15);
        assert_relative_eq!(c.b2, -0.28867513459481288, max_relative = 1e-14);
        assert_relative_eq!(c.beta2, -0.28867513459481288, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_battery_lambda_004() {
        let c = closed_form_coefficients(1.0, 0.04).unwrap();
        assert_relative_eq!(c.omega_ph, OMEGA_PH_L004, max_relative = 1e-14);
        assert_relative_eq!(c.omega_ph_prime, -0.24056261216234407, max_relative = 1e-14);
        assert_relative_eq!(c.c_z, 0.087407407407407407, max_relative = 1e-14);
        assert_relative_eq!(c.c_omega2, 0.040984741331362323, max_relative = 1e-14);
        assert_relative_eq!(c.c_lambda2, -1.7819452752766227e-3, max_relative = 1e-13);
        assert_relative_eq!(c.r1, -0.92376043070340122, max_relative = 1e-14);
        assert_relative_eq!(c.r2, -0.34222222222222222, max_relative = 1e-14);
        assert_relative_eq!(c.b0, 6.4951905283832899, max_relative = 1e-14);
        assert_relative_eq!(c.b1, -3.6875, max_relative = 1e-15);
        assert_relative_eq!(c.b2, 0.36445235742595126, max_relative = 1e-13);
        assert_relative_eq!(c.beta2, 0.45105489780439513, max_relative = 1e-13);
    }

    #[test]
    fn impact_parameter_series_from_solver() {
        // b = 1/Omega_+ differentiated through the solver reproduces the
        // printed b1, b2 and the Xi-corrected beta2.
        let c = closed_form_coefficients(1.0, 0.04).unwrap();
        let h = 0.004;
        let b = |a: f64| {
            1.0 / solve_circular_orbit(&params(1.0, a, 0.04), Branch::Co)
                .unwrap()
                .omega
        };
        let xb = |a: f64| params(1.0, a, 0.04).xi() * b(a);
        let (b0, bp, bm) = (b(0.0), b(h), b(-h));
        assert_relative_eq!(b0, c.b0, max_relative = 1e-12);
        assert_abs_diff_eq!((bp - bm) / (2.0 * h), c.b1, epsilon = 1e-4);
        assert_abs_diff_eq!((bp - 2.0 * b0 + bm) / (2.0 * h * h), c.b2, epsilon = 1e-3);
        let (x0, xp, xm) = (xb(0.0), xb(h), xb(-h));
        assert_abs_diff_eq!(
            (xp - 2.0 * x0 + xm) / (2.0 * h * h),
            c.beta2,
            epsilon = 1e-3
        );
    }

    #[test]
    fn coefficient_combination_identity() {
        // c_lambda2 - c_Omega2 = -(5 sqrt(3)/162) sqrt(1 - 9 Lambda M^2)/M^3.
        for (m, lam) in [(1.0, 0.0), (1.0, 0.04), (0.9, 0.05), (1.2, 0.01)] {
            let c = closed_form_coefficients(m, lam).unwrap();
            let s = (1.0f64 - 9.0 * lam * m * m).sqrt();
            let reference = -(5.0 * 3.0f64.sqrt() / 162.0) * s / (m * m * m);
            assert_relative_eq!(c.c_lambda2 - c.c_omega2, reference, max_relative = 1e-12);
        }
    }

    #[test]
    fn coefficient_signs() {
        for (m, lam) in [(0.8, 0.04), (1.0, 0.04), (1.5, 0.02)] {
            let c = closed_form_coefficients(m, lam).unwrap();
            assert!(c.omega_ph > 0.0);
            assert!(c.c_z > 0.0);
            assert!(c.omega_ph_prime < 0.0);
        }
    }

    #[test]
    fn coefficients_near_photon_sphere_disappearance() {
        // As 9 Lambda M^2 -> 1, Omega_ph -> 0+ while c_Omega2 diverges
        // with the sign of (11 - 45 Lambda M^2), positive throughout the
        // admissible range.
        let near = closed_form_coefficients(1.0, (1.0 - 1e-6) / 9.0).unwrap();
        let nearer = closed_form_coefficients(1.0, (1.0 - 1e-8) / 9.0).unwrap();
        assert!(near.omega_ph > 0.0 && near.omega_ph < 1e-3);
        assert!(nearer.omega_ph > 0.0 && nearer.omega_ph < near.omega_ph);
        assert!(near.c_omega2 > 10.0);
        assert!(nearer.c_omega2 > 5.0 * near.c_omega2);
    }

    #[test]
    fn closed_form_rejects_outside_admissible() {
        assert!(matches!(
            closed_form_coefficients(1.0, 1.0 / 9.0).unwrap_err(),
            Error::OutsideAdmissible(_)
        ));
        assert!(closed_form_coefficients(-1.0, 0.04).is_err());
    }

    #[test]
    fn omega_sharp_values_and_parity() {
        let p0 = params(1.0, 0.0, 0.04);
        assert_relative_eq!(
            omega_sharp(&p0, Branch::Co).unwrap(),
            OMEGA_PH_L004,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            omega_sharp(&p0, Branch::Counter).unwrap(),
            OMEGA_PH_L004,
            max_relative = 1e-13
        );

        let series = OMEGA_PH_L004 + 0.087407407407407407 * 0.05 + 0.040984741331362323 * 0.0025;
        let plus = omega_sharp(&params(1.0, 0.05, 0.04), Branch::Co).unwrap();
        assert_abs_diff_eq!(plus, series, epsilon = 1e-5);

        // Omega_sharp_{+-}(M, -a) = Omega_sharp_{-+}(M, a).
        let swapped = omega_sharp(&params(1.0, -0.05, 0.04), Branch::Counter).unwrap();
        assert_eq!(plus, swapped);
    }

    #[test]
    fn series_consistency_small_spin() {
        let c = closed_form_coefficients(1.0, 0.04).unwrap();
        let slack = |a: f64| 10.0 * a.abs().powi(3) * c.c_omega2.abs().max(1.0);
        for a in [-0.02, -0.01, -0.005, 0.005, 0.01, 0.02] {
            let p = params(1.0, a, 0.04);
            let plus = omega_sharp(&p, Branch::Co).unwrap();
            let series = c.omega_ph + c.c_z * a + c.c_omega2 * a * a;
            assert!((plus - series).abs() <= slack(a), "a = {a}");

            let lyap = solve_circular_orbit(&p, Branch::Co).unwrap().lyapunov;
            let lambda_series = c.omega_ph + c.c_lambda2 * a * a;
            assert!(
                (lyap - lambda_series).abs() <= slack(a),
                "lambda at a = {a}"
            );
        }
    }

    #[test]
    fn ift_determinant_at_photon_sphere() {
        for m in [0.6, 0.8, 1.0, 1.2, 1.5] {
            let p = params(m, 0.0, 0.04);
            let c = closed_form_coefficients(m, 0.04).unwrap();
            for sign in [1.0, -1.0] {
                let det = orbit_system_jacobian_det(&p, 3.0 * m, sign * c.omega_ph);
                assert_relative_eq!(det.abs(), 4.0 * c.omega_ph, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn rb_solver_agrees_with_primary() {
        for (a, lam) in [(0.0, 0.04), (0.06, 0.04), (-0.09, 0.02), (0.1, 0.0)] {
            let p = params(1.0, a, lam);
            for branch in [Branch::Co, Branch::Counter] {
                let primary = solve_circular_orbit(&p, branch).unwrap();
                let cross = solve_circular_orbit_rb(&p, branch).unwrap();
                assert_abs_diff_eq!(primary.r, cross.r, epsilon = 1e-10);
                assert_abs_diff_eq!(primary.omega, cross.omega, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn solver_rejects_non_subextremal() {
        let err = solve_circular_orbit(&params(1.0, 0.0, 0.2), Branch::Co).unwrap_err();
        assert!(matches!(err, Error::NotSubextremal(_)));
    }

    #[test]
    fn param_gradient_matches_differences() {
        let p = params(1.07, 0.11, 0.035);
        let (r, om) = (3.1, 0.15);
        let h = 1e-6;
        let grad = orbit_param_gradient(&p, r, om);

        let pm = |dm: f64| params(p.mass + dm, p.spin, p.lambda);
        let pa = |da: f64| params(p.mass, p.spin + da, p.lambda);
        let fd_phi_m =
            (null_quadratic(&pm(h), r, om).0 - null_quadratic(&pm(-h), r, om).0) / (2.0 * h);
        let fd_phir_m =
            (null_quadratic(&pm(h), r, om).1 - null_quadratic(&pm(-h), r, om).1) / (2.0 * h);
        let fd_phi_a =
            (null_quadratic(&pa(h), r, om).0 - null_quadratic(&pa(-h), r, om).0) / (2.0 * h);
        let fd_phir_a =
            (null_quadratic(&pa(h), r, om).1 - null_quadratic(&pa(-h), r, om).1) / (2.0 * h);

        assert_relative_eq!(grad.dphi_dm, fd_phi_m, max_relative = 1e-7);
        assert_relative_eq!(grad.dphir_dm, fd_phir_m, max_relative = 1e-7);
        assert_relative_eq!(grad.dphi_da, fd_phi_a, max_relative = 1e-7);
        assert_relative_eq!(grad.dphir_da, fd_phir_a, max_relative = 1e-7);
    }

    #[test]
    fn omega_param_derivative_matches_differences() {
        let p = params(1.0, 0.05, 0.04);
        let orbit = solve_circular_orbit(&p, Branch::Co).unwrap();
        let (dm, da) = omega_param_derivative(&p, &orbit);
        let h = 1e-6;
        let om = |m: f64, a: f64| {
            solve_circular_orbit(&params(m, a, 0.04), Branch::Co)
                .unwrap()
                .omega
        };
        let fd_m = (om(1.0 + h, 0.05) - om(1.0 - h, 0.05)) / (2.0 * h);
        let fd_a = (om(1.0, 0.05 + h) - om(1.0, 0.05 - h)) / (2.0 * h);
        assert_relative_eq!(dm, fd_m, max_relative = 1e-6);
        assert_relative_eq!(da, fd_a, max_relative = 1e-6);
    }
}
