//! Kerr-de Sitter parameter vectors, the horizon quartic `Delta_r`, and the
//! equatorial metric coefficients.
//!
//! In Boyer-Lindquist coordinates with `G = c = 1`,
//!
//! ```text
//! Delta_r(r) = (r^2 + a^2)(1 - Lambda r^2 / 3) - 2 M r,
//! Xi         = 1 + Lambda a^2 / 3.
//! ```
//!
//! A configuration is subextremal when `Delta_r` has four distinct real
//! simple roots `r0 < 0 <= r_minus < r_e < r_c`; only the outer pair
//! (event and cosmological horizons) enters the computations downstream.

use nalgebra::Matrix4;

use crate::{Error, Result};

/// Relative residual bound for polished horizon roots, scaled by the
/// magnitude of the quartic terms at the root.
const ROOT_RESIDUAL_REL: f64 = 1e-12;

/// Two roots closer than this fraction of the outer-horizon separation
/// signal near-extremality.
const ROOT_SEPARATION_REL: f64 = 1e-9;

/// The parameter vector `(M, a, Lambda)` in geometric units.
///
/// `mass > 0` and `lambda >= 0` are enforced on construction; the spin may
/// take either sign.  `lambda == 0` is the Kerr limit, in which the
/// cosmological horizon escapes to infinity and [`horizon_roots`] reports a
/// sentinel instead of failing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeParams {
    pub mass: f64,
    pub spin: f64,
    pub lambda: f64,
}

impl SpacetimeParams {
    pub fn new(mass: f64, spin: f64, lambda: f64) -> Result<Self> {
        if !(mass.is_finite() && spin.is_finite() && lambda.is_finite()) {
            return Err(Error::OutsideAdmissible("non-finite parameter".into()));
        }
        if mass <= 0.0 {
            return Err(Error::OutsideAdmissible(format!("M = {mass} must be > 0")));
        }
        if lambda < 0.0 {
            return Err(Error::OutsideAdmissible(format!(
                "Lambda = {lambda} must be >= 0"
            )));
        }
        Ok(Self { mass, spin, lambda })
    }

    /// `Xi = 1 + Lambda a^2 / 3`; equals 1 exactly when `a = 0`.
    pub fn xi(&self) -> f64 {
        1.0 + self.lambda * self.spin * self.spin / 3.0
    }

    /// Coefficients of `Delta_r` ordered by descending degree:
    /// `[-Lambda/3, 0, 1 - Lambda a^2/3, -2M, a^2]`.
    pub(crate) fn quartic_coefficients(&self) -> [f64; 5] {
        [
            -self.lambda / 3.0,
            0.0,
            1.0 - self.lambda * self.spin * self.spin / 3.0,
            -2.0 * self.mass,
            self.spin * self.spin,
        ]
    }
}

/// Derivative order selector for [`evaluate_delta_r`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    Zeroth,
    First,
    Second,
}

/// Horner evaluation of `Delta_r` or one of its first two radial
/// derivatives.  Total in its inputs; no approximation beyond rounding.
pub fn evaluate_delta_r(params: &SpacetimeParams, r: f64, order: DerivOrder) -> f64 {
    let [c4, _, c2, c1, c0] = params.quartic_coefficients();
    match order {
        DerivOrder::Zeroth => (((c4 * r) * r + c2) * r + c1) * r + c0,
        DerivOrder::First => ((4.0 * c4 * r) * r + 2.0 * c2) * r + c1,
        DerivOrder::Second => (12.0 * c4 * r) * r + 2.0 * c2,
    }
}

pub(crate) fn delta_r(params: &SpacetimeParams, r: f64) -> f64 {
    evaluate_delta_r(params, r, DerivOrder::Zeroth)
}

pub(crate) fn delta_r_prime(params: &SpacetimeParams, r: f64) -> f64 {
    evaluate_delta_r(params, r, DerivOrder::First)
}

pub(crate) fn delta_r_second(params: &SpacetimeParams, r: f64) -> f64 {
    evaluate_delta_r(params, r, DerivOrder::Second)
}

/// Magnitude of the quartic terms at `r`, used to scale residual bounds.
fn quartic_scale(params: &SpacetimeParams, r: f64) -> f64 {
    let [c4, _, c2, c1, c0] = params.quartic_coefficients();
    let r2 = r * r;
    let sum = c4.abs() * r2 * r2 + c2.abs() * r2 + c1.abs() * r.abs() + c0.abs();
    sum.max(1.0)
}

/// The four roots of `Delta_r` with surface gravities and outer-horizon
/// separation.
///
/// In the Kerr limit `lambda == 0` the quartic degenerates to a quadratic;
/// `r0 = -inf`, `r_c = +inf`, `kappa_c = 0` and `l_sep = +inf` are reported
/// as sentinels with `missing_cosmological_horizon` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonData {
    pub r0: f64,
    pub r_minus: f64,
    pub r_e: f64,
    pub r_c: f64,
    /// `kappa_h = |Delta_r'(r_h)| / (2 (r_h^2 + a^2))` at the event horizon.
    pub kappa_e: f64,
    /// Same at the cosmological horizon; 0 in the Kerr limit.
    pub kappa_c: f64,
    /// `r_c - r_e`.
    pub l_sep: f64,
    /// Largest `|Delta_r(r_h)|` over the finite reported roots.
    pub max_residual: f64,
    pub missing_cosmological_horizon: bool,
}

/// Finds and polishes all roots of the horizon quartic.
///
/// Roots come from the eigenvalues of the companion matrix of the monic
/// quartic, then three Newton steps on `Delta_r` itself tighten each root
/// to `|Delta_r(r_h)| <= 1e-12 * max(1, sum |c_i r^i|)`.
pub fn horizon_roots(params: &SpacetimeParams) -> Result<HorizonData> {
    if params.lambda == 0.0 {
        return kerr_limit_horizons(params);
    }

    let mut roots = quartic_real_roots(params)?;
    if roots.len() != 4 {
        return Err(Error::NotSubextremal(format!(
            "horizon quartic has {} real roots, need 4",
            roots.len()
        )));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // At a = 0 the constant term vanishes identically, so one root is 0.
    if params.spin == 0.0 {
        let idx = (0..4)
            .min_by(|&i, &j| roots[i].abs().partial_cmp(&roots[j].abs()).unwrap())
            .unwrap();
        roots[idx] = 0.0;
    }

    let [r0, r_minus, r_e, r_c] = [roots[0], roots[1], roots[2], roots[3]];
    if !(r0 < 0.0) {
        return Err(Error::NotSubextremal(format!(
            "expected one negative root, got r0 = {r0}"
        )));
    }
    let minus_ok = r_minus > 0.0 || (params.spin == 0.0 && r_minus == 0.0);
    if !(minus_ok && r_minus < r_e && 0.0 < r_e && r_e < r_c) {
        return Err(Error::NotSubextremal(format!(
            "root ordering violated: {r0}, {r_minus}, {r_e}, {r_c}"
        )));
    }

    let l_sep = r_c - r_e;
    let gap = (r_minus - r0).min(r_e - r_minus).min(r_c - r_e);
    if gap < ROOT_SEPARATION_REL * l_sep {
        return Err(Error::DegenerateRoot(format!(
            "root gap {gap:e} below {ROOT_SEPARATION_REL:e} * L = {:e}",
            ROOT_SEPARATION_REL * l_sep
        )));
    }

    let mut max_residual: f64 = 0.0;
    for &r in &[r0, r_minus, r_e, r_c] {
        let res = delta_r(params, r).abs();
        max_residual = max_residual.max(res);
        if res > ROOT_RESIDUAL_REL * quartic_scale(params, r) {
            return Err(Error::NotSubextremal(format!(
                "root residual {res:e} at r = {r} exceeds bound"
            )));
        }
    }

    Ok(HorizonData {
        r0,
        r_minus,
        r_e,
        r_c,
        kappa_e: surface_gravity(params, r_e),
        kappa_c: surface_gravity(params, r_c),
        l_sep,
        max_residual,
        missing_cosmological_horizon: false,
    })
}

fn surface_gravity(params: &SpacetimeParams, r_h: f64) -> f64 {
    delta_r_prime(params, r_h).abs() / (2.0 * (r_h * r_h + params.spin * params.spin))
}

/// `lambda == 0`: `Delta_r = r^2 + a^2 - 2 M r`, roots `M +- sqrt(M^2 - a^2)`.
fn kerr_limit_horizons(params: &SpacetimeParams) -> Result<HorizonData> {
    let (m, a) = (params.mass, params.spin);
    let disc = m * m - a * a;
    if disc < 0.0 {
        return Err(Error::NotSubextremal(format!(
            "|a| = {} exceeds M = {m} at Lambda = 0",
            a.abs()
        )));
    }
    let s = disc.sqrt();
    let (r_minus, r_e) = (m - s, m + s);
    if r_e - r_minus < ROOT_SEPARATION_REL * r_e {
        return Err(Error::DegenerateRoot(format!(
            "horizons merge at |a| -> M: r_e - r_minus = {:e}",
            r_e - r_minus
        )));
    }
    let max_residual = delta_r(params, r_minus)
        .abs()
        .max(delta_r(params, r_e).abs());
    Ok(HorizonData {
        r0: f64::NEG_INFINITY,
        r_minus,
        r_e,
        r_c: f64::INFINITY,
        kappa_e: surface_gravity(params, r_e),
        kappa_c: 0.0,
        l_sep: f64::INFINITY,
        max_residual,
        missing_cosmological_horizon: true,
    })
}

/// Real roots of the quartic via companion-matrix eigenvalues plus Newton
/// polishing on `Delta_r`.
fn quartic_real_roots(params: &SpacetimeParams) -> Result<Vec<f64>> {
    let [c4, c3, c2, c1, c0] = params.quartic_coefficients();
    // Monic form x^4 + p3 x^3 + p2 x^2 + p1 x + p0.
    let (p3, p2, p1, p0) = (c3 / c4, c2 / c4, c1 / c4, c0 / c4);
    let companion = Matrix4::new(
        -p3, -p2, -p1, -p0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    let eigen = companion.complex_eigenvalues();

    let scale = 1.0 + p3.abs().max(p2.abs()).max(p1.abs()).max(p0.abs());
    let mut roots = Vec::with_capacity(4);
    for z in eigen.iter() {
        if z.im.abs() <= 1e-8 * scale.max(z.re.abs()) {
            roots.push(polish_root(params, z.re));
        }
    }
    Ok(roots)
}

fn polish_root(params: &SpacetimeParams, mut r: f64) -> f64 {
    for _ in 0..3 {
        let f = delta_r(params, r);
        let df = delta_r_prime(params, r);
        if df == 0.0 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        r -= step;
    }
    r
}

/// Verdict of the admissibility check, with a diagnostic naming the first
/// failed condition (or an informational note on boundary cases).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub diagnostic: String,
}

/// A parameter point is admissible when the horizon quartic has the full
/// subextremal root structure and both equatorial photon orbits exist with
/// a nondegenerate orbit-system Jacobian.
pub fn is_subextremal(params: &SpacetimeParams) -> AdmissibilityReport {
    let s2 = 1.0 - 9.0 * params.lambda * params.mass * params.mass;
    if s2 <= 0.0 {
        return AdmissibilityReport {
            admissible: false,
            diagnostic: "9 Lambda M^2 >= 1".into(),
        };
    }
    if let Err(e) = horizon_roots(params) {
        return AdmissibilityReport {
            admissible: false,
            diagnostic: e.to_string(),
        };
    }
    for branch in [crate::orbit::Branch::Co, crate::orbit::Branch::Counter] {
        if let Err(e) = crate::orbit::solve_circular_orbit(params, branch) {
            return AdmissibilityReport {
                admissible: false,
                diagnostic: e.to_string(),
            };
        }
    }
    let mut notes = Vec::new();
    if params.spin == 0.0 {
        notes.push("r_minus degenerate at a=0");
    }
    if params.lambda == 0.0 {
        notes.push("missing cosmological horizon (Lambda = 0)");
    }
    AdmissibilityReport {
        admissible: true,
        diagnostic: notes.join("; "),
    }
}

/// Metric coefficients on the equatorial plane `theta = pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquatorialMetric {
    pub g_tt: f64,
    pub g_tphi: f64,
    pub g_phiphi: f64,
}

/// Equatorial metric coefficients:
///
/// ```text
/// g_tt     = (a^2 - Delta_r) / r^2,
/// g_tphi   = a (Delta_r - (r^2 + a^2)) / (r^2 Xi),
/// g_phiphi = ((r^2 + a^2)^2 - a^2 Delta_r) / (r^2 Xi^2).
/// ```
///
/// At `a = 0` the diagonal Schwarzschild-de Sitter forms are used directly
/// so the reduction is exact: `g_tt = -(1 - 2M/r - Lambda r^2/3)`,
/// `g_tphi = 0`, `g_phiphi = r^2`.
pub fn equatorial_metric(params: &SpacetimeParams, r: f64) -> EquatorialMetric {
    let jet = metric_jet(params, r);
    EquatorialMetric {
        g_tt: jet.g[0],
        g_tphi: jet.g[1],
        g_phiphi: jet.g[2],
    }
}

/// Equatorial metric coefficients together with their first two radial
/// derivatives, all in closed form.  Index order: `[tt, tphi, phiphi]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MetricJet {
    pub g: [f64; 3],
    pub dg: [f64; 3],
    pub d2g: [f64; 3],
}

pub(crate) fn metric_jet(params: &SpacetimeParams, r: f64) -> MetricJet {
    let (m, a, lam) = (params.mass, params.spin, params.lambda);
    if a == 0.0 {
        // Schwarzschild-de Sitter: f(r) = 1 - 2M/r - Lambda r^2/3.
        let f = 1.0 - 2.0 * m / r - lam * r * r / 3.0;
        let fp = 2.0 * m / (r * r) - 2.0 * lam * r / 3.0;
        let fpp = -4.0 * m / (r * r * r) - 2.0 * lam / 3.0;
        return MetricJet {
            g: [-f, 0.0, r * r],
            dg: [-fp, 0.0, 2.0 * r],
            d2g: [-fpp, 0.0, 2.0],
        };
    }

    let xi = params.xi();
    let a2 = a * a;
    let d = delta_r(params, r);
    let dp = delta_r_prime(params, r);
    let dpp = delta_r_second(params, r);
    let r2 = r * r;

    // Each coefficient is s * n(r) / r^2 for a radius-independent scale s.
    let over_r2 = |n: f64, np: f64, npp: f64, s: f64| {
        let g = s * n / r2;
        let dg = s * (np / r2 - 2.0 * n / (r2 * r));
        let d2g = s * (npp / r2 - 4.0 * np / (r2 * r) + 6.0 * n / (r2 * r2));
        (g, dg, d2g)
    };

    let (gtt, dgtt, d2gtt) = over_r2(a2 - d, -dp, -dpp, 1.0);
    let (gtp, dgtp, d2gtp) = over_r2(d - (r2 + a2), dp - 2.0 * r, dpp - 2.0, a / xi);
    let (gpp, dgpp, d2gpp) = over_r2(
        (r2 + a2) * (r2 + a2) - a2 * d,
        4.0 * r * (r2 + a2) - a2 * dp,
        4.0 * (r2 + a2) + 8.0 * r2 - a2 * dpp,
        1.0 / (xi * xi),
    );

    MetricJet {
        g: [gtt, gtp, gpp],
        dg: [dgtt, dgtp, dgpp],
        d2g: [d2gtt, d2gtp, d2gpp],
    }
}
