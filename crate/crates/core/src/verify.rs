//! Verification harness: fits small-spin Taylor coefficients out of solver
//! outputs and checks them against the closed forms, extrapolates the
//! three-parameter Jacobian determinant to the axis, and measures how
//! frequency noise propagates into recovered parameters.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::inversion::{
    newton_invert_two, numeric_jacobian, three_det_leading, InvertOptions, StepSpec, TwoParamMap,
};
use crate::metric::SpacetimeParams;
use crate::orbit::{closed_form_coefficients, omega_sharp, solve_circular_orbit, Branch};
use crate::spectrum::{apply_noise, equatorial_pair, two_mode_from_frequencies, NoiseSpec};
use crate::{Error, Result};

/// Quantity whose small-spin series is fitted from solver outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitQuantity {
    /// Co-rotating `Omega_sharp`.
    OmegaPlus,
    /// Co-rotating Lyapunov exponent.
    LambdaPlus,
    /// Co-rotating orbit radius.
    RPlus,
    /// Branch average `(Omega_sharp_+ + Omega_sharp_-)/2`; even in `a`.
    UGeo,
    /// Branch difference `(Omega_sharp_+ - Omega_sharp_-)/2`; odd in `a`.
    VGeo,
}

impl FitQuantity {
    /// Parity proven for the quantity, imposed on constrained fits.
    fn parity(self) -> Option<Parity> {
        match self {
            FitQuantity::UGeo => Some(Parity::Even),
            FitQuantity::VGeo => Some(Parity::Odd),
            _ => None,
        }
    }

    fn eval(self, mass: f64, lambda: f64, a: f64) -> Result<f64> {
        let p = SpacetimeParams::new(mass, a, lambda)?;
        match self {
            FitQuantity::OmegaPlus => omega_sharp(&p, Branch::Co),
            FitQuantity::LambdaPlus => Ok(solve_circular_orbit(&p, Branch::Co)?.lyapunov),
            FitQuantity::RPlus => Ok(solve_circular_orbit(&p, Branch::Co)?.r),
            FitQuantity::UGeo => {
                Ok((omega_sharp(&p, Branch::Co)? + omega_sharp(&p, Branch::Counter)?) / 2.0)
            }
            FitQuantity::VGeo => {
                Ok((omega_sharp(&p, Branch::Co)? - omega_sharp(&p, Branch::Counter)?) / 2.0)
            }
        }
    }

    /// Closed-form references for the linear and quadratic coefficients.
    fn references(self, mass: f64, lambda: f64) -> Result<(f64, f64)> {
        let c = closed_form_coefficients(mass, lambda)?;
        Ok(match self {
            FitQuantity::OmegaPlus => (c.c_z, c.c_omega2),
            FitQuantity::LambdaPlus => (0.0, c.c_lambda2),
            FitQuantity::RPlus => (c.r1, c.r2),
            FitQuantity::UGeo => (0.0, c.c_omega2),
            FitQuantity::VGeo => (c.c_z, 0.0),
        })
    }
}

impl std::fmt::Display for FitQuantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FitQuantity::OmegaPlus => "omega_plus",
            FitQuantity::LambdaPlus => "lambda_plus",
            FitQuantity::RPlus => "r_plus",
            FitQuantity::UGeo => "u_geo",
            FitQuantity::VGeo => "v_geo",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Symmetric spin grid `+- (k / points_per_side) * half_width`,
/// `k = 1..=points_per_side`; zero itself is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGrid {
    pub half_width: f64,
    pub points_per_side: usize,
}

impl Default for FitGrid {
    fn default() -> Self {
        Self {
            half_width: 0.02,
            points_per_side: 4,
        }
    }
}

impl FitGrid {
    pub fn a_values(&self) -> Vec<f64> {
        let mut values = Vec::with_capacity(2 * self.points_per_side);
        for k in (1..=self.points_per_side).rev() {
            values.push(-self.half_width * k as f64 / self.points_per_side as f64);
        }
        for k in 1..=self.points_per_side {
            values.push(self.half_width * k as f64 / self.points_per_side as f64);
        }
        values
    }
}

/// Outcome of one series fit, with the closed-form references and the
/// absolute discrepancies against them.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFitReport {
    pub quantity: FitQuantity,
    pub degree: usize,
    pub parity_constrained: bool,
    pub grid: Vec<f64>,
    /// Taylor coefficients indexed by the power of `a`.
    pub coefficients: Vec<f64>,
    /// Least-squares one-sigma uncertainties, same indexing.
    pub uncertainties: Vec<f64>,
    pub reference_c1: f64,
    pub reference_c2: f64,
    pub discrepancy_c1: f64,
    pub discrepancy_c2: f64,
    /// Largest deviation of the fitted polynomial from the data.
    pub fit_residual: f64,
    /// Condition number of the scaled design matrix.
    pub condition: f64,
}

/// Least-squares polynomial fit of a solver quantity over a symmetric spin
/// grid, compared against the printed closed forms.
///
/// Powers are scaled by the grid half-width before solving; parities the
/// expansion is known to obey (`U` even, `V` odd) restrict the basis when
/// `constrain_parity` is set.
pub fn fit_series_coefficients(
    quantity: FitQuantity,
    mass: f64,
    lambda: f64,
    grid: &FitGrid,
    degree: usize,
    constrain_parity: bool,
) -> Result<SeriesFitReport> {
    if !(3..=5).contains(&degree) {
        return Err(Error::OutsideAdmissible(format!(
            "fit degree {degree} must be in 3..=5"
        )));
    }
    let a_values = grid.a_values();
    let powers: Vec<usize> = match (constrain_parity, quantity.parity()) {
        (true, Some(Parity::Even)) => (0..=degree).filter(|p| p % 2 == 0).collect(),
        (true, Some(Parity::Odd)) => (0..=degree).filter(|p| p % 2 == 1).collect(),
        _ => (0..=degree).collect(),
    };
    if a_values.len() < powers.len() {
        return Err(Error::IllConditionedFit(format!(
            "{} grid points cannot determine {} coefficients",
            a_values.len(),
            powers.len()
        )));
    }

    let samples: Vec<f64> = a_values
        .iter()
        .map(|&a| quantity.eval(mass, lambda, a))
        .collect::<Result<_>>()?;

    let scale = grid.half_width;
    let rows = a_values.len();
    let cols = powers.len();
    let design = DMatrix::from_fn(rows, cols, |i, j| {
        (a_values[i] / scale).powi(powers[j] as i32)
    });
    let rhs = DMatrix::from_fn(rows, 1, |i, _| samples[i]);

    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 {
        s_max / s_min
    } else {
        f64::INFINITY
    };
    if condition > 1e12 {
        return Err(Error::IllConditionedFit(format!(
            "design matrix condition {condition:e}"
        )));
    }
    let beta = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditionedFit(e.to_string()))?;

    let fitted = &design * &beta;
    let mut ssr = 0.0;
    let mut fit_residual: f64 = 0.0;
    for i in 0..rows {
        let r = samples[i] - fitted[(i, 0)];
        ssr += r * r;
        fit_residual = fit_residual.max(r.abs());
    }
    let dof = rows.saturating_sub(cols);
    let resid_std = if dof > 0 {
        (ssr / dof as f64).sqrt()
    } else {
        0.0
    };

    // Coefficient covariance diagonal via (X^T X)^{-1} = V S^{-2} V^T.
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut coefficients = vec![0.0; degree + 1];
    let mut uncertainties = vec![0.0; degree + 1];
    for (j, &power) in powers.iter().enumerate() {
        let mut diag = 0.0;
        for k in 0..cols {
            let s = svd.singular_values[k];
            if s > 0.0 {
                let v_jk = v_t[(k, j)];
                diag += v_jk * v_jk / (s * s);
            }
        }
        let unscale = scale.powi(power as i32);
        coefficients[power] = beta[(j, 0)] / unscale;
        uncertainties[power] = resid_std * diag.sqrt() / unscale;
    }

    let (reference_c1, reference_c2) = quantity.references(mass, lambda)?;
    Ok(SeriesFitReport {
        quantity,
        degree,
        parity_constrained: constrain_parity && quantity.parity().is_some(),
        grid: a_values,
        discrepancy_c1: (coefficients[1] - reference_c1).abs(),
        discrepancy_c2: (coefficients[2] - reference_c2).abs(),
        coefficients,
        uncertainties,
        reference_c1,
        reference_c2,
        fit_residual,
        condition,
    })
}

/// Polynomial extrapolation of `(x_i, y_i)` to `x = 0` (Neville tableau).
/// Appropriate for limits with error series in integer powers of `x`.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut t = ys.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in 0..(n - level) {
            let (x_lo, x_hi) = (xs[i], xs[i + level]);
            t[i] = (x_hi * t[i] - x_lo * t[i + 1]) / (x_hi - x_lo);
        }
    }
    t[0]
}

/// The three-parameter geometric map `(M, a, Lambda) -> (U, V, lambda_+)`
/// as a plain vector function, for numeric Jacobians.
pub(crate) fn h_geo_vec(x: &[f64]) -> Result<Vec<f64>> {
    let p = SpacetimeParams::new(x[0], x[1], x[2])?;
    let plus = omega_sharp(&p, Branch::Co)?;
    let minus = omega_sharp(&p, Branch::Counter)?;
    let lyap = solve_circular_orbit(&p, Branch::Co)?.lyapunov;
    Ok(vec![(plus + minus) / 2.0, (plus - minus) / 2.0, lyap])
}

pub(crate) fn h_geo_step_spec() -> StepSpec {
    StepSpec {
        relative_step: 1e-6,
        richardson: false,
        lower_bounds: Some(vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0]),
    }
}

/// Determinant of the numeric Jacobian of the three-parameter geometric
/// map at `(mass, a, lambda)`.
pub fn h_geo_det(mass: f64, a: f64, lambda: f64) -> Result<f64> {
    let j = numeric_jacobian(h_geo_vec, &[mass, a, lambda], &h_geo_step_spec())?;
    Ok(j[(0, 0)] * (j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)])
        - j[(0, 1)] * (j[(1, 0)] * j[(2, 2)] - j[(1, 2)] * j[(2, 0)])
        + j[(0, 2)] * (j[(1, 0)] * j[(2, 1)] - j[(1, 1)] * j[(2, 0)]))
}

/// Extrapolation of `det D H / a^2` to the axis against its closed-form
/// limit `5 (9 Lambda M^2 - 4) / (1458 M^5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetLimitReport {
    pub a_values: Vec<f64>,
    pub det_values: Vec<f64>,
    pub det_over_a2: Vec<f64>,
    pub extrapolated: f64,
    pub reference: f64,
    pub rel_error: f64,
}

pub fn jacobian_det_limit_check(
    mass: f64,
    lambda: f64,
    a_values: &[f64],
) -> Result<DetLimitReport> {
    if a_values.is_empty() || a_values.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::OutsideAdmissible(
            "need a nonempty list of positive spin values".into(),
        ));
    }
    if a_values.windows(2).any(|pair| pair[0] <= pair[1]) {
        return Err(Error::OutsideAdmissible(
            "spin values must strictly decrease toward 0".into(),
        ));
    }
    let mut det_values = Vec::with_capacity(a_values.len());
    let mut det_over_a2 = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let det = h_geo_det(mass, a, lambda)?;
        det_values.push(det);
        det_over_a2.push(det / (a * a));
    }
    let extrapolated = extrapolate_to_zero(a_values, &det_over_a2);
    let reference = three_det_leading(mass, lambda);
    Ok(DetLimitReport {
        a_values: a_values.to_vec(),
        det_values,
        det_over_a2,
        extrapolated,
        reference,
        rel_error: (extrapolated - reference).abs() / reference.abs(),
    })
}

/// One row of the noise-propagation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStudyRow {
    pub ell: u32,
    pub eps: f64,
    /// Worst parameter error over the trials (Euclidean in `(M, a)`).
    pub max_error: f64,
    /// `max_error * ell / eps`; NaN for the `eps = 0` floor row.
    pub error_ell_over_eps: f64,
    /// Local `||J|| / |det J|` of the two-mode map at the true parameters.
    pub stability_constant: f64,
}

/// splitmix64; the noise directions need reproducible streams, not
/// statistical quality.
struct PhaseGen {
    state: u64,
}

impl PhaseGen {
    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform phase in `[0, 2 pi)`.
    fn next_phase(&mut self) -> f64 {
        std::f64::consts::TAU * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

/// Perturbs the equatorial frequency pair with unit-phase complex noise of
/// amplitude `eps`, re-runs the two-parameter inversion, and tabulates the
/// worst parameter error per `(ell, eps)` cell.
///
/// The same `trials` phase pairs (drawn once from `seed`) are reused for
/// every cell, so rows are directly comparable across `ell` and `eps` and
/// the whole table is reproducible from the seed.
#[allow(clippy::too_many_arguments)]
pub fn noise_propagation_study(
    mass: f64,
    spin: f64,
    lambda: f64,
    overtone: u32,
    ells: &[u32],
    eps_list: &[f64],
    trials: u32,
    seed: u64,
) -> Result<Vec<NoiseStudyRow>> {
    if trials == 0 {
        return Err(Error::OutsideAdmissible("need at least one trial".into()));
    }
    let params = SpacetimeParams::new(mass, spin, lambda)?;
    let mut gen = PhaseGen::new(seed);
    let phases: Vec<(f64, f64)> = (0..trials)
        .map(|_| (gen.next_phase(), gen.next_phase()))
        .collect();

    let opts = InvertOptions::default();
    let mut rows = Vec::with_capacity(ells.len() * eps_list.len());
    for &ell in ells {
        let pair = equatorial_pair(&params, overtone, ell)?;
        let map = TwoParamMap::Pseudopole {
            lambda,
            ell,
            overtone,
        };
        let j = map.jacobian(mass, spin, &StepSpec::default())?;
        let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
        let stability = j.singular_values().max() / det.abs();

        for &eps in eps_list {
            let mut max_error: f64 = 0.0;
            for &(theta_plus, theta_minus) in &phases {
                let noise = NoiseSpec {
                    eta_plus: Complex64::from_polar(eps, theta_plus),
                    eta_minus: Complex64::from_polar(eps, theta_minus),
                };
                let (p, m) = apply_noise(pair, &noise);
                let data = two_mode_from_frequencies(p.omega, m.omega, ell);
                let rec = newton_invert_two(&data, lambda, ell, overtone, &opts)?;
                let err = (rec.params.mass - mass).hypot(rec.params.spin - spin);
                max_error = max_error.max(err);
            }
            rows.push(NoiseStudyRow {
                ell,
                eps,
                max_error,
                error_ell_over_eps: if eps > 0.0 {
                    max_error * ell as f64 / eps
                } else {
                    f64::NAN
                },
                stability_constant: stability,
            });
        }
    }
    Ok(rows)
}
