//! Grid-level consistency checks between independent computation routes:
//! the two orbit-solver formulations, the observable-map Jacobian against
//! its leading closed form, and the quadratic convergence of the
//! refinement iteration.

use kds_ringdown::inversion::{
    closed_form_seed, newton_invert_two, numeric_jacobian, InvertOptions, StepSpec, TwoParamMap,
};
use kds_ringdown::metric::SpacetimeParams;
use kds_ringdown::orbit::{
    closed_form_coefficients, solve_circular_orbit, solve_circular_orbit_rb, Branch,
};
use kds_ringdown::spectrum::two_mode_map;

fn params(m: f64, a: f64, lam: f64) -> SpacetimeParams {
    SpacetimeParams::new(m, a, lam).unwrap()
}

/// The (r, Omega) null-condition solver and the (r, b) double-root solver
/// must agree to 1e-10 across the slow-rotation admissible set.
#[test]
fn orbit_solvers_agree_on_grid() {
    let mut checked = 0;
    for m in [0.9, 1.0, 1.1] {
        for a in [-0.1, -0.05, 0.0, 0.05, 0.1] {
            for lam in [0.0, 0.02, 0.04] {
                let p = params(m, a, lam);
                for branch in [Branch::Co, Branch::Counter] {
                    let primary = solve_circular_orbit(&p, branch).unwrap();
                    let cross = solve_circular_orbit_rb(&p, branch).unwrap();
                    assert!(
                        (primary.r - cross.r).abs() <= 1e-10,
                        "dr {:e} at ({m}, {a}, {lam}, {branch})",
                        (primary.r - cross.r).abs()
                    );
                    assert!(
                        (primary.omega - cross.omega).abs() <= 1e-10,
                        "dOmega {:e} at ({m}, {a}, {lam}, {branch})",
                        (primary.omega - cross.omega).abs()
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 90);
}

/// Model-consistent data round-trips to 1e-10 across a 5 x 5 x 3 grid of
/// (M, a, Lambda) in the slow-rotation admissible set.
#[test]
fn round_trip_exactness_over_parameter_grid() {
    let opts = InvertOptions::default();
    for i in 0..5 {
        let m = 0.9 + 0.05 * i as f64;
        for j in 0..5 {
            let a = -0.08 + 0.04 * j as f64;
            for lam in [0.01, 0.03, 0.05] {
                let truth = params(m, a, lam);
                let data = two_mode_map(&truth, 0, 100).unwrap();
                let rec = newton_invert_two(&data, lam, 100, 0, &opts).unwrap();
                let err = (rec.params.mass - m).abs().max((rec.params.spin - a).abs());
                assert!(err <= 1e-10, "error {err:e} at ({m}, {a}, {lam})");
            }
        }
    }
}

/// det DG approaches Omega_ph' c_Z quadratically in the spin: the fitted
/// quadratic coefficient is stable under halving of a.
#[test]
fn observable_jacobian_det_leading_term() {
    let map = TwoParamMap::Geometric { lambda: 0.04 };
    let c = closed_form_coefficients(1.0, 0.04).unwrap();
    let leading = c.omega_ph_prime * c.c_z;
    let spec = StepSpec::default();

    let coeff_at = |a: f64| {
        let j = map.jacobian(1.0, a, &spec).unwrap();
        let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
        (det - leading).abs() / (a * a)
    };
    let coeffs = [coeff_at(0.08), coeff_at(0.04), coeff_at(0.02)];
    for pair in coeffs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(
            (0.75..=1.35).contains(&ratio),
            "quadratic coefficient unstable under halving: {coeffs:?}"
        );
    }
}

/// Newton refinement is quadratic: once the residual is below 1e-3, the
/// next residual is bounded by a fixed multiple of its square.
#[test]
fn newton_refinement_converges_quadratically() {
    let lambda = 0.04;
    let truth = params(1.0, 0.05, lambda);
    let target = two_mode_map(&truth, 0, 100).unwrap();

    // Start from a deliberately degraded seed to see several iterations.
    let seed = closed_form_seed(target.u, target.v, lambda).unwrap();
    let (mut m, mut a) = (seed.mass + 0.05, seed.spin + 0.03);

    let eval = |m: f64, a: f64| {
        let obs = two_mode_map(&params(m, a, lambda), 0, 100).unwrap();
        [obs.u - target.u, obs.v - target.v]
    };
    let mut residuals = Vec::new();
    for _ in 0..12 {
        let f = eval(m, a);
        let res = f[0].abs().max(f[1].abs());
        residuals.push(res);
        if res < 1e-14 {
            break;
        }
        let j = numeric_jacobian(
            |x| {
                let obs = two_mode_map(&params(x[0], x[1], lambda), 0, 100)?;
                Ok(vec![obs.u, obs.v])
            },
            &[m, a],
            &StepSpec::default(),
        )
        .unwrap();
        let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
        m -= (f[0] * j[(1, 1)] - j[(0, 1)] * f[1]) / det;
        a -= (j[(0, 0)] * f[1] - j[(1, 0)] * f[0]) / det;
    }

    assert!(
        *residuals.last().unwrap() < 1e-12,
        "did not converge: {residuals:?}"
    );
    let mut quadratic_steps = 0;
    for pair in residuals.windows(2) {
        if pair[0] < 1e-3 && pair[1] > 1e-15 {
            let ratio = pair[1] / (pair[0] * pair[0]);
            assert!(ratio < 1e3, "ratio {ratio:e} for residuals {pair:?}");
            quadratic_steps += 1;
        }
    }
    assert!(quadratic_steps >= 1, "never reached the quadratic regime");
}
