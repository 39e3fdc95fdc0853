//! Independent oracles: the origin power series of the equation (both
//! exponent branches), an adaptive Runge-Kutta integrator along complex
//! segments, and the closed forms for the reducible parameter cases.
//!
//! These never share code with the resummed expansions they certify.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BcHeunParams, PARAM_ZERO_TOL};
use crate::quadrature::{distance_to_segment, integrate_segment};
use crate::special::{kummer_1f1, near_nonpositive_integer, tricomi_u, SpecialFnConfig};

type C = Complex64;

/// Default local tolerance of the adaptive integrator.
pub const DEFAULT_INTEGRATOR_TOL: f64 = 1e-12;

/// Frobenius solution of the equation about the origin:
/// `u = z^exponent * sum_n c_n z^n`, with `c_0 = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OriginSeries {
    /// 0 for the analytic branch, 1 - gamma for the second branch.
    pub exponent: C,
    pub coeffs: Vec<C>,
    /// |z0| when alpha != 0, infinity otherwise. A pragmatic scale for
    /// choosing test points, not a convergence bound: the origin is the only
    /// finite singularity, so the series converges everywhere.
    pub radius_hint: f64,
}

impl OriginSeries {
    /// Value and first two derivatives at z.
    pub fn eval_with_derivs(&self, z: C) -> (C, C, C) {
        let mut s0 = C::new(0.0, 0.0);
        let mut s1 = C::new(0.0, 0.0);
        let mut s2 = C::new(0.0, 0.0);
        for (n, &c) in self.coeffs.iter().enumerate().rev() {
            let e = self.exponent + n as f64;
            s0 = s0 * z + c;
            s1 = s1 * z + c * e;
            s2 = s2 * z + c * e * (e - 1.0);
        }
        if self.exponent.norm() == 0.0 {
            // plain power series; avoid complex powers at the origin
            let zp2 = if z.norm() == 0.0 { C::new(0.0, 0.0) } else { s2 / (z * z) };
            let zp1 = if z.norm() == 0.0 { C::new(0.0, 0.0) } else { s1 / z };
            return (s0, zp1, zp2);
        }
        let w = z.powc(self.exponent);
        (w * s0, w / z * s1, w / (z * z) * s2)
    }

    pub fn value(&self, z: C) -> C {
        self.eval_with_derivs(z).0
    }

    /// CSV rows (z_re, z_im, u_re, u_im, du_re, du_im) at the given points.
    pub fn to_csv(&self, points: &[C]) -> String {
        let mut out = String::from("z_re,z_im,u_re,u_im,du_re,du_im\n");
        for &z in points {
            let (u, du, _) = self.eval_with_derivs(z);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                z.re, z.im, u.re, u.im, du.re, du.im
            ));
        }
        out
    }
}

fn origin_series_with_exponent(p: &BcHeunParams, rho: C, n_max: usize) -> Result<OriginSeries> {
    // (rho+m+1)(rho+m+gamma) c_{m+1} + (delta (rho+m) - q) c_m
    //   + (alpha + eps (rho+m-1)) c_{m-1} = 0
    let mut coeffs = vec![C::new(1.0, 0.0)];
    for m in 0..n_max {
        let x = rho + m as f64;
        let lead = (x + 1.0) * (x + p.gamma);
        if lead.norm() <= 1e-12 * (1.0 + x.norm()) * (1.0 + x.norm() + p.gamma.norm()) {
            return Err(Error::LogarithmicCase { n: m + 1 });
        }
        let mut rhs = -(p.delta * x - p.q) * coeffs[m];
        if m >= 1 {
            rhs -= (p.alpha + p.epsilon * (x - 1.0)) * coeffs[m - 1];
        }
        coeffs.push(rhs / lead);
    }
    let radius_hint = if p.alpha.norm() > PARAM_ZERO_TOL {
        (p.q / p.alpha).norm()
    } else {
        f64::INFINITY
    };
    Ok(OriginSeries { exponent: rho, coeffs, radius_hint })
}

/// The analytic origin branch (exponent 0, `c_1 = q/gamma`).
pub fn origin_series(p: &BcHeunParams, n_max: usize) -> Result<OriginSeries> {
    if near_nonpositive_integer(p.gamma, 1e-12) {
        return Err(Error::GammaNonpositiveInteger);
    }
    origin_series_with_exponent(p, C::new(0.0, 0.0), n_max)
}

/// The second origin branch, exponent 1 - gamma. This is the branch the
/// resummed expansions represent.
pub fn origin_series_second(p: &BcHeunParams, n_max: usize) -> Result<OriginSeries> {
    let one = C::new(1.0, 0.0);
    // gamma in {1, 2, 3, ...} makes the exponents differ by a non-negative
    // integer and this branch logarithmic
    if near_nonpositive_integer(one - p.gamma, 1e-12) || (p.gamma - one).norm() <= 1e-12 {
        return Err(Error::LogarithmicCase { n: 0 });
    }
    origin_series_with_exponent(p, one - p.gamma, n_max)
}

/// Solution values recorded along an integration path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub path: Vec<C>,
    /// (u, u') at each accepted waypoint.
    pub values: Vec<(C, C)>,
    pub tol: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> (C, C) {
        *self.values.last().expect("trajectory has at least the initial point")
    }

    /// CSV rows (z_re, z_im, u_re, u_im, du_re, du_im).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_re,z_im,u_re,u_im,du_re,du_im\n");
        for (z, (u, du)) in self.path.iter().zip(self.values.iter()) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                z.re, z.im, u.re, u.im, du.re, du.im
            ));
        }
        out
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy)]
struct State {
    u: C,
    du: C,
}

impl State {
    fn axpy(&self, h: f64, k: &[State], w: &[f64]) -> State {
        let mut u = self.u;
        let mut du = self.du;
        for (ki, &wi) in k.iter().zip(w.iter()) {
            if wi != 0.0 {
                u += h * wi * ki.u;
                du += h * wi * ki.du;
            }
        }
        State { u, du }
    }
}

/// Integrate the equation as a first-order system for (u, u') along the
/// straight segment `from -> to`, seeded with `init` at `from`.
///
/// The path must keep a distance of at least `1e-3 * |z0|` from both finite
/// singular points of the coefficient functions (the origin and z0 = q/alpha).
pub fn integrate(
    p: &BcHeunParams,
    from: C,
    init: (C, C),
    to: C,
    tol: f64,
) -> Result<OdeTrajectory> {
    let guard = if p.alpha.norm() > PARAM_ZERO_TOL {
        let z0 = p.q / p.alpha;
        let r = 1e-3 * z0.norm();
        if distance_to_segment(z0, from, to) < r {
            return Err(Error::PathTooCloseToSingularity);
        }
        r
    } else {
        1e-3 * from.norm().max(to.norm())
    };
    if distance_to_segment(C::new(0.0, 0.0), from, to) < guard {
        return Err(Error::PathTooCloseToSingularity);
    }

    let dir = to - from;
    let f = |t: f64, s: &State| -> State {
        let z = from + dir * t;
        let d2u =
            -(p.gamma / z + p.delta + p.epsilon * z) * s.du - ((p.alpha * z - p.q) / z) * s.u;
        // chain rule through the segment parameterization
        State { u: dir * s.du, du: dir * d2u }
    };

    let mut t = 0.0_f64;
    let mut y = State { u: init.0, du: init.1 };
    let mut h = 0.01_f64;
    let mut path = vec![from];
    let mut values = vec![init];

    const MAX_STEPS: usize = 1_000_000;
    let mut steps = 0usize;
    while t < 1.0 {
        steps += 1;
        if steps > MAX_STEPS || h < 1e-14 {
            return Err(Error::StepSizeUnderflow);
        }
        h = h.min(1.0 - t);
        let mut k: Vec<State> = Vec::with_capacity(7);
        for i in 0..7 {
            let yi = y.axpy(h, &k, &DP_A[i][..i]);
            k.push(f(t + DP_C[i] * h, &yi));
        }
        let y5 = y.axpy(h, &k, &DP_B5);
        let y4 = y.axpy(h, &k, &DP_B4);
        let err_u = (y5.u - y4.u).norm() / (tol + tol * y5.u.norm().max(y.u.norm()));
        let err_du = (y5.du - y4.du).norm() / (tol + tol * y5.du.norm().max(y.du.norm()));
        let err = err_u.max(err_du).max(1e-30);
        if err <= 1.0 {
            t += h;
            y = y5;
            path.push(from + dir * t);
            values.push((y.u, y.du));
        }
        h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
    }
    Ok(OdeTrajectory { path, values, tol })
}

/// General solution for epsilon = 0 through the confluent hypergeometric
/// reduction, with the "+" principal branch of `s0 = sqrt(delta^2 - 4 alpha)`:
/// `u = e^{s z} [c1 M(a; gamma; s0 z) + c2 U(a; gamma; s0 z)]`,
/// `s = -(delta + s0)/2`, `a = (q - gamma s)/s0`.
pub fn closed_form_eps0(p: &BcHeunParams, z: C, c1: C, c2: C) -> Result<C> {
    Ok(closed_form_eps0_with_derivs(p, z, c1, c2, false)?.0)
}

/// Same, returning (u, u', u''); `negate_s0` selects the other root branch,
/// i.e. the other independent exponential rate.
pub fn closed_form_eps0_with_derivs(
    p: &BcHeunParams,
    z: C,
    c1: C,
    c2: C,
    negate_s0: bool,
) -> Result<(C, C, C)> {
    if p.epsilon.norm() > PARAM_ZERO_TOL {
        return Err(Error::ConditionsNotMet(format!("epsilon = {} is not 0", p.epsilon)));
    }
    let disc = p.delta * p.delta - 4.0 * p.alpha;
    let mut s0 = disc.sqrt();
    if negate_s0 {
        s0 = -s0;
    }
    if s0.norm() <= 1e-12 * (1.0 + p.delta.norm() * p.delta.norm() + 4.0 * p.alpha.norm()) {
        return Err(Error::DegenerateS0);
    }
    if near_nonpositive_integer(p.gamma, 1e-12) {
        return Err(Error::GammaNonpositiveInteger);
    }
    let s = -(p.delta + s0) / 2.0;
    let a = (p.q - p.gamma * s) / s0;
    let b = p.gamma;
    let x = s0 * z;
    let cfg = SpecialFnConfig::default();

    // y, y', y'' in the Kummer variable via contiguous relations
    let (mut y0, mut y1, mut y2) = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
    if c1.norm() > 0.0 {
        let m0 = kummer_1f1(a, b, x, &cfg)?.value;
        let m1 = a / b * kummer_1f1(a + 1.0, b + 1.0, x, &cfg)?.value;
        let m2 = a * (a + 1.0) / (b * (b + 1.0)) * kummer_1f1(a + 2.0, b + 2.0, x, &cfg)?.value;
        y0 += c1 * m0;
        y1 += c1 * m1;
        y2 += c1 * m2;
    }
    if c2.norm() > 0.0 {
        let u0 = tricomi_u(a, b, x, &cfg)?.value;
        let u1 = -a * tricomi_u(a + 1.0, b + 1.0, x, &cfg)?.value;
        let u2 = a * (a + 1.0) * tricomi_u(a + 2.0, b + 2.0, x, &cfg)?.value;
        y0 += c2 * u0;
        y1 += c2 * u1;
        y2 += c2 * u2;
    }
    let e = (s * z).exp();
    let u = e * y0;
    let du = e * (s * y0 + s0 * y1);
    let d2u = e * (s * s * y0 + 2.0 * s * s0 * y1 + s0 * s0 * y2);
    Ok((u, du, d2u))
}

/// General solution for alpha = q = 0:
/// `u = c1 + c2 * int_{z_b}^{z} e^{-delta t - eps t^2/2} t^{-gamma} dt`,
/// with the base point on the unit circle in the direction of z so the
/// radial path never approaches the origin.
pub fn quadrature_alpha_q_zero(p: &BcHeunParams, z: C, c1: C, c2: C) -> Result<C> {
    Ok(quadrature_alpha_q_zero_with_derivs(p, z, c1, c2)?.0)
}

/// Same, returning (u, u', u'').
pub fn quadrature_alpha_q_zero_with_derivs(
    p: &BcHeunParams,
    z: C,
    c1: C,
    c2: C,
) -> Result<(C, C, C)> {
    if !p.is_degenerate() {
        return Err(Error::ConditionsNotMet("alpha and q must both vanish".into()));
    }
    if z.norm() == 0.0 {
        return Err(Error::OriginSingular);
    }
    let integrand = |t: C| (-p.delta * t - p.epsilon * t * t * 0.5).exp() * t.powc(-p.gamma);
    let (integral, f) = if c2.norm() > 0.0 {
        let zb = z / z.norm();
        let integral = integrate_segment(&integrand, zb, z, 1e-12, 1e-12)?;
        (integral, integrand(z))
    } else {
        (C::new(0.0, 0.0), C::new(0.0, 0.0))
    };
    let u = c1 + c2 * integral;
    let du = c2 * f;
    let d2u = du * (-p.delta - p.epsilon * z - p.gamma / z);
    Ok((u, du, d2u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::residual;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rc(rng: &mut ChaCha8Rng) -> C {
        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    }

    fn draw(rng: &mut ChaCha8Rng) -> BcHeunParams {
        loop {
            let p = BcHeunParams::new(rc(rng), rc(rng), rc(rng), rc(rng), rc(rng));
            let desk_scale = p.alpha.norm() >= 0.1
                && p.q.norm() >= 0.1
                && (0.4..=2.5).contains(&(p.q / p.alpha).norm());
            if desk_scale && p.gamma.im.abs() >= 0.05 {
                return p;
            }
        }
    }

    #[test]
    fn first_coefficient_is_q_over_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = draw(&mut rng);
        let s = origin_series(&p, 5).unwrap();
        assert!((s.coeffs[1] - p.q / p.gamma).norm() < 1e-14 * (p.q / p.gamma).norm());
    }

    #[test]
    fn degenerate_case_collapses_to_constant() {
        let p = BcHeunParams::new(c(0.7, 0.3), c(0.4, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let s = origin_series(&p, 20).unwrap();
        for ck in &s.coeffs[1..] {
            assert!(ck.norm() < 1e-15);
        }
    }

    #[test]
    fn truncated_series_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let p = draw(&mut rng);
            let s = origin_series(&p, 60).unwrap();
            let z0 = p.q / p.alpha;
            let z = z0 * 0.3;
            let (u, du, d2u) = s.eval_with_derivs(z);
            let r = residual(&p, z, u, du, d2u).unwrap();
            assert!(r.relative <= 1e-10, "residual {}", r.relative);
        }
    }

    #[test]
    fn second_branch_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..10 {
            let p = draw(&mut rng);
            let s = origin_series_second(&p, 60).unwrap();
            let z0 = p.q / p.alpha;
            let z = z0 * 0.3;
            let (u, du, d2u) = s.eval_with_derivs(z);
            let r = residual(&p, z, u, du, d2u).unwrap();
            assert!(r.relative <= 1e-10, "residual {}", r.relative);
        }
    }

    #[test]
    fn integrator_zero_solution_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let p = draw(&mut rng);
        let z0 = p.q / p.alpha;
        let from = z0 * 0.2;
        let to = z0 * 0.5;
        let zero = integrate(&p, from, (c(0.0, 0.0), c(0.0, 0.0)), to, 1e-12).unwrap();
        let (u, du) = zero.last();
        assert_eq!(u, c(0.0, 0.0));
        assert_eq!(du, c(0.0, 0.0));

        let init = (c(0.3, -0.2), c(1.1, 0.4));
        let one = integrate(&p, from, init, to, 1e-12).unwrap().last();
        let twice = integrate(&p, from, (init.0 * 2.0, init.1 * 2.0), to, 1e-12).unwrap().last();
        assert!((twice.0 - one.0 * 2.0).norm() <= 1e-10 * one.0.norm());
        assert!((twice.1 - one.1 * 2.0).norm() <= 1e-10 * one.1.norm());
    }

    #[test]
    fn integrator_agrees_with_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let p = draw(&mut rng);
            let s = origin_series(&p, 80).unwrap();
            let z0 = p.q / p.alpha;
            let from = z0 * 0.2;
            let to = z0 * 0.5;
            let (u0, du0, _) = s.eval_with_derivs(from);
            let got = integrate(&p, from, (u0, du0), to, 1e-12).unwrap().last();
            let (u1, _, _) = s.eval_with_derivs(to);
            assert!(
                (got.0 - u1).norm() <= 1e-8 * u1.norm().max(1.0),
                "integrator vs series {}",
                (got.0 - u1).norm() / u1.norm()
            );
        }
    }

    #[test]
    fn path_guard_rejects_singular_segments() {
        let p = BcHeunParams::new(c(0.5, 0.0), c(0.1, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        // straight through the origin
        let err = integrate(&p, c(-0.5, 0.0), (c(1.0, 0.0), c(0.0, 0.0)), c(0.5, 0.0), 1e-10);
        assert_eq!(err.unwrap_err(), Error::PathTooCloseToSingularity);
        // straight through z0 = 1
        let err = integrate(&p, c(0.5, 0.0), (c(1.0, 0.0), c(0.0, 0.0)), c(1.5, 0.0), 1e-10);
        assert_eq!(err.unwrap_err(), Error::PathTooCloseToSingularity);
    }

    #[test]
    fn eps0_closed_form_satisfies_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut done = 0;
        while done < 10 {
            let p =
                BcHeunParams::new(rc(&mut rng), rc(&mut rng), c(0.0, 0.0), rc(&mut rng), rc(&mut rng));
            if (p.delta * p.delta - 4.0 * p.alpha).norm() < 0.1 || p.gamma.im.abs() < 0.05 {
                continue;
            }
            done += 1;
            let c1 = rc(&mut rng);
            let c2 = rc(&mut rng);
            for _ in 0..10 {
                let mut z = rc(&mut rng);
                if z.norm() < 0.3 {
                    z += c(1.0, 0.5);
                }
                let (u, du, d2u) = closed_form_eps0_with_derivs(&p, z, c1, c2, false).unwrap();
                let r = residual(&p, z, u, du, d2u).unwrap();
                assert!(r.relative <= 1e-9, "residual {}", r.relative);
            }
        }
    }

    #[test]
    fn eps0_reduces_to_kummer_when_alpha_zero() {
        // alpha = 0, eps = 0: s0 = delta ("+" branch for delta > 0),
        // s = -delta, so the regular branch is e^{-delta z} 1F1(a; gamma; delta z)
        let p = BcHeunParams::new(c(0.7, 0.0), c(1.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.9, 0.0));
        let z = c(0.8, 0.3);
        let (u, _, _) =
            closed_form_eps0_with_derivs(&p, z, c(1.0, 0.0), c(0.0, 0.0), false).unwrap();
        let cfg = SpecialFnConfig::default();
        let a = (p.q + p.gamma * p.delta) / p.delta;
        let want = (-p.delta * z).exp() * kummer_1f1(a, p.gamma, p.delta * z, &cfg).unwrap().value;
        assert!((u - want).norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn eps0_cross_checks_with_integrator() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut done = 0;
        while done < 5 {
            let p =
                BcHeunParams::new(rc(&mut rng), rc(&mut rng), c(0.0, 0.0), rc(&mut rng), rc(&mut rng));
            if (p.delta * p.delta - 4.0 * p.alpha).norm() < 0.1
                || p.gamma.im.abs() < 0.05
                || p.alpha.norm() < 0.1
                || p.q.norm() < 0.1
            {
                continue;
            }
            done += 1;
            let c1 = rc(&mut rng);
            let c2 = rc(&mut rng);
            let z0 = p.q / p.alpha;
            let from = z0 * 0.35;
            let to = z0 * 0.6;
            let (u0, du0, _) = closed_form_eps0_with_derivs(&p, from, c1, c2, false).unwrap();
            let got = integrate(&p, from, (u0, du0), to, 1e-12).unwrap().last();
            let (u1, _, _) = closed_form_eps0_with_derivs(&p, to, c1, c2, false).unwrap();
            assert!(
                (got.0 - u1).norm() <= 1e-8 * u1.norm().max(1.0),
                "closed form vs integrator {}",
                (got.0 - u1).norm() / u1.norm().max(1.0)
            );
        }
    }

    #[test]
    fn alpha_q_zero_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut done = 0;
        while done < 8 {
            let p =
                BcHeunParams::new(rc(&mut rng), rc(&mut rng), rc(&mut rng), c(0.0, 0.0), c(0.0, 0.0));
            if p.gamma.im.abs() < 0.05 {
                continue;
            }
            done += 1;
            // constant branch
            let (u, du, d2u) =
                quadrature_alpha_q_zero_with_derivs(&p, c(0.9, 0.4), c(2.5, -1.0), c(0.0, 0.0))
                    .unwrap();
            assert_eq!(u, c(2.5, -1.0));
            assert_eq!(du, c(0.0, 0.0));
            assert_eq!(d2u, c(0.0, 0.0));

            let c1 = rc(&mut rng);
            let c2 = rc(&mut rng);
            let mut z = rc(&mut rng);
            if z.norm() < 0.3 {
                z += c(0.8, -0.6);
            }
            // derivative equals the integrand (fundamental theorem)
            let (u, du, d2u) = quadrature_alpha_q_zero_with_derivs(&p, z, c1, c2).unwrap();
            let dz = z / z.norm() * (1e-6 * z.norm());
            let fd = (quadrature_alpha_q_zero(&p, z + dz, c1, c2).unwrap()
                - quadrature_alpha_q_zero(&p, z - dz, c1, c2).unwrap())
                / (2.0 * dz);
            assert!(
                (fd - du).norm() <= 1e-6 * du.norm().max(1.0),
                "fd mismatch {}",
                (fd - du).norm()
            );

            let r = residual(&p, z, u, du, d2u).unwrap();
            assert!(r.relative <= 1e-9, "residual {}", r.relative);
        }
    }

    #[test]
    fn oracle_triangle() {
        // series, integrator, and (for eps = 0) the closed form pairwise agree
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut done = 0;
        while done < 5 {
            let p =
                BcHeunParams::new(rc(&mut rng), rc(&mut rng), c(0.0, 0.0), rc(&mut rng), rc(&mut rng));
            if (p.delta * p.delta - 4.0 * p.alpha).norm() < 0.1
                || p.gamma.im.abs() < 0.05
                || p.alpha.norm() < 0.1
                || p.q.norm() < 0.1
            {
                continue;
            }
            done += 1;
            let series = origin_series(&p, 80).unwrap();
            let z0 = p.q / p.alpha;
            let zb = z0 * 0.2;
            let zt = z0 * 0.45;

            // match the closed form to the series at zb by solving for
            // (c1, c2) from u and u' there, then compare at zt
            let (us, dus, _) = series.eval_with_derivs(zb);
            let (m_u, m_du, _) =
                closed_form_eps0_with_derivs(&p, zb, c(1.0, 0.0), c(0.0, 0.0), false).unwrap();
            let (t_u, t_du, _) =
                closed_form_eps0_with_derivs(&p, zb, c(0.0, 0.0), c(1.0, 0.0), false).unwrap();
            let det = m_u * t_du - m_du * t_u;
            let c1 = (us * t_du - dus * t_u) / det;
            let c2 = (m_u * dus - m_du * us) / det;

            let (want, _, _) = series.eval_with_derivs(zt);
            let (got_cf, _, _) = closed_form_eps0_with_derivs(&p, zt, c1, c2, false).unwrap();
            assert!(
                (got_cf - want).norm() <= 1e-7 * want.norm().max(1.0),
                "closed form vs series {}",
                (got_cf - want).norm() / want.norm().max(1.0)
            );

            let got_rk = integrate(&p, zb, (us, dus), zt, 1e-12).unwrap().last().0;
            assert!(
                (got_rk - want).norm() <= 1e-7 * want.norm().max(1.0),
                "integrator vs series {}",
                (got_rk - want).norm() / want.norm().max(1.0)
            );
        }
    }

    #[test]
    fn two_segment_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let p = draw(&mut rng);
        let s = origin_series(&p, 80).unwrap();
        let z0 = p.q / p.alpha;
        let from = z0 * 0.2;
        let to = z0 * 0.55;
        let (u0, du0, _) = s.eval_with_derivs(from);
        let direct = integrate(&p, from, (u0, du0), to, 1e-12).unwrap().last();
        // detour through a sideways waypoint
        let mid = (from + to) * 0.5 + z0 * c(0.0, 0.25);
        let leg1 = integrate(&p, from, (u0, du0), mid, 1e-12).unwrap().last();
        let leg2 = integrate(&p, mid, leg1, to, 1e-12).unwrap().last();
        assert!((direct.0 - leg2.0).norm() <= 1e-10 * direct.0.norm().max(1.0));
    }
}
