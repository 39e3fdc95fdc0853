//! Complex-valued special functions backing the series expansions and the
//! verification oracles: incomplete Beta, incomplete Gamma (both tails),
//! Kummer 1F1, Tricomi U, and the complete (log-)Gamma.
//!
//! All complex powers use the principal branch, cut along the negative real
//! axis. Everything is plain double precision with explicit convergence
//! accounting; callers that need tighter control pass their own
//! [`SpecialFnConfig`].

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Convergence policy for the series/continued-fraction evaluations.
#[derive(Debug, Clone, Copy)]
pub struct SpecialFnConfig {
    /// Relative tolerance on the last added term.
    pub tol: f64,
    /// Iteration budget before reporting divergence.
    pub max_terms: usize,
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        SpecialFnConfig { tol: 1e-15, max_terms: 10_000 }
    }
}

/// Value plus convergence accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnResult {
    pub value: C,
    pub terms_used: usize,
    /// True iff the last added term had magnitude <= tol * |value|.
    pub converged: bool,
}

impl SpecialFnResult {
    fn exact(value: C) -> Self {
        SpecialFnResult { value, terms_used: 0, converged: true }
    }
}

pub(crate) fn near_nonpositive_integer(z: C, tol: f64) -> bool {
    z.im.abs() <= tol && z.re <= tol && (z.re - z.re.round()).abs() <= tol
}

pub(crate) fn near_integer(z: C, tol: f64) -> bool {
    z.im.abs() <= tol && (z.re - z.re.round()).abs() <= tol
}

fn check_finite(values: &[C]) -> Result<()> {
    for v in values {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteInput);
        }
    }
    Ok(())
}

// Lanczos approximation, g = 7, n = 9 (Godfrey coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Principal-branch log Gamma. `exp(log_gamma(z))` is the Gamma function;
/// for `Re z >= 0.5` the value itself is the principal analytic branch.
pub fn log_gamma(z: C) -> Result<C> {
    check_finite(&[z])?;
    if near_nonpositive_integer(z, 1e-12) {
        return Err(Error::PoleAtParameter { name: "z", value: format!("{z}") });
    }
    if z.re < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = std::f64::consts::PI;
        let s = (C::new(pi, 0.0) * z).sin();
        return Ok(C::new(pi, 0.0).ln() - s.ln() - log_gamma(C::new(1.0, 0.0) - z)?);
    }
    let t = z + (LANCZOS_G - 0.5);
    let mut acc = C::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += C::new(c, 0.0) / (z + (i as f64 - 1.0));
    }
    let half_log_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(C::new(half_log_two_pi, 0.0) + (z - 0.5) * t.ln() - t + acc.ln())
}

/// Complete Gamma function.
pub fn gamma(z: C) -> Result<C> {
    Ok(log_gamma(z)?.exp())
}

/// Kummer confluent hypergeometric 1F1(a; b; x) by its defining Taylor series.
pub fn kummer_1f1(a: C, b: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    check_finite(&[a, b, x])?;
    if near_nonpositive_integer(b, 1e-12) {
        return Err(Error::PoleAtParameter { name: "b", value: format!("{b}") });
    }
    let mut sum = C::new(1.0, 0.0);
    let mut term = C::new(1.0, 0.0);
    let mut quiet = 0usize;
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * x / (nf + 1.0);
        sum += term;
        if term.norm() <= cfg.tol * sum.norm() {
            quiet += 1;
            if quiet >= 2 || term.norm() == 0.0 {
                return Ok(SpecialFnResult { value: sum, terms_used: n + 1, converged: true });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::DivergentSeries { max_terms: cfg.max_terms })
}

/// Incomplete Beta function B(a, b; x) = integral of t^(a-1) (1-t)^(b-1)
/// from 0 to x, computed through the Gauss hypergeometric representation
/// `x^a/a * 2F1(a, 1-b; a+1; x)`, which also provides the continuation in `a`.
pub fn inc_beta(a: C, b: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    check_finite(&[a, b, x])?;
    if near_nonpositive_integer(a, 1e-12) {
        return Err(Error::PoleAtParameter { name: "a", value: format!("{a}") });
    }
    if x.norm() == 0.0 {
        if a.re > 0.0 {
            return Ok(SpecialFnResult::exact(C::new(0.0, 0.0)));
        }
        return Err(Error::UnsupportedParameters("B(a,b;0) with Re(a) <= 0".into()));
    }
    if (x - 1.0).norm() <= 1e-14 {
        // complete Beta via Gamma functions; the endpoint needs Re(b) > 0
        if b.re <= 0.0 {
            return Err(Error::DivergentSeries { max_terms: 0 });
        }
        let v = (log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?).exp();
        return Ok(SpecialFnResult::exact(v));
    }
    // for positive integer b the hypergeometric sum terminates and continues
    // B analytically to any x; otherwise |x| < 1 is required
    let terminating = near_nonpositive_integer(C::new(1.0, 0.0) - b, 1e-12);
    if x.norm() > 1.0 + 1e-14 && !terminating {
        return Err(Error::DivergentSeries { max_terms: 0 });
    }
    // 2F1(a, 1-b; a+1; x): term ratio (a+n)(1-b+n) x / ((a+1+n)(n+1))
    let mut sum = C::new(1.0, 0.0);
    let mut term = C::new(1.0, 0.0);
    let bb = C::new(1.0, 0.0) - b;
    let mut quiet = 0usize;
    let mut converged_at = None;
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        term *= (a + nf) * (bb + nf) / (a + (nf + 1.0)) * x / (nf + 1.0);
        sum += term;
        if term.norm() <= cfg.tol * sum.norm() {
            quiet += 1;
            if quiet >= 2 || term.norm() == 0.0 {
                converged_at = Some(n + 1);
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let terms_used = converged_at.ok_or(Error::DivergentSeries { max_terms: cfg.max_terms })?;
    let value = (a * x.ln()).exp() / a * sum;
    Ok(SpecialFnResult { value, terms_used, converged: true })
}

/// Lower incomplete Gamma by its power series:
/// `gamma(s, x) = x^s e^{-x} sum_n x^n / (s (s+1) ... (s+n))`.
fn lower_gamma_series(s: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    let mut term = 1.0 / s;
    let mut sum = term;
    for n in 0..cfg.max_terms {
        term *= x / (s + (n as f64 + 1.0));
        sum += term;
        if term.norm() <= cfg.tol * sum.norm() {
            let value = (s * x.ln()).exp() * (-x).exp() * sum;
            return Ok(SpecialFnResult { value, terms_used: n + 1, converged: true });
        }
    }
    Err(Error::DivergentSeries { max_terms: cfg.max_terms })
}

/// Legendre continued fraction for the upper tail, modified Lentz scheme.
fn upper_gamma_cf(s: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    let tiny = C::new(1e-300, 0.0);
    let b0 = x + 1.0 - s;
    let mut f = if b0.norm() < 1e-300 { tiny } else { b0 };
    let mut c = f;
    let mut d = C::new(0.0, 0.0);
    for n in 1..=cfg.max_terms {
        let nf = n as f64;
        let an = nf * (s - nf);
        let bn = x + (2.0 * nf + 1.0) - s;
        d = bn + an * d;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        d = d.inv();
        c = bn + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < cfg.tol {
            let value = (s * x.ln()).exp() * (-x).exp() / f;
            return Ok(SpecialFnResult { value, terms_used: n, converged: true });
        }
    }
    Err(Error::DivergentSeries { max_terms: cfg.max_terms })
}

fn gamma_route_is_series(s: C, x: C) -> bool {
    x.norm() <= s.norm() + 4.0
}

/// Upper incomplete Gamma function `Gamma(s; x)`, satisfying
/// `d/dx Gamma(s; x) = -x^(s-1) e^(-x)`.
///
/// The small-|x| route sums the lower-tail series and subtracts from the
/// complete Gamma (so `s` must stay off the non-positive integers there);
/// larger |x| switches to the Legendre continued fraction.
pub fn inc_gamma_upper(s: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    check_finite(&[s, x])?;
    if x.norm() == 0.0 {
        if s.re > 0.0 {
            return Ok(SpecialFnResult::exact(gamma(s)?));
        }
        return Err(Error::UnsupportedParameters("Gamma(s; 0) with Re(s) <= 0".into()));
    }
    if gamma_route_is_series(s, x) {
        if near_nonpositive_integer(s, 1e-12) {
            return Err(Error::PoleAtParameter { name: "s", value: format!("{s}") });
        }
        let lower = lower_gamma_series(s, x, cfg)?;
        Ok(SpecialFnResult {
            value: gamma(s)? - lower.value,
            terms_used: lower.terms_used,
            converged: true,
        })
    } else {
        upper_gamma_cf(s, x, cfg)
    }
}

/// Lower incomplete Gamma function `gamma(s; x) = Gamma(s) - Gamma(s; x)`.
pub fn inc_gamma_lower(s: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    check_finite(&[s, x])?;
    if near_nonpositive_integer(s, 1e-12) {
        return Err(Error::PoleAtParameter { name: "s", value: format!("{s}") });
    }
    if x.norm() == 0.0 {
        return Ok(SpecialFnResult::exact(C::new(0.0, 0.0)));
    }
    if gamma_route_is_series(s, x) {
        lower_gamma_series(s, x, cfg)
    } else {
        let upper = upper_gamma_cf(s, x, cfg)?;
        Ok(SpecialFnResult {
            value: gamma(s)? - upper.value,
            terms_used: upper.terms_used,
            converged: true,
        })
    }
}

/// Tricomi confluent hypergeometric U(a, b, x) through the two-Kummer
/// connection formula. Integer `b` would need the logarithmic limit and is
/// rejected.
pub fn tricomi_u(a: C, b: C, x: C, cfg: &SpecialFnConfig) -> Result<SpecialFnResult> {
    check_finite(&[a, b, x])?;
    if near_integer(b, 1e-10) {
        return Err(Error::IntegerBNotSupported);
    }
    if x.norm() == 0.0 {
        return Err(Error::PoleAtParameter { name: "x", value: format!("{x}") });
    }
    let one = C::new(1.0, 0.0);
    let mut terms_used = 0usize;

    // Gamma(1-b)/Gamma(a-b+1) * 1F1(a; b; x); the coefficient vanishes when
    // a-b+1 hits a Gamma pole.
    let first = if near_nonpositive_integer(a - b + one, 1e-10) {
        C::new(0.0, 0.0)
    } else {
        let coeff = (log_gamma(one - b)? - log_gamma(a - b + one)?).exp();
        let m = kummer_1f1(a, b, x, cfg)?;
        terms_used += m.terms_used;
        coeff * m.value
    };
    // Gamma(b-1)/Gamma(a) * x^(1-b) * 1F1(a-b+1; 2-b; x)
    let second = if near_nonpositive_integer(a, 1e-10) {
        C::new(0.0, 0.0)
    } else {
        let coeff = (log_gamma(b - one)? - log_gamma(a)?).exp();
        let m = kummer_1f1(a - b + one, 2.0 * one - b, x, cfg)?;
        terms_used += m.terms_used;
        coeff * ((one - b) * x.ln()).exp() * m.value
    };
    Ok(SpecialFnResult { value: first + second, terms_used, converged: true })
}
