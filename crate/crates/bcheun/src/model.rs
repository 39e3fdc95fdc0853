//! The biconfluent Heun equation
//!
//! ```text
//! u'' + (gamma/z + delta + epsilon*z) u' + ((alpha*z - q)/z) u = 0
//! ```
//!
//! its parameter set, the derived singular structure, the auxiliary
//! polynomials appearing in the weighted-derivative equations, and the
//! pointwise residual operator used for verification throughout the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

type C = Complex64;

/// Absolute threshold below which a declared special-case parameter counts as zero.
pub const PARAM_ZERO_TOL: f64 = 1e-12;

/// The five parameters of the canonical equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcHeunParams {
    pub gamma: C,
    pub delta: C,
    pub epsilon: C,
    pub alpha: C,
    pub q: C,
}

/// Location of the extra regular singularities of the auxiliary equations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SingularStructure {
    /// z0 = q / alpha, the singularity of the first-derivative equations.
    pub z0: C,
    /// Roots of `(alpha+epsilon) z (alpha z - 2q) + (q^2 - delta q - alpha gamma) = 0`;
    /// z1 carries the "+" principal square root.
    pub z1: C,
    pub z2: C,
    /// z1 == z2 (both collapse onto z0).
    pub degenerate: bool,
    /// One of z1, z2 coincides with the origin.
    pub root_at_origin: bool,
}

/// Residual of the equation at one point, both raw and scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub value: C,
    /// |value| normalized by the largest of the three term magnitudes.
    pub relative: f64,
}

impl BcHeunParams {
    pub fn new(gamma: C, delta: C, epsilon: C, alpha: C, q: C) -> Self {
        BcHeunParams { gamma, delta, epsilon, alpha, q }
    }

    pub fn all_finite(&self) -> bool {
        [self.gamma, self.delta, self.epsilon, self.alpha, self.q]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// epsilon = 0: the equation reduces to the confluent hypergeometric one.
    pub fn is_reducible_eps0(&self) -> bool {
        self.epsilon.norm() <= PARAM_ZERO_TOL
    }

    /// alpha = 0 and q = 0: the general solution is an explicit quadrature.
    pub fn is_degenerate(&self) -> bool {
        self.alpha.norm() <= PARAM_ZERO_TOL && self.q.norm() <= PARAM_ZERO_TOL
    }

    pub fn z0(&self) -> Result<C> {
        if self.alpha.norm() <= PARAM_ZERO_TOL {
            return Err(Error::AlphaZero);
        }
        Ok(self.q / self.alpha)
    }
}

/// Map the `1 + alpha_r - beta_r z - 2 z^2` canonical form onto ours.
pub fn from_ronveaux(alpha_r: C, beta_r: C, gamma_r: C, delta_r: C) -> BcHeunParams {
    let one = C::new(1.0, 0.0);
    BcHeunParams {
        gamma: one + alpha_r,
        delta: -beta_r,
        epsilon: C::new(-2.0, 0.0),
        alpha: gamma_r - alpha_r - C::new(2.0, 0.0),
        q: (delta_r + (one + alpha_r) * beta_r) * 0.5,
    }
}

/// Map the form with a negated first-derivative coefficient onto ours.
pub fn from_dlmf(gamma_d: C, delta_d: C, alpha_d: C, q_d: C) -> BcHeunParams {
    BcHeunParams {
        gamma: -gamma_d,
        delta: -delta_d,
        epsilon: C::new(-1.0, 0.0),
        alpha: alpha_d,
        q: q_d,
    }
}

/// Derived singular points of the auxiliary equations.
///
/// `z1` takes the "+" branch of the principal square root. When the
/// discriminant `gamma + delta z0 + epsilon z0^2` vanishes (to rounding) the
/// two roots are snapped exactly onto z0 and `degenerate` is set.
pub fn singular_structure(p: &BcHeunParams) -> Result<SingularStructure> {
    let z0 = p.z0()?;
    let ape = p.alpha + p.epsilon;
    if ape.norm() <= PARAM_ZERO_TOL {
        return Err(Error::AlphaPlusEpsZero);
    }
    let disc = p.gamma + p.delta * z0 + p.epsilon * z0 * z0;
    let scale = 1.0 + p.gamma.norm() + (p.delta * z0).norm() + (p.epsilon * z0 * z0).norm();
    let degenerate = disc.norm() <= 1e-12 * scale;
    let (z1, z2) = if degenerate {
        (z0, z0)
    } else {
        let s = (disc / ape).sqrt();
        (z0 + s, z0 - s)
    };
    let root_scale = z0.norm() + (z1 - z0).norm();
    let root_at_origin = z1.norm() <= 1e-12 * root_scale || z2.norm() <= 1e-12 * root_scale;
    Ok(SingularStructure { z0, z1, z2, degenerate, root_at_origin })
}

/// The quadratic numerator of the zero-order term of the `z^gamma u'` equation.
pub fn pi_quadratic(p: &BcHeunParams, z: C) -> C {
    let (g, d, e, a, q) = (p.gamma, p.delta, p.epsilon, p.alpha, p.q);
    let c2 = a * (a + e - g * e);
    let c1 = -(a * (2.0 * q + g * d) + q * e * (2.0 - g));
    let c0 = q * (q + (g - 1.0) * d);
    (c2 * z + c1) * z + c0
}

pub(crate) fn pi_quadratic_poly(p: &BcHeunParams) -> Poly {
    let (g, d, e, a, q) = (p.gamma, p.delta, p.epsilon, p.alpha, p.q);
    Poly::new(vec![
        q * (q + (g - 1.0) * d),
        -(a * (2.0 * q + g * d) + q * e * (2.0 - g)),
        a * (a + e - g * e),
    ])
}

/// The cubic numerator for the `e^{delta z} z^gamma u'` equation.
pub fn p3_delta(p: &BcHeunParams, z: C) -> C {
    p3_delta_poly(p).eval(z)
}

pub(crate) fn p3_delta_poly(p: &BcHeunParams) -> Poly {
    let (g, d, e, a, q) = (p.gamma, p.delta, p.epsilon, p.alpha, p.q);
    Poly::new(vec![
        q * q,
        -q * (2.0 * a + (2.0 - g) * e),
        a * a + q * d * e + a * e * (1.0 - g),
        -a * d * e,
    ])
}

/// The cubic numerator for the `e^{epsilon z^2/2} z^gamma u'` equation.
pub fn p3_eps(p: &BcHeunParams, z: C) -> C {
    p3_eps_poly(p).eval(z)
}

pub(crate) fn p3_eps_poly(p: &BcHeunParams) -> Poly {
    let (g, d, e, a, q) = (p.gamma, p.delta, p.epsilon, p.alpha, p.q);
    Poly::new(vec![
        q * q + q * d * (g - 1.0),
        -a * (2.0 * q + g * d),
        a * a + q * d * e,
        -a * d * e,
    ])
}

/// Plug (u, u', u'') into the equation at z and report how far it is from zero.
pub fn residual(p: &BcHeunParams, z: C, u: C, u1: C, u2: C) -> Result<OdeResidual> {
    if z.norm() == 0.0 {
        return Err(Error::OriginSingular);
    }
    let t1 = (p.gamma / z + p.delta + p.epsilon * z) * u1;
    let t0 = (p.alpha * z - p.q) / z * u;
    let value = u2 + t1 + t0;
    let floor = 1e-300_f64;
    let scale = u2.norm().max(t1.norm()).max(t0.norm()).max(floor);
    Ok(OdeResidual { value, relative: value.norm() / scale })
}
