//! Adaptive Gauss-Kronrod quadrature of complex-valued integrands along
//! straight segments in the complex plane.
//!
//! The segment is parameterized on [0, 1] and a 7-15 point Gauss-Kronrod
//! pair supplies the local error estimate; intervals are bisected until the
//! combined absolute + relative tolerance is met.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

// QUADPACK 15-point Kronrod abscissae (positive half) and weights, with the
// embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod pass over [t0, t1] in segment parameter space.
/// Returns (kronrod value, |kronrod - gauss| error estimate).
fn gk15<F: Fn(C) -> C>(f: &F, a: C, dir: C, t0: f64, t1: f64) -> (C, f64) {
    let center = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let zc = a + dir * center;
    let fc = f(zc);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dt = half * XGK[j];
        let f1 = f(a + dir * (center - dt));
        let f2 = f(a + dir * (center + dt));
        let fsum = f1 + f2;
        kronrod += fsum * WGK[j];
        if j % 2 == 1 {
            gauss += fsum * WG[j / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    ((kronrod) * dir, (kronrod - gauss).norm() * dir.norm())
}

/// Integrate `f` along the straight segment from `a` to `b`.
///
/// Subdivision stops on each piece once its error estimate is below
/// `tol_abs + tol_rel * |whole-segment estimate|`.
pub fn integrate_segment<F: Fn(C) -> C>(
    f: F,
    a: C,
    b: C,
    tol_abs: f64,
    tol_rel: f64,
) -> Result<C> {
    let dir = b - a;
    if dir.norm() == 0.0 {
        return Ok(C::new(0.0, 0.0));
    }
    let (coarse, _) = gk15(&f, a, dir, 0.0, 1.0);
    let scale = coarse.norm();

    const MAX_DEPTH: u32 = 52;
    const MAX_INTERVALS: usize = 200_000;
    let mut total = C::new(0.0, 0.0);
    let mut stack: Vec<(f64, f64, u32)> = vec![(0.0, 1.0, 0)];
    let mut used = 0usize;
    while let Some((t0, t1, depth)) = stack.pop() {
        used += 1;
        if used > MAX_INTERVALS {
            return Err(Error::QuadratureFailed);
        }
        let (value, err) = gk15(&f, a, dir, t0, t1);
        let budget = (tol_abs + tol_rel * scale) * (t1 - t0);
        if err <= budget || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && err > budget.max(1e-6 * (1.0 + scale)) {
                return Err(Error::QuadratureFailed);
            }
            total += value;
        } else {
            let mid = 0.5 * (t0 + t1);
            stack.push((t0, mid, depth + 1));
            stack.push((mid, t1, depth + 1));
        }
    }
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(Error::QuadratureFailed);
    }
    Ok(total)
}

/// Whether the segment [a, b] crosses the negative real axis (the standard
/// branch cut of the principal powers).
pub fn segment_crosses_negative_axis(a: C, b: C) -> bool {
    if a.im == 0.0 && a.re < 0.0 {
        return true;
    }
    if b.im == 0.0 && b.re < 0.0 {
        return true;
    }
    if (a.im > 0.0) == (b.im > 0.0) {
        return false;
    }
    // crossing point of the line with the real axis
    let t = a.im / (a.im - b.im);
    let x = a.re + t * (b.re - a.re);
    x < 0.0
}

/// Distance from point `p` to the segment [a, b].
pub fn distance_to_segment(p: C, a: C, b: C) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    // projection parameter of p onto the segment, clamped
    let t = ((p - a).re * d.re + (p - a).im * d.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn polynomial_is_exact() {
        // GK15 integrates low-degree polynomials to rounding
        let v = integrate_segment(|z| z * z * z, c(0.0, 0.0), c(1.0, 2.0), 1e-14, 1e-14).unwrap();
        let b = c(1.0, 2.0);
        let want = b * b * b * b / 4.0;
        assert!((v - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn oscillatory_and_decaying() {
        let v = integrate_segment(|z| (-z).exp(), c(0.0, 0.0), c(30.0, 0.0), 1e-13, 1e-13).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mild_endpoint_singularity() {
        // int_0^1 t^(-1/2) dt = 2, handled by subdivision toward the endpoint
        let v = integrate_segment(
            |z| z.powc(c(-0.5, 0.0)),
            c(1e-14, 0.0),
            c(1.0, 0.0),
            1e-10,
            1e-10,
        )
        .unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn segment_distance() {
        assert!((distance_to_segment(c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((distance_to_segment(c(3.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)) - 2.0).abs() < 1e-15);
    }
}
