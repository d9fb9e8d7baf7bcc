//! Stieltjes-type transforms `m₁` and `z·m₂` of the Marchenko-Pastur law
//! and numerical derivatives at the origin.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{NpError, Result};

/// Aspect ratio and spectral edges `λ± = √r + 1/√r ± 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpParams {
    pub r: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MpParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(NpError::RatioOutOfRange(r));
        }
        let centre = r.sqrt() + 1.0 / r.sqrt();
        Ok(Self { r, lambda_minus: centre - 2.0, lambda_plus: centre + 2.0 })
    }
}

/// `m₁`, `z·m₂` and their first three derivatives at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpValuesAtZero {
    pub m1_0: f64,
    pub m1p_0: f64,
    pub m1pp_0: f64,
    pub m1ppp_0: f64,
    pub zm2_0: f64,
    pub zm2p_0: f64,
    pub zm2pp_0: f64,
    pub zm2ppp_0: f64,
}

impl MpValuesAtZero {
    pub fn m1_derivatives(&self) -> [f64; 4] {
        [self.m1_0, self.m1p_0, self.m1pp_0, self.m1ppp_0]
    }

    pub fn zm2_derivatives(&self) -> [f64; 4] {
        [self.zm2_0, self.zm2p_0, self.zm2pp_0, self.zm2ppp_0]
    }
}

pub fn mp_values_at_zero(r: f64) -> Result<MpValuesAtZero> {
    MpParams::new(r)?;
    let s = r.sqrt();
    let q = 1.0 - r;
    Ok(MpValuesAtZero {
        m1_0: s / q,
        m1p_0: r / q.powi(3),
        m1pp_0: 2.0 * r * s * (1.0 + r) / q.powi(5),
        m1ppp_0: 6.0 * r * r * (1.0 + 3.0 * r + r * r) / q.powi(7),
        zm2_0: r - 1.0,
        zm2p_0: r * s / q,
        zm2pp_0: 2.0 * r * r / q.powi(3),
        zm2ppp_0: 6.0 * r * r * s * (1.0 + r) / q.powi(5),
    })
}

/// Both roots of `a x² + b x + c = 0` without cancellation.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let mut s = (b * b - 4.0 * a * c).sqrt();
    if (b.conj() * s).re < 0.0 {
        s = -s;
    }
    let q = -(b + s) / 2.0;
    (q / a, c / q)
}

fn check_domain(z: Complex64, r: f64) -> Result<()> {
    MpParams::new(r)?;
    if z.im < 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(NpError::InvalidData(format!("spectral parameter {z} must lie in the closed upper half-plane")));
    }
    Ok(())
}

/// `m₁(z)`: the root of `z√r m² + (z − 1/√r + √r) m + 1 = 0` in ℂ⁺.
///
/// At `z = 0` (and on the real axis left of `λ₋`) the analytic continuation
/// is returned.
pub fn mp_m1(z: Complex64, r: f64) -> Result<Complex64> {
    check_domain(z, r)?;
    let s = r.sqrt();
    let b = z - 1.0 / s + s;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(-1.0 / b);
    }
    let (x, y) = quadratic_roots(z * s, b, Complex64::new(1.0, 0.0));
    if z.im > 0.0 {
        Ok(if x.im >= y.im { x } else { y })
    } else {
        // real z: the continuation is the root that stays bounded as z → 0
        Ok(if x.norm() <= y.norm() { x } else { y })
    }
}

/// `z·m₂(z)`: the root `w` of `w²/√r + (z − √r + 1/√r) w + z = 0` with
/// `Im(w/z) > 0`, continued to `w(0) = r − 1`.
pub fn mp_zm2(z: Complex64, r: f64) -> Result<Complex64> {
    check_domain(z, r)?;
    let s = r.sqrt();
    let (x, y) = quadratic_roots(Complex64::new(1.0 / s, 0.0), z - s + 1.0 / s, z);
    if z.im > 0.0 {
        Ok(if (x / z).im >= (y / z).im { x } else { y })
    } else {
        // real z: the continuation is the root that stays away from 0
        Ok(if x.norm() >= y.norm() { x } else { y })
    }
}

/// `m₂(z)` for `z` off the origin.
pub fn mp_m2(z: Complex64, r: f64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(NpError::InvalidData("m2 has a pole at the origin".into()));
    }
    Ok(mp_zm2(z, r)? / z)
}

/// First derivative at 0 of a function real on a real neighbourhood of 0,
/// by complex-step differentiation with step `1e-20`.
pub fn complex_step_derivative<F: Fn(Complex64) -> Result<Complex64>>(f: F) -> Result<f64> {
    let h = 1e-20;
    Ok(f(Complex64::new(0.0, h))?.im / h)
}

/// Derivatives of order `0..=max_order` at 0 by the trapezoid rule on the
/// Cauchy integral over the circle `|z| = radius`.
///
/// Only upper half-plane nodes are evaluated; the lower half follows from
/// `f(z̄) = conj f(z)`. Converges geometrically when `f` is analytic on a
/// disc larger than the circle.
pub fn cauchy_derivatives<F: Fn(Complex64) -> Result<Complex64>>(
    f: F,
    radius: f64,
    max_order: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    assert!(nodes.is_multiple_of(2) && nodes > 2 * max_order, "need an even number of nodes above twice the order");
    let half: Vec<(f64, Complex64)> = (0..nodes / 2)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nodes as f64;
            f(Complex64::from_polar(radius, theta)).map(|v| (theta, v))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(max_order + 1);
    let mut factorial = 1.0;
    for k in 0..=max_order {
        if k > 0 {
            factorial *= k as f64;
        }
        // f(z) e^{-ikθ} + conj(f(z)) e^{ikθ} = 2 Re(f(z) e^{-ikθ})
        let sum: f64 = half
            .iter()
            .map(|&(theta, v)| 2.0 * (v * Complex64::from_polar(1.0, -(k as f64) * theta)).re)
            .sum();
        out.push(factorial * sum / (nodes as f64 * radius.powi(k as i32)));
    }
    Ok(out)
}

/// Numerical counterparts of [`MpValuesAtZero`]: first derivatives by
/// complex step, second and third by contour integration on `|z| = λ₋/2`.
pub fn mp_values_at_zero_numeric(r: f64) -> Result<MpValuesAtZero> {
    let params = MpParams::new(r)?;
    let radius = params.lambda_minus / 2.0;
    let m1 = |z| mp_m1(z, r);
    let zm2 = |z| mp_zm2(z, r);
    let m1_c = cauchy_derivatives(m1, radius, 3, 256)?;
    let zm2_c = cauchy_derivatives(zm2, radius, 3, 256)?;
    Ok(MpValuesAtZero {
        m1_0: mp_m1(Complex64::new(0.0, 0.0), r)?.re,
        m1p_0: complex_step_derivative(m1)?,
        m1pp_0: m1_c[2],
        m1ppp_0: m1_c[3],
        zm2_0: mp_zm2(Complex64::new(0.0, 0.0), r)?.re,
        zm2p_0: complex_step_derivative(zm2)?,
        zm2pp_0: zm2_c[2],
        zm2ppp_0: zm2_c[3],
    })
}

/// Evaluation grid in the upper half-plane: real parts across and around
/// the support, imaginary parts from `0.05` to `2`.
pub fn upper_half_plane_grid(params: &MpParams, count: usize) -> Vec<Complex64> {
    let side = (count as f64).sqrt().ceil() as usize;
    let lo = -1.0;
    let hi = params.lambda_plus + 1.0;
    let mut out = Vec::with_capacity(count);
    'outer: for i in 0..side {
        let x = lo + (hi - lo) * i as f64 / (side - 1).max(1) as f64;
        for j in 0..side {
            if out.len() == count {
                break 'outer;
            }
            let y = 0.05 * (40f64).powf(j as f64 / (side - 1).max(1) as f64);
            out.push(Complex64::new(x, y));
        }
    }
    out
}
