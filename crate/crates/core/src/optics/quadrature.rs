//! Adaptive 2D quadrature of the overlap integral, independent of the
//! closed-form path. Used by the validation batteries and tests.

use num_complex::Complex64 as C64;

use super::{BeamField, OpticsError, Pol, Result};

/// Field value of one polarization component at a point.
fn component(field: &BeamField, pol: Pol, x: f64, y: f64) -> C64 {
    let w0 = field.w0_mm;
    let norm = (2.0 / (std::f64::consts::PI * w0 * w0)).sqrt();
    let mut total = C64::new(0.0, 0.0);
    for t in field.terms.iter().filter(|t| t.pol == pol) {
        let dx = x - t.center[0];
        let dy = y - t.center[1];
        let envelope = (-(dx * dx + dy * dy) / (w0 * w0)).exp();
        let phase = t.tilt[0] * x + t.tilt[1] * y;
        total += t.amp * C64::from_polar(norm * envelope, phase);
    }
    total
}

fn integrand(reference: &BeamField, field: &BeamField, x: f64, y: f64) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for pol in [Pol::Y, Pol::X] {
        total += component(reference, pol, x, y).conj() * component(field, pol, x, y);
    }
    total
}

fn simpson(f: &impl Fn(f64) -> C64, a: f64, fa: C64, b: f64, fb: C64) -> (C64, C64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((fa + fm * 4.0 + fb) * ((b - a) / 6.0), fm, m)
}

fn adaptive(
    f: &impl Fn(f64) -> C64,
    a: f64,
    fa: C64,
    b: f64,
    fb: C64,
    whole: C64,
    fm: C64,
    m: f64,
    tol: f64,
    depth: u32,
) -> C64 {
    let (left, flm, lm) = simpson(f, a, fa, m, fm);
    let (right, frm, rm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, flm, lm, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, right, frm, rm, 0.5 * tol, depth - 1)
}

fn integrate_1d(f: &impl Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    let fa = f(a);
    let fb = f(b);
    let (whole, fm, m) = simpson(f, a, fa, b, fb);
    adaptive(f, a, fa, b, fb, whole, fm, m, tol, 24)
}

/// Numerically integrates `E_ref^* . E` over the transverse plane.
///
/// The domain is truncated at eight waists beyond the outermost term centers,
/// far below the requested tolerance for any sane field.
pub fn overlap_by_quadrature(
    reference: &BeamField,
    field: &BeamField,
    tol: f64,
) -> Result<C64> {
    if (reference.w0_mm - field.w0_mm).abs() > 1e-12 * reference.w0_mm.abs().max(1.0) {
        return Err(OpticsError::ConfigMismatch(reference.w0_mm, field.w0_mm));
    }
    let w0 = reference.w0_mm;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for t in reference.terms.iter().chain(field.terms.iter()) {
        for dim in 0..2 {
            lo[dim] = lo[dim].min(t.center[dim]);
            hi[dim] = hi[dim].max(t.center[dim]);
        }
    }
    if !lo[0].is_finite() {
        return Ok(C64::new(0.0, 0.0));
    }
    let pad = 8.0 * w0;
    let outer = |x: f64| {
        let inner = |y: f64| integrand(reference, field, x, y);
        integrate_1d(&inner, lo[1] - pad, hi[1] + pad, tol * 0.05)
    };
    Ok(integrate_1d(&outer, lo[0] - pad, hi[0] + pad, tol))
}
