//! Independent geometric oracles: the Bargmann cyclic-overlap phase and the
//! signed solid angle of a geodesic polygon on the Bloch sphere.
//!
//! Orientation convention used throughout the crate: a polygon traversed with
//! increasing azimuth around +z has positive solid angle, so the octant path
//! `+z -> +x -> +y` gives `Omega = +pi/2` and a Bargmann phase of `+pi/4`.
//! For chains of Hermitian, positive Kraus operators the Pancharatnam phase of
//! the visited trajectory equals `Omega/2` in this orientation.

use num_complex::Complex64 as C64;

use super::{PhaseError, Result};
use crate::qubit::PureQubitState;

/// Phase of the cyclic overlap product `prod_i <psi_i|psi_{i+1}>` (indices
/// taken cyclically over the closed vertex list).
pub fn bargmann_oracle(states: &[PureQubitState]) -> Result<f64> {
    let n = states.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut product = C64::new(1.0, 0.0);
    for i in 0..n {
        let overlap = states[i].inner(&states[(i + 1) % n]);
        if overlap.norm() < 1e-12 {
            return Err(PhaseError::UndefinedGeodesic { index: i });
        }
        product *= overlap;
    }
    Ok(product.arg())
}

/// Signed solid angle (steradians) of the closed geodesic polygon through the
/// given unit Bloch vectors.
///
/// Repeated consecutive vertices are dropped; fewer than three distinct
/// vertices subtend zero area. Consecutive antipodal vertices leave the
/// geodesic undefined and are an error.
pub fn spherical_excess_oracle(vertices: &[[f64; 3]]) -> Result<f64> {
    let verts = dedup_cyclic(vertices);
    let n = verts.len();
    if n < 3 {
        return Ok(0.0);
    }
    for i in 0..n {
        if dot(verts[i], verts[(i + 1) % n]) < -1.0 + 1e-12 {
            return Err(PhaseError::UndefinedGeodesic { index: i });
        }
    }
    if let Some(area) = great_circle_area(&verts) {
        return Ok(area);
    }
    fan_area(&verts, 0)
}

fn dedup_cyclic(vertices: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(vertices.len());
    for v in vertices {
        let n = dot(*v, *v).sqrt();
        let v = [v[0] / n, v[1] / n, v[2] / n];
        if let Some(last) = out.last() {
            if dot(*last, v) > 1.0 - 1e-12 {
                continue;
            }
        }
        out.push(v);
    }
    while out.len() > 1 && dot(out[0], *out.last().unwrap()) > 1.0 - 1e-12 {
        out.pop();
    }
    out
}

/// Oosterom-Strackee signed solid angle of one spherical triangle.
///
/// Returns `None` when the triangle is numerically degenerate (an antipodal
/// vertex pair makes both the numerator and denominator vanish).
fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Option<f64> {
    let numer = dot(a, cross(b, c));
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    if numer.abs() < 1e-12 && denom.abs() < 1e-9 {
        return None;
    }
    Some(2.0 * numer.atan2(denom))
}

/// Fan decomposition from the first vertex; on a degenerate fan the base is
/// advanced in list order, and as a last resort the longest edge is split at
/// its midpoint.
fn fan_area(verts: &[[f64; 3]], depth: u32) -> Result<f64> {
    let n = verts.len();
    'base: for base in 0..n {
        let mut total = 0.0;
        for k in 1..n - 1 {
            let b = verts[(base + k) % n];
            let c = verts[(base + k + 1) % n];
            match triangle_area(verts[base], b, c) {
                Some(area) => total += area,
                None => continue 'base,
            }
        }
        return Ok(total);
    }
    if depth >= 4 {
        return Err(PhaseError::DegenerateFan);
    }
    // Split the longest edge; the midpoint lies on the geodesic, so the area
    // is unchanged while the antipodal obstruction disappears.
    let mut longest = (0, f64::INFINITY);
    for i in 0..n {
        let d = dot(verts[i], verts[(i + 1) % n]);
        if d < longest.1 {
            longest = (i, d);
        }
    }
    let (i, _) = longest;
    let a = verts[i];
    let b = verts[(i + 1) % n];
    let mid = normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let mut split: Vec<[f64; 3]> = Vec::with_capacity(n + 1);
    split.extend_from_slice(&verts[..=i]);
    split.push(mid);
    split.extend_from_slice(&verts[i + 1..]);
    fan_area(&split, depth + 1)
}

/// Polygons lying exactly on one great circle enclose `2 pi w`, with `w` the
/// signed winding of the traversal around that circle. The triangle-fan
/// formula degenerates there, so this case is resolved directly.
fn great_circle_area(verts: &[[f64; 3]]) -> Option<f64> {
    let n = verts.len();
    let mut normal = None;
    for i in 0..n {
        let c = cross(verts[i], verts[(i + 1) % n]);
        let len = dot(c, c).sqrt();
        if len > 1e-6 {
            normal = Some([c[0] / len, c[1] / len, c[2] / len]);
            break;
        }
    }
    let normal = normal?;
    if verts.iter().any(|v| dot(*v, normal).abs() > 1e-12) {
        return None;
    }
    // In-plane azimuths; steps stay in (-pi, pi) because consecutive
    // antipodal pairs were already rejected.
    let e1 = normalize(verts[0]);
    let e2 = cross(normal, e1);
    let angle = |v: [f64; 3]| dot(v, e2).atan2(dot(v, e1));
    // One full loop encloses a hemisphere: Omega = sum of angular steps.
    let mut winding = 0.0;
    for i in 0..n {
        let step = angle(verts[(i + 1) % n]) - angle(verts[i]);
        winding += crate::phase::wrap_angle(step);
    }
    Some(winding)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}
