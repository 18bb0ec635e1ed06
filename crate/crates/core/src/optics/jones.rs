//! Jones matrices for the polarization elements, in the
//! `(E_vertical, E_horizontal)` basis.

use num_complex::Complex64 as C64;

use crate::qubit::Operator2;

/// Real-space rotation by `angle`:
/// `[[cos a, -sin a], [sin a, cos a]]`.
pub fn jones_rotation(angle: f64) -> Operator2 {
    let (s, c) = angle.sin_cos();
    Operator2::new(
        C64::new(c, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(c, 0.0),
    )
}

/// Phase plate of retardance `phi` with fast axis at `axis_angle` from
/// vertical: `R(a) diag(e^{i phi/2}, e^{-i phi/2}) R(-a)`.
pub fn jones_phase_plate(phi: f64, axis_angle: f64) -> Operator2 {
    let plate = Operator2::diag(
        C64::from_polar(1.0, 0.5 * phi),
        C64::from_polar(1.0, -0.5 * phi),
    );
    jones_rotation(axis_angle) * plate * jones_rotation(-axis_angle)
}
