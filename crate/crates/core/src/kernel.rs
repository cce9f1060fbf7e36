//! The per-mode convolution kernel of the boundary integral equation.
//!
//! The full kernel factorizes as `f_nu(x, t) = kernel_coeff(nu, x) *
//! exp(-i nu^2 k^2 t)`; this module supplies the time-independent factor.
//! It is given by one bracket product for `x >= x0` and another for
//! `x < x0`; the two agree at `x = x0` and both vanish at the walls.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoxGeometry;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `f_nu(x, 0)`: the mode-`nu` kernel amplitude at position `x` for a barrier
/// at `x0`. Uses the `x > x0` branch when `x >= x0` and the `x < x0` branch
/// otherwise.
pub fn kernel_coeff(geom: &BoxGeometry, nu: u32, x: f64) -> Result<Complex64> {
    let half_width = geom.half_width();
    if nu < 1 {
        return Err(Error::Domain("kernel mode index must be >= 1".into()));
    }
    if x.abs() > half_width {
        return Err(Error::Domain(format!(
            "x = {x} outside the box [-{half_width}, {half_width}]"
        )));
    }
    let x0 = geom.barrier_position();
    let nu_k = nu as f64 * geom.wavenumber();
    let sign = if nu % 2 == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    };
    // 1/(2iL) = -i/(2L)
    let prefactor = Complex64::new(0.0, -0.5 / half_width) * cis(-nu_k * (x + x0));
    let (inner, outer) = if x >= x0 { (x, x0) } else { (x0, x) };
    let first = sign - cis(2.0 * nu_k * inner);
    let second = cis(2.0 * nu_k * (half_width + outer)) - Complex64::new(1.0, 0.0);
    Ok(prefactor * first * second)
}
