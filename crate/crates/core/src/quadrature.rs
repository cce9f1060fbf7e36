//! Trapezoid quadrature on uniform grids — the one integration rule used for
//! every spatial inner product and norm in this crate.

use num_complex::Complex64;

/// Trapezoid integral of real samples `values` on the uniform grid `xs`.
pub fn trapezoid(xs: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), values.len());
    let mut total = 0.0;
    for j in 1..xs.len() {
        total += 0.5 * (values[j] + values[j - 1]) * (xs[j] - xs[j - 1]);
    }
    total
}

/// Trapezoid integral of complex samples.
pub fn trapezoid_complex(xs: &[f64], values: &[Complex64]) -> Complex64 {
    debug_assert_eq!(xs.len(), values.len());
    let mut total = Complex64::new(0.0, 0.0);
    for j in 1..xs.len() {
        total += 0.5 * (values[j] + values[j - 1]) * (xs[j] - xs[j - 1]);
    }
    total
}

/// Cumulative trapezoid integral: `out[j] = int_{xs[0]}^{xs[j]}`.
pub fn cumulative_trapezoid_complex(xs: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(xs.len(), values.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut running = Complex64::new(0.0, 0.0);
    out.push(running);
    for j in 1..xs.len() {
        running += 0.5 * (values[j] + values[j - 1]) * (xs[j] - xs[j - 1]);
        out.push(running);
    }
    out
}

/// Cumulative trapezoid integral of real samples.
pub fn cumulative_trapezoid(xs: &[f64], values: &[f64]) -> Vec<f64> {
    debug_assert_eq!(xs.len(), values.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut running = 0.0;
    out.push(running);
    for j in 1..xs.len() {
        running += 0.5 * (values[j] + values[j - 1]) * (xs[j] - xs[j - 1]);
        out.push(running);
    }
    out
}

/// Discrete L2 inner product `int conj(a) b dx` by trapezoid quadrature.
pub fn inner_product(xs: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut total = Complex64::new(0.0, 0.0);
    for j in 1..xs.len() {
        let left = a[j - 1].conj() * b[j - 1];
        let right = a[j].conj() * b[j];
        total += 0.5 * (left + right) * (xs[j] - xs[j - 1]);
    }
    total
}
