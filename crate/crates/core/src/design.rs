//! The inverse problem: construct the strength schedule `c(t)` that drives a
//! prescribed boundary evolution `psi(0, t)`, within the two-mode picture.
//!
//! The forward two-mode dynamics is linear and first order in `c(t)`, so the
//! schedule follows in closed form:
//!
//! ```text
//! c(t) = (i L e^{-5 i k^2 t} / 4 psi(0,t))
//!          * int_0^t e^{5 i k^2 t'} (d/dt' + i k^2)(d/dt' + 9 i k^2) psi(0,t') dt'
//!        + c(0) psi(0,0) e^{-5 i k^2 t} / psi(0,t)
//! ```
//!
//! A physical schedule must be real; the imaginary part that the formula
//! returns is reported as a consistency diagnostic rather than silently
//! dropped. The formula divides by `psi(0,t)` and is singular at its zeros.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{BoxGeometry, TimeGrid};
use crate::quadrature::{cumulative_trapezoid, cumulative_trapezoid_complex};

/// Below this boundary-value magnitude the inverse formula is treated as
/// singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-6;

/// Relative mismatch allowed between caller-supplied derivatives and finite
/// differences of the trace.
const DERIVATIVE_CONSISTENCY_TOL: f64 = 0.05;

/// A boundary trace with its first and second time derivatives on a uniform
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBoundary {
    pub times: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub psi_t: Vec<Complex64>,
    pub psi_tt: Vec<Complex64>,
}

impl SampledBoundary {
    /// Build from a bare trace; derivatives come from central differences
    /// (second-order one-sided stencils at the ends).
    pub fn from_trace(times: Vec<f64>, psi: Vec<Complex64>) -> Result<Self> {
        let step = Self::validate_grid(&times, psi.len())?;
        let n = times.len();
        let mut psi_t = vec![Complex64::new(0.0, 0.0); n];
        let mut psi_tt = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n - 1 {
            psi_t[j] = (psi[j + 1] - psi[j - 1]) / (2.0 * step);
            psi_tt[j] = (psi[j + 1] - 2.0 * psi[j] + psi[j - 1]) / (step * step);
        }
        psi_t[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * step);
        psi_t[n - 1] = (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * step);
        psi_tt[0] = (2.0 * psi[0] - 5.0 * psi[1] + 4.0 * psi[2] - psi[3]) / (step * step);
        psi_tt[n - 1] =
            (2.0 * psi[n - 1] - 5.0 * psi[n - 2] + 4.0 * psi[n - 3] - psi[n - 4]) / (step * step);
        Ok(Self {
            times,
            psi,
            psi_t,
            psi_tt,
        })
    }

    /// Build from a trace with caller-supplied derivatives; they must agree
    /// with finite differences of the trace.
    pub fn with_derivatives(
        times: Vec<f64>,
        psi: Vec<Complex64>,
        psi_t: Vec<Complex64>,
        psi_tt: Vec<Complex64>,
    ) -> Result<Self> {
        let step = Self::validate_grid(&times, psi.len())?;
        if psi_t.len() != times.len() || psi_tt.len() != times.len() {
            return Err(Error::Configuration(
                "derivative arrays must match the trace length".into(),
            ));
        }
        let scale_t = psi_t.iter().map(|z| z.norm()).fold(1e-30, f64::max);
        let scale_tt = psi_tt.iter().map(|z| z.norm()).fold(1e-30, f64::max);
        for j in 1..times.len() - 1 {
            let fd_t = (psi[j + 1] - psi[j - 1]) / (2.0 * step);
            let fd_tt = (psi[j + 1] - 2.0 * psi[j] + psi[j - 1]) / (step * step);
            if (psi_t[j] - fd_t).norm() > DERIVATIVE_CONSISTENCY_TOL * scale_t
                || (psi_tt[j] - fd_tt).norm() > DERIVATIVE_CONSISTENCY_TOL * scale_tt
            {
                return Err(Error::Configuration(format!(
                    "supplied derivatives inconsistent with the trace at t = {}",
                    times[j]
                )));
            }
        }
        Ok(Self {
            times,
            psi,
            psi_t,
            psi_tt,
        })
    }

    fn validate_grid(times: &[f64], len: usize) -> Result<f64> {
        if times.len() < 4 {
            return Err(Error::Configuration(
                "sampled boundary needs at least 4 points".into(),
            ));
        }
        if times.len() != len {
            return Err(Error::Configuration(
                "trace length must match the time grid".into(),
            ));
        }
        let step = times[1] - times[0];
        if !(step > 0.0) {
            return Err(Error::Configuration("times must increase".into()));
        }
        let scale = times[times.len() - 1].abs().max(1.0);
        for pair in times.windows(2) {
            if ((pair[1] - pair[0]) - step).abs() > 1e-9 * scale {
                return Err(Error::Configuration(
                    "sampled boundary requires a uniform time grid".into(),
                ));
            }
        }
        Ok(step)
    }
}

/// The boundary evolution the schedule should realize.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetBoundaryEvolution {
    /// Hold one of the two retained modes: index 1 rotates at `-k^2`,
    /// index 2 at `-9 k^2`.
    Eigenmode(u8),
    /// `psi(0,t) = A0 e^{-lambda t} e^{i phi(t)}`, with the phase generated
    /// self-consistently from the linearized schedule.
    AmplitudeDecay { amplitude: f64, decay_rate: f64 },
    /// An explicit trace, e.g. recorded from a forward run.
    Sampled(SampledBoundary),
}

/// A designed schedule: its real part, plus the imaginary remainder of the
/// inverse formula as a consistency diagnostic (zero for self-consistent
/// targets).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignedProtocol {
    pub times: Vec<f64>,
    pub strength: Vec<f64>,
    pub imag_residual: Vec<f64>,
}

/// Phase velocity `phi_t` of an exponentially decaying boundary amplitude
/// under barrier strength `c`, from the two-mode constraint that the
/// schedule be real (positive branch):
///
/// `phi_t = (1/2pi) { -(10 pi k^2 + 8 k c) + sqrt(64 pi^2 k^4 + 64 k^2 c^2 + 4 pi^2 lambda^2) }`
///
/// Equals `-k^2` at `lambda = c = 0` and tends to `-5 k^2` as `c` grows.
pub fn amplitude_decay_phase(decay_rate: f64, strength: f64, geom: &BoxGeometry) -> f64 {
    let k = geom.wavenumber();
    let k2 = k * k;
    let discriminant = 64.0 * PI * PI * k2 * k2
        + 64.0 * k2 * strength * strength
        + 4.0 * PI * PI * decay_rate * decay_rate;
    (-(10.0 * PI * k2 + 8.0 * k * strength) + discriminant.sqrt()) / (2.0 * PI)
}

/// `d phi_t / d c` at fixed decay rate; used to propagate the schedule's
/// time dependence into the phase acceleration.
fn amplitude_decay_phase_slope(decay_rate: f64, strength: f64, geom: &BoxGeometry) -> f64 {
    let k = geom.wavenumber();
    let k2 = k * k;
    let discriminant = 64.0 * PI * PI * k2 * k2
        + 64.0 * k2 * strength * strength
        + 4.0 * PI * PI * decay_rate * decay_rate;
    (-8.0 * k + 64.0 * k2 * strength / discriminant.sqrt()) / (2.0 * PI)
}

/// Leading-order schedule that produces amplitude decay at rate `lambda`:
/// `c(t) = (3 pi k / 4)(e^{4 lambda t} - 1)`, i.e. `3 pi k lambda t` at small
/// times.
pub fn linearized_decay_protocol(decay_rate: f64, t: f64, geom: &BoxGeometry) -> f64 {
    let k = geom.wavenumber();
    0.75 * PI * k * ((4.0 * decay_rate * t).exp() - 1.0)
}

/// Evaluate the inverse formula for `target` with initial strength `c0`.
///
/// `window` fixes the evaluation grid for analytic targets; sampled targets
/// use their native grid and ignore it.
pub fn protocol_from_boundary(
    target: &TargetBoundaryEvolution,
    c0: f64,
    geom: &BoxGeometry,
    window: &TimeGrid,
) -> Result<DesignedProtocol> {
    let realized = realize_target(target, geom, window)?;
    let k2 = geom.mode_energy(1);
    let half_width = geom.half_width();
    let n = realized.times.len();

    // (d/dt + i k^2)(d/dt + 9 i k^2) psi, weighted by the forward phase.
    let integrand: Vec<Complex64> = (0..n)
        .map(|j| {
            let operator = realized.psi_tt[j]
                + Complex64::new(0.0, 10.0 * k2) * realized.psi_t[j]
                - 9.0 * k2 * k2 * realized.psi[j];
            Complex64::from_polar(1.0, 5.0 * k2 * realized.times[j]) * operator
        })
        .collect();
    let cumulative = cumulative_trapezoid_complex(&realized.times, &integrand);

    let psi_start = realized.psi[0];
    let mut strength = Vec::with_capacity(n);
    let mut imag_residual = Vec::with_capacity(n);
    for j in 0..n {
        let magnitude = realized.psi[j].norm();
        if magnitude < SINGULARITY_THRESHOLD {
            return Err(Error::Singularity {
                time: realized.times[j],
                magnitude,
            });
        }
        let backward = Complex64::from_polar(1.0, -5.0 * k2 * realized.times[j]);
        let value = Complex64::new(0.0, 0.25 * half_width) * backward * cumulative[j]
            / realized.psi[j]
            + c0 * psi_start * backward / realized.psi[j];
        strength.push(value.re);
        imag_residual.push(value.im);
    }
    Ok(DesignedProtocol {
        times: realized.times.clone(),
        strength,
        imag_residual,
    })
}

fn realize_target(
    target: &TargetBoundaryEvolution,
    geom: &BoxGeometry,
    window: &TimeGrid,
) -> Result<SampledBoundary> {
    match target {
        TargetBoundaryEvolution::Eigenmode(index) => {
            let k2 = geom.mode_energy(1);
            let rate = match index {
                1 => k2,
                2 => 9.0 * k2,
                other => {
                    return Err(Error::Domain(format!(
                        "eigenmode target index must be 1 or 2, got {other}"
                    )))
                }
            };
            let amplitude = geom.half_width().sqrt().recip();
            let times: Vec<f64> = (0..=window.steps()).map(|l| window.time(l)).collect();
            let psi: Vec<Complex64> = times
                .iter()
                .map(|&t| Complex64::from_polar(amplitude, -rate * t))
                .collect();
            let psi_t: Vec<Complex64> = psi.iter().map(|&p| Complex64::new(0.0, -rate) * p).collect();
            let psi_tt: Vec<Complex64> = psi.iter().map(|&p| -rate * rate * p).collect();
            Ok(SampledBoundary {
                times,
                psi,
                psi_t,
                psi_tt,
            })
        }
        TargetBoundaryEvolution::AmplitudeDecay {
            amplitude,
            decay_rate,
        } => {
            if !(*amplitude > 0.0) {
                return Err(Error::Domain("decay amplitude must be positive".into()));
            }
            if *decay_rate < 0.0 {
                return Err(Error::Domain("decay rate must be non-negative".into()));
            }
            let times: Vec<f64> = (0..=window.steps()).map(|l| window.time(l)).collect();
            let schedule: Vec<f64> = times
                .iter()
                .map(|&t| linearized_decay_protocol(*decay_rate, t, geom))
                .collect();
            let schedule_rate: Vec<f64> = times
                .iter()
                .map(|&t| {
                    3.0 * PI * geom.wavenumber() * decay_rate * (4.0 * decay_rate * t).exp()
                })
                .collect();
            let phase_rate: Vec<f64> = schedule
                .iter()
                .map(|&c| amplitude_decay_phase(*decay_rate, c, geom))
                .collect();
            let phase = cumulative_trapezoid(&times, &phase_rate);
            let mut psi = Vec::with_capacity(times.len());
            let mut psi_t = Vec::with_capacity(times.len());
            let mut psi_tt = Vec::with_capacity(times.len());
            for j in 0..times.len() {
                let value = Complex64::from_polar(
                    amplitude * (-decay_rate * times[j]).exp(),
                    phase[j],
                );
                let log_slope = Complex64::new(-decay_rate, phase_rate[j]);
                let phase_accel =
                    amplitude_decay_phase_slope(*decay_rate, schedule[j], geom) * schedule_rate[j];
                psi.push(value);
                psi_t.push(log_slope * value);
                psi_tt.push((log_slope * log_slope + Complex64::new(0.0, phase_accel)) * value);
            }
            Ok(SampledBoundary {
                times,
                psi,
                psi_t,
                psi_tt,
            })
        }
        TargetBoundaryEvolution::Sampled(sampled) => Ok(sampled.clone()),
    }
}
