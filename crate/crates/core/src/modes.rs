//! Truncated-mode approximations of the boundary value `psi(0, t)` for a
//! barrier inserted at the origin with the system starting in the ground
//! state.
//!
//! Keeping the `m` lowest odd modes turns the boundary integral equation
//! into `m` driven amplitudes `g_mu` obeying
//! `dg_mu/dt = -i (2mu+1)^2 k^2 g_mu + (2i/L) c(t) psi(0, t)` with
//! `psi(0,t) = L^{-1/2} e^{-i k^2 t} - sum_mu g_mu`, integrated here with the
//! second-order (midpoint) Runge-Kutta method. The single-mode case has a
//! closed form that changes the phase only.

use num_complex::Complex64;

use crate::design;
use crate::error::{Error, Result};
use crate::geometry::{BoxGeometry, TimeGrid};
use crate::protocol::Protocol;

/// Default Runge-Kutta step count per horizon.
pub const DEFAULT_RK2_STEPS: usize = 100_000;

/// Driven-mode amplitudes of an `m`-mode truncation at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedModeState {
    /// Number of retained modes.
    pub retained: usize,
    /// `g(0, t; mu)` for mu = 0..retained.
    pub amplitudes: Vec<Complex64>,
    pub t: f64,
}

impl TruncatedModeState {
    /// `psi(0, t) = L^{-1/2} e^{-i k^2 t} - sum_mu g_mu`, the identity that
    /// defines the truncation.
    pub fn boundary_value(&self, geom: &BoxGeometry) -> Complex64 {
        let free = Complex64::from_polar(
            geom.half_width().sqrt().recip(),
            -geom.mode_energy(1) * self.t,
        );
        free - self.amplitudes.iter().sum::<Complex64>()
    }
}

/// A complex-valued trace sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl ComplexTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at the recorded time nearest to `t`.
    pub fn nearest(&self, t: f64) -> Complex64 {
        let step = self.times[1] - self.times[0];
        let index = ((t - self.times[0]) / step).round().max(0.0) as usize;
        self.values[index.min(self.values.len() - 1)]
    }
}

fn require_symmetric_ground(geom: &BoxGeometry) -> Result<()> {
    if geom.barrier_position() != 0.0 || geom.initial_mode() != 1 {
        return Err(Error::Unsupported(
            "mode truncation is defined for x0 = 0 starting from the ground state".into(),
        ));
    }
    Ok(())
}

/// Closed-form single-mode boundary value:
/// `psi(0,t) = psi(0,0) exp[-i (k^2 t + (2/L) int_0^t c)]`.
/// The magnitude never changes; only the phase responds to the barrier.
pub fn single_mode_psi0(protocol: &Protocol, geom: &BoxGeometry, t: f64) -> Result<Complex64> {
    require_symmetric_ground(geom)?;
    let half_width = geom.half_width();
    let phase = geom.mode_energy(1) * t + 2.0 / half_width * protocol.integral(t)?;
    Ok(Complex64::from_polar(half_width.sqrt().recip(), -phase))
}

/// Integrate the `retained`-mode truncation over `time` and return the
/// boundary-value trace (one entry per grid time, endpoints included).
pub fn integrate_truncated(
    retained: usize,
    protocol: &Protocol,
    geom: &BoxGeometry,
    time: &TimeGrid,
) -> Result<ComplexTrace> {
    require_symmetric_ground(geom)?;
    if retained < 1 {
        return Err(Error::Domain("need at least one retained mode".into()));
    }
    let half_width = geom.half_width();
    let k2 = geom.mode_energy(1);
    let rates: Vec<f64> = (0..retained)
        .map(|mu| -((2 * mu + 1) as f64).powi(2) * k2)
        .collect();
    let drive = Complex64::new(0.0, 2.0 / half_width);
    let free_amplitude = half_width.sqrt().recip();
    let psi0 = |t: f64, g: &[Complex64]| -> Complex64 {
        Complex64::from_polar(free_amplitude, -k2 * t) - g.iter().sum::<Complex64>()
    };
    let derivative = |t: f64, g: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        let boundary = psi0(t, g);
        let driving = drive * protocol.value(t)? * boundary;
        for mu in 0..retained {
            out[mu] = Complex64::new(0.0, rates[mu]) * g[mu] + driving;
        }
        Ok(())
    };

    let h = time.step();
    let instability_bound = 10.0 / half_width;
    let mut g = vec![Complex64::new(0.0, 0.0); retained];
    let mut k1 = vec![Complex64::new(0.0, 0.0); retained];
    let mut k2_slope = vec![Complex64::new(0.0, 0.0); retained];
    let mut midpoint = vec![Complex64::new(0.0, 0.0); retained];
    let mut times = Vec::with_capacity(time.steps() + 1);
    let mut values = Vec::with_capacity(time.steps() + 1);
    times.push(0.0);
    values.push(psi0(0.0, &g));
    for step in 0..time.steps() {
        let t = time.time(step);
        derivative(t, &g, &mut k1)?;
        for mu in 0..retained {
            midpoint[mu] = g[mu] + 0.5 * h * k1[mu];
        }
        derivative(t + 0.5 * h, &midpoint, &mut k2_slope)?;
        for mu in 0..retained {
            g[mu] += h * k2_slope[mu];
        }
        let t_next = time.time(step + 1);
        let boundary = psi0(t_next, &g);
        if boundary.norm_sqr() > instability_bound {
            return Err(Error::Instability(format!(
                "|psi(0)|^2 = {} at t = {t_next}; reduce the Runge-Kutta step",
                boundary.norm_sqr()
            )));
        }
        times.push(t_next);
        values.push(boundary);
    }
    Ok(ComplexTrace { times, values })
}

/// Large-strength phase velocity of the two-mode picture at zero amplitude
/// decay; tends to `-5 k^2` as the strength grows and equals `-k^2` at zero
/// strength.
pub fn asymptotic_phase_velocity(strength: f64, geom: &BoxGeometry) -> f64 {
    design::amplitude_decay_phase(0.0, strength, geom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_geom() -> BoxGeometry {
        BoxGeometry::unit(0.0).unwrap()
    }

    #[test]
    fn single_mode_reduces_to_free_evolution_without_driving() {
        let geom = unit_geom();
        let protocol = Protocol::constant(0.0).unwrap();
        for t in [0.0, 0.4, 1.9] {
            let value = single_mode_psi0(&protocol, &geom, t).unwrap();
            let expected = Complex64::from_polar(1.0, -geom.mode_energy(1) * t);
            assert!((value - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_constant_barrier_shifts_the_phase_rate() {
        let geom = unit_geom();
        let c0 = 0.7;
        let protocol = Protocol::constant(c0).unwrap();
        let t = 1.3;
        let value = single_mode_psi0(&protocol, &geom, t).unwrap();
        let expected = Complex64::from_polar(1.0, -(geom.mode_energy(1) + 2.0 * c0) * t);
        assert!((value - expected).norm() < 1e-12);
        assert!((value.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_magnitude_is_invariant_under_the_divergent_schedule() {
        let geom = unit_geom();
        let protocol = Protocol::tangent(geom.protocol_time_unit()).unwrap();
        let horizon = protocol.simulation_horizon().unwrap();
        for frac in [0.1, 0.5, 0.9, 1.0] {
            let value = single_mode_psi0(&protocol, &geom, frac * horizon).unwrap();
            assert!((value.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_integration_with_zero_driving_is_free() {
        let geom = unit_geom();
        let protocol = Protocol::constant(0.0).unwrap();
        let time = TimeGrid::new(2.0, 2_000).unwrap();
        let trace = integrate_truncated(2, &protocol, &geom, &time).unwrap();
        for (t, value) in trace.times.iter().zip(&trace.values) {
            let expected = Complex64::from_polar(1.0, -geom.mode_energy(1) * t);
            assert!((value - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn two_mode_density_decays_toward_zero_near_the_divergence() {
        let geom = unit_geom();
        let protocol = Protocol::tangent(geom.protocol_time_unit()).unwrap();
        let horizon = protocol.simulation_horizon().unwrap();
        let time = TimeGrid::new(horizon, DEFAULT_RK2_STEPS).unwrap();
        let trace = integrate_truncated(2, &protocol, &geom, &time).unwrap();
        let final_density = trace.values.last().unwrap().norm_sqr();
        assert!(
            final_density < 0.1,
            "two-mode density should collapse, got {final_density}"
        );
    }

    #[test]
    fn rejects_asymmetric_configurations() {
        let geom = BoxGeometry::new(1.0, 0.3, 1).unwrap();
        let protocol = Protocol::constant(0.0).unwrap();
        assert!(matches!(
            single_mode_psi0(&protocol, &geom, 0.1),
            Err(Error::Unsupported(_))
        ));
        let time = TimeGrid::new(1.0, 100).unwrap();
        assert!(integrate_truncated(2, &protocol, &geom, &time).is_err());
    }

    #[test]
    fn rk2_is_second_order() {
        let geom = unit_geom();
        let protocol = Protocol::tangent(geom.protocol_time_unit()).unwrap();
        let horizon = 0.9 * protocol.simulation_horizon().unwrap();
        let steps = 4_000;
        let coarse = integrate_truncated(
            2,
            &protocol,
            &geom,
            &TimeGrid::new(horizon, steps).unwrap(),
        )
        .unwrap();
        let medium = integrate_truncated(
            2,
            &protocol,
            &geom,
            &TimeGrid::new(horizon, 2 * steps).unwrap(),
        )
        .unwrap();
        let fine = integrate_truncated(
            2,
            &protocol,
            &geom,
            &TimeGrid::new(horizon, 4 * steps).unwrap(),
        )
        .unwrap();
        // Compare at the shared final time.
        let d1 = (coarse.values.last().unwrap() - medium.values.last().unwrap()).norm();
        let d2 = (medium.values.last().unwrap() - fine.values.last().unwrap()).norm();
        let ratio = d1 / d2;
        assert!(
            ratio > 3.0 && ratio < 5.0,
            "expected ~4x shrink per halving, got {ratio}"
        );
    }

    #[test]
    fn scalar_second_order_formulation_agrees_with_the_mode_system() {
        // Independent route: integrate the scalar ODE
        // pi psi_tt + [10 i pi k^2 + 8 i k c] psi_t
        //   + [-9 pi k^4 - 40 k^3 c + 8 i k c_t] psi = 0
        // with the same midpoint scheme and compare boundary traces.
        let geom = unit_geom();
        let protocol = Protocol::tangent(geom.protocol_time_unit()).unwrap();
        let horizon = protocol.simulation_horizon().unwrap();
        let time = TimeGrid::new(horizon, DEFAULT_RK2_STEPS).unwrap();
        let k = geom.wavenumber();
        let k2 = geom.mode_energy(1);

        let derivative = |t: f64, y: &[Complex64; 2]| -> [Complex64; 2] {
            let c = protocol.value(t).unwrap();
            let c_t = protocol.rate_of_change(t).unwrap();
            let damping = Complex64::new(0.0, 10.0 * PI * k2 + 8.0 * k * c);
            let stiffness =
                Complex64::new(-9.0 * PI * k2 * k2 - 40.0 * k.powi(3) * c, 8.0 * k * c_t);
            [y[1], -(damping * y[1] + stiffness * y[0]) / PI]
        };
        let h = time.step();
        let mut y = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -k2), // ground-state initial slope; c(0) = 0
        ];
        let mut scalar_values = Vec::with_capacity(time.steps() + 1);
        scalar_values.push(y[0]);
        for step in 0..time.steps() {
            let t = time.time(step);
            let k1 = derivative(t, &y);
            let mid = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]];
            let k2s = derivative(t + 0.5 * h, &mid);
            y = [y[0] + h * k2s[0], y[1] + h * k2s[1]];
            scalar_values.push(y[0]);
        }

        let system = integrate_truncated(2, &protocol, &geom, &time).unwrap();
        let sup = system
            .values
            .iter()
            .zip(&scalar_values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(
            sup < 1e-6,
            "formulations should agree to integrator tolerance, sup-diff = {sup}"
        );
    }

    #[test]
    fn asymptotic_phase_velocity_limits() {
        let geom = unit_geom();
        let k2 = geom.mode_energy(1);
        assert!((asymptotic_phase_velocity(0.0, &geom) + k2).abs() < 1e-12);
        let large = asymptotic_phase_velocity(1e6, &geom);
        assert!(((large + 5.0 * k2) / (5.0 * k2)).abs() < 1e-4);
    }
}
