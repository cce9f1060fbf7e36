//! Box geometry, stationary eigenmodes, and the spatial/temporal grids.
//!
//! Everything is expressed in the dimensionless units of the governing
//! equation `-psi_xx + 2 c(t) delta(x - x0) psi = i psi_t`: the box spans
//! `[-L, +L]`, the wavenumber unit is `k = pi / (2L)`, and the eigenmode
//! `m` has energy `m^2 k^2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The box `[-L, +L]`, the barrier position `x0`, and the index of the
/// eigenmode occupied at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGeometry {
    half_width: f64,
    barrier_position: f64,
    initial_mode: u32,
}

impl BoxGeometry {
    /// A box of half-width `L` with the barrier at `x0`, starting in
    /// eigenmode `n` (`n = 1` is the ground state).
    pub fn new(half_width: f64, barrier_position: f64, initial_mode: u32) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Domain(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        if !(barrier_position > -half_width && barrier_position < half_width) {
            return Err(Error::Domain(format!(
                "barrier position {barrier_position} outside the open box (-{half_width}, {half_width})"
            )));
        }
        if initial_mode < 1 {
            return Err(Error::Domain("initial mode index must be >= 1".into()));
        }
        Ok(Self {
            half_width,
            barrier_position,
            initial_mode,
        })
    }

    /// Unit box `[-1, 1]` with the barrier at `x0`, starting in the ground state.
    pub fn unit(barrier_position: f64) -> Result<Self> {
        Self::new(1.0, barrier_position, 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn barrier_position(&self) -> f64 {
        self.barrier_position
    }

    pub fn initial_mode(&self) -> u32 {
        self.initial_mode
    }

    /// Wavenumber unit `k = pi / (2L)`; mode `m` has wavenumber `m k`.
    pub fn wavenumber(&self) -> f64 {
        PI / (2.0 * self.half_width)
    }

    /// Energy `m^2 k^2` of eigenmode `m`.
    pub fn mode_energy(&self, mode: u32) -> f64 {
        let mk = mode as f64 * self.wavenumber();
        mk * mk
    }

    /// The natural time unit of barrier-insertion protocols, `2 pi / k^2`
    /// (`8 L^2 / pi`). Protocol-length sweeps are expressed in these units.
    pub fn protocol_time_unit(&self) -> f64 {
        2.0 * PI / self.mode_energy(1)
    }

    /// Normalized eigenmode `phi_m(x)` of the barrier-free box:
    /// `L^{-1/2} cos(m k x)` for odd `m`, `L^{-1/2} sin(m k x)` for even `m`.
    pub fn eigenmode(&self, mode: u32, x: f64) -> Result<f64> {
        if mode < 1 {
            return Err(Error::Domain("mode index must be >= 1".into()));
        }
        if x.abs() > self.half_width {
            return Err(Error::Domain(format!(
                "x = {x} outside the box [-{0}, {0}]",
                self.half_width
            )));
        }
        let amplitude = self.half_width.sqrt().recip();
        let phase = mode as f64 * self.wavenumber() * x;
        Ok(if mode % 2 == 1 {
            amplitude * phase.cos()
        } else {
            amplitude * phase.sin()
        })
    }
}

/// Uniform samples of `[-L, +L]`, both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    points: Vec<f64>,
}

/// Default point count; resolves modes up to roughly 200 with more than two
/// points per half-wavelength.
pub const DEFAULT_SPATIAL_POINTS: usize = 513;

impl SpatialGrid {
    pub fn new(geom: &BoxGeometry, point_count: usize) -> Result<Self> {
        if point_count < 2 {
            return Err(Error::Configuration(
                "spatial grid needs at least 2 points".into(),
            ));
        }
        let half_width = geom.half_width();
        let spacing = 2.0 * half_width / (point_count - 1) as f64;
        let mut points: Vec<f64> = (0..point_count)
            .map(|j| -half_width + j as f64 * spacing)
            .collect();
        // Pin the endpoints so the boundary condition is applied at exactly +-L.
        points[0] = -half_width;
        points[point_count - 1] = half_width;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.points[self.points.len() - 1] - self.points[0]) / (self.points.len() - 1) as f64
    }

    pub fn half_width(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let fractional = (x - self.points[0]) / self.spacing();
        (fractional.round().max(0.0) as usize).min(self.points.len() - 1)
    }
}

/// A uniform division of `[0, horizon]` into `steps` pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Configuration(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps < 1 {
            return Err(Error::Configuration("time grid needs at least 1 step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size `eps = horizon / steps`.
    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of step `l`, with `time(steps) = horizon` exact.
    pub fn time(&self, index: usize) -> f64 {
        if index == self.steps {
            self.horizon
        } else {
            index as f64 * self.step()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn wavenumber_closes_the_box() {
        for half_width in [0.5, 1.0, 2.5] {
            let geom = BoxGeometry::new(half_width, 0.0, 1).unwrap();
            assert!((geom.wavenumber() * 2.0 * half_width - PI).abs() < TOL);
        }
    }

    #[test]
    fn ground_state_at_origin() {
        let geom = BoxGeometry::unit(0.0).unwrap();
        assert!((geom.eigenmode(1, 0.0).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn first_excited_has_node_at_origin() {
        let geom = BoxGeometry::unit(0.0).unwrap();
        assert!(geom.eigenmode(2, 0.0).unwrap().abs() < TOL);
    }

    #[test]
    fn cosine_branch_vanishes_at_the_wall() {
        let geom = BoxGeometry::unit(0.0).unwrap();
        assert!(geom.eigenmode(1, 1.0).unwrap().abs() < TOL);
        assert!(geom.eigenmode(3, -1.0).unwrap().abs() < TOL);
    }

    #[test]
    fn eigenmode_rejects_bad_arguments() {
        let geom = BoxGeometry::unit(0.0).unwrap();
        assert!(geom.eigenmode(0, 0.0).is_err());
        assert!(geom.eigenmode(1, 1.5).is_err());
    }

    #[test]
    fn geometry_rejects_barrier_outside_box() {
        assert!(BoxGeometry::new(1.0, 1.0, 1).is_err());
        assert!(BoxGeometry::new(1.0, -1.2, 1).is_err());
        assert!(BoxGeometry::new(-1.0, 0.0, 1).is_err());
        assert!(BoxGeometry::new(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let geom = BoxGeometry::new(1.5, 0.0, 1).unwrap();
        let grid = SpatialGrid::new(&geom, 257).unwrap();
        assert_eq!(grid.points()[0], -1.5);
        assert_eq!(grid.points()[256], 1.5);
        let spacing = grid.spacing();
        for window in grid.points().windows(2) {
            assert!((window[1] - window[0] - spacing).abs() < TOL);
        }
    }

    #[test]
    fn nearest_index_snaps() {
        let geom = BoxGeometry::unit(0.0).unwrap();
        let grid = SpatialGrid::new(&geom, 513).unwrap();
        assert_eq!(grid.nearest_index(0.0), 256);
        assert_eq!(grid.nearest_index(-1.0), 0);
        assert_eq!(grid.nearest_index(1.0), 512);
    }

    #[test]
    fn time_grid_step_times_steps_is_horizon() {
        let grid = TimeGrid::new(2.52, 100_000).unwrap();
        assert!((grid.step() * grid.steps() as f64 - grid.horizon()).abs() <= f64::EPSILON * 2.52);
        assert_eq!(grid.time(grid.steps()), grid.horizon());
    }

    #[test]
    fn protocol_time_unit_matches_divergence_of_quarter_energy_tangent() {
        // tan(k^2 t / 4) diverges at t = 2 pi / k^2.
        let geom = BoxGeometry::unit(0.0).unwrap();
        let unit = geom.protocol_time_unit();
        assert!((unit - 8.0 / PI).abs() < TOL);
    }
}
