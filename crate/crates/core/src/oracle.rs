//! Independent Crank-Nicolson finite-difference reference solver.
//!
//! Shares nothing with the integral-equation path: the Hamiltonian is
//! discretized on the grid with the delta barrier represented as a
//! single-point potential of height `2 c(t) / dx` at the grid point nearest
//! `x0`, and each step solves one tridiagonal system. The Cayley form keeps
//! the norm to round-off regardless of step size. Barrier strengths are
//! evaluated at step midpoints.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoxGeometry;
use crate::protocol::Protocol;
use crate::quadrature::trapezoid;
use crate::volterra::{Trajectory, WavefunctionSnapshot};

/// Grid resolution, time step, and the strength bound of an oracle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmConfig {
    pub spatial_points: usize,
    pub dt: f64,
    /// Runs whose protocol exceeds this strength anywhere on the horizon are
    /// rejected; the oracle is not meant for the divergent tail.
    pub c_cap: f64,
}

impl FdmConfig {
    pub fn new(spatial_points: usize, dt: f64, c_cap: f64) -> Result<Self> {
        if spatial_points < 3 {
            return Err(Error::Configuration(
                "finite-difference grid needs at least 3 points".into(),
            ));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Configuration(format!(
                "time step must be positive and finite, got {dt}"
            )));
        }
        if !c_cap.is_finite() {
            return Err(Error::Configuration("strength cap must be finite".into()));
        }
        Ok(Self {
            spatial_points,
            dt,
            c_cap,
        })
    }
}

impl Default for FdmConfig {
    fn default() -> Self {
        Self {
            spatial_points: 513,
            dt: 1e-4,
            c_cap: 50.0,
        }
    }
}

/// Solve the complex tridiagonal system with constant off-diagonal `off`,
/// diagonal `diag`, and right-hand side `rhs` (overwritten with the
/// solution).
fn solve_tridiagonal(
    off: Complex64,
    diag: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut Vec<Complex64>,
) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, Complex64::new(0.0, 0.0));
    let mut pivot = diag[0];
    rhs[0] /= pivot;
    for j in 1..n {
        scratch[j] = off / pivot;
        pivot = diag[j] - off * scratch[j];
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        let correction = scratch[j + 1] * rhs[j + 1];
        rhs[j] -= correction;
    }
}

fn solve_tridiagonal_real(off: f64, diag: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut pivot = diag[0];
    rhs[0] /= pivot;
    for j in 1..n {
        scratch[j] = off / pivot;
        pivot = diag[j] - off * scratch[j];
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        let correction = scratch[j + 1] * rhs[j + 1];
        rhs[j] -= correction;
    }
}

/// March `initial` forward by `horizon` and record snapshots at
/// `record_times` (absolute times, snapped to the nearest step). The
/// protocol is evaluated on the absolute clock, starting at `initial.t`.
pub fn cn_evolve(
    initial: &WavefunctionSnapshot,
    protocol: &Protocol,
    fdm: &FdmConfig,
    horizon: f64,
    record_times: &[f64],
    geom: &BoxGeometry,
) -> Result<Trajectory> {
    let grid = initial.grid();
    if grid.len() != fdm.spatial_points {
        return Err(Error::Configuration(format!(
            "initial snapshot has {} points but the configuration says {}",
            grid.len(),
            fdm.spatial_points
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Configuration(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let steps = (horizon / fdm.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let dx = grid.spacing();
    let t_start = initial.t;

    // Strengths at step midpoints, validated against the cap up front.
    let strengths: Vec<f64> = (0..steps)
        .map(|l| {
            let t_mid = t_start + (l as f64 + 0.5) * dt;
            let c = protocol.value(t_mid)?;
            if c > fdm.c_cap {
                return Err(Error::Configuration(format!(
                    "protocol strength {c} exceeds the oracle cap {} at t = {t_mid}",
                    fdm.c_cap
                )));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut record_steps: Vec<usize> = record_times
        .iter()
        .map(|&t| {
            let index = ((t - t_start) / dt).round();
            if index < -0.5 || index > steps as f64 + 0.5 {
                return Err(Error::Configuration(format!(
                    "record time {t} outside the run window [{t_start}, {}]",
                    t_start + horizon
                )));
            }
            Ok(index.max(0.0) as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    record_steps.sort_unstable();
    record_steps.dedup();

    let barrier_index = grid.nearest_index(geom.barrier_position());
    if barrier_index == 0 || barrier_index == grid.len() - 1 {
        return Err(Error::Configuration(
            "barrier must sit on an interior grid point".into(),
        ));
    }
    let n = grid.len() - 2;
    let kinetic_diag = 2.0 / (dx * dx);
    let off_h = -1.0 / (dx * dx);
    let off = Complex64::new(0.0, 0.5 * dt) * off_h;

    let mut field: Vec<Complex64> = initial.psi()[1..grid.len() - 1].to_vec();
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = Vec::new();
    let mut snapshots = Vec::with_capacity(record_steps.len());
    let mut next_record = record_steps.iter().copied().peekable();

    let materialize = |field: &[Complex64], t: f64| -> WavefunctionSnapshot {
        let mut psi = Vec::with_capacity(grid.len());
        psi.push(Complex64::new(0.0, 0.0));
        psi.extend_from_slice(field);
        psi.push(Complex64::new(0.0, 0.0));
        WavefunctionSnapshot::new(t, grid.clone(), psi).expect("lengths match")
    };

    for step in 0..=steps {
        if next_record.peek() == Some(&step) {
            let t = if step == steps {
                t_start + horizon
            } else {
                t_start + step as f64 * dt
            };
            snapshots.push(materialize(&field, t));
            next_record.next();
        }
        if step == steps {
            break;
        }
        let barrier = 2.0 * strengths[step] / dx;
        for j in 0..n {
            let potential = if j + 1 == barrier_index { barrier } else { 0.0 };
            let h_diag = kinetic_diag + potential;
            diag[j] = Complex64::new(1.0, 0.0) + Complex64::new(0.0, 0.5 * dt) * h_diag;
            // (I - i dt/2 H) applied to the current field.
            let mut h_psi = h_diag * field[j];
            if j > 0 {
                h_psi += off_h * field[j - 1];
            }
            if j + 1 < n {
                h_psi += off_h * field[j + 1];
            }
            rhs[j] = field[j] - Complex64::new(0.0, 0.5 * dt) * h_psi;
        }
        solve_tridiagonal(off, &diag, &mut rhs, &mut scratch);
        field.copy_from_slice(&rhs);
    }

    if snapshots.is_empty() {
        snapshots.push(materialize(&field, t_start + horizon));
    }
    Trajectory::new(snapshots)
}

/// Lowest eigenpair of the static discrete Hamiltonian with a constant
/// barrier, by inverse iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticMode {
    pub energy: f64,
    /// Trapezoid-normalized mode samples on the full grid (walls included).
    pub shape: Vec<f64>,
}

pub fn static_groundstate(
    strength: f64,
    geom: &BoxGeometry,
    fdm: &FdmConfig,
) -> Result<StaticMode> {
    if strength < 0.0 {
        return Err(Error::Domain("static barrier strength must be >= 0".into()));
    }
    let grid = crate::geometry::SpatialGrid::new(geom, fdm.spatial_points)?;
    let dx = grid.spacing();
    let barrier_index = grid.nearest_index(geom.barrier_position());
    let n = grid.len() - 2;
    let off = -1.0 / (dx * dx);
    let diag: Vec<f64> = (0..n)
        .map(|j| {
            let potential = if j + 1 == barrier_index {
                2.0 * strength / dx
            } else {
                0.0
            };
            2.0 / (dx * dx) + potential
        })
        .collect();

    let apply = |v: &[f64], out: &mut [f64]| {
        for j in 0..n {
            let mut sum = diag[j] * v[j];
            if j > 0 {
                sum += off * v[j - 1];
            }
            if j + 1 < n {
                sum += off * v[j + 1];
            }
            out[j] = sum;
        }
    };

    // Start from the barrier-free ground state; it overlaps the true ground
    // state for every strength.
    let mut vector: Vec<f64> = grid.points()[1..grid.len() - 1]
        .iter()
        .map(|&x| geom.eigenmode(1, x).expect("interior point"))
        .collect();
    let mut h_vector = vec![0.0; n];
    let mut scratch = Vec::new();
    let mut energy = f64::INFINITY;
    let mut converged = false;
    for _ in 0..500 {
        solve_tridiagonal_real(off, &diag, &mut vector, &mut scratch);
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut vector {
            *v /= norm;
        }
        apply(&vector, &mut h_vector);
        let rayleigh: f64 = vector.iter().zip(&h_vector).map(|(a, b)| a * b).sum();
        if (rayleigh - energy).abs() <= 1e-13 * rayleigh.abs().max(1.0) {
            energy = rayleigh;
            converged = true;
            break;
        }
        energy = rayleigh;
    }
    if !converged {
        return Err(Error::Numerical(
            "inverse iteration did not converge in 500 sweeps".into(),
        ));
    }

    let mut shape = Vec::with_capacity(grid.len());
    shape.push(0.0);
    shape.extend_from_slice(&vector);
    shape.push(0.0);
    let density: Vec<f64> = shape.iter().map(|v| v * v).collect();
    let quad_norm = trapezoid(grid.points(), &density).sqrt();
    let sign = if shape[grid.nearest_index(0.0)] < 0.0
        || shape.iter().sum::<f64>() < 0.0
    {
        -1.0
    } else {
        1.0
    };
    for v in &mut shape {
        *v *= sign / quad_norm;
    }
    Ok(StaticMode { energy, shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialGrid;
    use crate::observables::snapshot_norm;

    fn unit_geom() -> BoxGeometry {
        BoxGeometry::unit(0.0).unwrap()
    }

    #[test]
    fn free_eigenstate_keeps_its_density_and_rotates_its_phase() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(513, 1e-3, 50.0).unwrap();
        let grid = SpatialGrid::new(&geom, 513).unwrap();
        let initial = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let protocol = Protocol::constant(0.0).unwrap();
        let horizon = 1.0;
        let trajectory = cn_evolve(&initial, &protocol, &fdm, horizon, &[horizon], &geom).unwrap();
        let final_snapshot = &trajectory.snapshots()[0];
        let phase = Complex64::from_polar(1.0, -geom.mode_energy(1) * horizon);
        for (&x, &psi) in grid.points().iter().zip(final_snapshot.psi()) {
            let expected = phase * geom.eigenmode(1, x).unwrap();
            assert!(
                (psi - expected).norm() < 1e-4,
                "free evolution error too large at x = {x}"
            );
        }
    }

    #[test]
    fn norm_is_conserved_to_roundoff() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(257, 2e-4, 60.0).unwrap();
        let grid = SpatialGrid::new(&geom, 257).unwrap();
        let initial = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let protocol = Protocol::tangent(geom.protocol_time_unit())
            .unwrap()
            .capped(40.0, 2.2, 10_001)
            .unwrap();
        let trajectory = cn_evolve(&initial, &protocol, &fdm, 2.0, &[2.0], &geom).unwrap();
        let norm = snapshot_norm(&trajectory.snapshots()[0]);
        assert!(
            (norm - 1.0).abs() < 1e-10,
            "norm drift {} exceeds roundoff budget",
            (norm - 1.0).abs()
        );
    }

    #[test]
    fn cap_violations_are_rejected_before_stepping() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(129, 1e-3, 5.0).unwrap();
        let grid = SpatialGrid::new(&geom, 129).unwrap();
        let initial = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let protocol = Protocol::constant(6.0).unwrap();
        assert!(matches!(
            cn_evolve(&initial, &protocol, &fdm, 1.0, &[], &geom),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn free_groundstate_energy() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(513, 1e-3, 50.0).unwrap();
        let mode = static_groundstate(0.0, &geom, &fdm).unwrap();
        let k2 = geom.mode_energy(1);
        assert!(
            (mode.energy - k2).abs() < 1e-4,
            "got {}, want ~{k2}",
            mode.energy
        );
    }

    #[test]
    fn impenetrable_limit_doubles_the_mode_index() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(1025, 1e-3, 50.0).unwrap();
        let mode = static_groundstate(1e7, &geom, &fdm).unwrap();
        let target = geom.mode_energy(2);
        assert!(
            ((mode.energy - target) / target).abs() < 1e-3,
            "got {}, want ~{target}",
            mode.energy
        );
    }

    #[test]
    fn groundstate_matches_the_transcendental_root() {
        // Independent route: the even bound mode satisfies
        // c sin(qL) + q cos(qL) = 0 with energy q^2; bisection on
        // (pi/2L, pi/L).
        let geom = unit_geom();
        let strength = 5.0;
        let f = |q: f64| strength * q.sin() + q * q.cos();
        let (mut lo, mut hi) = (std::f64::consts::FRAC_PI_2, std::f64::consts::PI);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let reference = (0.5 * (lo + hi)).powi(2);

        let fdm = FdmConfig::new(1601, 1e-3, 50.0).unwrap();
        let mode = static_groundstate(strength, &geom, &fdm).unwrap();
        assert!(
            (mode.energy - reference).abs() < 2e-3,
            "grid energy {} vs transcendental {reference}",
            mode.energy
        );

        // The single-point delta model converges to the transcendental value.
        let coarse = static_groundstate(strength, &geom, &FdmConfig::new(401, 1e-3, 50.0).unwrap())
            .unwrap()
            .energy;
        let fine = static_groundstate(strength, &geom, &FdmConfig::new(801, 1e-3, 50.0).unwrap())
            .unwrap()
            .energy;
        assert!(
            (fine - reference).abs() < (coarse - reference).abs(),
            "refinement should reduce the eigenvalue error"
        );
    }

    #[test]
    fn groundstate_shape_is_normalized_and_positive() {
        let geom = unit_geom();
        let fdm = FdmConfig::new(513, 1e-3, 50.0).unwrap();
        let mode = static_groundstate(3.0, &geom, &fdm).unwrap();
        let grid = SpatialGrid::new(&geom, 513).unwrap();
        let density: Vec<f64> = mode.shape.iter().map(|v| v * v).collect();
        assert!((trapezoid(grid.points(), &density) - 1.0).abs() < 1e-12);
        assert!(mode.shape[128] > 0.0);
    }
}
