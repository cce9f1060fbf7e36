//! Evolution after the barrier is treated as impenetrable, superpositions
//! with the barrier-immune first excited state, and time reversal.
//!
//! Once the box is split at `x0`, each side is an independent well whose
//! eigenmodes evolve by pure phases; evolving spectrally is exact for the
//! frozen Hamiltonian. Time reversal conjugates and reflects a recorded
//! trajectory, which solves the equation with the reversed schedule — the
//! model of barrier removal.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoxGeometry;
use crate::observables::side_probabilities;
use crate::volterra::{Trajectory, WavefunctionSnapshot};

/// Default number of eigenmodes kept per sub-box.
pub const DEFAULT_MODES_PER_SIDE: usize = 64;

/// Default number of candidate reference times scanned by
/// [`build_superposition`].
pub const DEFAULT_T0_SAMPLES: usize = 256;

/// Norm not captured by the retained sub-box modes before the projection is
/// rejected.
const PROJECTION_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Projection of a snapshot onto the sine eigenmodes of one sub-box.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBoxSpectrum {
    pub side: Side,
    /// Sub-box length: `L + x0` on the left, `L - x0` on the right.
    pub length: f64,
    pub coeffs: Vec<Complex64>,
    /// `E_m = m^2 pi^2 / length^2` per retained mode.
    pub energies: Vec<f64>,
}

impl SubBoxSpectrum {
    pub fn captured_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Mode `m` (1-based) of a well on `[lower, lower + length]`.
fn sub_box_mode(lower: f64, length: f64, m: usize, x: f64) -> f64 {
    (2.0 / length).sqrt() * (m as f64 * std::f64::consts::PI * (x - lower) / length).sin()
}

fn project_side(
    snapshot: &WavefunctionSnapshot,
    side: Side,
    lower: f64,
    length: f64,
    modes: usize,
) -> SubBoxSpectrum {
    let xs = snapshot.grid().points();
    let psi = snapshot.psi();
    let upper = lower + length;
    let mut coeffs = Vec::with_capacity(modes);
    let mut energies = Vec::with_capacity(modes);
    for m in 1..=modes {
        let mut integral = Complex64::new(0.0, 0.0);
        let mut previous: Option<(f64, Complex64)> = None;
        for (&x, &value) in xs.iter().zip(psi) {
            if x < lower || x > upper {
                continue;
            }
            let sample = sub_box_mode(lower, length, m, x) * value;
            if let Some((x_prev, f_prev)) = previous {
                integral += 0.5 * (f_prev + sample) * (x - x_prev);
            } else if x > lower {
                // Partial cell from the sub-box edge, where the mode vanishes.
                integral += 0.5 * sample * (x - lower);
            }
            previous = Some((x, sample));
        }
        if let Some((x_last, f_last)) = previous {
            if x_last < upper {
                integral += 0.5 * f_last * (upper - x_last);
            }
        }
        coeffs.push(integral);
        let wavenumber = m as f64 * std::f64::consts::PI / length;
        energies.push(wavenumber * wavenumber);
    }
    SubBoxSpectrum {
        side,
        length,
        coeffs,
        energies,
    }
}

/// Project a snapshot onto both sub-box spectra.
pub fn project_onto_subboxes(
    snapshot: &WavefunctionSnapshot,
    geom: &BoxGeometry,
    modes_per_side: usize,
) -> Result<(SubBoxSpectrum, SubBoxSpectrum)> {
    if modes_per_side < 1 {
        return Err(Error::Domain("need at least one mode per side".into()));
    }
    let half_width = geom.half_width();
    let x0 = geom.barrier_position();
    let left = project_side(
        snapshot,
        Side::Left,
        -half_width,
        half_width + x0,
        modes_per_side,
    );
    let right = project_side(snapshot, Side::Right, x0, half_width - x0, modes_per_side);
    Ok((left, right))
}

/// Spectral propagator for the split box: project once, advance the mode
/// phases exactly, materialize snapshots on demand.
pub struct SpectralEvolution {
    geom: BoxGeometry,
    grid: crate::geometry::SpatialGrid,
    left: SubBoxSpectrum,
    right: SubBoxSpectrum,
    t: f64,
}

impl SpectralEvolution {
    pub fn new(
        snapshot: &WavefunctionSnapshot,
        geom: &BoxGeometry,
        modes_per_side: usize,
    ) -> Result<Self> {
        let (left, right) = project_onto_subboxes(snapshot, geom, modes_per_side)?;
        let norm_sq = crate::observables::snapshot_norm(snapshot);
        let captured = left.captured_norm_sq() + right.captured_norm_sq();
        let residual = norm_sq - captured;
        if residual > PROJECTION_RESIDUAL_TOL {
            return Err(Error::Resolution(format!(
                "sub-box projection leaves residual norm {residual:.3e}; \
                 raise the mode count or the grid resolution"
            )));
        }
        Ok(Self {
            geom: *geom,
            grid: snapshot.grid().clone(),
            left,
            right,
            t: snapshot.t,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn spectra(&self) -> (&SubBoxSpectrum, &SubBoxSpectrum) {
        (&self.left, &self.right)
    }

    /// Advance every mode phase by `e^{-i E_m dt}`; exactly unitary.
    pub fn advance(&mut self, dt: f64) {
        for spectrum in [&mut self.left, &mut self.right] {
            for (coeff, &energy) in spectrum.coeffs.iter_mut().zip(&spectrum.energies) {
                *coeff *= Complex64::from_polar(1.0, -energy * dt);
            }
        }
        self.t += dt;
    }

    /// Resynthesize the field on the stored grid.
    pub fn snapshot(&self) -> WavefunctionSnapshot {
        let half_width = self.geom.half_width();
        let x0 = self.geom.barrier_position();
        let psi: Vec<Complex64> = self
            .grid
            .points()
            .iter()
            .map(|&x| {
                let (spectrum, lower) = if x < x0 {
                    (&self.left, -half_width)
                } else {
                    (&self.right, x0)
                };
                spectrum
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(idx, coeff)| {
                        coeff * sub_box_mode(lower, spectrum.length, idx + 1, x)
                    })
                    .sum()
            })
            .collect();
        WavefunctionSnapshot::new(self.t, self.grid.clone(), psi)
            .expect("grid and field lengths match")
    }
}

/// One spectral step: project, advance by `dt`, resynthesize.
pub fn spectral_evolve(
    snapshot: &WavefunctionSnapshot,
    geom: &BoxGeometry,
    dt: f64,
    modes_per_side: usize,
) -> Result<WavefunctionSnapshot> {
    let mut evolution = SpectralEvolution::new(snapshot, geom, modes_per_side)?;
    evolution.advance(dt);
    Ok(evolution.snapshot())
}

/// An equal-weight superposition of a solver trajectory with the first
/// excited state, whose reference time was chosen to minimize the final
/// left-side probability.
#[derive(Debug, Clone)]
pub struct Superposition {
    /// The chosen phase reference `t0` of the excited component.
    pub reference_time: f64,
    /// `Psi = (psi + phi_2 e^{-4 i k^2 (t - t0)}) / sqrt(2)` at the recorded
    /// times.
    pub trajectory: Trajectory,
}

/// Scan one phase period of the excited component for the reference time
/// that best empties the left half at the final recorded time, and return
/// the superposed trajectory. Requires a central barrier (the excited state
/// has its node there).
pub fn build_superposition(
    trajectory: &Trajectory,
    geom: &BoxGeometry,
    t0_samples: usize,
) -> Result<Superposition> {
    if geom.barrier_position() != 0.0 {
        return Err(Error::Unsupported(
            "superposition with the first excited state needs the barrier at its node (x0 = 0)"
                .into(),
        ));
    }
    if t0_samples < 2 {
        return Err(Error::Configuration("need at least 2 reference-time samples".into()));
    }
    let rate = geom.mode_energy(2);
    let excited: Vec<Complex64> = trajectory
        .grid()
        .points()
        .iter()
        .map(|&x| Complex64::new(geom.eigenmode(2, x).expect("grid point inside box"), 0.0))
        .collect();
    let period = 2.0 * std::f64::consts::PI / rate;
    let last = trajectory
        .snapshots()
        .last()
        .expect("trajectory is non-empty");

    let combine = |snapshot: &WavefunctionSnapshot, t0: f64| -> WavefunctionSnapshot {
        let phase = Complex64::from_polar(1.0, -rate * (snapshot.t - t0));
        let weight = std::f64::consts::FRAC_1_SQRT_2;
        let psi: Vec<Complex64> = snapshot
            .psi()
            .iter()
            .zip(&excited)
            .map(|(&a, &b)| weight * (a + b * phase))
            .collect();
        WavefunctionSnapshot::new(snapshot.t, snapshot.grid().clone(), psi)
            .expect("lengths match")
    };

    let mut best = (0.0, f64::INFINITY);
    for j in 0..t0_samples {
        let t0 = j as f64 / t0_samples as f64 * period;
        let combined = combine(last, t0);
        let sides = side_probabilities(&combined, geom)?;
        if sides.left < best.1 {
            best = (t0, sides.left);
        }
    }

    let snapshots = trajectory
        .snapshots()
        .iter()
        .map(|snapshot| combine(snapshot, best.0))
        .collect();
    Ok(Superposition {
        reference_time: best.0,
        trajectory: Trajectory::new(snapshots)?,
    })
}

/// Conjugate and time-reflect a trajectory recorded on a uniform grid over
/// `[0, t_split]`. The result solves the equation driven by the reversed
/// schedule `c(t_split - t)`.
pub fn time_reverse(trajectory: &Trajectory, t_split: f64) -> Result<Trajectory> {
    let _ = trajectory.uniform_time_step()?;
    let times = trajectory.times();
    let scale = t_split.abs().max(1.0);
    if times[0].abs() > 1e-9 * scale || (times[times.len() - 1] - t_split).abs() > 1e-9 * scale {
        return Err(Error::Configuration(format!(
            "trajectory must cover [0, {t_split}], got [{}, {}]",
            times[0],
            times[times.len() - 1]
        )));
    }
    let n = trajectory.len();
    let snapshots = (0..n)
        .map(|l| {
            let source = &trajectory.snapshots()[n - 1 - l];
            let psi = source.psi().iter().map(|z| z.conj()).collect();
            WavefunctionSnapshot::new(times[l], source.grid().clone(), psi)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialGrid;
    use crate::observables::snapshot_norm;
    use crate::quadrature::inner_product;

    fn unit_geom() -> BoxGeometry {
        BoxGeometry::unit(0.0).unwrap()
    }

    fn snapshot_from(
        geom: &BoxGeometry,
        points: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> WavefunctionSnapshot {
        let grid = SpatialGrid::new(geom, points).unwrap();
        let psi = grid.points().iter().map(|&x| f(x)).collect();
        WavefunctionSnapshot::new(0.0, grid, psi).unwrap()
    }

    #[test]
    fn right_well_ground_mode_is_stationary() {
        let geom = unit_geom();
        let snapshot = snapshot_from(&geom, 513, |x| {
            if x >= 0.0 {
                Complex64::new((2.0f64).sqrt() * (std::f64::consts::PI * x).sin(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let before = snapshot.density();
        let after = spectral_evolve(&snapshot, &geom, 0.37, 64).unwrap();
        for (a, b) in before.iter().zip(after.density()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn split_target_density_is_stationary() {
        let geom = unit_geom();
        let k = geom.wavenumber();
        let snapshot = snapshot_from(&geom, 513, |x| {
            Complex64::new((2.0 * k * x).sin().abs(), 0.0)
        });
        let after = spectral_evolve(&snapshot, &geom, 1.1, 64).unwrap();
        for (a, b) in snapshot.density().iter().zip(after.density()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_is_unitary_under_phase_advance() {
        let geom = unit_geom();
        let k = geom.wavenumber();
        // A normalized mixture with content on both sides.
        let snapshot = snapshot_from(&geom, 513, |x| {
            Complex64::new(
                (2.0 * k * x).sin().abs() * 0.8 + (k * x).cos() * 0.6,
                0.0,
            )
        });
        let norm = snapshot_norm(&snapshot).sqrt();
        let normalized = snapshot_from(&geom, 513, |x| {
            Complex64::new(
                ((2.0 * k * x).sin().abs() * 0.8 + (k * x).cos() * 0.6) / norm,
                0.0,
            )
        });
        let mut evolution = SpectralEvolution::new(&normalized, &geom, 64).unwrap();
        let before = evolution.left.captured_norm_sq() + evolution.right.captured_norm_sq();
        for _ in 0..100 {
            evolution.advance(0.05);
        }
        let after = evolution.left.captured_norm_sq() + evolution.right.captured_norm_sq();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_split_spectra_have_the_stated_lengths() {
        let geom = BoxGeometry::new(1.0, 0.3, 1).unwrap();
        let grid = SpatialGrid::new(&geom, 513).unwrap();
        let snapshot = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let (left, right) = project_onto_subboxes(&snapshot, &geom, 48).unwrap();
        assert!((left.length - 1.3).abs() < 1e-12);
        assert!((right.length - 0.7).abs() < 1e-12);
        let pi = std::f64::consts::PI;
        assert!((left.energies[0] - pi * pi / (1.3 * 1.3)).abs() < 1e-12);
        // Norm split across both sides accounts for the whole state.
        let captured = left.captured_norm_sq() + right.captured_norm_sq();
        assert!((captured - 1.0).abs() < 1e-3);
    }

    #[test]
    fn time_reverse_preserves_densities_and_is_an_involution() {
        let geom = unit_geom();
        let grid = SpatialGrid::new(&geom, 65).unwrap();
        let times: Vec<f64> = (0..=10).map(|l| l as f64 * 0.1).collect();
        let snapshots: Vec<WavefunctionSnapshot> = times
            .iter()
            .map(|&t| {
                let psi = grid
                    .points()
                    .iter()
                    .map(|&x| Complex64::from_polar((1.0 + x * x) / 2.0, t * (1.0 + x)))
                    .collect();
                WavefunctionSnapshot::new(t, grid.clone(), psi).unwrap()
            })
            .collect();
        let trajectory = Trajectory::new(snapshots).unwrap();
        let reversed = time_reverse(&trajectory, 1.0).unwrap();
        for (l, snapshot) in reversed.snapshots().iter().enumerate() {
            let source = &trajectory.snapshots()[trajectory.len() - 1 - l];
            for (a, b) in snapshot.psi().iter().zip(source.psi()) {
                assert_eq!(a.norm_sqr(), b.norm_sqr());
                assert_eq!(*a, b.conj());
            }
        }
        let double = time_reverse(&reversed, 1.0).unwrap();
        assert_eq!(&double, &trajectory);
    }

    #[test]
    fn time_reverse_requires_a_uniform_grid() {
        let geom = unit_geom();
        let grid = SpatialGrid::new(&geom, 17).unwrap();
        let make = |t: f64| {
            WavefunctionSnapshot::new(
                t,
                grid.clone(),
                vec![Complex64::new(1.0, 0.0); 17],
            )
            .unwrap()
        };
        let trajectory = Trajectory::new(vec![make(0.0), make(0.3), make(1.0)]).unwrap();
        assert!(time_reverse(&trajectory, 1.0).is_err());
    }

    #[test]
    fn superposition_components_stay_orthogonal() {
        // Even psi, odd phi_2: the overlap vanishes by parity.
        let geom = unit_geom();
        let grid = SpatialGrid::new(&geom, 257).unwrap();
        let psi = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let excited: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| Complex64::new(geom.eigenmode(2, x).unwrap(), 0.0))
            .collect();
        let overlap = inner_product(grid.points(), &excited, psi.psi());
        assert!(overlap.norm() < 1e-10);
    }

    #[test]
    fn superposition_rejects_off_center_barriers() {
        let geom = BoxGeometry::new(1.0, 0.3, 1).unwrap();
        let grid = SpatialGrid::new(&geom, 65).unwrap();
        let snapshot = WavefunctionSnapshot::from_eigenmode(&geom, 1, &grid).unwrap();
        let trajectory = Trajectory::new(vec![snapshot]).unwrap();
        assert!(matches!(
            build_superposition(&trajectory, &geom, 16),
            Err(Error::Unsupported(_))
        ));
    }
}
