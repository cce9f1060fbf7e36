//! The exact solver: the boundary integral equation discretized with left
//! Riemann sums.
//!
//! The wave function is `psi(x,t) = phi_n(x) e^{-i n^2 k^2 t} +
//! sum_nu kernel_coeff(nu, x) e^{-i nu^2 k^2 t} G_nu(t)` with
//! `G_nu(t) = int_0^t c(t') psi(x0,t') e^{i nu^2 k^2 t'} dt'`.
//! Everything follows from the boundary value `psi(x0, t)`: each step first
//! evaluates it from the accumulators `G_nu` (which hold contributions
//! through the previous step, making the scheme explicit), then lets the
//! accumulators absorb the new left-endpoint contribution.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoxGeometry, SpatialGrid, TimeGrid};
use crate::kernel::kernel_coeff;
use crate::protocol::Protocol;
use crate::quadrature::trapezoid_complex;

/// Default kernel-mode cutoff.
pub const DEFAULT_MODE_CUTOFF: usize = 128;

/// Default bound on the phase rotation per step of the fastest tracked mode.
pub const DEFAULT_THETA_MAX: f64 = 1.0;

/// Steps between renormalizations of the running phase factors.
const PHASE_RENORM_INTERVAL: usize = 1 << 16;

/// Density bound signalling a blow-up of the explicit scheme.
const INSTABILITY_DENSITY_FACTOR: f64 = 10.0;

/// Mode cutoff and step-size criterion for a solver run.
///
/// The step size must satisfy `(2N+1)^2 k^2 eps <= theta_max` so that the
/// fastest retained phase rotates by a bounded angle per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub mode_cutoff: usize,
    pub theta_max: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            mode_cutoff: DEFAULT_MODE_CUTOFF,
            theta_max: DEFAULT_THETA_MAX,
        }
    }
}

impl RunSettings {
    pub fn with_mode_cutoff(mode_cutoff: usize) -> Self {
        Self {
            mode_cutoff,
            ..Self::default()
        }
    }

    /// Largest admissible time step for this cutoff.
    pub fn max_step(&self, geom: &BoxGeometry) -> f64 {
        let top = (2 * self.mode_cutoff + 1) as f64 * geom.wavenumber();
        self.theta_max / (top * top)
    }

    /// Smallest step count covering `horizon` within the step criterion.
    pub fn time_steps(&self, geom: &BoxGeometry, horizon: f64) -> usize {
        (horizon / self.max_step(geom)).ceil().max(1.0) as usize
    }

    /// Time grid for `horizon` at the default step criterion.
    pub fn time_grid(&self, geom: &BoxGeometry, horizon: f64) -> Result<TimeGrid> {
        TimeGrid::new(horizon, self.time_steps(geom, horizon))
    }

    pub fn validate(&self, geom: &BoxGeometry, time: &TimeGrid) -> Result<()> {
        if self.mode_cutoff < 1 {
            return Err(Error::Configuration("mode cutoff must be >= 1".into()));
        }
        if !(self.theta_max > 0.0) {
            return Err(Error::Configuration("theta_max must be positive".into()));
        }
        let limit = self.max_step(geom);
        if time.step() > limit * (1.0 + 1e-12) {
            return Err(Error::Configuration(format!(
                "step {} exceeds the phase criterion limit {} for mode cutoff {} \
                 (need (2N+1)^2 k^2 eps <= {})",
                time.step(),
                limit,
                self.mode_cutoff,
                self.theta_max
            )));
        }
        Ok(())
    }
}

/// Complex amplitudes on a spatial grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionSnapshot {
    pub t: f64,
    grid: SpatialGrid,
    psi: Vec<Complex64>,
}

impl WavefunctionSnapshot {
    pub fn new(t: f64, grid: SpatialGrid, psi: Vec<Complex64>) -> Result<Self> {
        if grid.len() != psi.len() {
            return Err(Error::Configuration(format!(
                "snapshot length {} does not match grid length {}",
                psi.len(),
                grid.len()
            )));
        }
        Ok(Self { t, grid, psi })
    }

    /// Snapshot of eigenmode `n` at `t = 0`.
    pub fn from_eigenmode(geom: &BoxGeometry, mode: u32, grid: &SpatialGrid) -> Result<Self> {
        let psi = grid
            .points()
            .iter()
            .map(|&x| Ok(Complex64::new(geom.eigenmode(mode, x)?, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(0.0, grid.clone(), psi)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Snapshots at increasing times on a shared spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<WavefunctionSnapshot>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<WavefunctionSnapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Configuration("trajectory needs at least one snapshot".into()));
        }
        let grid = snapshots[0].grid().clone();
        for snapshot in &snapshots {
            if *snapshot.grid() != grid {
                return Err(Error::Configuration(
                    "trajectory snapshots must share one spatial grid".into(),
                ));
            }
        }
        Ok(Self { snapshots })
    }

    pub fn snapshots(&self) -> &[WavefunctionSnapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.snapshots[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// The common spacing of the recorded times, or an error if they are not
    /// uniformly spaced.
    pub fn uniform_time_step(&self) -> Result<f64> {
        if self.snapshots.len() < 2 {
            return Err(Error::Configuration(
                "need at least two snapshots to define a time step".into(),
            ));
        }
        let step = self.snapshots[1].t - self.snapshots[0].t;
        let scale = self.snapshots[self.snapshots.len() - 1].t.abs().max(1.0);
        for pair in self.snapshots.windows(2) {
            if ((pair[1].t - pair[0].t) - step).abs() > 1e-9 * scale {
                return Err(Error::Configuration(
                    "trajectory times are not uniformly spaced".into(),
                ));
            }
        }
        Ok(step)
    }
}

/// Boundary values `psi(x0, l eps)` and strengths `c(l eps)` for every step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub times: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub strength: Vec<f64>,
}

/// The marching state of the discretized boundary equation.
pub struct SolverState {
    geom: BoxGeometry,
    time: TimeGrid,
    mode_cutoff: usize,
    /// `G_nu`, nu = 1..=N, holding left-endpoint contributions through step T-1.
    accumulators: Vec<Complex64>,
    /// `psi(x0, l eps)` for l = 0..T.
    boundary_history: Vec<Complex64>,
    /// `c(l eps)` for l = 0..T.
    strength_history: Vec<f64>,
    step_index: usize,
    kernel_at_barrier: Vec<Complex64>,
    /// `e^{+i nu^2 k^2 T eps}` per mode.
    mode_phase: Vec<Complex64>,
    mode_phase_step: Vec<Complex64>,
    /// `e^{-i n^2 k^2 T eps}` for the free term.
    free_phase: Complex64,
    free_phase_step: Complex64,
}

impl SolverState {
    pub fn new(geom: BoxGeometry, time: TimeGrid, settings: &RunSettings) -> Result<Self> {
        settings.validate(&geom, &time)?;
        let n_modes = settings.mode_cutoff;
        let eps = time.step();
        let k = geom.wavenumber();
        let x0 = geom.barrier_position();
        let kernel_at_barrier = (1..=n_modes as u32)
            .map(|nu| kernel_coeff(&geom, nu, x0))
            .collect::<Result<Vec<_>>>()?;
        let mode_phase_step = (1..=n_modes as f64 as usize)
            .map(|nu| {
                let rate = (nu as f64 * k).powi(2);
                Complex64::from_polar(1.0, rate * eps)
            })
            .collect();
        let free_rate = geom.mode_energy(geom.initial_mode());
        Ok(Self {
            geom,
            time,
            mode_cutoff: n_modes,
            accumulators: vec![Complex64::new(0.0, 0.0); n_modes],
            boundary_history: Vec::new(),
            strength_history: Vec::new(),
            step_index: 0,
            kernel_at_barrier,
            mode_phase: vec![Complex64::new(1.0, 0.0); n_modes],
            mode_phase_step,
            free_phase: Complex64::new(1.0, 0.0),
            free_phase_step: Complex64::from_polar(1.0, -free_rate * eps),
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geom
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time
    }

    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff
    }

    /// Number of completed steps T.
    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Current time `T eps`.
    pub fn current_time(&self) -> f64 {
        self.time.time(self.step_index)
    }

    /// `G_nu` through the last completed step, nu = 1..=N.
    pub fn accumulators(&self) -> &[Complex64] {
        &self.accumulators
    }

    pub fn boundary_history(&self) -> &[Complex64] {
        &self.boundary_history
    }

    pub fn strength_history(&self) -> &[f64] {
        &self.strength_history
    }

    /// `psi(x0, T eps)` evaluated from the current accumulators.
    pub fn boundary_value(&self) -> Complex64 {
        let x0 = self.geom.barrier_position();
        let free = self
            .geom
            .eigenmode(self.geom.initial_mode(), x0)
            .expect("barrier position is inside the box")
            * self.free_phase;
        let mut driven = Complex64::new(0.0, 0.0);
        for nu in 0..self.mode_cutoff {
            driven += self.kernel_at_barrier[nu] * self.mode_phase[nu].conj() * self.accumulators[nu];
        }
        free + driven
    }

    /// One explicit step: evaluate `psi(x0, T eps)`, record it, absorb the
    /// left-endpoint contribution into every accumulator, advance to T+1.
    pub fn step(&mut self, protocol: &Protocol) -> Result<Complex64> {
        if self.step_index >= self.time.steps() {
            return Err(Error::Configuration(format!(
                "all {} steps already taken",
                self.time.steps()
            )));
        }
        let t = self.current_time();
        let strength = protocol.value(t)?;
        let boundary = self.boundary_value();
        if boundary.norm_sqr() > INSTABILITY_DENSITY_FACTOR / self.geom.half_width() {
            return Err(Error::Instability(format!(
                "|psi(x0)|^2 = {} at t = {t}; reduce the step or the mode cutoff",
                boundary.norm_sqr()
            )));
        }
        self.boundary_history.push(boundary);
        self.strength_history.push(strength);
        let weight = self.time.step() * strength * boundary;
        for nu in 0..self.mode_cutoff {
            self.accumulators[nu] += weight * self.mode_phase[nu];
            self.mode_phase[nu] *= self.mode_phase_step[nu];
        }
        self.free_phase *= self.free_phase_step;
        self.step_index += 1;
        if self.step_index % PHASE_RENORM_INTERVAL == 0 {
            for phase in &mut self.mode_phase {
                *phase /= phase.norm();
            }
            self.free_phase /= self.free_phase.norm();
        }
        Ok(boundary)
    }

    /// Wave function on `x_grid` at time `t`, which must be a completed step
    /// time (`l eps` with `l <= T`); no temporal interpolation is performed.
    /// Earlier steps are served by replaying the stored boundary history.
    pub fn reconstruct_field(&self, x_grid: &SpatialGrid, t: f64) -> Result<WavefunctionSnapshot> {
        let eps = self.time.step();
        let index_float = t / eps;
        let index = index_float.round();
        if (index_float - index).abs() > 1e-6 || index < 0.0 {
            return Err(Error::Interpolation(t));
        }
        let index = index as usize;
        if index > self.step_index {
            return Err(Error::Interpolation(t));
        }
        let accumulators = if index == self.step_index {
            self.accumulators.clone()
        } else {
            self.replay_accumulators(index)
        };
        Ok(self.field_from_accumulators(x_grid, index, &accumulators))
    }

    /// Accumulators as they stood at step `index`, rebuilt from the recorded
    /// boundary and strength histories.
    fn replay_accumulators(&self, index: usize) -> Vec<Complex64> {
        let eps = self.time.step();
        let k = self.geom.wavenumber();
        let mut accumulators = vec![Complex64::new(0.0, 0.0); self.mode_cutoff];
        let mut phases = vec![Complex64::new(1.0, 0.0); self.mode_cutoff];
        let steps: Vec<Complex64> = (1..=self.mode_cutoff)
            .map(|nu| Complex64::from_polar(1.0, (nu as f64 * k).powi(2) * eps))
            .collect();
        for l in 0..index {
            let weight = eps * self.strength_history[l] * self.boundary_history[l];
            for nu in 0..self.mode_cutoff {
                accumulators[nu] += weight * phases[nu];
                phases[nu] *= steps[nu];
            }
            if (l + 1) % PHASE_RENORM_INTERVAL == 0 {
                for phase in &mut phases {
                    *phase /= phase.norm();
                }
            }
        }
        accumulators
    }

    fn field_from_accumulators(
        &self,
        x_grid: &SpatialGrid,
        index: usize,
        accumulators: &[Complex64],
    ) -> WavefunctionSnapshot {
        let t = self.time.time(index);
        let k = self.geom.wavenumber();
        let n = self.geom.initial_mode();
        let free_rate = self.geom.mode_energy(n);
        let free_phase = Complex64::from_polar(1.0, -free_rate * t);
        // Fold the backward phase into the accumulators once.
        let weighted: Vec<Complex64> = accumulators
            .iter()
            .enumerate()
            .map(|(idx, g)| {
                let nu = (idx + 1) as f64;
                g * Complex64::from_polar(1.0, -(nu * k).powi(2) * t)
            })
            .collect();
        let geom = self.geom;
        let psi: Vec<Complex64> = x_grid
            .points()
            .par_iter()
            .map(|&x| {
                let mut value = Complex64::new(
                    geom.eigenmode(n, x).expect("grid point inside the box"),
                    0.0,
                ) * free_phase;
                for (idx, w) in weighted.iter().enumerate() {
                    let coeff = kernel_coeff(&geom, (idx + 1) as u32, x)
                        .expect("grid point inside the box");
                    value += coeff * w;
                }
                value
            })
            .collect();
        WavefunctionSnapshot {
            t,
            grid: x_grid.clone(),
            psi,
        }
    }
}

/// Eigenmode coefficients `sigma_m(t)` of a snapshot, m = 1..=N_obs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub t: f64,
    pub sigma: Vec<Complex64>,
}

impl ModeCoefficients {
    /// `sum_m |sigma_m|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Projections of a snapshot onto the barrier-free eigenmodes by trapezoid
/// quadrature. Fails when the grid has fewer than two points per
/// half-wavelength of the highest requested mode.
pub fn mode_coefficients(
    snapshot: &WavefunctionSnapshot,
    observed_modes: usize,
) -> Result<ModeCoefficients> {
    if observed_modes < 1 {
        return Err(Error::Domain("need at least one observed mode".into()));
    }
    let grid = snapshot.grid();
    let cells = grid.len() - 1;
    if 2 * observed_modes > cells {
        return Err(Error::Resolution(format!(
            "{} modes need at least {} grid cells, got {cells}",
            observed_modes,
            2 * observed_modes
        )));
    }
    let half_width = grid.half_width();
    let geom = BoxGeometry::new(half_width, 0.0, 1)?;
    let xs = grid.points();
    let sigma = (1..=observed_modes as u32)
        .map(|m| {
            let integrand: Vec<Complex64> = xs
                .iter()
                .zip(snapshot.psi())
                .map(|(&x, &psi)| geom.eigenmode(m, x).expect("grid point inside box") * psi)
                .collect();
            trapezoid_complex(xs, &integrand)
        })
        .collect();
    Ok(ModeCoefficients {
        t: snapshot.t,
        sigma,
    })
}

/// Full solver output: recorded snapshots plus the boundary trace.
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub boundary: BoundaryTrace,
}

/// March the boundary equation over `time`, recording field snapshots at
/// `snapshot_times` (each snapped to the nearest step; no interpolation) and
/// the boundary value at every step.
pub fn run(
    geom: &BoxGeometry,
    protocol: &Protocol,
    time: &TimeGrid,
    settings: &RunSettings,
    space: &SpatialGrid,
    snapshot_times: &[f64],
) -> Result<RunOutput> {
    settings.validate(geom, time)?;
    if let Some(t_star) = protocol.divergence_time() {
        if time.horizon() >= t_star {
            return Err(Error::Configuration(format!(
                "horizon {} reaches the divergence time {t_star}",
                time.horizon()
            )));
        }
    }
    let eps = time.step();
    let mut indices: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| {
            if !(-eps / 2.0..=time.horizon() + eps / 2.0).contains(&t) {
                return Err(Error::Configuration(format!(
                    "snapshot time {t} outside the run horizon [0, {}]",
                    time.horizon()
                )));
            }
            Ok(((t / eps).round().max(0.0) as usize).min(time.steps()))
        })
        .collect::<Result<Vec<_>>>()?;
    indices.sort_unstable();
    indices.dedup();

    let mut state = SolverState::new(*geom, *time, settings)?;
    let mut snapshots = Vec::with_capacity(indices.len());
    let mut next_snapshot = indices.iter().copied().peekable();
    for step in 0..=time.steps() {
        if next_snapshot.peek() == Some(&step) {
            snapshots.push(state.field_from_accumulators(space, step, &state.accumulators));
            next_snapshot.next();
        }
        if step < time.steps() {
            state.step(protocol)?;
        }
    }

    let final_boundary = state.boundary_value();
    let final_strength = protocol.value(time.horizon())?;
    let times: Vec<f64> = (0..=time.steps()).map(|l| time.time(l)).collect();
    let mut psi = state.boundary_history;
    psi.push(final_boundary);
    let mut strength = state.strength_history;
    strength.push(final_strength);

    let trajectory = if snapshots.is_empty() {
        // An empty trajectory is represented by the t = 0 field alone.
        let initial = WavefunctionSnapshot::from_eigenmode(geom, geom.initial_mode(), space)?;
        Trajectory::new(vec![initial])?
    } else {
        Trajectory::new(snapshots)?
    };
    Ok(RunOutput {
        trajectory,
        boundary: BoundaryTrace {
            times,
            psi,
            strength,
        },
    })
}
