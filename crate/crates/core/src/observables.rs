//! Diagnostics computed from snapshots and mode coefficients: norms, the
//! kinetic/potential energy split, the decomposition against an adiabatic
//! target state, and which-side probabilities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoxGeometry;
use crate::quadrature::{inner_product, trapezoid};
use crate::volterra::{ModeCoefficients, WavefunctionSnapshot};

/// Kinetic, potential, and total energy at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub t: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// `kinetic = sum_m m^2 k^2 |sigma_m|^2`, `potential = 2 c |psi(x0)|^2`.
pub fn energy(
    coeffs: &ModeCoefficients,
    psi_at_barrier: Complex64,
    strength: f64,
    geom: &BoxGeometry,
) -> EnergyBreakdown {
    let kinetic = coeffs
        .sigma
        .iter()
        .enumerate()
        .map(|(idx, sigma)| geom.mode_energy((idx + 1) as u32) * sigma.norm_sqr())
        .sum();
    let potential = 2.0 * strength * psi_at_barrier.norm_sqr();
    EnergyBreakdown {
        t: coeffs.t,
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

/// The state the slow-insertion limit converges to, up to a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdiabaticTarget {
    /// `L^{-1/2} |sin 2kx|` — the symmetric split for a central barrier.
    SymmetricSplit,
    /// Ground mode of the wider sub-box, for an off-center barrier.
    WiderSideGround,
}

/// Weights of a snapshot parallel and perpendicular to an adiabatic target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticDecomposition {
    pub target: AdiabaticTarget,
    pub parallel_sq: f64,
    pub perpendicular_sq: f64,
}

/// Sample the target state on the snapshot grid.
fn target_samples(
    target: AdiabaticTarget,
    snapshot: &WavefunctionSnapshot,
    geom: &BoxGeometry,
) -> Result<Vec<f64>> {
    let k = geom.wavenumber();
    let amplitude = geom.half_width().sqrt().recip();
    match target {
        AdiabaticTarget::SymmetricSplit => {
            if geom.barrier_position() != 0.0 {
                return Err(Error::Configuration(
                    "the symmetric-split target applies to a central barrier only".into(),
                ));
            }
            Ok(snapshot
                .grid()
                .points()
                .iter()
                .map(|&x| amplitude * (2.0 * k * x).sin().abs())
                .collect())
        }
        AdiabaticTarget::WiderSideGround => {
            let x0 = geom.barrier_position();
            if x0 == 0.0 {
                return Err(Error::Configuration(
                    "the wider-side target applies to an off-center barrier only".into(),
                ));
            }
            let half_width = geom.half_width();
            let (lower, upper) = if x0 > 0.0 {
                (-half_width, x0) // wider side is the left
            } else {
                (x0, half_width)
            };
            let length = upper - lower;
            let scale = (2.0 / length).sqrt();
            Ok(snapshot
                .grid()
                .points()
                .iter()
                .map(|&x| {
                    if x >= lower && x <= upper {
                        scale * (std::f64::consts::PI * (x - lower) / length).sin()
                    } else {
                        0.0
                    }
                })
                .collect())
        }
    }
}

/// `|A_par| = |<target, psi>|` by quadrature; the perpendicular weight is
/// `1 - |A_par|^2` for a normalized snapshot (phase-free by construction).
pub fn adiabatic_decomposition(
    snapshot: &WavefunctionSnapshot,
    target: AdiabaticTarget,
    geom: &BoxGeometry,
) -> Result<AdiabaticDecomposition> {
    let samples = target_samples(target, snapshot, geom)?;
    let xs = snapshot.grid().points();
    let density: Vec<f64> = samples.iter().map(|v| v * v).collect();
    let norm = trapezoid(xs, &density);
    if (norm - 1.0).abs() > 1e-3 {
        return Err(Error::Configuration(format!(
            "adiabatic target is not normalized on this grid (norm^2 = {norm})"
        )));
    }
    let target_complex: Vec<Complex64> = samples
        .iter()
        .map(|&v| Complex64::new(v / norm.sqrt(), 0.0))
        .collect();
    let overlap = inner_product(xs, &target_complex, snapshot.psi());
    let parallel_sq = overlap.norm_sqr();
    Ok(AdiabaticDecomposition {
        target,
        parallel_sq,
        perpendicular_sq: 1.0 - parallel_sq,
    })
}

/// Probability on each side of the barrier. The boundary between the halves
/// is the grid point nearest `x0`, whose trapezoid weight splits evenly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideProbabilities {
    pub left: f64,
    pub right: f64,
    pub ratio: f64,
}

pub fn side_probabilities(
    snapshot: &WavefunctionSnapshot,
    geom: &BoxGeometry,
) -> Result<SideProbabilities> {
    let grid = snapshot.grid();
    let x0 = geom.barrier_position();
    if x0.abs() > grid.half_width() {
        return Err(Error::Domain(format!(
            "barrier position {x0} outside the snapshot grid"
        )));
    }
    let split = grid.nearest_index(x0);
    if split == 0 || split == grid.len() - 1 {
        return Err(Error::Domain(
            "barrier position coincides with a wall; no interior split".into(),
        ));
    }
    let density = snapshot.density();
    let xs = grid.points();
    let left = trapezoid(&xs[..=split], &density[..=split]);
    let right = trapezoid(&xs[split..], &density[split..]);
    Ok(SideProbabilities {
        left,
        right,
        ratio: left / right,
    })
}

/// Quadrature norm `int |psi|^2 dx` of a snapshot.
pub fn snapshot_norm(snapshot: &WavefunctionSnapshot) -> f64 {
    trapezoid(snapshot.grid().points(), &snapshot.density())
}

/// Mode-sum norm `sum_m |sigma_m|^2`.
pub fn coefficient_norm(coeffs: &ModeCoefficients) -> f64 {
    coeffs.norm_sq()
}

/// L2 distance between the snapshot's density and a reference density given
/// on the same grid.
pub fn density_distance(snapshot: &WavefunctionSnapshot, reference: &[f64]) -> Result<f64> {
    if reference.len() != snapshot.grid().len() {
        return Err(Error::Configuration(format!(
            "reference density length {} does not match grid length {}",
            reference.len(),
            snapshot.grid().len()
        )));
    }
    let squared: Vec<f64> = snapshot
        .density()
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(trapezoid(snapshot.grid().points(), &squared).sqrt())
}
