//! Barrier-strength schedules c(t).
//!
//! The divergent schedule `tan(pi t / (2 t_star))` reaches infinite strength
//! at `t_star`; simulations of it stop at `cap_fraction * t_star`. With
//! `t_star = 2 pi / k^2` it reduces to `tan(k^2 t / 4)`, the schedule that
//! completes a symmetric split exactly when the barrier becomes impenetrable.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Functional form of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolKind {
    /// `c(t) = tan(pi t / (2 t_star))`, divergent at `t_star`.
    TangentDivergent { t_star: f64 },
    /// `c(t) = rate * t`.
    Linear { rate: f64 },
    /// `c(t) = strength`.
    Constant { strength: f64 },
    /// Piecewise-linear interpolation of `(time, strength)` knots.
    /// Extrapolation beyond the knots is an error.
    Table { points: Vec<(f64, f64)> },
}

/// Fraction of `t_star` actually simulated for divergent schedules.
pub const DEFAULT_CAP_FRACTION: f64 = 0.99;

/// A barrier-strength schedule plus the simulated fraction of its divergence
/// time. `cap_fraction` is only meaningful for divergent kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    kind: ProtocolKind,
    cap_fraction: f64,
}

impl Protocol {
    pub fn tangent(t_star: f64) -> Result<Self> {
        if !(t_star > 0.0) || !t_star.is_finite() {
            return Err(Error::Configuration(format!(
                "divergence time must be positive and finite, got {t_star}"
            )));
        }
        Ok(Self {
            kind: ProtocolKind::TangentDivergent { t_star },
            cap_fraction: DEFAULT_CAP_FRACTION,
        })
    }

    pub fn linear(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::Configuration("linear rate must be finite".into()));
        }
        Ok(Self {
            kind: ProtocolKind::Linear { rate },
            cap_fraction: DEFAULT_CAP_FRACTION,
        })
    }

    pub fn constant(strength: f64) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::Configuration("constant strength must be finite".into()));
        }
        Ok(Self {
            kind: ProtocolKind::Constant { strength },
            cap_fraction: DEFAULT_CAP_FRACTION,
        })
    }

    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Configuration("table needs at least 2 knots".into()));
        }
        for pair in points.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::Configuration(
                    "table times must be strictly increasing".into(),
                ));
            }
        }
        if points.iter().any(|(t, c)| !t.is_finite() || !c.is_finite()) {
            return Err(Error::Configuration("table entries must be finite".into()));
        }
        Ok(Self {
            kind: ProtocolKind::Table { points },
            cap_fraction: DEFAULT_CAP_FRACTION,
        })
    }

    pub fn with_cap_fraction(mut self, cap_fraction: f64) -> Result<Self> {
        if !(cap_fraction > 0.0 && cap_fraction < 1.0) {
            return Err(Error::Configuration(format!(
                "cap fraction must lie in (0, 1), got {cap_fraction}"
            )));
        }
        self.cap_fraction = cap_fraction;
        Ok(self)
    }

    pub fn kind(&self) -> &ProtocolKind {
        &self.kind
    }

    pub fn cap_fraction(&self) -> f64 {
        self.cap_fraction
    }

    /// Time at which the schedule diverges, if it does.
    pub fn divergence_time(&self) -> Option<f64> {
        match self.kind {
            ProtocolKind::TangentDivergent { t_star } => Some(t_star),
            _ => None,
        }
    }

    /// Horizon a simulation of this schedule should use:
    /// `cap_fraction * t_star` for divergent kinds, `None` otherwise
    /// (the caller picks freely).
    pub fn simulation_horizon(&self) -> Option<f64> {
        self.divergence_time().map(|t_star| self.cap_fraction * t_star)
    }

    /// Barrier strength at time `t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("protocol evaluated at t = {t} < 0")));
        }
        let value = match &self.kind {
            ProtocolKind::TangentDivergent { t_star } => {
                if t >= *t_star {
                    return Err(Error::Divergence(format!(
                        "t = {t} at or beyond the divergence time {t_star}"
                    )));
                }
                (FRAC_PI_2 * t / t_star).tan()
            }
            ProtocolKind::Linear { rate } => rate * t,
            ProtocolKind::Constant { strength } => *strength,
            ProtocolKind::Table { points } => interpolate(points, t)?,
        };
        if !value.is_finite() {
            return Err(Error::Divergence(format!(
                "protocol value not finite at t = {t}"
            )));
        }
        Ok(value)
    }

    /// `dc/dt` at time `t`. Analytic for the closed-form kinds; the segment
    /// slope for tables (the knots themselves take the right-hand slope).
    pub fn rate_of_change(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("protocol evaluated at t = {t} < 0")));
        }
        match &self.kind {
            ProtocolKind::TangentDivergent { t_star } => {
                if t >= *t_star {
                    return Err(Error::Divergence(format!(
                        "t = {t} at or beyond the divergence time {t_star}"
                    )));
                }
                let scale = FRAC_PI_2 / t_star;
                let sec = (scale * t).cos().recip();
                Ok(scale * sec * sec)
            }
            ProtocolKind::Linear { rate } => Ok(*rate),
            ProtocolKind::Constant { .. } => Ok(0.0),
            ProtocolKind::Table { points } => {
                let _ = interpolate(points, t)?;
                let segment = points
                    .windows(2)
                    .find(|pair| t < pair[1].0)
                    .unwrap_or(&points[points.len() - 2..]);
                Ok((segment[1].1 - segment[0].1) / (segment[1].0 - segment[0].0))
            }
        }
    }

    /// `int_0^t c(t') dt'`. Closed form for the analytic kinds; exact
    /// piecewise-linear integration for tables.
    pub fn integral(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("protocol evaluated at t = {t} < 0")));
        }
        match &self.kind {
            ProtocolKind::TangentDivergent { t_star } => {
                if t >= *t_star {
                    return Err(Error::Divergence(format!(
                        "t = {t} at or beyond the divergence time {t_star}"
                    )));
                }
                Ok(-(2.0 * t_star / PI) * (FRAC_PI_2 * t / t_star).cos().ln())
            }
            ProtocolKind::Linear { rate } => Ok(0.5 * rate * t * t),
            ProtocolKind::Constant { strength } => Ok(strength * t),
            ProtocolKind::Table { points } => {
                if t < points[0].0 || t > points[points.len() - 1].0 {
                    return Err(Error::Domain(format!(
                        "t = {t} outside the tabulated range [{}, {}]",
                        points[0].0,
                        points[points.len() - 1].0
                    )));
                }
                let mut total = 0.0;
                for pair in points.windows(2) {
                    let (t0, c0) = pair[0];
                    let (t1, c1) = pair[1];
                    if t <= t0 {
                        break;
                    }
                    let upper = t.min(t1);
                    let c_upper = c0 + (c1 - c0) * (upper - t0) / (t1 - t0);
                    total += 0.5 * (c0 + c_upper) * (upper - t0);
                }
                Ok(total)
            }
        }
    }

    /// Tabulation of `min(c(t), cap)` on `samples` uniform knots over
    /// `[0, horizon]`. Both solvers of a cross-validation run interpolate the
    /// same table, so they see bitwise-identical driving.
    pub fn capped(&self, cap: f64, horizon: f64, samples: usize) -> Result<Protocol> {
        if samples < 2 {
            return Err(Error::Configuration("capping needs at least 2 samples".into()));
        }
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::Configuration(format!(
                "cap must be positive and finite, got {cap}"
            )));
        }
        let step = horizon / (samples - 1) as f64;
        let points = (0..samples)
            .map(|j| {
                let t = if j == samples - 1 { horizon } else { j as f64 * step };
                Ok((t, self.value(t)?.min(cap)))
            })
            .collect::<Result<Vec<_>>>()?;
        Protocol::from_table(points)
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> Result<f64> {
    let first = points[0].0;
    let last = points[points.len() - 1].0;
    if t < first || t > last {
        return Err(Error::Domain(format!(
            "t = {t} outside the tabulated range [{first}, {last}]"
        )));
    }
    let pair = points
        .windows(2)
        .find(|pair| t <= pair[1].0)
        .expect("t within table range");
    let (t0, c0) = pair[0];
    let (t1, c1) = pair[1];
    Ok(c0 + (c1 - c0) * (t - t0) / (t1 - t0))
}
