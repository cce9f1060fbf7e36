use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A protocol was evaluated at or beyond its divergence time, or produced
    /// a non-finite strength.
    #[error("protocol divergence: {0}")]
    Divergence(String),

    /// Inconsistent or invalid run parameters, detected before any stepping.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The scheme blew up; the time step is too large for the chosen mode
    /// cutoff or the driving is too stiff.
    #[error("numerical instability: {0}")]
    Instability(String),

    /// A value was requested at a time that is not a completed solver step.
    /// The solver never interpolates in time.
    #[error("no completed step at t = {0}; temporal interpolation is not performed")]
    Interpolation(f64),

    /// The spatial grid cannot resolve the requested mode content.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A formula that divides by the boundary value hit a (near-)zero.
    #[error("singularity at t = {time}: |psi(x0,t)| = {magnitude:.3e} below threshold")]
    Singularity { time: f64, magnitude: f64 },

    /// The operation is not defined for this configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
