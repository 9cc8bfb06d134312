use thiserror::Error;

/// Everything that can go wrong across the solver stack.  Variant names
/// follow the failure vocabulary used throughout the module contracts so
/// that CLI exit codes and test assertions can match on them directly.
#[derive(Debug, Error)]
pub enum Error {
    /// discriminant 1 - 12 delta^2 f'(0) <= 0: the pinched double root has
    /// merged with its sibling and no spreading speed is selected
    #[error("double root merged: |delta| >= delta_bar = {delta_bar:.6} (delta = {delta})")]
    DoubleRootMerged { delta: f64, delta_bar: f64 },

    /// slow/fast root clusters of the quartic overlap; |nu| ~ 1/(2|delta|)
    /// separation failed
    #[error("root clustering ambiguous at delta = {delta}, gamma = {gamma}")]
    ClusterOverlap { delta: f64, gamma: num_complex::Complex64 },

    /// two arguments carry different delta (or grid) values
    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    /// grid too coarse for operator assembly
    #[error("grid too coarse: h = {h} > 0.25")]
    ResolutionError { h: f64 },

    /// the (1 - delta^2 d_xx) solve hit a zero pivot; impossible for
    /// |delta| < 1/(sqrt(2) eta), so treat as a bug signal
    #[error("preconditioner solve singular at delta = {delta}")]
    PreconditionerSingular { delta: f64 },

    /// cokernel inner product <omega^-2 phi, phi> not positive
    #[error("degenerate cokernel: ip_norm = {ip_norm}")]
    DegenerateCokernel { ip_norm: f64 },

    /// Newton stagnated or exceeded the iteration budget
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// bordered solve denominator vanished: loss of transversality
    #[error("jacobian singular: {0}")]
    JacobianSingular(String),

    /// gamma^2 lies inside the essential spectrum (and is not 0)
    #[error("invalid spectral point: gamma = {gamma}")]
    InvalidSpectralPoint { gamma: num_complex::Complex64 },

    /// linear-system failure inside the Lyapunov-Schmidt bordered solve
    #[error("bordered linear solve failed: {0}")]
    LSFailure(String),

    /// blowup guard |u| > 2 tripped during time integration
    #[error("numerical blowup at t = {t}: max|u| = {max_abs}")]
    NumericalBlowup { t: f64, max_abs: f64 },

    /// front left the computational domain before t_end
    #[error("front exhausted the domain at t = {t}")]
    DomainExhausted { t: f64 },

    /// configuration file rejected; message names the offending key
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// process exit code per the CLI contract:
    /// 0 ok, 2 config, 3 out of admissible range, 4 solver failure,
    /// 5 negative verdict (the caller maps verdicts; not an Error variant)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::DoubleRootMerged { .. } | Error::ResolutionError { .. } => 3,
            Error::Io(_) => 2,
            _ => 4,
        }
    }
}
