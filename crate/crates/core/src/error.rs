use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the sweeping, shock-fitting and reference solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-finite or inadmissible state: {0}")]
    Domain(String),

    #[error("loss of hyperbolicity: {0}")]
    Hyperbolicity(String),

    #[error("flux inversion did not converge (residual {residual:e})")]
    Inversion { residual: f64 },

    #[error("flux Jacobian is singular near a sonic state")]
    NearSonic,

    #[error("no turning point within reach: {0}")]
    NoTurningPoint(String),

    #[error("step past turning point landed on the pre-sonic root (lambda = {lambda:e})")]
    WrongRoot { lambda: f64 },

    #[error("step past turning point failed: {0}")]
    Step(String),

    #[error("no admissible shock: only the trivial Rankine-Hugoniot root was found")]
    NoShockPossible,

    #[error("Lax entropy condition violated in field {field}: eigenvalues {minus:?} (pre) / {plus:?} (post)")]
    EntropyViolation {
        field: usize,
        minus: Vec<f64>,
        plus: Vec<f64>,
    },

    #[error("no sign change of the matching residual in bracket [{lo}, {hi}]")]
    NoSolutionInBracket { lo: f64, hi: f64 },

    #[error("solution structure infeasible: could not resolve {unknown} ({reason})")]
    StructureInfeasible { unknown: String, reason: String },

    #[error("shock curve incomplete after {} vertices: {reason}", partial.len())]
    IncompleteCurve {
        partial: Vec<(f64, f64)>,
        reason: String,
    },

    #[error("shock curve revisited cell ({0}, {1})")]
    CurveLoop(usize, usize),

    #[error("{} nodes not covered by any valid branch", nodes.len())]
    Coverage { nodes: Vec<(usize, usize)> },

    #[error("time evolution diverged at step {step}")]
    Divergence { step: usize },

    #[error("bracket [{lo}, {hi}] does not enclose a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::NoShockPossible
            | Error::EntropyViolation { .. }
            | Error::NoSolutionInBracket { .. }
            | Error::StructureInfeasible { .. }
            | Error::NoTurningPoint(_)
            | Error::Coverage { .. }
            | Error::IncompleteCurve { .. }
            | Error::CurveLoop(..)
            | Error::Bracket { .. } => 3,
            _ => 4,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Hyperbolicity(_) => "hyperbolicity",
            Error::Inversion { .. } => "inversion",
            Error::NearSonic => "near_sonic",
            Error::NoTurningPoint(_) => "no_turning_point",
            Error::WrongRoot { .. } => "wrong_root",
            Error::Step(_) => "step",
            Error::NoShockPossible => "no_shock_possible",
            Error::EntropyViolation { .. } => "entropy_violation",
            Error::NoSolutionInBracket { .. } => "no_solution_in_bracket",
            Error::StructureInfeasible { .. } => "structure_infeasible",
            Error::IncompleteCurve { .. } => "incomplete_curve",
            Error::CurveLoop(..) => "curve_loop",
            Error::Coverage { .. } => "coverage",
            Error::Divergence { .. } => "divergence",
            Error::Bracket { .. } => "bracket",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
