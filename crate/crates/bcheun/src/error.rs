//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong while building or evaluating a solution.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("series did not converge within {max_terms} terms")]
    DivergentSeries { max_terms: usize },
    #[error("parameter {name} = {value} sits on a pole of the defining function")]
    PoleAtParameter { name: &'static str, value: String },
    #[error("integer second parameter requires the logarithmic branch, which is not supported")]
    IntegerBNotSupported,
    #[error("alpha = 0: the auxiliary singularity z0 = q/alpha is undefined")]
    AlphaZero,
    #[error("q = 0: the auxiliary singularity would coincide with the origin")]
    QZero,
    #[error("alpha + epsilon = 0: the root pair z1, z2 is undefined")]
    AlphaPlusEpsZero,
    #[error("z = 0 is a singular point of the equation")]
    OriginSingular,
    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
    #[error("point is not a regular singular or ordinary point of the operator")]
    IrregularPoint,
    #[error("leading recurrence coefficient vanished at n = {n}; this branch needs a logarithmic term")]
    LogarithmicCase { n: usize },
    #[error("Beta function parameter {0} is a non-positive integer")]
    BetaParameterPole(String),
    #[error("Gamma function parameter {0} is a non-positive integer")]
    GammaParameterPole(String),
    #[error("delta = 0: the exponential-weight expansion is undefined")]
    DeltaZero,
    #[error("epsilon = 0: use the confluent hypergeometric reduction instead")]
    EpsilonZero,
    #[error("the chosen expansion root lies at the origin")]
    RootAtOriginChosen,
    #[error("z = q/alpha is the extra singularity; recovery is undefined there")]
    AtExtraSingularity,
    #[error("z coincides with a root of the auxiliary quadratic; recovery is undefined there")]
    AtAuxRoot,
    #[error("Newton iteration found no root: {0}")]
    NoRoot(String),
    #[error("parameter conditions for this closed form are not met: {0}")]
    ConditionsNotMet(String),
    #[error("delta^2 = 4 alpha: repeated exponential rate is out of scope")]
    DegenerateS0,
    #[error("gamma is a non-positive integer; the regular origin branch does not exist")]
    GammaNonpositiveInteger,
    #[error("integration path passes within the exclusion radius of a singular point")]
    PathTooCloseToSingularity,
    #[error("integration path crosses the branch cut on the negative real axis")]
    PathCrossesBranchCut,
    #[error("step size underflow during adaptive integration")]
    StepSizeUnderflow,
    #[error("quadrature failed to reach the requested tolerance")]
    QuadratureFailed,
    #[error("evaluation point lies outside the expansion's validity region (|z| = {requested:.6e} > {radius:.6e})")]
    OutsideRegion { requested: f64, radius: f64 },
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
