use thiserror::Error;

/// Errors surfaced by the symbolic engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    /// A term references a coordinate or fiber factor that does not exist in
    /// the ambient space, or is otherwise structurally invalid.
    #[error("malformed term: {0}")]
    MalformedTerm(String),

    /// Two cycles share a coordinate index in the same slot; the model has no
    /// self-intersection rule.
    #[error("improper intersection: {0}")]
    ImproperIntersection(String),

    /// A sigma factor whose full coordinate family already lies in the cycle;
    /// the weight would be identically -infinity on the cycle.
    #[error("degenerate sigma factor: {0}")]
    DegenerateSigma(String),

    /// The bracket form alpha must be a combination of smooth symbol factors.
    #[error("bracket form is not smooth: {0}")]
    NotSmoothAlpha(String),

    /// A restriction set meets the unbounded locus of its weight.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// A metric specification is inconsistent.
    #[error("bad metric spec: {0}")]
    BadSpec(String),

    /// Residual mixed per-factor fiber content that no declared substitution
    /// eliminates; the true value would depend on data the model does not have.
    #[error("unsupported pushforward: {0}")]
    UnsupportedPushforward(String),

    /// A theta power requires a Segre symbol s_k(E,g) that was not declared.
    #[error("undeclared Segre symbol s_{0}(E,g)")]
    UndeclaredSegreSymbol(usize),

    /// A term carries two distinct sigma families; no Lelong rule is declared
    /// for their mixed products.
    #[error("multiple sigma families in one term: {0}")]
    MultipleSigmaFamilies(String),

    /// The quadrature point budget would be exceeded.
    #[error("quadrature budget exceeded: {0} points requested, {1} allowed")]
    BudgetExceeded(usize, usize),

    /// The finite-difference Hessian failed a numerical sanity bound.
    #[error("non-hermitian Hessian: {0}")]
    NonHermitianHessian(String),

    /// The density-ratio sequence did not settle.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A numeric routine was asked for something outside desk scale.
    #[error("unsupported numeric computation: {0}")]
    UnsupportedNumeric(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
