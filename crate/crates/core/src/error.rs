use thiserror::Error;

use crate::frontend::ParseDiagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("truncation order exceeded: expression of order {order} in a context of order {n}")]
    TruncationExceeded { order: usize, n: usize },
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("expression singular on box")]
    SingularOnBox,
    #[error("inconsistent reconstruction: {0}")]
    InconsistentReconstruction(String),
    #[error("not affine in u_i")]
    NotAffine,
    #[error("fields dependent")]
    FieldsDependent,
    #[error("not in involution")]
    NotInInvolution,
    #[error("compatibility failure: Maurer-Cartan residual nonzero")]
    CompatibilityFailure,
    #[error("non-vertical input")]
    NonVertical,
    #[error("identity not applicable: {0}")]
    IdentityNotApplicable(String),
    #[error("singular gauge matrix at all retry samples")]
    SingularGauge,
    #[error("distribution rank degenerate at sample")]
    RankDegenerate,
    #[error("nonlocal gauge factor: not representable")]
    NonlocalGauge,
    #[error("system not normal: restriction incomplete")]
    NotNormal,
    #[error("inputs not invariant")]
    InputsNotInvariant,
    #[error("twist not IBDP-eligible")]
    NotIbdpEligible,
    #[error("degenerate invariant pair")]
    DegenerateInvariantPair,
    #[error("equation depends on v: coordinates not adapted")]
    DependsOnV,
    #[error("not expressible in chain at ansatz degree {degree}")]
    NotExpressible { degree: usize, certificate: String },
    #[error("symmetry check failed")]
    SymmetryCheckFailed,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("verification failure: {0}")]
    VerificationFailed(String),
    #[error("{0}")]
    Parse(ParseDiagnostic),
    #[error("internal invariant violation: {0}")]
    Internal(String),
}
