use thiserror::Error;

/// Failures of scalar p-adic arithmetic and of the analytic functions built on it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision must be at least one digit, got {0}")]
    InvalidPrecision(u32),
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("division by exact zero")]
    DivisionByZero,
    #[error("precision exhausted: value is only known to be divisible by p^{floor}")]
    PrecisionExhausted { floor: i64 },
    #[error("requested {requested} digits but only {available} are known")]
    DigitsBeyondPrecision { requested: u32, available: u32 },
    #[error("{what}: valuation {valuation} is below the required {required}")]
    DomainViolation {
        what: &'static str,
        valuation: i64,
        required: i64,
    },
    #[error("residue {residue} is divisible by {p}")]
    NonUnitResidue { residue: u64, p: u64 },
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// Failures of the model layer: parameters, fields, volumes, enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coupling J has valuation {valuation}; the model requires valuation >= {required} (|J|_p < p^(-1/(p-1)))")]
    CouplingOutsideDomain { valuation: i64, required: i64 },
    #[error("coupling J must be nonzero")]
    ZeroCoupling,
    #[error("field component {index} has valuation {valuation}; required >= {required}")]
    FieldOutsideDomain {
        index: usize,
        valuation: i64,
        required: i64,
    },
    #[error("field has {got} components, expected {expected}")]
    FieldDimension { expected: usize, got: usize },
    #[error("root is not admissible: |z - 1|_p must be below p^(-1/(p-1))")]
    InadmissibleRoot,
    #[error("volume needs {configs} configurations, above the enumeration cap {cap}")]
    EnumerationCap { configs: String, cap: u64 },
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("contraction bound violated at step {step}")]
    ContractionBoundViolated { step: usize },
}

pub type Result<T, E = PadicError> = std::result::Result<T, E>;
