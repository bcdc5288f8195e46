use thiserror::Error;

/// Errors produced by the codec, rebuild and decoding routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field order {0} is not a prime power in [2, 256]")]
    InvalidFieldOrder(u32),
    #[error("polynomial {poly} is not irreducible of degree {degree} over GF({p})")]
    InvalidPolynomial { p: u32, degree: u32, poly: u32 },
    #[error("element {value} does not belong to GF({q})")]
    ElementOutOfField { value: u32, q: u32 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("index {index} out of range for base {base}, length {len}")]
    IndexOutOfRange { index: usize, base: u32, len: usize },
    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },
    #[error("subspace operations require a prime base, got {0}")]
    NonPrimeBase(u32),
    #[error("vector {vector:?} violates gcd(v_1..v_m, r) = 1 for r = {r}")]
    GcdViolation { vector: Vec<u32>, r: u32 },
    #[error("coefficient for node {node}, parity {parity}, row {row} is zero")]
    ZeroCoefficient {
        node: usize,
        parity: usize,
        row: usize,
    },
    #[error("parity 0 coefficients must all be 1 (node {node}, row {row})")]
    RowParityCoefficient { node: usize, row: usize },
    #[error("field GF({q}) is too small: {reason}")]
    FieldTooSmall { q: u32, reason: &'static str },
    #[error(
        "closed-form coefficients only exist for r in {{2, 3}}; r = {0} needs a coefficient search"
    )]
    NeedsCoefficientSearch(u32),
    #[error("coefficient search exhausted {tries} tries without an MDS assignment")]
    SearchExhausted { tries: u32 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("desk-scale cap exceeded: {0}")]
    CapExceeded(String),
    #[error("{erased} erasures exceed the {max} the code tolerates")]
    TooManyErasures { erased: usize, max: usize },
    #[error("decoding system is singular for erasures {0:?}")]
    SingularErasures(Vec<usize>),
    #[error("rebuild equations are singular for erased nodes {0:?}")]
    SingularRebuild(Vec<usize>),
    #[error("node {0} is not a systematic node")]
    NotSystematic(usize),
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("read of erased cell (node {node}, row {row})")]
    ErasedRead { node: usize, row: usize },
    #[error("no vector u orthogonal to Z separates the erased nodes")]
    NoSeparatingVector,
    #[error("direct-sum precondition violated for difference {0:?}")]
    DirectSumViolated(Vec<u32>),
    #[error("alpha must differ from 0 and 1, got {0}")]
    InvalidAlpha(u8),
    #[error("decoder precondition violated: {0}")]
    Unsupported(String),
    #[error("shard format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
