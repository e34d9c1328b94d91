use crate::lca::ShiftVector;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("digit base must be at least 2, got {0}")]
    InvalidBase(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus mismatch: expected {expected}, found {found}")]
    ModulusMismatch { expected: u32, found: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("site {0} is not covered by the configuration")]
    MissingSite(ShiftVector),
    #[error("exponent arithmetic overflowed")]
    ExponentOverflow,
    #[error("polynomial has no terms")]
    EmptyPolynomial,
    #[error("invalid probability vector: {0}")]
    InvalidWeights(&'static str),
    #[error("row {row} of the transition matrix sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("transition matrix has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
    #[error("stationarity residual {residual:e} exceeds tolerance")]
    NotStationary { residual: f64 },
    #[error("stationary vector is not unique: the chain is reducible (entry ({row}, {col}) is not positive)")]
    NonUniqueStationary { row: usize, col: usize },
    #[error("power iteration did not reach the residual target (last residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("mixing hypothesis violated: transition entry ({row}, {col}) is zero")]
    HypothesisViolation { row: usize, col: usize },
    #[error("symbol {value} is not a residue mod {modulus}")]
    InvalidSymbol { value: u32, modulus: u32 },
    #[error("conditioning word has zero probability")]
    ZeroProbabilityWord,
    #[error("operation requires lattice dimension {required}, found {found}")]
    UnsupportedDimension { required: usize, found: usize },
    #[error("intermediate support of {size} sites exceeds the limit {limit}")]
    SupportLimit { size: usize, limit: usize },
    #[error("enumeration of {size} configurations exceeds the limit {limit}")]
    EnumerationLimit { size: u128, limit: u128 },
    #[error("window character group of order {size} exceeds the limit {limit}")]
    WindowLimit { size: u128, limit: u128 },
    #[error("site {0} appears more than once in the window")]
    DuplicateSite(ShiftVector),
    #[error("automaton is a single monomial; it has no nested factors")]
    MonomialAutomaton,
    #[error("window is empty")]
    EmptyWindow,
    #[error("window mismatch: expected {expected} sites, found {found}")]
    WindowMismatch { expected: usize, found: usize },
    #[error("step {index} projects to {value}, which is not positive")]
    NonpositiveStep { index: usize, value: i64 },
    #[error("digit string is empty")]
    EmptyString,
    #[error("inverted distribution failed validation (total {total}, minimum {minimum})")]
    InvalidInversion { total: f64, minimum: f64 },
    #[error("incremental pullback disagrees with the direct power at n = {n}")]
    CheckpointMismatch { n: u64 },
}
