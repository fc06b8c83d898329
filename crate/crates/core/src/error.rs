use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("{count} vectors cannot form a gUPB in {n}x{m}: at least {min} are needed")]
    TooFewVectors {
        count: usize,
        n: usize,
        m: usize,
        min: usize,
    },

    #[error("expected exactly {expected} vectors, got {got}")]
    WrongCount { expected: usize, got: usize },

    #[error("{count} vectors exceed the enumeration cap of {cap}")]
    TooManyVectors { count: usize, cap: usize },

    #[error("repeated node at positions {0} and {1}")]
    RepeatedNode(usize, usize),

    #[error("input is not in general position: {0}")]
    Degenerate(String),

    #[error("{side} vectors {triple:?} are linearly dependent")]
    DependentTriple {
        side: &'static str,
        triple: [usize; 3],
    },

    #[error("vanishing denominator: {0}")]
    VanishingDenominator(String),

    #[error("not pentagram-equivalent: {0}")]
    NotPentagram(String),

    #[error("atom {0} vanishes")]
    VanishingAtom(&'static str),

    #[error("non-real canonical parameters (max |Im| = {0:.3e})")]
    NonReal(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("data file: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// true for failures of the numerics rather than of the input
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
