use thiserror::Error;

/// Errors produced by the protomeas library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} outside the supported range 1..={1}")]
    DimensionOutOfRange(usize, usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("negative mixture weight {0}")]
    NegativeWeight(f64),

    #[error("mixture weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("dimension {dim} does not factor as {d1} x {d2}")]
    Factorization { dim: usize, d1: usize, d2: usize },

    #[error("protected level is degenerate (gap {gap:.3e})")]
    DegenerateLevel { gap: f64 },

    #[error("protected state is not an eigenstate of the protection Hamiltonian (residual {residual:.3e})")]
    NotEigenstate { residual: f64 },

    #[error("pointer wavepacket reached the grid edge ({mass:.3e} probability in the outer 10%)")]
    GridEdge { mass: f64 },

    #[error("observable set is not informationally complete (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("label `{0}` not found")]
    UnknownLabel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("observed prefix is inconsistent with the ensemble: {0}")]
    InconsistentPrefix(String),

    #[error("{0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
