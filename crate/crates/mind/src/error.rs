use thiserror::Error;

#[derive(Debug, Error)]
pub enum MindError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty bag: {0}")]
    EmptyBag(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("singular covariance for bag pair ({0}, {1}); increase ridge")]
    SingularCovariance(String, String),

    #[error("kernel underflow; increase sigma")]
    KernelUnderflow,

    #[error("transport solver failed to converge after {iterations} iterations (last objective {objective})")]
    TransportNonConvergence { iterations: usize, objective: f64 },

    #[error("unbalanced transport problem: total supply {supply} != total demand {demand}")]
    UnbalancedTransport { supply: f64, demand: f64 },

    #[error("bag {id} has {count} instances, above the EMD cap of {cap}")]
    BagTooLargeForEmd { id: String, count: usize, cap: usize },

    #[error("dissimilarity failed for bag {bag} against prototype {prototype}: {source}")]
    MatrixEntry {
        bag: String,
        prototype: String,
        #[source]
        source: Box<MindError>,
    },

    #[error("row/column id mismatch: {0}")]
    IdMismatch(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("unknown label on bag {0}; evaluation requires labeled bags")]
    UnknownLabel(String),

    #[error("optimizer did not converge within {iterations} iterations (gradient norm {gradient_norm})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("matrix not symmetric (max |D_ij - D_ji| = {0}); symmetrize first")]
    NotSymmetric(f64),

    #[error("fold without both classes; use fewer folds")]
    FoldWithoutBothClasses,

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MindError>;
