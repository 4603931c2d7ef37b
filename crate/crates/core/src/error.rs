use crate::lattice::Site;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("site {site} has dimension {found}, lattice has dimension {expected}")]
    DimensionMismatch {
        site: Site,
        expected: usize,
        found: usize,
    },

    #[error("site {0} is not part of the cluster")]
    SiteNotInCluster(Site),

    #[error("occupied sites do not form a single connected cluster")]
    NotConnected,

    #[error("cluster is empty")]
    EmptyCluster,

    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("{n} qubits exceed the dense limit of {max}")]
    TooManyQubits { n: usize, max: usize },

    #[error("state needs at least {min} qubits, got {n}")]
    TooFewQubits { n: usize, min: usize },

    #[error("qubit {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("matrix deviates from unitarity by {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("outcome {outcome} on qubit {qubit} has zero probability")]
    ZeroProbabilityOutcome { qubit: usize, outcome: u8 },

    #[error("qubit {0} is measured more than once")]
    DuplicateQubit(usize),

    #[error("invalid qubit subset: {0}")]
    BadSubset(String),

    #[error("register sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("expected a {expected}-qubit state, got {found} qubits")]
    WrongQubitCount { expected: usize, found: usize },

    #[error("Bloch vector must be a unit vector (norm {0})")]
    BadBlochVector(f64),

    #[error("unitary on qubit {0} is not a Clifford operation")]
    NotClifford(usize),

    #[error("subset is not separable from the rest of the register")]
    NotSeparable,

    #[error("input state is not a chain state (fidelity {fidelity})")]
    InputNotChain { fidelity: f64 },

    #[error("chain positions ({j}, {k}) are out of range for N = {n}")]
    IndicesOutOfRange { j: usize, k: usize, n: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("strategy leaves an entangled branch (outcomes {outcomes:?})")]
    StrategyDoesNotDisentangle { outcomes: Vec<u8> },

    #[error("site {0} is not on the even sublattice")]
    SublatticeNotEven(Site),

    #[error("amplitudes are not normalized: |alpha|^2 + |beta|^2 = {0}")]
    Unnormalized(f64),

    #[error("no auxiliary site available next to the target set")]
    NoAuxiliarySite,

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed state dump: {0}")]
    BadDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
