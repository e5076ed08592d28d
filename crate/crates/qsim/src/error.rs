use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("register must hold at least one qubit")]
    EmptyRegister,

    #[error("{n_qubits}-qubit register exceeds the {cap}-qubit cap for this representation")]
    TooManyQubits { n_qubits: usize, cap: usize },

    #[error("{gate} targets qubit {index}, but the register has {n_qubits} qubits")]
    InvalidTarget {
        gate: String,
        index: usize,
        n_qubits: usize,
    },

    #[error("{gate} targets qubit {index} more than once")]
    DuplicateTarget { gate: String, index: usize },

    #[error("operation {op_index}: {source}")]
    AtOperation {
        op_index: usize,
        #[source]
        source: Box<SimError>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("basis index {index} out of range for {n_qubits} qubits")]
    BasisIndexOutOfRange { index: usize, n_qubits: usize },

    #[error("{name} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("Kraus operators violate completeness (max deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("a channel needs at least one Kraus operator")]
    EmptyChannel,

    #[error("observable acts on qubit {index}, but the register has {n_qubits} qubits")]
    InvalidObservable { index: usize, n_qubits: usize },

    #[error("shot count must be positive")]
    ZeroShots,
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
