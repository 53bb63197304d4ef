use thiserror::Error;

use crate::data::DataError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty learner set")]
    EmptyLearnerSet,
    #[error("all accuracies are zero; weights are undefined")]
    AllZeroAccuracy,
    #[error("vote label {label} out of range for {class_count} classes")]
    VoteOutOfRange { label: u32, class_count: usize },
    #[error("aggregation rule does not cover exactly the voting learners: {0}")]
    RuleMismatch(String),
    #[error("maximum seed size {max_size} exceeds learner count {learners}")]
    SeedSizeTooLarge { max_size: usize, learners: usize },
    #[error("exact Shapley values need n <= 16 learners, got {0}")]
    ExactShapleyTooLarge(usize),
    #[error("every Shapley value is <= 0; no learner can be weighted")]
    NoPositiveShapley,
    #[error("stacking diverged at epoch {epoch}: loss is {loss}")]
    Divergent { epoch: usize, loss: f64 },
    #[error("gap to perfection is undefined when the reference accuracy is 1")]
    PerfectReference,
    #[error("method `{method}` has {datasets} dataset(s); at least 2 are needed")]
    TooFewDatasets { method: String, datasets: usize },
    #[error("integer overflow while forming exact vote weights")]
    Overflow,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by bad input files or parameters, as opposed
    /// to failures of a computation on valid input.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Divergent { .. }
                | Error::Overflow
                | Error::AllZeroAccuracy
                | Error::NoPositiveShapley
                | Error::PerfectReference
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
