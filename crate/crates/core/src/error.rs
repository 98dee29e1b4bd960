use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{solver} broke down at iteration {iteration} (residual {residual:e})")]
    Breakdown {
        solver: &'static str,
        iteration: usize,
        residual: f64,
    },

    #[error("perforated domain is disconnected: {components} components with zero-energy modes")]
    DisconnectedDomain { components: usize },

    /// The domain is connected on the torus but its periodic lift is not:
    /// closed paths wind around a proper sublattice (index given, `None`
    /// when it is not full rank).
    #[error("periodic domain does not percolate: winding lattice index {lattice_index:?}")]
    NonPercolating { lattice_index: Option<i64> },

    #[error("energy densities of different forms cannot be compared: {0}")]
    MixedForms(String),

    /// A canonical experiment produced a conclusion other than the expected one.
    #[error("{name}: expected {expected}, got {found}")]
    UnexpectedConclusion {
        name: String,
        expected: String,
        found: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps the error with the name of the experiment stage that produced it.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
