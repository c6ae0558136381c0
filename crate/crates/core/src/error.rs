use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    #[error("exhausted cube of side {side} without finding a distinct-valued point")]
    Infeasible { side: u64 },

    #[error("prime window [{lo}, {hi}] holds {found} primes, needed {needed}")]
    WindowExhausted {
        lo: u64,
        hi: u64,
        found: usize,
        needed: usize,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
