use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarError {
    #[error("LOSO requires >=2 subjects")]
    TooFewSubjects,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unknown activity {name:?}; valid names: {valid}")]
    UnknownActivity { name: String, valid: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("fold for test subject {subject} failed: {source}")]
    Fold {
        subject: u32,
        #[source]
        source: Box<HarError>,
    },
}

impl HarError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarError::Io {
            path: path.into(),
            source,
        }
    }
}
