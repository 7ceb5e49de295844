use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// One invalid row found while validating a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    /// Identifier of the offending individual (or row number when unknown).
    pub id: String,
    pub reason: String,
}

impl fmt::Display for RowIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "individual {}: {}", self.id, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid data for individual {index}: {reason}")]
    Individual { index: usize, reason: String },

    #[error("dataset validation failed with {} issue(s): {}", .issues.len(), format_issues(.issues))]
    DatasetRows { issues: Vec<RowIssue> },

    #[error("numeric overflow in {context}")]
    Overflow { context: String },

    #[error(
        "slice sampler for {name} exhausted {max_steps} expansion steps \
         (start {start}, width {width}); the conditional may be improper"
    )]
    SliceExhausted {
        name: &'static str,
        start: f64,
        width: f64,
        max_steps: u32,
    },

    #[error("constrained outcome draw {index} exceeded {cap} rejection attempts \
             (acceptance rate below {min_rate:.2e})")]
    RejectionCap {
        index: usize,
        cap: u64,
        min_rate: f64,
    },

    #[error("sampler failed at iteration {iteration}: {source}")]
    AtIteration {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("{path}: {reason}")]
    FileFormat { path: String, reason: String },

    #[error("{path}: chain file truncated at byte {offset}: {reason}")]
    ChainTruncated {
        path: String,
        offset: u64,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_issues(issues: &[RowIssue]) -> String {
    const SHOWN: usize = 5;
    let mut out = issues
        .iter()
        .take(SHOWN)
        .map(RowIssue::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if issues.len() > SHOWN {
        out.push_str(&format!("; ... and {} more", issues.len() - SHOWN));
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
