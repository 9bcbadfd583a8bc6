use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed region code {text:?}: {reason} (token {token:?})")]
    RegionParse {
        text: String,
        token: String,
        reason: &'static str,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("region {0} is not covered by the sub-region taxonomy")]
    UnmappedRegion(String),
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure at {context}: {detail}")]
    Numeric { context: String, detail: String },
    #[error("batch has no observed targets")]
    NoObservations,
    #[error("no common sites with defined {0} in both models")]
    EmptyComparison(String),
    #[error("scenario {0} has an empty pool of added sites")]
    EmptyPool(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}
