use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("truncated stream: bits exhausted mid-symbol")]
    TruncatedStream,
    #[error("stream exhausted: no more words on the ANS stack")]
    StreamExhausted,
    #[error("initial bits exhausted after {items} items; supply a longer preamble")]
    InitialBitsExhausted { items: usize },
    #[error("model/message length mismatch: {models} models for {symbols} symbols")]
    LengthMismatch { models: usize, symbols: usize },
    #[error("unencodable: {0}")]
    Unencodable(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("index {index} out of range for {count} candidates")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error("empty input")]
    EmptyInput,
}

impl Error {
    /// Corruption-class errors that a container reader surfaces to the user.
    pub fn is_corruption(&self) -> bool {
        matches!(
            self,
            Error::Checksum { .. }
                | Error::Format(_)
                | Error::UnsupportedVersion(_)
                | Error::UnknownCodec(_)
                | Error::TruncatedStream
                | Error::StreamExhausted
        )
    }
}
