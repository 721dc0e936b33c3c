use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes, lengths or indices that do not line up.
    #[error("structural error: {0}")]
    Structural(String),
    /// Non-finite values, singular matrices and similar numeric breakdowns.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Parameters outside the admissible range of an operation.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! structural {
    ($($arg:tt)*) => { $crate::error::Error::Structural(format!($($arg)*)) };
}
macro_rules! numeric {
    ($($arg:tt)*) => { $crate::error::Error::Numeric(format!($($arg)*)) };
}
macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use {domain, numeric, structural};
