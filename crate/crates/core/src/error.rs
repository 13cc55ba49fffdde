use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported record layout: record_size={record_size}, key_size={key_size}")]
    InvalidLayout { record_size: usize, key_size: usize },

    #[error("data length {len} is not a multiple of record_size {record_size}")]
    Format { len: usize, record_size: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot allocate {bytes} bytes for {what}")]
    Resource { what: &'static str, bytes: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}
