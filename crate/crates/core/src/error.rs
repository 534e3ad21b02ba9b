use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {0} does not belong to this index")]
    ForeignNode(u32),

    #[error("level ancestor overshoot: asked for {asked} links, node has depth {depth}")]
    Overshoot { asked: usize, depth: usize },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("index format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
