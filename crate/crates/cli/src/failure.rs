use std::fmt;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;

/// An error paired with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Failure::new(EXIT_USAGE, anyhow::anyhow!("{message}"))
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Failure::new(EXIT_DATA, anyhow::anyhow!("{message}"))
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Tags an error with an exit code.
pub trait Classify<T> {
    fn usage_err(self) -> CmdResult<T>;
    fn data_err(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage_err(self) -> CmdResult<T> {
        self.map_err(|e| Failure::new(EXIT_USAGE, e))
    }

    fn data_err(self) -> CmdResult<T> {
        self.map_err(|e| Failure::new(EXIT_DATA, e))
    }
}
