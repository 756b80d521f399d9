use std::fmt;

use gpclab::Error;

pub const OK: u8 = 0;
pub const INPUT: u8 = 1;
pub const NON_CONVERGENCE: u8 = 2;
pub const SOLVER: u8 = 3;
pub const IO: u8 = 4;
pub const UNKNOWN_PRESET: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(msg: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self {
            code: IO,
            message: msg.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoBracket { .. } => NON_CONVERGENCE,
            Error::PivotLimit(_) | Error::Numerical(_) | Error::TreeTooLarge(_) => SOLVER,
            Error::Io(_) => IO,
            _ => INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
