use std::fmt;

/// Why a subcommand stopped. Maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or flag values (exit 2).
    Usage(String),
    /// Anything that went wrong while doing the work (exit 1).
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<etlsentry::Error> for Failure {
    fn from(e: etlsentry::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

pub fn runtime(e: impl fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

pub type CmdResult<T = ()> = Result<T, Failure>;
