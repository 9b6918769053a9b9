use std::fmt;

/// Why a command failed; each kind has its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// The command ran but produced nothing usable, or could not write its outputs.
    Processing,
    /// Bad flags, configs or input files.
    Input,
    /// A verification ran to completion and did not pass.
    Verification,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Processing => 1,
            Failure::Input => 2,
            Failure::Verification => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Failure,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: Failure, error: impl Into<anyhow::Error>) -> Self {
        Self { kind, error: error.into() }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::new(Failure::Input, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with the exit code it should produce.
pub trait Classify<T> {
    fn input(self) -> CliResult<T>;
    fn processing(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> CliResult<T> {
        self.map_err(|e| CliError::new(Failure::Input, e))
    }

    fn processing(self) -> CliResult<T> {
        self.map_err(|e| CliError::new(Failure::Processing, e))
    }
}
