//! Exit-code carrying errors. The code is the machine-readable channel:
//! 1 flags, 2 divergence, 3 I/O, 4 strict-undetermined, 5 verify failure.

use std::fmt;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

pub type ExitResult = Result<(), CliError>;

impl CliError {
    pub fn flags(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn divergence(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn strict_undetermined() -> Self {
        Self {
            code: 4,
            message: "classification is Undetermined and --strict was set".into(),
        }
    }

    pub fn verify_failed(failing: usize) -> Self {
        Self { code: 5, message: format!("{failing} verification suite(s) failed") }
    }

    pub fn code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}
