use std::path::Path;

/// A CLI failure with a stable machine-readable code.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    code: &'static str,
    exit: u8,
    message: String,
}

impl CliError {
    pub fn new(code: &'static str, exit: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            exit,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("E_USAGE", 1, message)
    }

    /// Schema or value error at a JSON path.
    pub fn config(path: impl AsRef<str>, message: impl Into<String>) -> Self {
        Self::new("E_CONFIG", 1, format!("at `{}`: {}", path.as_ref(), message.into()))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("E_IO", 1, format!("{}: {e}", path.display()))
    }

    pub fn voxel(what: &str, message: impl Into<String>) -> Self {
        Self::new("E_VOXEL", 1, format!("{what}: {}", message.into()))
    }

    pub fn setup(message: impl std::fmt::Display) -> Self {
        Self::new("E_SETUP", 1, message.to_string())
    }

    pub fn not_converged(message: impl std::fmt::Display) -> Self {
        Self::new("E_NOT_CONVERGED", 2, message.to_string())
    }

    pub fn code(&self) -> &'static str {
        self.code
    }

    pub fn exit_code(&self) -> u8 {
        self.exit
    }

    /// `error[CODE]: text` on one line.
    pub fn line(&self) -> String {
        let flat: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {flat}", self.code)
    }
}
