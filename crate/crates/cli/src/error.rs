use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(nashlab::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use nashlab::Error as E;
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            // Every parameter reaching the core comes from the config.
            CliError::Core(E::Parameter(_)) => 2,
            CliError::Core(E::Calibration(_) | E::NoCertificate(_)) => 4,
            CliError::Core(E::Integrability(_)) => 5,
            CliError::Core(_) | CliError::Io(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<nashlab::Error> for CliError {
    fn from(e: nashlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
