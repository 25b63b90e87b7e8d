use frontlab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot encode summary: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
/// Output could not be written.
pub const EXIT_IO: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CoreError::InvalidArgument(_)
                | CoreError::NonNormalizable { .. }
                | CoreError::UnsupportedTail(_)
                | CoreError::NoFiniteSpeed
                | CoreError::DivergentIntegral(_)
                | CoreError::DegenerateAdjustment { .. } => EXIT_CONFIG,
                CoreError::NonConvergence { .. }
                | CoreError::Bracket { .. }
                | CoreError::NoCrossing { .. }
                | CoreError::UnstableStep { .. }
                | CoreError::DomainExhausted { .. }
                | CoreError::Undecidable(_)
                | CoreError::InsufficientData(_) => EXIT_NONCONVERGENCE,
            },
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kind() {
        assert_eq!(CliError::Config(vec![]).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::NoFiniteSpeed).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::DomainExhausted { t: 1.0 }).exit_code(), 3);
        let io = std::io::Error::new(std::io::ErrorKind::Other, "x");
        assert_eq!(CliError::Io(io).exit_code(), 4);
    }
}
