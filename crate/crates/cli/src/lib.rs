//! Pipeline stages behind the `hyperrom` command: full-order solve, POD,
//! sample selection, ROM runs and sample-count sweeps. Every stage reads and
//! writes plain-text artifacts in one output directory.

pub mod config;
pub mod pipeline;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: hyperrom::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage, configuration and file problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { source, .. } if source.is_numeric() => 2,
            _ => 1,
        }
    }

    pub(crate) fn stage(stage: &'static str) -> impl FnOnce(hyperrom::Error) -> Self {
        move |source| CliError::Stage { stage, source }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        let numeric = CliError::Stage {
            stage: "rom",
            source: hyperrom::Error::Singular,
        };
        assert_eq!(numeric.exit_code(), 2);
        let missing = CliError::Stage {
            stage: "rom",
            source: hyperrom::Error::InvalidArgument("x".into()),
        };
        assert_eq!(missing.exit_code(), 1);
    }
}
