use thiserror::Error;

use granule_core::io::FormatError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] granule_core::Error),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("invalid run spec: {0}")]
    Spec(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

via_core!(
    FormatError,
    granule_core::gns::GnsError,
    granule_core::mpm::MpmError,
    granule_core::harvest::HarvestError,
    granule_core::render::RenderError,
    granule_core::FrameError,
    granule_core::ValidationErrors,
    granule_core::insitu::PipelineError
);

impl CliError {
    /// 0 success, 1 validation, 2 runtime, 3 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_divergence() => 3,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Validation(_) | CliError::Spec(_) => 1,
            _ => 2,
        }
    }
}
