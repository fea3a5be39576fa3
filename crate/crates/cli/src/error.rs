use std::io;
use std::process::ExitCode;

use stitchwalk::mpc::MpcError;
use stitchwalk::oracle::OracleError;
use stitchwalk::ppr::PprError;
use stitchwalk::walk::WalkError;
use stitchwalk::GraphError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, input files or parameters.
    Usage(String),
    /// The algorithm itself gave up (abort-mode stitch failure, no usable walks, no cut).
    Algorithm(String),
    /// A machine went over capacity in strict mode.
    Capacity(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Algorithm(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Capacity(_) => 3,
        })
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Algorithm(m) | CliError::Capacity(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MpcError> for CliError {
    fn from(e: MpcError) -> Self {
        match e {
            MpcError::CapacityExceeded { .. } => CliError::Capacity(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::StitchFailed { .. } | WalkError::EmptyWalkSet => CliError::Algorithm(e.to_string()),
            WalkError::Mpc(m) => m.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PprError> for CliError {
    fn from(e: PprError) -> Self {
        match e {
            PprError::Walk(w) => w.into(),
            PprError::EmptyWalkSet | PprError::EmptySupport | PprError::NoProperPrefix => {
                CliError::Algorithm(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Usage(e.to_string())
    }
}
