//! Achievable rates for discrete memoryless two-way relay channels.
//!
//! Two users exchange messages through a relay with no direct link. The
//! crate evaluates four relaying strategies on a channel description:
//!
//! * functional-decode-forward with dithered random linear codes (`FDF-L`),
//!   where the relay decodes only the field sum of the two codewords;
//! * functional-decode-forward with systematic computation codes (`FDF-S`);
//! * complete-decode-forward (`CDF`), where the relay decodes both messages;
//! * compress-forward (`CF`), where the relay quantizes what it hears.
//!
//! It also simulates the linear-code relay decoder by Monte Carlo, so the
//! functional-decoding rate can be checked operationally.
//!
//! ```
//! use twrc::channel::bundled;
//! use twrc::regions::{eval_fdf_l, EvalConfig};
//!
//! let spec = bundled::paper_sec5();
//! let fdf = eval_fdf_l(&spec, &EvalConfig::default()).unwrap();
//! assert!((fdf.sum - 0.2374).abs() < 5e-4);
//! ```

pub mod channel;
pub mod gf;
pub mod infotheory;
pub mod lincode;
pub mod optimize;
pub mod regions;
pub mod report;
pub mod seed;

use thiserror::Error;

/// Crate-level error, grouped into the categories the CLI reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Field(#[from] gf::GfError),
    #[error(transparent)]
    Info(#[from] infotheory::InfoError),
    #[error(transparent)]
    Region(#[from] regions::RegionError),
    #[error(transparent)]
    Code(#[from] lincode::CodeError),
    #[error(transparent)]
    Sweep(#[from] report::SweepError),
    #[error("every strategy failed: {0}")]
    AllFailed(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Io,
    Evaluation,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Validation => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Evaluation => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use channel::ChannelError as C;
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Channel(C::EnumerationRefused { .. }) => ErrorCategory::Evaluation,
            Error::Channel(_) | Error::Field(_) | Error::Sweep(_) => ErrorCategory::Validation,
            Error::Code(e) if e.is_validation() => ErrorCategory::Validation,
            Error::Region(e) if e.is_validation() => ErrorCategory::Validation,
            Error::Info(_) | Error::Region(_) | Error::Code(_) | Error::AllFailed(_) => ErrorCategory::Evaluation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
