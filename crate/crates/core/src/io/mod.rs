//! Run configuration, random initial data, on-disk formats and the
//! drivers behind the command-line tool.

pub mod config;
pub mod energy_log;
pub mod run;
pub mod snapshot;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spectral::{compensated_sum, Grid2D, ScalarField};

pub use config::{parse_config, parse_config_with, parse_override, parse_sweep_config, ConfigError, RunConfig, SweepConfig};
pub use energy_log::EnergyLog;
pub use run::{convergence, convert, simulate, RunError, RunOutcome};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed snapshot: {0}")]
    Format(String),
}

impl IoError {
    pub(crate) fn at(path: &Path, source: std::io::Error) -> Self {
        IoError::Fs {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// `mean_value + amplitude·(r − r̄)` with r i.i.d. uniform on [−1, 1] from a
/// ChaCha8 stream seeded by `seed`.
pub fn random_initial_field(grid: &Grid2D, mean_value: f64, amplitude: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let bar = compensated_sum(&raw) / raw.len() as f64;
    let values = raw.into_iter().map(|r| mean_value + amplitude * (r - bar)).collect();
    ScalarField::new(grid, values).expect("length matches grid")
}
