//! Trajectory dataset construction: scenario sampling, parallel generation
//! through the reference solver, train/val/test splits, and the binary
//! record format shared with downstream consumers.

pub mod error;
pub mod generate;
pub mod record;
pub mod sample;

pub use error::{DataError, Result};
pub use generate::{generate_dataset, Dataset, Manifest, ManifestEntry, Split, MANIFEST_NAME};
pub use record::{decode_record, encode_record, read_record, write_record, SimulationRecord};
pub use sample::{sample_scenario, DatasetConfig, ObstacleMode};
