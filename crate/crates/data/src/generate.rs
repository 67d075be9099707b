//! Dataset generation pipeline: sample scenarios, run the reference solver
//! (parallel across scenarios), write one record file each, and emit a
//! manifest with the split assignment and full config echo.

use crate::error::{DataError, Result};
use crate::record::{read_record, write_record, SimulationRecord};
use crate::sample::{sample_scenario, DatasetConfig};
use oilpore_core::config::ConfigDoc;
use oilpore_core::{par, SplitMix64};
use oilpore_solver::{simulate, MaterialModel, SolverConfig};
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.txt";
const MAX_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(DataError::Format(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub file: String,
    pub split: Split,
    pub seed: u64,
    /// How many scenarios were tried before one simulated cleanly.
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub base_seed: u64,
    pub entries: Vec<ManifestEntry>,
    /// Echo of the dataset, solver and material configuration.
    pub config: ConfigDoc,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut doc = self.config.clone();
        doc.set("manifest", "version", "1");
        doc.set("manifest", "base_seed", &format!("{}", self.base_seed));
        doc.set("manifest", "records", &format!("{}", self.entries.len()));
        for (idx, entry) in self.entries.iter().enumerate() {
            doc.set(
                "records",
                &format!("rec_{idx:05}"),
                &format!("{} {} {} {}", entry.file, entry.split.as_str(), entry.seed, entry.attempts),
            );
        }
        doc.to_text()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = ConfigDoc::parse(text).map_err(DataError::from)?;
        let base_seed = doc
            .get_u64("manifest", "base_seed")
            .map_err(DataError::from)?
            .ok_or_else(|| DataError::Format("manifest missing base_seed".into()))?;
        let count = doc
            .get_usize("manifest", "records")
            .map_err(DataError::from)?
            .ok_or_else(|| DataError::Format("manifest missing record count".into()))?;
        let mut entries = Vec::with_capacity(count);
        for idx in 0..count {
            let key = format!("rec_{idx:05}");
            let line = doc
                .get("records", &key)
                .ok_or_else(|| DataError::Format(format!("manifest missing {key}")))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(DataError::Format(format!("malformed record line '{line}'")));
            }
            entries.push(ManifestEntry {
                file: parts[0].to_string(),
                split: Split::parse(parts[1])?,
                seed: parts[2]
                    .parse()
                    .map_err(|_| DataError::Format(format!("bad seed in '{line}'")))?,
                attempts: parts[3]
                    .parse()
                    .map_err(|_| DataError::Format(format!("bad attempts in '{line}'")))?,
            });
        }
        Ok(Self {
            base_seed,
            entries,
            config: doc,
        })
    }
}

/// Generate `config.count` simulations into `out_dir`. Scenario seeds are
/// derived from `(base_seed, index, attempt)`, so results do not depend on
/// worker scheduling; diverged runs are resampled with the attempt counter
/// bumped and noted in the manifest.
pub fn generate_dataset(
    config: &DatasetConfig,
    solver_cfg: &SolverConfig,
    model: &MaterialModel,
    out_dir: &Path,
) -> Result<Manifest> {
    config.validate()?;
    solver_cfg.validate()?;
    let grid = config.grid()?;
    model.validate(&grid)?;
    std::fs::create_dir_all(out_dir)?;

    let results: Vec<Result<(SimulationRecord, u64, usize)>> =
        par::map_indexed(config.count, |index| {
            let mut attempt = 0usize;
            loop {
                let seed = derive_seed(config.base_seed, index as u64, attempt as u64);
                let mut rng = SplitMix64::new(seed);
                let mut scenario = sample_scenario(&mut rng, config, &grid)?;
                scenario.rng_seed = seed;
                // geometry rejection (obstacle over the pore) resamples too
                if oilpore_core::build_geometry_mask(&scenario, grid).is_err() {
                    attempt += 1;
                    if attempt >= MAX_ATTEMPTS {
                        return Err(DataError::Infeasible(format!(
                            "record {index}: no viable scenario in {MAX_ATTEMPTS} attempts"
                        )));
                    }
                    continue;
                }
                let run = simulate(&scenario, grid, model, solver_cfg, config.t_end)?;
                if run.valid {
                    return Ok((SimulationRecord::from_run(run), seed, attempt + 1));
                }
                attempt += 1;
                if attempt >= MAX_ATTEMPTS {
                    return Err(DataError::Infeasible(format!(
                        "record {index}: solver diverged {MAX_ATTEMPTS} times"
                    )));
                }
            }
        });

    let (n_train, n_val, _) = config.split_counts();
    let mut entries = Vec::with_capacity(config.count);
    for (index, result) in results.into_iter().enumerate() {
        let (record, seed, attempts) = result?;
        let file = format!("rec_{index:05}.tpf");
        write_record(&record, &out_dir.join(&file))?;
        let split = if index < n_train {
            Split::Train
        } else if index < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        entries.push(ManifestEntry { file, split, seed, attempts });
    }

    let mut config_echo = ConfigDoc::new();
    config.to_doc(&mut config_echo);
    solver_cfg.to_doc(&mut config_echo);
    model.to_doc(&mut config_echo);

    let manifest = Manifest {
        base_seed: config.base_seed,
        entries,
        config: config_echo,
    };
    std::fs::write(out_dir.join(MANIFEST_NAME), manifest.to_text())?;
    Ok(manifest)
}

fn derive_seed(base: u64, index: u64, attempt: u64) -> u64 {
    let mut rng = SplitMix64::derive(base, index.wrapping_mul(1000).wrapping_add(attempt));
    rng.next_u64()
}

/// A dataset loaded into memory, grouped by split.
#[derive(Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub train: Vec<SimulationRecord>,
    pub val: Vec<SimulationRecord>,
    pub test: Vec<SimulationRecord>,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
        let manifest = Manifest::parse(&manifest_text)?;
        let mut train = Vec::new();
        let mut val = Vec::new();
        let mut test = Vec::new();
        for entry in &manifest.entries {
            let mut record = read_record(&dir.join(&entry.file))?;
            record.scenario.rng_seed = entry.seed;
            match entry.split {
                Split::Train => train.push(record),
                Split::Val => val.push(record),
                Split::Test => test.push(record),
            }
        }
        Ok(Self {
            manifest,
            train,
            val,
            test,
        })
    }

    pub fn record_files(&self) -> Vec<PathBuf> {
        self.manifest
            .entries
            .iter()
            .map(|e| PathBuf::from(&e.file))
            .collect()
    }
}
