//! Stimulus dataset directories: many `.rdk` files plus a JSON manifest.
//!
//! A dataset is fully determined by (coherence list, repeat count, master
//! seed): per-entry seeds derive from the master seed and the entry's grid
//! coordinates, so a rebuild reproduces every file byte for byte. The
//! manifest records a SHA-256 checksum per file for corruption detection.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::derive_u64;
use crate::stimulus::{format, generate_stimulus, Direction, RdkParams, Stimulus};

pub const MANIFEST_NAME: &str = "manifest.json";

/// One stimulus file in a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    /// File name relative to the dataset root.
    pub path: String,
    pub coherence: f64,
    pub direction: Direction,
    /// Repeat index within the (coherence, direction) condition.
    pub repeat: u32,
    /// Per-stimulus seed (derived from the dataset master seed).
    pub seed: u64,
    /// Hex SHA-256 of the file bytes.
    pub checksum: String,
}

/// Index of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub entries: Vec<DatasetEntry>,
}

/// The canonical coherence grid: 0.00 to 0.99 in steps of 0.01.
pub fn default_coherences() -> Vec<f64> {
    (0..100).map(|i| i as f64 / 100.0).collect()
}

/// Deterministic per-entry seed from the dataset master seed and the
/// entry's (coherence index, direction, repeat) coordinates.
pub fn entry_seed(master: u64, coh_index: usize, direction: Direction, repeat: usize) -> u64 {
    let dir_id = match direction {
        Direction::Left => 0u64,
        Direction::Right => 1u64,
    };
    derive_u64(master, "stimulus", &[coh_index as u64, dir_id, repeat as u64])
}

/// An entry before generation: everything except the checksum.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedEntry {
    pub path: String,
    pub coherence: f64,
    pub direction: Direction,
    pub repeat: u32,
    pub seed: u64,
}

/// Lays out the full entry list without generating anything. Order:
/// coherence (as given), then direction (left, right), then repeat.
pub fn plan_entries(coherences: &[f64], repeats: usize, master_seed: u64) -> Vec<PlannedEntry> {
    let mut planned = Vec::with_capacity(coherences.len() * 2 * repeats);
    for (ci, &coherence) in coherences.iter().enumerate() {
        for direction in [Direction::Left, Direction::Right] {
            for repeat in 0..repeats {
                planned.push(PlannedEntry {
                    path: format!("c{coherence:.4}_{direction}_{repeat:02}.rdk"),
                    coherence,
                    direction,
                    repeat: repeat as u32,
                    seed: entry_seed(master_seed, ci, direction, repeat),
                });
            }
        }
    }
    planned
}

/// [`build_dataset_with`] using the canonical stimulus geometry.
pub fn build_dataset(
    root: &Path,
    coherences: &[f64],
    repeats: usize,
    master_seed: u64,
) -> Result<DatasetManifest> {
    build_dataset_with(root, &RdkParams::default(), coherences, repeats, master_seed)
}

/// Generates and writes every stimulus plus the manifest. All entries share
/// `base`'s geometry; coherence, direction, and seed come from the grid.
/// Entries are generated in parallel; the manifest is written last so a
/// complete manifest implies a complete dataset.
pub fn build_dataset_with(
    root: &Path,
    base: &RdkParams,
    coherences: &[f64],
    repeats: usize,
    master_seed: u64,
) -> Result<DatasetManifest> {
    if coherences.is_empty() {
        return Err(Error::Config("coherence list must be nonempty".into()));
    }
    for &c in coherences {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Config(format!("coherence {c} outside [0, 1]")));
        }
    }
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let planned = plan_entries(coherences, repeats, master_seed);
    let entries: Result<Vec<DatasetEntry>> = planned
        .par_iter()
        .map(|entry| {
            let mut params = base.clone();
            params.coherence = entry.coherence;
            params.direction = entry.direction;
            params.seed = entry.seed;
            let stimulus = generate_stimulus(&params)?;
            let bytes = format::encode(&stimulus);
            let checksum = hex::encode(Sha256::digest(&bytes));
            let path = root.join(&entry.path);
            std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            Ok(DatasetEntry {
                path: entry.path.clone(),
                coherence: entry.coherence,
                direction: entry.direction,
                repeat: entry.repeat,
                seed: entry.seed,
                checksum,
            })
        })
        .collect();
    let manifest = DatasetManifest {
        format_version: "1".into(),
        entries: entries?,
    };

    let manifest_path = root.join(MANIFEST_NAME);
    let json = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// Reads the manifest of a dataset directory.
pub fn load_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = root.join(MANIFEST_NAME);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

impl DatasetManifest {
    /// Loads one entry, verifying its checksum first.
    pub fn load_entry(&self, root: &Path, entry: &DatasetEntry) -> Result<Stimulus> {
        let path = root.join(&entry.path);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let checksum = hex::encode(Sha256::digest(&bytes));
        if checksum != entry.checksum {
            return Err(Error::StimulusFormat(format!(
                "{}: checksum mismatch (manifest {}, file {})",
                path.display(),
                entry.checksum,
                checksum
            )));
        }
        format::decode(&bytes, &path.display().to_string())
    }

    /// Verifies every checksum; returns the paths that failed.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for entry in &self.entries {
            let path = root.join(&entry.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if hex::encode(Sha256::digest(&bytes)) != entry.checksum {
                bad.push(entry.path.clone());
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_yields_2000_entries() {
        let coherences = default_coherences();
        assert_eq!(coherences.len(), 100);
        assert_eq!(coherences[0], 0.0);
        assert_eq!(coherences[99], 0.99);
        let planned = plan_entries(&coherences, 10, 0);
        assert_eq!(planned.len(), 2000);
        // Paths are unique.
        let mut paths: Vec<&str> = planned.iter().map(|e| e.path.as_str()).collect();
        paths.sort();
        paths.dedup();
        assert_eq!(paths.len(), 2000);
    }

    #[test]
    fn single_condition_yields_two_entries() {
        let planned = plan_entries(&[0.5], 1, 0);
        assert_eq!(planned.len(), 2);
        assert_eq!(planned[0].direction, Direction::Left);
        assert_eq!(planned[1].direction, Direction::Right);
    }

    #[test]
    fn build_load_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_dataset(dir.path(), &[0.5], 1, 99).unwrap();
        assert_eq!(manifest.entries.len(), 2);

        let reloaded = load_manifest(dir.path()).unwrap();
        assert_eq!(manifest, reloaded);
        assert!(manifest.verify(dir.path()).unwrap().is_empty());

        let stim = manifest
            .load_entry(dir.path(), &manifest.entries[0])
            .unwrap();
        assert_eq!(stim.params.coherence, 0.5);
        assert_eq!(stim.params.direction, Direction::Left);
    }

    #[test]
    fn rebuild_reproduces_checksums() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = build_dataset(dir_a.path(), &[0.0, 0.8], 1, 7).unwrap();
        let b = build_dataset(dir_b.path(), &[0.0, 0.8], 1, 7).unwrap();
        let sums = |m: &DatasetManifest| -> Vec<String> {
            m.entries.iter().map(|e| e.checksum.clone()).collect()
        };
        assert_eq!(sums(&a), sums(&b));
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_dataset(dir.path(), &[0.2], 1, 1).unwrap();
        let victim = dir.path().join(&manifest.entries[0].path);
        let mut bytes = std::fs::read(&victim).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        std::fs::write(&victim, &bytes).unwrap();

        let err = manifest
            .load_entry(dir.path(), &manifest.entries[0])
            .unwrap_err();
        assert!(matches!(err, Error::StimulusFormat(_)), "{err}");
        assert_eq!(
            manifest.verify(dir.path()).unwrap(),
            vec![manifest.entries[0].path.clone()]
        );
    }

    #[test]
    fn empty_coherences_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(build_dataset(dir.path(), &[], 1, 0).is_err());
    }
}
