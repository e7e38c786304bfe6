//! Output documents and atomic file writing.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{AdaTcParams, ClusterQualityReport, Clustering};
use crate::error::{Error, Result};
use crate::ingest::StationId;

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// SHA-256 over the serialised parameters and the contents (not the names)
/// of the input files, hex encoded.
pub fn config_hash<T: Serialize>(params: &T, inputs: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(params)?);
    for p in inputs {
        let bytes = fs::read(p).map_err(|e| Error::io(*p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(Sha256::digest(&bytes));
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Provenance carried by every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    pub config_hash: String,
    pub seed: u64,
}

impl RunStamp {
    /// Comment line for tabular outputs.
    pub fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// Station to cluster mapping with medoids and the parameters used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringDocument {
    pub stamp: RunStamp,
    pub method: String,
    pub params: AdaTcParams,
    pub k: usize,
    pub medoids: Vec<StationId>,
    pub stations: BTreeMap<StationId, usize>,
    pub iterations: usize,
    pub converged: bool,
    pub reports: Vec<ClusterQualityReport>,
}

impl ClusteringDocument {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        stamp: RunStamp,
        method: &str,
        params: AdaTcParams,
        ids: &[StationId],
        clustering: &Clustering,
        reports: Vec<ClusterQualityReport>,
        iterations: usize,
        converged: bool,
    ) -> Self {
        ClusteringDocument {
            stamp,
            method: method.to_string(),
            params,
            k: clustering.k(),
            medoids: clustering.medoids.iter().map(|&m| ids[m].clone()).collect(),
            stations: ids
                .iter()
                .cloned()
                .zip(clustering.assignment.iter().copied())
                .collect(),
            iterations,
            converged,
            reports,
        }
    }

    /// Cluster labels in the order of `ids`.
    pub fn labels_for(&self, ids: &[StationId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.stations
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("station {id} missing from the clustering file")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_ignores_paths() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        fs::write(&a, "x,y\n1,2\n").unwrap();
        fs::write(&b, "x,y\n1,2\n").unwrap();
        assert_eq!(config_hash(&1u8, &[&a]).unwrap(), config_hash(&1u8, &[&b]).unwrap());
        assert_ne!(config_hash(&1u8, &[&a]).unwrap(), config_hash(&2u8, &[&a]).unwrap());
    }
}
