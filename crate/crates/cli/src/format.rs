//! On-disk documents: ensembles and POVMs as JSON.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays, so the files are plain structured text a human can write.  A
//! state is given either as a full density `matrix` or, for pure states,
//! as a `vector` (normalized on load), never both.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seqdisc_core::linalg::{ComplexMatrix, HermitianOperator};
use seqdisc_core::{Ensemble, Povm, WeightedState};

use crate::CliError;

/// Complex scalar on disk: `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub states: Vec<StateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecord {
    pub prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub effects: Vec<Vec<Vec<ComplexPair>>>,
    /// Index of the inconclusive effect for unambiguous measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<usize>,
}

/// A parsed input together with its provenance for the report.
pub struct LoadedEnsemble {
    pub ensemble: Ensemble,
    pub path: String,
    pub sha256: String,
}

pub struct LoadedPovm {
    pub povm: Povm,
    pub path: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, String), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let parsed = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((parsed, sha256_hex(&bytes)))
}

fn complex(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

fn matrix_from_rows(
    dim: usize,
    rows: &[Vec<ComplexPair>],
    context: &str,
) -> Result<ComplexMatrix, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Input(format!(
            "{context}: matrix must be {dim}x{dim}"
        )));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| complex(rows[i][j])))
}

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

pub fn ensemble_from_file(file: &EnsembleFile, origin: &str) -> Result<Ensemble, CliError> {
    let dim = file.dimension;
    let mut states = Vec::with_capacity(file.states.len());
    for (j, record) in file.states.iter().enumerate() {
        let context = format!("{origin}: states[{j}]");
        let rho = match (&record.matrix, &record.vector) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(CliError::Input(format!(
                    "{context}: exactly one of matrix/vector is required"
                )));
            }
            (Some(rows), None) => {
                let m = matrix_from_rows(dim, rows, &context)?;
                HermitianOperator::new(m)
                    .map_err(|e| CliError::Input(format!("{context}: {e}")))?
            }
            (None, Some(entries)) => {
                if entries.len() != dim {
                    return Err(CliError::Input(format!(
                        "{context}: vector must have {dim} entries"
                    )));
                }
                let v: Vec<Complex64> = entries.iter().map(|&p| complex(p)).collect();
                HermitianOperator::projector_onto(&v)
                    .map_err(|e| CliError::Input(format!("{context}: {e}")))?
            }
        };
        states.push(WeightedState {
            prior: record.prior,
            rho,
        });
    }
    let label = file
        .label
        .clone()
        .unwrap_or_else(|| origin.to_string());
    Ensemble::new(label, states).map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

pub fn load_ensemble(path: &Path) -> Result<LoadedEnsemble, CliError> {
    let (file, sha256): (EnsembleFile, String) = read_json(path)?;
    let origin = path.display().to_string();
    let ensemble = ensemble_from_file(&file, &origin)?;
    Ok(LoadedEnsemble {
        ensemble,
        path: origin,
        sha256,
    })
}

pub fn povm_from_file(file: &PovmFile, origin: &str) -> Result<Povm, CliError> {
    let dim = file.dimension;
    let mut effects = Vec::with_capacity(file.effects.len());
    for (j, rows) in file.effects.iter().enumerate() {
        let context = format!("{origin}: effects[{j}]");
        let m = matrix_from_rows(dim, rows, &context)?;
        effects.push(
            HermitianOperator::new(m).map_err(|e| CliError::Input(format!("{context}: {e}")))?,
        );
    }
    Povm::new(effects, file.inconclusive)
        .map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

pub fn load_povm(path: &Path) -> Result<LoadedPovm, CliError> {
    let (file, sha256): (PovmFile, String) = read_json(path)?;
    let origin = path.display().to_string();
    let povm = povm_from_file(&file, &origin)?;
    Ok(LoadedPovm {
        povm,
        path: origin,
        sha256,
    })
}

pub fn povm_to_file(povm: &Povm, label: Option<String>) -> PovmFile {
    PovmFile {
        dimension: povm.dim(),
        label,
        effects: povm
            .effects()
            .iter()
            .map(|e| matrix_to_rows(e.matrix()))
            .collect(),
        inconclusive: povm.inconclusive_index(),
    }
}

pub fn write_povm(path: &Path, povm: &Povm, label: Option<String>) -> Result<(), CliError> {
    let file = povm_to_file(povm, label);
    let body = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Input(format!("serializing POVM: {e}")))?;
    fs::write(path, body + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
