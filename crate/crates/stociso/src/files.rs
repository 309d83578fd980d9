//! On-disk channel and state formats.
//!
//! One JSON container with two channel variants: a raw `superoperator` (the
//! real D̃×D coordinate matrix in the canonical Hermitian basis order) or a
//! `mixed_isometry` (weights, kinds, isometry matrices). Complex scalars are
//! serialized as two-element arrays `[re, im]`; kind tags are the lowercase
//! strings `"unitary"` and `"antiunitary"`. Floats are written in serde_json's
//! canonical shortest round-trip form, so write → read → write is
//! byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, ComponentKind, IsometryComponent, MixedIsometryForm};
use crate::error::{Error, Result};
use crate::linops::{ComplexMat, HermOp, herm_eig};

/// Channel container: exactly one representation variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ChannelFile {
    #[serde(rename = "superoperator")]
    Superoperator(SuperoperatorFile),
    #[serde(rename = "mixed_isometry")]
    MixedIsometry(MixedIsometryFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperoperatorFile {
    pub dim_in: usize,
    pub dim_out: usize,
    /// row-major D̃×D real matrix
    pub mat: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedIsometryFile {
    pub dim_in: usize,
    pub dim_out: usize,
    pub components: Vec<ComponentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub weight: f64,
    pub kind: ComponentKind,
    /// complex d̃×d matrix as rows of [re, im] pairs
    pub v: ComplexMat,
}

impl ChannelFile {
    pub fn from_form(form: &MixedIsometryForm) -> Self {
        ChannelFile::MixedIsometry(MixedIsometryFile {
            dim_in: form.dim_in(),
            dim_out: form.dim_out(),
            components: form
                .components()
                .iter()
                .map(|(w, c)| ComponentFile {
                    weight: *w,
                    kind: c.kind(),
                    v: c.matrix().clone(),
                })
                .collect(),
        })
    }

    pub fn from_channel(r: &ChannelMatrix) -> Self {
        let d_in = r.dim_in() * r.dim_in();
        let d_out = r.dim_out() * r.dim_out();
        let mat = (0..d_out)
            .map(|a| (0..d_in).map(|b| r.entry(a, b)).collect())
            .collect();
        ChannelFile::Superoperator(SuperoperatorFile {
            dim_in: r.dim_in(),
            dim_out: r.dim_out(),
            mat,
        })
    }

    /// The mixed isometry form, when that variant is present and valid.
    pub fn as_form(&self) -> Result<Option<MixedIsometryForm>> {
        match self {
            ChannelFile::Superoperator(_) => Ok(None),
            ChannelFile::MixedIsometry(f) => {
                let components = f
                    .components
                    .iter()
                    .map(|c| {
                        Ok((c.weight, IsometryComponent::new(c.kind, c.v.clone())?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(MixedIsometryForm::new(f.dim_in, f.dim_out, components)?))
            }
        }
    }

    /// Coordinate matrix of either variant (forms are converted first).
    pub fn to_channel(&self) -> Result<ChannelMatrix> {
        match self {
            ChannelFile::Superoperator(f) => {
                let expected_rows = f.dim_out * f.dim_out;
                let expected_cols = f.dim_in * f.dim_in;
                if f.mat.len() != expected_rows {
                    return Err(Error::DimMismatch {
                        expected: expected_rows,
                        got: f.mat.len(),
                    });
                }
                let mut flat = Vec::with_capacity(expected_rows * expected_cols);
                for row in &f.mat {
                    if row.len() != expected_cols {
                        return Err(Error::DimMismatch {
                            expected: expected_cols,
                            got: row.len(),
                        });
                    }
                    flat.extend_from_slice(row);
                }
                ChannelMatrix::from_rows(f.dim_in, f.dim_out, flat)
            }
            ChannelFile::MixedIsometry(_) => {
                let form = self.as_form()?.expect("variant checked");
                Ok(form.to_channel())
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, to_canonical_json(self)?)?;
        Ok(())
    }
}

/// Density matrix on disk: Hermitian to 1e-9, trace 1 to 1e-9, positive
/// semidefinite to 1e-9, all validated on ingest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub entries: ComplexMat,
}

impl StateFile {
    pub fn from_state(rho: &HermOp) -> Self {
        Self {
            dim: rho.dim(),
            entries: rho.mat().clone(),
        }
    }

    pub fn to_state(&self) -> Result<HermOp> {
        if self.entries.rows() != self.dim || self.entries.cols() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: self.entries.rows(),
            });
        }
        let defect = self.entries.hermitian_defect();
        if defect > 1e-9 {
            return Err(Error::InvalidState {
                detail: format!("state is not Hermitian (defect {defect:.3e})"),
            });
        }
        let rho = HermOp::hermitian_part(&self.entries);
        let trace = rho.trace();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState {
                detail: format!("state trace is {trace}, expected 1"),
            });
        }
        let eig = herm_eig(&rho)?;
        let min = eig.values().last().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::InvalidState {
                detail: format!("state has negative eigenvalue {min:.3e}"),
            });
        }
        Ok(rho)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, to_canonical_json(self)?)?;
        Ok(())
    }
}

/// Canonical serialization: pretty JSON with a trailing newline. Struct field
/// order is fixed, floats print in shortest round-trip form, so re-serializing
/// a parsed file reproduces it byte for byte.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
