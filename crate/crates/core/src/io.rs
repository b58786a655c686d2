//! JSON forms of matrices, states and ensembles.
//!
//! A matrix is `{"dim": d, "entries": [[re, im], ...]}` with d² pairs in
//! row-major order. A qubit or general state is `{"bloch": [x, y, z]}` or
//! `{"amplitudes": [[re, im], ...]}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{c, max_dim, DensityMatrix, Operator, PureState, C64};
use crate::mixtures::{Component, FiniteEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        Self { dim, entries }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.dim == 0 || self.dim > max_dim() {
            return Err(Error::DimensionOutOfRange(self.dim, max_dim()));
        }
        let expected = self.dim * self.dim;
        if self.entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.entries.len(),
            });
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(DMatrix::from_row_iterator(
            self.dim,
            self.dim,
            self.entries.iter().map(|[re, im]| c(*re, *im)),
        ))
    }
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        raw.to_matrix()
            .and_then(Operator::new)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        raw.to_matrix()
            .and_then(DensityMatrix::new)
            .map_err(serde::de::Error::custom)
    }
}

pub fn operator_from_json(bytes: &[u8]) -> Result<Operator> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn density_matrix_from_json(bytes: &[u8]) -> Result<DensityMatrix> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn matrix_to_json(m: &DMatrix<C64>) -> Result<String> {
    Ok(serde_json::to_string(&MatrixJson::from_matrix(m))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Bloch([f64; 3]),
    /// Normalized on load.
    Amplitudes(Vec<[f64; 2]>),
}

impl StateSpec {
    pub fn to_state(&self) -> Result<PureState> {
        match self {
            StateSpec::Bloch(r) => PureState::from_bloch(*r),
            StateSpec::Amplitudes(amps) => {
                if amps.is_empty() || amps.len() > max_dim() {
                    return Err(Error::DimensionOutOfRange(amps.len(), max_dim()));
                }
                PureState::normalized(DVector::from_iterator(
                    amps.len(),
                    amps.iter().map(|[re, im]| c(*re, *im)),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub state: StateSpec,
    pub count: u64,
}

pub fn ensemble_from_specs(specs: &[ComponentSpec]) -> Result<FiniteEnsemble> {
    let components = specs
        .iter()
        .map(|s| {
            Ok(Component {
                state: s.state.to_state()?,
                count: s.count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if components
        .iter()
        .try_fold(0_u64, |acc, c| acc.checked_add(c.count))
        .is_none()
    {
        return Err(Error::InvalidParameter("ensemble size overflows".into()));
    }
    FiniteEnsemble::new(components)
}

/// `[{"state": ..., "count": N_α}, ...]`.
pub fn ensemble_from_json(bytes: &[u8]) -> Result<FiniteEnsemble> {
    let specs: Vec<ComponentSpec> = serde_json::from_slice(bytes)?;
    ensemble_from_specs(&specs)
}
