//! Density-matrix reconstruction from measured expectation values.
//!
//! The estimate is written as σ = I/d + Σⱼ xⱼ Bⱼ over an orthonormal basis
//! {Bⱼ} of traceless Hermitian matrices, so tr σ = 1 holds exactly. The real
//! coefficients xⱼ solve the linear least-squares problem
//! min Σ_α (tr(σA_α) − m_α)². The solution is then projected onto the
//! PSD cone by clipping negative eigenvalues and renormalizing the trace.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, expectation, DensityMatrix, Operator, C64};
use crate::protective::{run_protective, ProtectiveRecord, ProtectiveSetup};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObservable {
    pub label: String,
    pub operator: Operator,
}

/// Labeled Hermitian observables on a d-dimensional system.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    dim: usize,
    observables: Vec<LabeledObservable>,
    informationally_complete: bool,
}

impl ObservableSet {
    pub fn new(dim: usize, observables: Vec<LabeledObservable>) -> Result<Self> {
        let mut seen = HashSet::new();
        for o in &observables {
            o.operator.require_hermitian()?;
            if o.operator.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: o.operator.dim(),
                });
            }
            if !seen.insert(o.label.as_str()) {
                return Err(Error::DuplicateLabel(o.label.clone()));
            }
        }
        let mut set = Self {
            dim,
            observables,
            informationally_complete: false,
        };
        set.informationally_complete = set.span_rank() == dim * dim;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observables(&self) -> &[LabeledObservable] {
        &self.observables
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.informationally_complete
    }

    pub fn get(&self, label: &str) -> Option<&Operator> {
        self.observables
            .iter()
            .find(|o| o.label == label)
            .map(|o| &o.operator)
    }

    /// Dimension of the real span of the observables together with I.
    pub fn span_rank(&self) -> usize {
        let d = self.dim;
        let mut rows: Vec<&Operator> = self.observables.iter().map(|o| &o.operator).collect();
        let identity = Operator::identity(d);
        rows.push(&identity);
        // real coordinates (Re, Im) of every entry
        let coords = DMatrix::from_fn(rows.len(), 2 * d * d, |r, k| {
            let z = rows[r].matrix()[((k / 2) / d, (k / 2) % d)];
            if k % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        numeric_rank(&coords)
    }
}

fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let tol = 1e-10 * max.max(1.0);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Traceless generalized Gell-Mann matrices with tr(BᵢBⱼ) = 2δᵢⱼ, in the
/// order symmetric, antisymmetric (both by (j, k) with j < k), diagonal.
fn gell_mann(d: usize) -> Vec<(String, DMatrix<C64>)> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = DMatrix::zeros(d, d);
            m[(j, k)] = c(1.0, 0.0);
            m[(k, j)] = c(1.0, 0.0);
            out.push((format!("S_{j}_{k}"), m));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = DMatrix::zeros(d, d);
            m[(j, k)] = c(0.0, -1.0);
            m[(k, j)] = c(0.0, 1.0);
            out.push((format!("A_{j}_{k}"), m));
        }
    }
    for l in 1..d {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = DMatrix::zeros(d, d);
        for k in 0..l {
            m[(k, k)] = c(scale, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * scale, 0.0);
        out.push((format!("D_{l}"), m));
    }
    out
}

/// Orthonormal (tr(BᵢBⱼ) = δᵢⱼ) traceless Hermitian basis.
fn traceless_basis(d: usize) -> Vec<DMatrix<C64>> {
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    gell_mann(d).into_iter().map(|(_, m)| m * s).collect()
}

/// Informationally complete basis: n-qubit Pauli strings for d = 2ⁿ,
/// generalized Gell-Mann matrices plus identity otherwise.
pub fn hermitian_basis(d: usize) -> Result<ObservableSet> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "basis needs d >= 2, got {d}"
        )));
    }
    let observables = if d.is_power_of_two() {
        let n = d.trailing_zeros() as usize;
        let mut labels = vec![String::new()];
        for _ in 0..n {
            labels = labels
                .iter()
                .flat_map(|p| ['I', 'X', 'Y', 'Z'].map(|ch| format!("{p}{ch}")))
                .collect();
        }
        labels
            .into_iter()
            .map(|label| {
                let operator = Operator::pauli_string(&label)?;
                Ok(LabeledObservable { label, operator })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        std::iter::once(("I".to_string(), DMatrix::identity(d, d)))
            .chain(gell_mann(d))
            .map(|(label, m)| {
                Ok(LabeledObservable {
                    label,
                    operator: Operator::hermitian(m)?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    ObservableSet::new(d, observables)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomogramSource {
    Exact,
    ProtectiveSimulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramEntry {
    pub label: String,
    pub value: f64,
}

/// Measured values tr(ρA_α) by observable label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTomogram")]
pub struct Tomogram {
    dim: usize,
    entries: Vec<TomogramEntry>,
    source: TomogramSource,
}

#[derive(Deserialize)]
struct RawTomogram {
    dim: usize,
    entries: Vec<TomogramEntry>,
    source: TomogramSource,
}

impl TryFrom<RawTomogram> for Tomogram {
    type Error = Error;

    fn try_from(raw: RawTomogram) -> Result<Self> {
        Tomogram::new(raw.dim, raw.entries, raw.source)
    }
}

impl Tomogram {
    pub fn new(dim: usize, entries: Vec<TomogramEntry>, source: TomogramSource) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "tomogram dimension must be positive".into(),
            ));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.label.as_str()) {
                return Err(Error::DuplicateLabel(e.label.clone()));
            }
            if !e.value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "value for `{}` is not finite",
                    e.label
                )));
            }
        }
        Ok(Self {
            dim,
            entries,
            source,
        })
    }

    /// Exact expectation values of `rho` for every observable in `set`.
    pub fn exact(rho: &DensityMatrix, set: &ObservableSet) -> Result<Self> {
        let entries = set
            .observables()
            .iter()
            .map(|o| {
                Ok(TomogramEntry {
                    label: o.label.clone(),
                    value: expectation(rho, &o.operator)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(set.dim(), entries, TomogramSource::Exact)
    }

    /// Adds seeded Gaussian noise of standard deviation `sigma` to every value.
    pub fn with_gaussian_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidParameter(format!("noise sigma {sigma}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = self
            .entries
            .iter()
            .map(|e| TomogramEntry {
                label: e.label.clone(),
                value: e.value + normal.sample(&mut rng),
            })
            .collect();
        Self::new(self.dim, entries, self.source)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[TomogramEntry] {
        &self.entries
    }

    pub fn source(&self) -> TomogramSource {
        self.source
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    /// Pre-projection residual above which the fit is flagged as inconsistent.
    pub residual_bound: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            residual_bound: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// Σ_α (tr(σA_α) − m_α)² of the least-squares solution before projection.
    pub residual: f64,
    /// Same sum for the projected density matrix.
    pub projected_residual: f64,
    /// Total magnitude of the eigenvalues clipped to zero.
    pub clipped_mass: f64,
    pub residual_exceeded: bool,
}

pub fn reconstruct(tomogram: &Tomogram, set: &ObservableSet) -> Result<Reconstruction> {
    reconstruct_with(tomogram, set, ReconstructionOptions::default())
}

pub fn reconstruct_with(
    tomogram: &Tomogram,
    set: &ObservableSet,
    options: ReconstructionOptions,
) -> Result<Reconstruction> {
    let d = set.dim();
    if tomogram.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: tomogram.dim(),
        });
    }
    if !set.is_informationally_complete() {
        return Err(Error::RankDeficient {
            rank: set.span_rank(),
            needed: d * d,
        });
    }
    let values: HashMap<&str, f64> = tomogram
        .entries()
        .iter()
        .map(|e| (e.label.as_str(), e.value))
        .collect();
    for e in tomogram.entries() {
        if set.get(&e.label).is_none() {
            return Err(Error::UnknownLabel(e.label.clone()));
        }
    }
    let measured: Vec<(&Operator, f64)> = set
        .observables()
        .iter()
        .map(|o| {
            values
                .get(o.label.as_str())
                .map(|&v| (&o.operator, v))
                .ok_or_else(|| Error::UnknownLabel(o.label.clone()))
        })
        .collect::<Result<_>>()?;

    let basis = traceless_basis(d);
    let inv_d = 1.0 / d as f64;
    let design = DMatrix::from_fn(measured.len(), basis.len(), |r, j| {
        (measured[r].0.matrix() * &basis[j]).trace().re
    });
    let rank = numeric_rank(&design);
    if rank < basis.len() {
        return Err(Error::RankDeficient {
            rank: rank + 1,
            needed: d * d,
        });
    }
    let rhs = DVector::from_iterator(
        measured.len(),
        measured.iter().map(|(a, m)| m - a.trace().re * inv_d),
    );
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("least-squares solve failed: {e}")))?;

    let mut sigma = DMatrix::<C64>::identity(d, d) * c(inv_d, 0.0);
    for (x, b) in coeffs.iter().zip(&basis) {
        sigma += b * c(*x, 0.0);
    }
    let sigma = (&sigma + sigma.adjoint()) * c(0.5, 0.0);
    let residual = fit_residual(&sigma, &measured);

    let eig = SymmetricEigen::new(sigma);
    let clipped_mass = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l < 0.0)
        .fold(0.0, |acc, l| acc - l);
    let kept: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= c(kept[j] / total, 0.0);
    }
    let projected = scaled * v.adjoint();
    let projected_residual = fit_residual(&projected, &measured);
    let rho = DensityMatrix::from_hermitian_part(projected)?;

    Ok(Reconstruction {
        rho,
        residual,
        projected_residual,
        clipped_mass,
        residual_exceeded: residual > options.residual_bound,
    })
}

fn fit_residual(sigma: &DMatrix<C64>, measured: &[(&Operator, f64)]) -> f64 {
    measured
        .iter()
        .map(|(a, m)| ((sigma * a.matrix()).trace().re - m).powi(2))
        .sum()
}

/// Result of an end-to-end protective tomography run.
#[derive(Debug, Clone)]
pub struct ProtectiveTomography {
    pub tomogram: Tomogram,
    pub reconstruction: Reconstruction,
    pub records: Vec<ProtectiveRecord>,
}

/// Measures every observable of `set` protectively, one setup per
/// observable from `factory`, and reconstructs from the estimates.
pub fn tomograph_via_protective<F>(factory: F, set: &ObservableSet) -> Result<ProtectiveTomography>
where
    F: Fn(&LabeledObservable) -> Result<ProtectiveSetup>,
{
    let mut entries = Vec::with_capacity(set.observables().len());
    let mut records = Vec::with_capacity(set.observables().len());
    for obs in set.observables() {
        let setup = factory(obs)?;
        let outcome = run_protective(&setup)?;
        records.push(ProtectiveRecord::new(obs.label.clone(), &setup, &outcome));
        entries.push(TomogramEntry {
            label: obs.label.clone(),
            value: outcome.estimate,
        });
    }
    let tomogram = Tomogram::new(set.dim(), entries, TomogramSource::ProtectiveSimulated)?;
    let reconstruction = reconstruct(&tomogram, set)?;
    Ok(ProtectiveTomography {
        tomogram,
        reconstruction,
        records,
    })
}
