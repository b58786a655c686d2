//! Dense complex linear algebra and the quantum-state primitives used by the
//! rest of the crate.
//!
//! Conventions: ħ = 1, the first tensor factor is the major index, and all
//! matrices are stored densely.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance on entries for the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Normalization tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DIM: usize = 1024;

static MAX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIM);

/// Largest Hilbert-space dimension accepted by constructors.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

pub fn set_max_dim(limit: usize) {
    MAX_DIM.store(limit.max(1), Ordering::Relaxed);
}

fn check_dim(dim: usize) -> Result<()> {
    let limit = max_dim();
    if dim == 0 || dim > limit {
        return Err(Error::DimensionOutOfRange(dim, limit));
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Square complex matrix with a cached Hermiticity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        check_dim(rows)?;
        let hermitian = hermitian_deviation(&entries) <= HERMITIAN_TOL;
        Ok(Self { entries, hermitian })
    }

    /// Builds an operator that must be Hermitian, failing otherwise.
    pub fn hermitian(entries: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(entries)?;
        op.require_hermitian()?;
        Ok(op)
    }

    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let flat: Vec<C64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| c(x, 0.0)))
            .collect();
        Self::from_row_slice(dim, &flat)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    c(values[i], 0.0)
                } else {
                    C64::default()
                }
            }),
            hermitian: true,
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        Self::from_row_slice(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
            .expect("2x2")
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// Pauli operator for one of `I`, `X`, `Y`, `Z`.
    pub fn pauli(symbol: char) -> Option<Self> {
        match symbol.to_ascii_uppercase() {
            'I' => Some(Self::identity(2)),
            'X' => Some(Self::pauli_x()),
            'Y' => Some(Self::pauli_y()),
            'Z' => Some(Self::pauli_z()),
            _ => None,
        }
    }

    /// Tensor product of single-qubit Paulis named by `label`, e.g. `"XZ"`.
    pub fn pauli_string(label: &str) -> Result<Self> {
        let mut chars = label.chars();
        let first = chars
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty Pauli label".into()))?;
        let unknown = || Error::InvalidParameter(format!("invalid Pauli label `{label}`"));
        let mut op = Self::pauli(first).ok_or_else(unknown)?;
        for ch in chars {
            op = op.tensor(&Self::pauli(ch).ok_or_else(unknown)?);
        }
        Ok(op)
    }

    /// Rank-one projector |ψ⟩⟨ψ|.
    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self {
            entries: v * v.adjoint(),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: hermitian_deviation(&self.entries),
            })
        }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.entries.adjoint() * &self.entries;
        max_abs_diff(&prod, &DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn require_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            entries: kron(&self.entries, &other.entries),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: &self.entries * c(factor, 0.0),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other.dim())?;
        Self::new(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other.dim())?;
        Self::new(&self.entries - &other.entries)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other.dim())?;
        Self::new(&self.entries * &other.entries)
    }

    /// Linear combination Σ wₖ Aₖ of equal-dimension operators.
    pub fn linear_combination(terms: &[(f64, &Operator)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let mut acc = DMatrix::zeros(first.dim(), first.dim());
        for (w, op) in terms {
            first.same_dim(op.dim())?;
            acc += &op.entries * c(*w, 0.0);
        }
        Self::new(acc)
    }

    pub fn apply(&self, state: &PureState) -> Result<DVector<C64>> {
        self.same_dim(state.dim())?;
        Ok(&self.entries * state.amplitudes())
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Spectral norm. Hermitian operators use their eigenvalues, others the
    /// square root of the largest eigenvalue of A†A.
    pub fn spectral_norm(&self) -> f64 {
        if self.hermitian {
            let values = SymmetricEigen::new(self.entries.clone()).eigenvalues;
            values.iter().fold(0.0, |m, v| m.max(v.abs()))
        } else {
            let gram = self.entries.adjoint() * &self.entries;
            let values = SymmetricEigen::new(gram).eigenvalues;
            values.iter().fold(0.0_f64, |m, v| m.max(*v)).sqrt()
        }
    }

    /// exp(−i·t·A) for Hermitian A, via eigendecomposition.
    pub fn exp_i(&self, t: f64) -> Result<Self> {
        self.require_hermitian()?;
        Ok(Self {
            entries: exp_i_hermitian(&self.entries, t),
            hermitian: false,
        })
    }

    /// U A U†.
    pub fn conjugate_by(&self, u: &Operator) -> Result<Self> {
        self.same_dim(u.dim())?;
        Self::new(&u.entries * &self.entries * u.entries.adjoint())
    }

    fn same_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

/// exp(−i·t·H) for a matrix already known to be Hermitian.
pub(crate) fn exp_i_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| C64::from_polar(1.0, -l * t)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes / c(norm, 0.0),
        })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn zero() -> Self {
        Self::basis(2, 0).expect("qubit")
    }

    pub fn one() -> Self {
        Self::basis(2, 1).expect("qubit")
    }

    pub fn plus_x() -> Self {
        Self {
            amplitudes: DVector::from_column_slice(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]),
        }
    }

    pub fn minus_x() -> Self {
        Self {
            amplitudes: DVector::from_column_slice(&[
                c(FRAC_1_SQRT_2, 0.0),
                c(-FRAC_1_SQRT_2, 0.0),
            ]),
        }
    }

    pub fn plus_y() -> Self {
        Self {
            amplitudes: DVector::from_column_slice(&[c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]),
        }
    }

    pub fn minus_y() -> Self {
        Self {
            amplitudes: DVector::from_column_slice(&[
                c(FRAC_1_SQRT_2, 0.0),
                c(0.0, -FRAC_1_SQRT_2),
            ]),
        }
    }

    /// (|00⟩ + |11⟩)/√2.
    pub fn bell() -> Self {
        let z = C64::default();
        let h = c(FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: DVector::from_column_slice(&[h, z, z, h]),
        }
    }

    /// Qubit state with the given Bloch direction, cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
    pub fn from_bloch(direction: [f64; 3]) -> Result<Self> {
        let [x, y, z] = direction;
        let r = (x * x + y * y + z * z).sqrt();
        if !(r.is_finite() && (r - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "pure-state Bloch vector must have unit length, got {r}"
            )));
        }
        let theta = (z / r).clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        Ok(Self {
            amplitudes: DVector::from_column_slice(&[
                c((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]),
        })
    }

    /// Σᵢ cᵢ |ψᵢ⟩|φᵢ⟩ from coefficients and two lists of factor states.
    pub fn schmidt(
        coefficients: &[C64],
        first: &[PureState],
        second: &[PureState],
    ) -> Result<Self> {
        if coefficients.len() != first.len()
            || coefficients.len() != second.len()
            || coefficients.is_empty()
        {
            return Err(Error::InvalidParameter(
                "Schmidt form needs equally many coefficients and factor states".into(),
            ));
        }
        let dim = first[0].dim() * second[0].dim();
        let mut acc = DVector::zeros(dim);
        for ((ci, a), b) in coefficients.iter().zip(first).zip(second) {
            let term = a.tensor(b);
            if term.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: term.dim(),
                });
            }
            acc += term.amplitudes * *ci;
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let a = &self.amplitudes;
        let b = &other.amplitudes;
        let n = b.len();
        Self {
            amplitudes: DVector::from_fn(a.len() * n, |i, _| a[i / n] * b[i % n]),
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        Self {
            amplitudes: &self.amplitudes * C64::from_polar(1.0, phase),
        }
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            entries: Operator::projector(self).entries,
        }
    }

    /// Applies a unitary, renormalizing away rounding drift.
    pub fn evolve(&self, u: &Operator) -> Result<Self> {
        let v = u.apply(self)?;
        Self::normalized(v)
    }
}

/// Hermitian, positive-semidefinite, trace-one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

/// Eigenvalue floor accepted by [`DensityMatrix::new`].
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        check_dim(rows)?;
        let deviation = hermitian_deviation(&entries);
        if deviation > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {deviation:.3e})"
            )));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {trace}")));
        }
        let min = SymmetricEigen::new(entries.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { entries })
    }

    /// Symmetrizes `entries` before validating; for results of arithmetic
    /// whose Hermiticity only holds up to rounding.
    pub(crate) fn from_hermitian_part(entries: DMatrix<C64>) -> Result<Self> {
        let sym = (&entries + entries.adjoint()) * c(0.5, 0.0);
        Self::new(sym)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            entries: DMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(Operator::diagonal(values).entries)
    }

    /// ½(I + r·σ) for a Bloch vector with |r| ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = &Operator::identity(2).entries
            + &Operator::pauli_x().entries * c(r[0], 0.0)
            + &Operator::pauli_y().entries * c(r[1], 0.0)
            + &Operator::pauli_z().entries * c(r[2], 0.0);
        Self::new(m * c(0.5, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn as_operator(&self) -> Operator {
        Operator {
            entries: self.entries.clone(),
            hermitian: true,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn purity(&self) -> f64 {
        // tr ρ² = Σ |ρᵢⱼ|² for Hermitian ρ
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        let sq = &self.entries * &self.entries;
        max_abs_diff(&sq, &self.entries) <= tol
    }

    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let m = &self.entries;
        Ok([
            2.0 * m[(0, 1)].re,
            -2.0 * m[(0, 1)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ])
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            entries: kron(&self.entries, &other.entries),
        }
    }

    /// U ρ U† for unitary U.
    pub fn evolve(&self, u: &Operator) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        Self::from_hermitian_part(&u.entries * &self.entries * u.entries.adjoint())
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.entries - &other.entries;
        let diff = (&diff + diff.adjoint()) * c(0.5, 0.0);
        Ok(0.5
            * SymmetricEigen::new(diff)
                .eigenvalues
                .iter()
                .map(|v| v.abs())
                .sum::<f64>())
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, state: &PureState) -> Result<f64> {
        if self.dim() != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let v = state.amplitudes();
        Ok(v.dotc(&(&self.entries * v)).re)
    }
}

/// Kronecker product of two operators, states or density matrices.
pub trait Tensor: Sized {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl Tensor for Operator {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for PureState {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for DensityMatrix {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

/// a ⊗ b with the first factor as the major index.
pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor_with(b)
}

/// Which factor of a bipartite space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

pub fn partial_trace(
    rho: &DensityMatrix,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<DensityMatrix> {
    let (d1, d2) = dims;
    if d1 == 0 || d2 == 0 || d1 * d2 != rho.dim() {
        return Err(Error::Factorization {
            dim: rho.dim(),
            d1,
            d2,
        });
    }
    let m = rho.matrix();
    let reduced = match keep {
        Subsystem::First => DMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Subsystem::Second => DMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()
        }),
    };
    DensityMatrix::from_hermitian_part(reduced)
}

/// tr(ρA) for Hermitian A.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<f64> {
    a.require_hermitian()?;
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    let tr: C64 = (rho.matrix() * a.matrix()).trace();
    if tr.im.abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "tr(ρA) has imaginary part {:.3e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// ⟨ψ|A|ψ⟩ for Hermitian A.
pub fn pure_expectation(state: &PureState, a: &Operator) -> Result<f64> {
    a.require_hermitian()?;
    let av = a.apply(state)?;
    Ok(state.amplitudes().dotc(&av).re)
}

/// Spectral decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> PureState {
        PureState::normalized(self.vectors.column(k).into_owned())
            .expect("eigenvector has unit norm")
    }
}

pub fn eig_hermitian(a: &Operator) -> Result<HermitianEigen> {
    a.require_hermitian()?;
    let eig = SymmetricEigen::new(a.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |r, col| eig.eigenvectors[(r, order[col])]);
    Ok(HermitianEigen { values, vectors })
}

/// Σ_α w_α |φ_α⟩⟨φ_α|.
pub fn mix(components: &[(PureState, f64)]) -> Result<DensityMatrix> {
    let (first, _) = components
        .first()
        .ok_or_else(|| Error::InvalidParameter("mixture has no components".into()))?;
    let dim = first.dim();
    let mut total = 0.0;
    let mut acc = DMatrix::zeros(dim, dim);
    for (state, w) in components {
        if *w < 0.0 || !w.is_finite() {
            return Err(Error::NegativeWeight(*w));
        }
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.dim(),
            });
        }
        total += w;
        let v = state.amplitudes();
        acc += (v * v.adjoint()) * c(*w, 0.0);
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum(total));
    }
    DensityMatrix::from_hermitian_part(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tensor_identities() {
        let i4 = tensor(&Operator::identity(2), &Operator::identity(2));
        assert_eq!(i4, Operator::identity(4));
        let s = tensor(&PureState::zero(), &PureState::one());
        assert_eq!(s, PureState::basis(4, 1).unwrap());
    }

    #[test]
    fn zz_on_01_has_eigenvalue_minus_one() {
        // σz⊗σz = diag(1, -1, -1, 1) in the |00>,|01>,|10>,|11> order
        let zz = tensor(&Operator::pauli_z(), &Operator::pauli_z());
        let v = zz.apply(&PureState::basis(4, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(v[1].re, -1.0);
        assert!(v.iter().enumerate().all(|(i, z)| i == 1 || z.norm() == 0.0));
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = PureState::bell().density_matrix();
        let r1 = partial_trace(&rho, (2, 2), Subsystem::First).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(r1.trace_distance(&half).unwrap() < 1e-15);
    }

    #[test]
    fn product_state_keeps_second_factor() {
        let a = DensityMatrix::diagonal(&[0.25, 0.25, 0.5]).unwrap();
        let b = DensityMatrix::from_bloch([0.3, -0.2, 0.4]).unwrap();
        let r = partial_trace(&a.tensor(&b), (3, 2), Subsystem::Second).unwrap();
        assert!(r.trace_distance(&b).unwrap() < 1e-14);
    }

    #[test]
    fn schmidt_state_reduction_by_index_summation() {
        let cs = [c(0.7_f64.sqrt(), 0.0), c(0.3_f64.sqrt(), 0.0)];
        let z = [PureState::zero(), PureState::one()];
        let chi = PureState::schmidt(&cs, &z, &z).unwrap();
        let rho = chi.density_matrix();
        let reduced = partial_trace(&rho, (2, 2), Subsystem::First).unwrap();
        // independent summation: ρ₁[i][j] = Σ_k χ[i,k] conj(χ[j,k])
        let amp = chi.amplitudes();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::default();
                for k in 0..2 {
                    acc += amp[2 * i + k] * amp[2 * j + k].conj();
                }
                assert_abs_diff_eq!(reduced.matrix()[(i, j)].re, acc.re, epsilon = 1e-15);
                assert_abs_diff_eq!(reduced.matrix()[(i, j)].im, acc.im, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(reduced.matrix()[(0, 0)].re, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(reduced.matrix()[(1, 1)].re, 0.3, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_factorization() {
        let rho = DensityMatrix::maximally_mixed(6).unwrap();
        assert!(matches!(
            partial_trace(&rho, (4, 2), Subsystem::First),
            Err(Error::Factorization { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(expectation(&half, &Operator::pauli_z()).unwrap(), 0.0);
        let up = PureState::zero().density_matrix();
        assert_abs_diff_eq!(expectation(&up, &Operator::pauli_z()).unwrap(), 1.0);
        // ½(I + 0.6σx + 0.8σz) = [[0.9, 0.3], [0.3, 0.1]]; tr(ρσx) = 0.3 + 0.3
        let rho = DensityMatrix::from_bloch([0.6, 0.0, 0.8]).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].re, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expectation(&rho, &Operator::pauli_x()).unwrap(),
            0.6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let a = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(
            expectation(&rho, &a),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            expectation(&rho, &Operator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_examples() {
        let e = eig_hermitian(&Operator::pauli_z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(
            e.vector(0).fidelity(&PureState::one()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let e = eig_hermitian(&Operator::pauli_x()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            e.vector(0).fidelity(&PureState::minus_x()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            e.vector(1).fidelity(&PureState::plus_x()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // λ² = 1 + 0.25 from det(σz + 0.5σx − λI) = 0
        let h = Operator::pauli_z()
            .add(&Operator::pauli_x().scale(0.5))
            .unwrap();
        let e = eig_hermitian(&h).unwrap();
        assert_abs_diff_eq!(e.values[0], -(1.25_f64.sqrt()), epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.25_f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = Operator::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(eig_hermitian(&a).is_err());
    }

    #[test]
    fn mixtures_of_opposite_spins() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        let z = mix(&[(PureState::zero(), 0.5), (PureState::one(), 0.5)]).unwrap();
        let x = mix(&[(PureState::plus_x(), 0.5), (PureState::minus_x(), 0.5)]).unwrap();
        assert!(z.trace_distance(&half).unwrap() < 1e-15);
        assert!(x.trace_distance(&half).unwrap() < 1e-15);
        let psi = PureState::from_bloch([0.0, 0.6, 0.8]).unwrap();
        let pure = mix(&[(psi.clone(), 1.0)]).unwrap();
        assert_eq!(pure, psi.density_matrix());
        assert!(pure.is_pure(1e-10));
        assert!(!x.is_pure(1e-10));
    }

    #[test]
    fn mix_rejects_bad_weights() {
        assert!(matches!(
            mix(&[(PureState::zero(), -0.1), (PureState::one(), 1.1)]),
            Err(Error::NegativeWeight(_))
        ));
        assert!(matches!(
            mix(&[(PureState::zero(), 0.5), (PureState::one(), 0.4)]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::from_bloch([0.0, 0.0, 1.0]).is_ok());
        assert!(DensityMatrix::from_bloch([0.0, 0.0, 1.01]).is_err());
    }

    #[test]
    fn dimension_limit_applies() {
        assert!(PureState::basis(0, 0).is_err());
        assert!(matches!(
            Operator::new(DMatrix::zeros(max_dim() + 1, max_dim() + 1)),
            Err(Error::DimensionOutOfRange(..))
        ));
    }

    #[test]
    fn hermitian_flag_tracks_entries() {
        assert!(Operator::pauli_y().is_hermitian());
        let a = Operator::from_row_slice(2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)])
            .unwrap();
        assert!(!a.is_hermitian());
    }
}
