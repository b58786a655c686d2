//! Von Neumann entropy S = −tr ρ ln ρ (nats) and its behaviour under
//! unitary evolution and subsystem entanglement.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_interval, TimeDependentHamiltonian};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, DensityMatrix, Operator, PureState, Subsystem};

/// Eigenvalues below this are treated as invalid input.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    #[serde(rename = "S_nats")]
    pub value: f64,
    pub spectrum: Vec<f64>,
    pub purity: f64,
}

impl EntropyReport {
    pub fn bits(&self) -> f64 {
        self.value / LN_2
    }
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<EntropyReport> {
    let spectrum = rho.spectrum();
    if let Some(&min) = spectrum.first() {
        if min < NEGATIVE_EIGENVALUE_LIMIT {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {min:.3e}")));
        }
    }
    let value = spectrum
        .iter()
        .map(|&l| l.max(0.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0);
    Ok(EntropyReport {
        value,
        spectrum,
        purity: rho.purity(),
    })
}

/// (S(ρ), S(UρU†)).
pub fn entropy_under_unitary(rho: &DensityMatrix, u: &Operator) -> Result<(f64, f64)> {
    u.require_unitary(1e-10)?;
    let before = von_neumann_entropy(rho)?.value;
    let after = von_neumann_entropy(&rho.evolve(u)?)?.value;
    Ok((before, after))
}

/// Subsystem-1 entropy of a product state evolving under `h_total` on
/// d₁⊗d₂, at each of the ascending `sample_times` inside the schedule window.
pub fn entanglement_growth(
    h_total: &TimeDependentHamiltonian,
    psi0: &PureState,
    dims: (usize, usize),
    sample_times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let (d1, d2) = dims;
    if d1 * d2 != h_total.dim() {
        return Err(Error::Factorization {
            dim: h_total.dim(),
            d1,
            d2,
        });
    }
    if psi0.dim() != h_total.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_total.dim(),
            found: psi0.dim(),
        });
    }
    let initial = partial_trace(&psi0.density_matrix(), dims, Subsystem::First)?;
    if (initial.purity() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(
            "initial state is not a product state".into(),
        ));
    }
    let total = h_total.schedule().total_time();
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| !(0.0..=total).contains(&t))
    {
        return Err(Error::InvalidParameter(format!(
            "sample times must be ascending within [0, {total}]"
        )));
    }
    let dt = h_total.schedule().dt();
    let mut t_prev = 0.0;
    let mut psi = psi0.clone();
    let mut out = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        if t > t_prev {
            let steps = ((t - t_prev) / dt).ceil().max(1.0) as usize;
            psi = evolve_interval(h_total, &psi, t_prev, t, steps)?;
            t_prev = t;
        }
        let reduced = partial_trace(&psi.density_matrix(), dims, Subsystem::First)?;
        out.push((t, von_neumann_entropy(&reduced)?.value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::mix;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn pure_state_has_zero_entropy() {
        let psi = PureState::from_bloch([0.6, 0.0, 0.8]).unwrap();
        let r = von_neumann_entropy(&psi.density_matrix()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.purity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_qubit_is_ln2() {
        let r = von_neumann_entropy(&DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bits(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.purity, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_state_closed_form() {
        let r = von_neumann_entropy(&DensityMatrix::diagonal(&[0.7, 0.3]).unwrap()).unwrap();
        let oracle = -0.7 * 0.7_f64.ln() - 0.3 * 0.3_f64.ln();
        assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-14);
    }

    #[test]
    fn unitary_examples() {
        let rho = mix(&[(PureState::zero(), 0.25), (PureState::plus_x(), 0.75)]).unwrap();
        let (a, b) = entropy_under_unitary(&rho, &Operator::identity(2)).unwrap();
        assert_eq!(a, b);
        let u = Operator::pauli_y()
            .scale(0.3)
            .add(&Operator::pauli_x())
            .unwrap()
            .exp_i(1.7)
            .unwrap();
        let (a, b) =
            entropy_under_unitary(&DensityMatrix::maximally_mixed(2).unwrap(), &u).unwrap();
        assert_abs_diff_eq!(a, LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(b, LN_2, epsilon = 1e-12);
        assert!(entropy_under_unitary(&rho, &Operator::pauli_x().scale(2.0)).is_err());
    }

    #[test]
    fn growth_under_xx_coupling() {
        let xx = Operator::pauli_x().tensor(&Operator::pauli_x());
        let h = TimeDependentHamiltonian::constant(xx, PI / 2.0, 200).unwrap();
        let psi0 = PureState::basis(4, 0).unwrap();
        let rows = entanglement_growth(&h, &psi0, (2, 2), &[0.0, PI / 4.0, PI / 2.0]).unwrap();
        assert_abs_diff_eq!(rows[0].1, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rows[1].1, LN_2, epsilon = 1e-6);
        assert_abs_diff_eq!(rows[2].1, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn no_interaction_no_entanglement() {
        let z1 = Operator::pauli_z().tensor(&Operator::identity(2));
        let z2 = Operator::identity(2).tensor(&Operator::pauli_z());
        let h = TimeDependentHamiltonian::constant(z1.add(&z2).unwrap(), 3.0, 300).unwrap();
        let psi0 = PureState::plus_x().tensor(&PureState::plus_y());
        let times: Vec<f64> = (0..=10).map(|k| 0.3 * k as f64).collect();
        for (_, s) in entanglement_growth(&h, &psi0, (2, 2), &times).unwrap() {
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn growth_rejects_entangled_start_and_bad_dims() {
        let xx = Operator::pauli_x().tensor(&Operator::pauli_x());
        let h = TimeDependentHamiltonian::constant(xx, 1.0, 10).unwrap();
        assert!(entanglement_growth(&h, &PureState::bell(), (2, 2), &[0.0]).is_err());
        assert!(entanglement_growth(&h, &PureState::basis(4, 0).unwrap(), (2, 3), &[0.0]).is_err());
        assert!(entanglement_growth(&h, &PureState::basis(4, 0).unwrap(), (2, 2), &[2.0]).is_err());
    }
}
