#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use protomeas::hilbert::{DensityMatrix, Operator, PureState, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_c<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> PureState {
    PureState::normalized(DVector::from_fn(dim, |_, _| gaussian_c(rng))).unwrap()
}

/// Ginibre ensemble: G G† / tr(G G†), full rank almost surely.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m / C64::new(tr, 0.0);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(m).unwrap()
}

/// Random rank-deficient state: mixture of `rank` random pure states.
pub fn random_low_rank<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let w: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = w.iter().sum();
    let parts: Vec<(PureState, f64)> = w.iter().map(|x| (random_state(rng, dim), x / s)).collect();
    // renormalize against rounding in the weight sum
    let total: f64 = parts.iter().map(|p| p.1).sum();
    let parts: Vec<_> = parts.into_iter().map(|(p, x)| (p, x / total)).collect();
    protomeas::hilbert::mix(&parts).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng));
    Operator::hermitian((&g + g.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    let t: f64 = rng.random_range(0.1..3.0);
    random_hermitian(rng, dim).exp_i(t).unwrap()
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
