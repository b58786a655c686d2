//! Finite ensembles of pure states: their density matrices, draws with and
//! without replacement, the memory a finite collection carries, and the
//! spin-fluctuation statistics that tell the z- and x-prepared unpolarized
//! beams apart only at the collective level.
//!
//! Random streams come from ChaCha8 seeded with `seed_from_u64(seed)`; trial
//! `k` of an experiment uses stream `k` (or `2k + preparation`), so results
//! do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    mix, partial_trace, pure_expectation, DensityMatrix, Operator, PureState, Subsystem,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub state: PureState,
    pub count: u64,
}

/// μ sub-ensembles, each of N_α systems in the same pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEnsemble {
    components: Vec<Component>,
    total: u64,
}

impl FiniteEnsemble {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components.first().ok_or_else(|| {
            Error::InvalidParameter("ensemble needs at least one component".into())
        })?;
        let dim = first.state.dim();
        if let Some(c) = components.iter().find(|c| c.state.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.state.dim(),
            });
        }
        let total: u64 = components.iter().map(|c| c.count).sum();
        if total == 0 {
            return Err(Error::InvalidParameter(
                "ensemble has no members (N = 0)".into(),
            ));
        }
        Ok(Self { components, total })
    }

    pub fn from_counts(parts: impl IntoIterator<Item = (PureState, u64)>) -> Result<Self> {
        Self::new(
            parts
                .into_iter()
                .map(|(state, count)| Component { state, count })
                .collect(),
        )
    }

    /// N/2 systems in |↑z⟩ and N/2 in |↓z⟩.
    pub fn z_mixture(n: u64) -> Result<Self> {
        Self::split_pair(n, PureState::zero(), PureState::one())
    }

    /// N/2 systems in |+x⟩ and N/2 in |−x⟩.
    pub fn x_mixture(n: u64) -> Result<Self> {
        Self::split_pair(n, PureState::plus_x(), PureState::minus_x())
    }

    fn split_pair(n: u64, a: PureState, b: PureState) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "N must be a positive even number, got {n}"
            )));
        }
        Self::from_counts([(a, n / 2), (b, n / 2)])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.components[0].state.dim()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.count).collect()
    }

    /// N_α / N.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.components.iter().map(|c| c.count as f64 / n).collect()
    }
}

/// Σ_α (N_α/N) |φ_α⟩⟨φ_α|.
pub fn ensemble_density_matrix(e: &FiniteEnsemble) -> Result<DensityMatrix> {
    let parts: Vec<(PureState, f64)> = e
        .components
        .iter()
        .zip(e.weights())
        .map(|(c, w)| (c.state.clone(), w))
        .collect();
    // integer ratios can miss the 1e-12 weight-sum check only through rounding
    match mix(&parts) {
        Err(Error::WeightSum(_)) => {
            let s: f64 = parts.iter().map(|p| p.1).sum();
            let rescaled: Vec<_> = parts.into_iter().map(|(st, w)| (st, w / s)).collect();
            mix(&rescaled)
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawMode {
    WithReplacement,
    WithoutReplacement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawRecord {
    /// Component index of each draw, in order.
    pub outcomes: Vec<usize>,
    pub mode: DrawMode,
    pub seed: u64,
}

fn pick(counts: &[u64], u: u64) -> usize {
    let mut acc = 0;
    for (i, &c) in counts.iter().enumerate() {
        acc += c;
        if u < acc {
            return i;
        }
    }
    unreachable!("u is drawn below the total count")
}

fn draw_sequence<R: Rng>(e: &FiniteEnsemble, n: usize, mode: DrawMode, rng: &mut R) -> Vec<usize> {
    let mut remaining = e.counts();
    let mut left = e.total;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        match mode {
            DrawMode::WithReplacement => out.push(pick(&remaining, rng.random_range(0..e.total))),
            DrawMode::WithoutReplacement => {
                let i = pick(&remaining, rng.random_range(0..left));
                remaining[i] -= 1;
                left -= 1;
                out.push(i);
            }
        }
    }
    out
}

/// Draws `n` members. Without replacement the per-component counts follow the
/// multivariate hypergeometric law; with replacement every draw is an
/// independent categorical draw with probabilities N_α/N.
pub fn sample(e: &FiniteEnsemble, n: usize, mode: DrawMode, seed: u64) -> Result<DrawRecord> {
    if mode == DrawMode::WithoutReplacement && n as u64 > e.total {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {n} members without replacement from N = {}",
            e.total
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DrawRecord {
        outcomes: draw_sequence(e, n, mode, &mut rng),
        mode,
        seed,
    })
}

/// Probability of each component for the next draw given the observed
/// prefix: (N_α − k_α)/(N − n) without replacement, N_α/N with.
pub fn conditional_distribution(
    e: &FiniteEnsemble,
    observed: &[usize],
    mode: DrawMode,
) -> Result<Vec<f64>> {
    let mu = e.components.len();
    let mut seen = vec![0_u64; mu];
    for &i in observed {
        if i >= mu {
            return Err(Error::InconsistentPrefix(format!(
                "component index {i} out of range (μ = {mu})"
            )));
        }
        seen[i] += 1;
    }
    match mode {
        DrawMode::WithReplacement => Ok(e.weights()),
        DrawMode::WithoutReplacement => {
            let counts = e.counts();
            if let Some(i) = (0..mu).find(|&i| seen[i] > counts[i]) {
                return Err(Error::InconsistentPrefix(format!(
                    "component {i} observed {} times but has only {} members",
                    seen[i], counts[i]
                )));
            }
            let left = e.total - observed.len() as u64;
            if left == 0 {
                return Err(Error::InconsistentPrefix("no members remain".into()));
            }
            Ok((0..mu)
                .map(|i| (counts[i] - seen[i]) as f64 / left as f64)
                .collect())
        }
    }
}

/// ½ Σ |pᵢ − qᵢ|.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinStats {
    pub mean: f64,
    pub std: f64,
}

fn require_qubits(e: &FiniteEnsemble) -> Result<()> {
    if e.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "spin statistics need qubit components, got dimension {}",
            e.dim()
        )));
    }
    Ok(())
}

/// Mean and standard deviation of Σ_z = Σₙ σ_{z,n} over the collection, each
/// member independent in its own state.
pub fn total_spin_z_stats(e: &FiniteEnsemble) -> Result<SpinStats> {
    require_qubits(e)?;
    let sz = Operator::pauli_z();
    let mut mean = 0.0;
    let mut var = 0.0;
    for c in &e.components {
        let m = pure_expectation(&c.state, &sz)?;
        let n = c.count as f64;
        mean += n * m;
        // ⟨σz²⟩ = 1
        var += n * (1.0 - m * m);
    }
    Ok(SpinStats {
        mean,
        std: var.max(0.0).sqrt(),
    })
}

/// Statistics of the per-system average (1/N)Σ_z.
pub fn averaged_spin_stats(e: &FiniteEnsemble) -> Result<SpinStats> {
    let total = total_spin_z_stats(e)?;
    let n = e.total as f64;
    Ok(SpinStats {
        mean: total.mean / n,
        std: total.std / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationStats {
    pub label: String,
    pub analytic_mean: f64,
    pub analytic_std: f64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_trial: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DespagnatReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub trials: usize,
    pub seed: u64,
    pub z_preparation: PreparationStats,
    pub x_preparation: PreparationStats,
    /// Shared single-system density matrix of both preparations.
    pub single_system_rho: DensityMatrix,
    pub rho_trace_distance: f64,
}

fn measure_total_spin(e: &FiniteEnsemble, rng: &mut ChaCha8Rng) -> i64 {
    let up = PureState::zero();
    let mut total = 0_i64;
    for c in &e.components {
        let p_up = c.state.fidelity(&up).expect("qubit");
        for _ in 0..c.count {
            total += if rng.random::<f64>() < p_up { 1 } else { -1 };
        }
    }
    total
}

fn mean_std(values: &[i64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean, var.sqrt())
}

fn run_preparation(
    label: &str,
    e: &FiniteEnsemble,
    trials: usize,
    seed: u64,
    offset: u64,
    keep_trials: bool,
) -> Result<PreparationStats> {
    let analytic = total_spin_z_stats(e)?;
    let values: Vec<i64> = (0..trials as u64)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k + offset);
            measure_total_spin(e, &mut rng)
        })
        .collect();
    let (empirical_mean, empirical_std) = mean_std(&values);
    Ok(PreparationStats {
        label: label.into(),
        analytic_mean: analytic.mean,
        analytic_std: analytic.std,
        empirical_mean,
        empirical_std,
        per_trial: if keep_trials { values } else { Vec::new() },
    })
}

/// Monte Carlo of σ_z measured on every member of the z- and x-prepared
/// unpolarized collections of size N, repeated `trials` times.
pub fn despagnat_experiment(
    n: u64,
    trials: usize,
    seed: u64,
    keep_trials: bool,
) -> Result<DespagnatReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let z = FiniteEnsemble::z_mixture(n)?;
    let x = FiniteEnsemble::x_mixture(n)?;
    let rho_z = ensemble_density_matrix(&z)?;
    let rho_x = ensemble_density_matrix(&x)?;
    Ok(DespagnatReport {
        n,
        trials,
        seed,
        z_preparation: run_preparation("z", &z, trials, seed, 0, keep_trials)?,
        x_preparation: run_preparation("x", &x, trials, seed, 1, keep_trials)?,
        rho_trace_distance: rho_z.trace_distance(&rho_x)?,
        single_system_rho: rho_z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamMergeReport {
    pub rho_full_a: DensityMatrix,
    pub rho_full_b: DensityMatrix,
    pub rho_spin_a: DensityMatrix,
    pub rho_spin_b: DensityMatrix,
    pub rho_path_a: DensityMatrix,
    pub rho_path_b: DensityMatrix,
    pub full_trace_distance: f64,
    pub spin_trace_distance: f64,
    pub path_trace_distance: f64,
}

/// Spin ⊗ path toy of two recombined beam pairs: preparation A pairs z
/// eigenstates with orthogonal paths, preparation B x eigenstates.
pub fn beam_merge_demo() -> Result<BeamMergeReport> {
    let p0 = PureState::zero();
    let p1 = PureState::one();
    let correlated =
        |s0: PureState, s1: PureState| mix(&[(s0.tensor(&p0), 0.5), (s1.tensor(&p1), 0.5)]);
    let a = correlated(PureState::zero(), PureState::one())?;
    let b = correlated(PureState::plus_x(), PureState::minus_x())?;
    let spin_a = partial_trace(&a, (2, 2), Subsystem::First)?;
    let spin_b = partial_trace(&b, (2, 2), Subsystem::First)?;
    let path_a = partial_trace(&a, (2, 2), Subsystem::Second)?;
    let path_b = partial_trace(&b, (2, 2), Subsystem::Second)?;
    Ok(BeamMergeReport {
        full_trace_distance: a.trace_distance(&b)?,
        spin_trace_distance: spin_a.trace_distance(&spin_b)?,
        path_trace_distance: path_a.trace_distance(&path_b)?,
        rho_full_a: a,
        rho_full_b: b,
        rho_spin_a: spin_a,
        rho_spin_b: spin_b,
        rho_path_a: path_a,
        rho_path_b: path_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    #[serde(rename = "N")]
    pub n_total: u64,
    pub counts: Vec<u64>,
    /// Next-draw distribution after the all-component-0 prefix.
    pub conditional: Vec<f64>,
    /// Total-variation distance of `conditional` from N_α/N.
    pub distance: f64,
    /// n/(N − n).
    pub memory_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub empirical_distance: Option<f64>,
}

/// Integral counts w_α·N, failing when any is not an integer.
pub fn counts_for(weights: &[f64], n: u64) -> Result<Vec<u64>> {
    let counts: Vec<u64> = weights
        .iter()
        .map(|&w| {
            let x = w * n as f64;
            if !(w >= 0.0) || (x - x.round()).abs() > 1e-9 {
                Err(Error::InvalidParameter(format!(
                    "weight {w} gives non-integral count {x} at N = {n}"
                )))
            } else {
                Ok(x.round() as u64)
            }
        })
        .collect::<Result<_>>()?;
    if counts.iter().sum::<u64>() != n {
        return Err(Error::InvalidParameter(format!(
            "weights do not split N = {n} exactly"
        )));
    }
    Ok(counts)
}

/// How quickly the memory of a finite collection fades along an ascending
/// ladder of sizes, measured after the worst-case (all-component-0) prefix
/// of `n_draws`. With `mc_trials > 0` the conditional is also estimated by
/// rejection sampling.
pub fn frequency_convergence(
    weights: &[f64],
    n_ladder: &[u64],
    n_draws: usize,
    seed: u64,
    mc_trials: usize,
) -> Result<Vec<FrequencyRow>> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("no weights given".into()));
    }
    if n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "N ladder must be strictly ascending".into(),
        ));
    }
    // each component only labels outcomes here; its state is irrelevant
    let placeholder = PureState::zero();
    n_ladder
        .iter()
        .map(|&n| {
            let counts = counts_for(weights, n)?;
            let e = FiniteEnsemble::from_counts(counts.iter().map(|&c| (placeholder.clone(), c)))?;
            let prefix = vec![0_usize; n_draws];
            let conditional = conditional_distribution(&e, &prefix, DrawMode::WithoutReplacement)?;
            let fixed = e.weights();
            let empirical_distance = if mc_trials > 0 {
                let mut tally = vec![0_u64; counts.len()];
                for k in 0..mc_trials as u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k);
                    let draws =
                        draw_sequence(&e, n_draws + 1, DrawMode::WithoutReplacement, &mut rng);
                    if draws[..n_draws].iter().all(|&i| i == 0) {
                        tally[draws[n_draws]] += 1;
                    }
                }
                let accepted: u64 = tally.iter().sum();
                (accepted > 0).then(|| {
                    let freq: Vec<f64> =
                        tally.iter().map(|&t| t as f64 / accepted as f64).collect();
                    total_variation(&freq, &fixed)
                })
            } else {
                None
            };
            Ok(FrequencyRow {
                n_total: n,
                distance: total_variation(&conditional, &fixed),
                memory_ratio: n_draws as f64 / (n - n_draws as u64) as f64,
                counts,
                conditional,
                empirical_distance,
            })
        })
        .collect()
}
