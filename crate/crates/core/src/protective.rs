//! Von Neumann pointer model of a protective measurement.
//!
//! The system starts in a non-degenerate eigenstate of a protecting
//! Hamiltonian and is coupled to a pointer through
//!
//! ```text
//! H(t) = H_protect ⊗ I + g(t)·A ⊗ P + I ⊗ P²/2M,     ∫ g dt = 1
//! ```
//!
//! The pointer lives on a uniform periodic grid and P acts by spectral
//! differentiation, so H(t) is block diagonal in the pointer momentum basis.
//! Each momentum block p evolves the system under H_protect + g(t)·p·A
//! (plus a constant p²/2M), which keeps the composite problem at the cost of
//! Q small propagations. The readout is the shift of ⟨X⟩.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::defaults::PhysicalDefaults;
use crate::dynamics::{adiabatic_gap, propagate_raw, Envelope, Schedule};
use crate::error::{Error, Result};
use crate::hilbert::{c, eig_hermitian, pure_expectation, Operator, PureState, C64};

/// Probability mass allowed in the outer 10% of the pointer grid.
pub const EDGE_MASS_LIMIT: f64 = 1e-6;

/// Momentum blocks whose initial probability is below this carry no
/// measurable weight and are not propagated.
const NEGLIGIBLE_BLOCK: f64 = 1e-30;

/// Pointer grid and initial Gaussian wavepacket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Apparatus {
    grid_points: usize,
    half_width: f64,
    width: f64,
    mass: f64,
}

impl Apparatus {
    /// `grid_points` must be a power of two and `half_width ≥ 8·width`.
    pub fn new(grid_points: usize, half_width: f64, width: f64, mass: f64) -> Result<Self> {
        if grid_points < 2 || !grid_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "pointer grid size must be a power of two, got {grid_points}"
            )));
        }
        if !(width > 0.0 && half_width.is_finite() && half_width >= 8.0 * width) {
            return Err(Error::InvalidParameter(format!(
                "pointer grid half-width {half_width} must be at least 8 x packet width {width}"
            )));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pointer mass must be positive, got {mass}"
            )));
        }
        Ok(Self {
            grid_points,
            half_width,
            width,
            mass,
        })
    }

    pub fn from_defaults(d: &PhysicalDefaults) -> Result<Self> {
        Self::new(
            d.grid_points,
            d.grid_half_width,
            d.pointer_width,
            d.pointer_mass,
        )
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.grid_points as f64
    }

    /// x_j = −L + j·dx.
    pub fn positions(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.grid_points)
            .map(|j| -self.half_width + j as f64 * dx)
            .collect()
    }

    /// Momenta in FFT order; the Nyquist mode is assigned −π/dx.
    pub fn momenta(&self) -> Vec<f64> {
        let q = self.grid_points as i64;
        let dp = std::f64::consts::PI / self.half_width;
        (0..q)
            .map(|k| {
                if k < q / 2 {
                    k as f64 * dp
                } else {
                    (k - q) as f64 * dp
                }
            })
            .collect()
    }

    pub fn max_momentum(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Gaussian with position standard deviation `width`, unit discrete norm.
    pub fn initial_state(&self) -> Vec<C64> {
        let s = self.width;
        let raw: Vec<f64> = self
            .positions()
            .iter()
            .map(|x| (-x * x / (4.0 * s * s)).exp())
            .collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        raw.into_iter().map(|v| c(v / norm, 0.0)).collect()
    }

    fn edge_mass(&self, density: &[f64]) -> f64 {
        let cut = 0.9 * self.half_width;
        self.positions()
            .iter()
            .zip(density)
            .filter(|(x, _)| x.abs() > cut)
            .map(|(_, p)| p)
            .sum()
    }
}

/// One protective measurement: protection, protected state, observable,
/// coupling schedule and pointer.
#[derive(Debug, Clone)]
pub struct ProtectiveSetup {
    protection_hamiltonian: Operator,
    protected_state: PureState,
    observable: Operator,
    schedule: Schedule,
    apparatus: Apparatus,
    gap: f64,
}

impl ProtectiveSetup {
    pub fn new(
        protection_hamiltonian: Operator,
        protected_state: PureState,
        observable: Operator,
        schedule: Schedule,
        apparatus: Apparatus,
    ) -> Result<Self> {
        protection_hamiltonian.require_hermitian()?;
        observable.require_hermitian()?;
        let dim = protection_hamiltonian.dim();
        for found in [protected_state.dim(), observable.dim()] {
            if found != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found,
                });
            }
        }
        let level = pure_expectation(&protected_state, &protection_hamiltonian)?;
        let hv = protection_hamiltonian.apply(&protected_state)?;
        let residual = (hv - protected_state.amplitudes() * c(level, 0.0)).norm();
        if residual > 1e-9 {
            return Err(Error::NotEigenstate { residual });
        }
        let eig = eig_hermitian(&protection_hamiltonian)?;
        let index = eig
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - level).abs().total_cmp(&(b.1 - level).abs()))
            .map(|(k, _)| k)
            .expect("non-empty spectrum");
        let gap = adiabatic_gap(&protection_hamiltonian, index)?;
        if gap < 1e-8 {
            return Err(Error::DegenerateLevel { gap });
        }
        Ok(Self {
            protection_hamiltonian,
            protected_state,
            observable,
            schedule,
            apparatus,
            gap,
        })
    }

    /// Schedule from the default step rule for this Hamiltonian, observable
    /// and pointer.
    pub fn default_schedule(
        protection_hamiltonian: &Operator,
        observable: &Operator,
        apparatus: &Apparatus,
        total_time: f64,
        envelope: Envelope,
        steps_per_unit: f64,
    ) -> Result<Schedule> {
        let p_max = apparatus.max_momentum();
        let static_norm =
            protection_hamiltonian.spectral_norm() + p_max * p_max / (2.0 * apparatus.mass());
        let coupling_norm = observable.spectral_norm() * p_max;
        Schedule::with_step_rule(
            total_time,
            envelope,
            static_norm,
            coupling_norm,
            steps_per_unit,
        )
    }

    /// Builds a setup with T = `time_factor`/ΔE and the default schedule,
    /// taking all pointer parameters from `defaults`.
    pub fn with_defaults(
        protection_hamiltonian: Operator,
        protected_state: PureState,
        observable: Operator,
        defaults: &PhysicalDefaults,
    ) -> Result<Self> {
        let apparatus = Apparatus::from_defaults(defaults)?;
        // provisional schedule only to validate and learn the gap
        let probe = Self::new(
            protection_hamiltonian,
            protected_state,
            observable,
            Schedule::new(1.0, 1, Envelope::SinSquared)?,
            apparatus,
        )?;
        let total_time = defaults.time_factor / probe.gap;
        let schedule = Self::default_schedule(
            &probe.protection_hamiltonian,
            &probe.observable,
            &apparatus,
            total_time,
            defaults.envelope,
            defaults.steps_per_unit,
        )?;
        Ok(probe.with_schedule(schedule))
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_observable(&self, observable: Operator) -> Result<Self> {
        Self::new(
            self.protection_hamiltonian.clone(),
            self.protected_state.clone(),
            observable,
            self.schedule,
            self.apparatus,
        )
    }

    pub fn protection_hamiltonian(&self) -> &Operator {
        &self.protection_hamiltonian
    }

    pub fn protected_state(&self) -> &PureState {
        &self.protected_state
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn apparatus(&self) -> &Apparatus {
        &self.apparatus
    }

    /// ΔE at the protected level.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// ⟨ψ|A|ψ⟩ on the protected state.
    pub fn exact_value(&self) -> f64 {
        pure_expectation(&self.protected_state, &self.observable)
            .expect("validated at construction")
    }
}

/// How the pointer is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Expectation of pointer position. Deterministic.
    #[default]
    Mean,
    /// Additionally samples one position from the final pointer marginal.
    SingleShot { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub pointer_shift: f64,
    pub estimate: f64,
    /// 1 − ⟨ψ|ρ_sys|ψ⟩ after the interaction.
    pub disturbance: f64,
    pub schedule_used: Schedule,
    /// Shift read from a single sampled pointer position, divided by the
    /// coupling normalization, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_shot: Option<f64>,
}

/// H = −gap·|target⟩⟨target|, whose unique ground state is `target`.
pub fn build_protection_hamiltonian(target: &PureState, gap: f64) -> Result<Operator> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "protection gap must be positive, got {gap}"
        )));
    }
    Ok(Operator::projector(target).scale(-gap))
}

pub fn run_protective(setup: &ProtectiveSetup) -> Result<MeasurementOutcome> {
    run_protective_with(setup, Readout::Mean)
}

pub fn run_protective_with(
    setup: &ProtectiveSetup,
    readout: Readout,
) -> Result<MeasurementOutcome> {
    let app = &setup.apparatus;
    let q = app.grid_points;
    let d = setup.protection_hamiltonian.dim();
    let positions = app.positions();
    let momenta = app.momenta();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(q);
    let inverse = planner.plan_fft_inverse(q);
    let unitary = 1.0 / (q as f64).sqrt();

    let pointer = app.initial_state();
    let initial_density: Vec<f64> = pointer.iter().map(|z| z.norm_sqr()).collect();
    let x_initial: f64 = positions
        .iter()
        .zip(&initial_density)
        .map(|(x, p)| x * p)
        .sum();

    let mut pointer_momentum = pointer.clone();
    forward.process(&mut pointer_momentum);
    for z in &mut pointer_momentum {
        *z *= unitary;
    }

    let h_s = setup.protection_hamiltonian.matrix();
    let a = setup.observable.matrix();
    let identity = DMatrix::<C64>::identity(d, d);

    // blocks[k] = system state of pointer-momentum component k
    let mut blocks: Vec<DVector<C64>> = Vec::with_capacity(q);
    let mut generators: Vec<Option<(DMatrix<C64>, DMatrix<C64>)>> = Vec::with_capacity(q);
    for (k, &p) in momenta.iter().enumerate() {
        let amp = pointer_momentum[k];
        if amp.norm_sqr() < NEGLIGIBLE_BLOCK {
            blocks.push(DVector::zeros(d));
            generators.push(None);
            continue;
        }
        let static_k = h_s + &identity * c(p * p / (2.0 * app.mass), 0.0);
        generators.push(Some((static_k, a * c(p, 0.0))));
        blocks.push(setup.protected_state.amplitudes() * amp);
    }

    let position_density = |blocks: &[DVector<C64>]| {
        let mut density = vec![0.0; q];
        let mut column = vec![C64::default(); q];
        for s in 0..d {
            for (k, v) in blocks.iter().enumerate() {
                column[k] = v[s];
            }
            inverse.process(&mut column);
            for (acc, z) in density.iter_mut().zip(&column) {
                *acc += (z * unitary).norm_sqr();
            }
        }
        density
    };

    // The grid is periodic, so a packet pushed past the edge re-enters from
    // the other side. dX/dt = g(t)A + P/M moves it by at most ‖A‖·g·dt per
    // step; checking the edge band whenever that reach adds up to 0.05·L
    // guarantees a crossing is seen.
    let a_norm = setup.observable.spectral_norm();
    let dt = setup.schedule.dt();
    let mut checkpoints = Vec::new();
    let mut reach = 0.0;
    for (j, t_mid) in setup.schedule.midpoints().enumerate() {
        reach += a_norm * setup.schedule.g(t_mid) * dt;
        if reach >= 0.05 * app.half_width {
            checkpoints.push(j + 1);
            reach = 0.0;
        }
    }
    let steps = setup.schedule.steps();
    if checkpoints.last() != Some(&steps) {
        checkpoints.push(steps);
    }

    let mut edge = app.edge_mass(&initial_density);
    let mut start = 0;
    let mut final_density = initial_density.clone();
    for &stop in &checkpoints {
        for (v, gen) in blocks.iter_mut().zip(&generators) {
            if let Some((static_k, coupling_k)) = gen {
                *v = propagate_raw(
                    static_k,
                    coupling_k,
                    &setup.schedule,
                    std::mem::replace(v, DVector::zeros(d)),
                    start..stop,
                );
            }
        }
        start = stop;
        final_density = position_density(&blocks);
        edge = edge.max(app.edge_mass(&final_density));
        if edge > EDGE_MASS_LIMIT {
            return Err(Error::GridEdge { mass: edge });
        }
    }

    let mut rho_sys = DMatrix::<C64>::zeros(d, d);
    for v in &blocks {
        rho_sys += v * v.adjoint();
    }
    let fidelity = {
        let phi = setup.protected_state.amplitudes();
        phi.dotc(&(&rho_sys * phi)).re
    };
    let disturbance = (1.0 - fidelity).clamp(0.0, 1.0);

    let x_final: f64 = positions
        .iter()
        .zip(&final_density)
        .map(|(x, p)| x * p)
        .sum();
    let pointer_shift = x_final - x_initial;
    let normalization = setup.schedule.integral();

    let single_shot = match readout {
        Readout::Mean => None,
        Readout::SingleShot { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total: f64 = final_density.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut chosen = positions[q - 1];
            for (x, p) in positions.iter().zip(&final_density) {
                if u < *p {
                    chosen = *x;
                    break;
                }
                u -= p;
            }
            Some((chosen - x_initial) / normalization)
        }
    };

    Ok(MeasurementOutcome {
        pointer_shift,
        estimate: pointer_shift / normalization,
        disturbance,
        schedule_used: setup.schedule,
        single_shot,
    })
}

/// Protects the composite pure state `chi` on d₁⊗d₂ and protectively
/// measures `a ⊗ I` for an observable `a` of the first factor.
pub fn run_protective_entangled(
    chi: &PureState,
    a: &Operator,
    dims: (usize, usize),
    gap: f64,
    schedule: Schedule,
    apparatus: Apparatus,
) -> Result<MeasurementOutcome> {
    let setup = entangled_setup(chi, a, dims, gap, schedule, apparatus)?;
    run_protective(&setup)
}

pub fn entangled_setup(
    chi: &PureState,
    a: &Operator,
    dims: (usize, usize),
    gap: f64,
    schedule: Schedule,
    apparatus: Apparatus,
) -> Result<ProtectiveSetup> {
    let (d1, d2) = dims;
    if d1 * d2 != chi.dim() {
        return Err(Error::Factorization {
            dim: chi.dim(),
            d1,
            d2,
        });
    }
    if a.dim() != d1 {
        return Err(Error::DimensionMismatch {
            expected: d1,
            found: a.dim(),
        });
    }
    a.require_hermitian()?;
    let h = build_protection_hamiltonian(chi, gap)?;
    ProtectiveSetup::new(
        h,
        chi.clone(),
        a.tensor(&Operator::identity(d2)),
        schedule,
        apparatus,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "T")]
    pub total_time: f64,
    pub estimate: f64,
    pub exact: f64,
    pub error: f64,
    pub disturbance: f64,
}

/// Repeats `setup` at each duration in `t_values` (ascending) at the same
/// step density.
pub fn error_scaling_study(setup: &ProtectiveSetup, t_values: &[f64]) -> Result<Vec<ScalingRow>> {
    if t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "T values must be strictly ascending".into(),
        ));
    }
    let exact = setup.exact_value();
    t_values
        .iter()
        .map(|&t| {
            let run = setup.clone().with_schedule(setup.schedule.rescaled(t)?);
            let out = run_protective(&run)?;
            Ok(ScalingRow {
                total_time: t,
                estimate: out.estimate,
                exact,
                error: (out.estimate - exact).abs(),
                disturbance: out.disturbance,
            })
        })
        .collect()
}

/// Batch export record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectiveRecord {
    pub observable_label: String,
    pub estimate: f64,
    pub exact: f64,
    pub error: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub disturbance: f64,
}

impl ProtectiveRecord {
    pub fn new(
        label: impl Into<String>,
        setup: &ProtectiveSetup,
        outcome: &MeasurementOutcome,
    ) -> Self {
        let exact = setup.exact_value();
        Self {
            observable_label: label.into(),
            estimate: outcome.estimate,
            exact,
            error: (outcome.estimate - exact).abs(),
            total_time: outcome.schedule_used.total_time(),
            disturbance: outcome.disturbance,
        }
    }
}
