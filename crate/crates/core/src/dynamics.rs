//! Time-dependent Schrödinger propagation with a normalized coupling
//! envelope, H(t) = H_static + g(t)·H_coupling.
//!
//! Each step applies exp(−i H(t_mid) Δt), the exact exponential of the
//! Hamiltonian sampled at the step midpoint. The scheme is unitary by
//! construction and second order in Δt.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, eig_hermitian, exp_i_hermitian, Operator, PureState, C64};

/// Default step density: steps per unit of T·‖H‖.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 64.0;

/// Shape of the coupling envelope on [0, T], before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// sin²(πt/T).
    #[serde(alias = "sin2")]
    SinSquared,
    Constant,
    /// Linear ramps of `ramp_fraction`·T at both ends around a flat top.
    Trapezoid {
        ramp_fraction: f64,
    },
    /// Rises linearly from 0 at t = 0 to its maximum at t = T.
    LinearRamp,
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::SinSquared
    }
}

impl Envelope {
    fn validate(&self) -> Result<()> {
        if let Envelope::Trapezoid { ramp_fraction } = *self {
            if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "trapezoid ramp_fraction must lie in (0, 0.5], got {ramp_fraction}"
                )));
            }
        }
        Ok(())
    }

    /// Unnormalized shape at fractional time u ∈ [0, 1]; peak value 1.
    pub fn shape(&self, u: f64) -> f64 {
        match *self {
            Envelope::SinSquared => (PI * u).sin().powi(2),
            Envelope::Constant => 1.0,
            Envelope::Trapezoid { ramp_fraction: r } => {
                if u < r {
                    u / r
                } else if u > 1.0 - r {
                    (1.0 - u) / r
                } else {
                    1.0
                }
            }
            Envelope::LinearRamp => u,
        }
    }

    /// ∫₀¹ shape(u) du.
    fn mean(&self) -> f64 {
        match *self {
            Envelope::SinSquared => 0.5,
            Envelope::Constant => 1.0,
            Envelope::Trapezoid { ramp_fraction } => 1.0 - ramp_fraction,
            Envelope::LinearRamp => 0.5,
        }
    }
}

/// Coupling schedule g(t) on [0, T], normalized so that the midpoint
/// quadrature used by the propagator gives ∫g dt = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleSpec", into = "ScheduleSpec")]
pub struct Schedule {
    total_time: f64,
    steps: usize,
    envelope: Envelope,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
struct ScheduleSpec {
    #[serde(rename = "T")]
    total_time: f64,
    steps: usize,
    #[serde(default)]
    envelope: Envelope,
}

impl TryFrom<ScheduleSpec> for Schedule {
    type Error = Error;

    fn try_from(spec: ScheduleSpec) -> Result<Self> {
        Schedule::new(spec.total_time, spec.steps, spec.envelope)
    }
}

impl From<Schedule> for ScheduleSpec {
    fn from(s: Schedule) -> Self {
        ScheduleSpec {
            total_time: s.total_time,
            steps: s.steps,
            envelope: s.envelope,
        }
    }
}

impl Schedule {
    pub fn new(total_time: f64, steps: usize, envelope: Envelope) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        envelope.validate()?;
        let dt = total_time / steps as f64;
        let norm: f64 = (0..steps)
            .map(|j| envelope.shape((j as f64 + 0.5) / steps as f64) * dt)
            .sum();
        if norm <= 0.0 {
            return Err(Error::InvalidParameter(
                "envelope vanishes at every quadrature node".into(),
            ));
        }
        Ok(Self {
            total_time,
            steps,
            envelope,
            norm,
        })
    }

    /// Chooses the step count from the default rule: `steps_per_unit`
    /// steps per unit of T·‖H‖, with ‖H‖ bounded by
    /// ‖H_static‖ + max g · ‖H_coupling‖.
    pub fn with_step_rule(
        total_time: f64,
        envelope: Envelope,
        static_norm: f64,
        coupling_norm: f64,
        steps_per_unit: f64,
    ) -> Result<Self> {
        envelope.validate()?;
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        let peak = 1.0 / (envelope.mean() * total_time);
        let h_norm = static_norm + peak * coupling_norm;
        let steps = (steps_per_unit * total_time * h_norm).ceil().max(1.0) as usize;
        Self::new(total_time, steps, envelope)
    }

    /// Same envelope and step density, new duration.
    pub fn rescaled(&self, total_time: f64) -> Result<Self> {
        let steps = ((self.steps as f64) * total_time / self.total_time)
            .ceil()
            .max(1.0) as usize;
        Self::new(total_time, steps, self.envelope)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Normalized g(t); zero outside [0, T].
    pub fn g(&self, t: f64) -> f64 {
        if !(0.0..=self.total_time).contains(&t) {
            return 0.0;
        }
        self.envelope.shape(t / self.total_time) / self.norm
    }

    /// Σ g(t_mid)·Δt over the propagation grid.
    pub fn integral(&self) -> f64 {
        let dt = self.dt();
        self.midpoints().map(|t| self.g(t) * dt).sum()
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.dt();
        (0..self.steps).map(move |j| (j as f64 + 0.5) * dt)
    }
}

/// H(t) = static_part + g(t)·coupling_part.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    static_part: Operator,
    coupling_part: Operator,
    schedule: Schedule,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: Operator, coupling_part: Operator, schedule: Schedule) -> Result<Self> {
        static_part.require_hermitian()?;
        coupling_part.require_hermitian()?;
        if static_part.dim() != coupling_part.dim() {
            return Err(Error::DimensionMismatch {
                expected: static_part.dim(),
                found: coupling_part.dim(),
            });
        }
        Ok(Self {
            static_part,
            coupling_part,
            schedule,
        })
    }

    /// Time-independent H over [0, total_time].
    pub fn constant(h: Operator, total_time: f64, steps: usize) -> Result<Self> {
        let dim = h.dim();
        Self::new(
            h,
            Operator::zeros(dim),
            Schedule::new(total_time, steps, Envelope::Constant)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn coupling_part(&self) -> &Operator {
        &self.coupling_part
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn at(&self, t: f64) -> Operator {
        Operator::linear_combination(&[
            (1.0, &self.static_part),
            (self.schedule.g(t), &self.coupling_part),
        ])
        .expect("parts share a dimension")
    }

    fn step(&self, t_mid: f64, dt: f64) -> DMatrix<C64> {
        let h = self.static_part.matrix()
            + self.coupling_part.matrix() * c(self.schedule.g(t_mid), 0.0);
        exp_i_hermitian(&h, dt)
    }
}

/// A recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: PureState,
}

/// Propagates `psi0` over the schedule of `h`, recording the initial state,
/// every `record_every`-th step, and always the final state.
pub fn propagate(
    h: &TimeDependentHamiltonian,
    psi0: &PureState,
    record_every: usize,
) -> Result<Vec<TrajectoryPoint>> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    if record_every == 0 {
        return Err(Error::InvalidParameter(
            "record_every must be positive".into(),
        ));
    }
    let schedule = h.schedule();
    let dt = schedule.dt();
    let steps = schedule.steps();
    let mut psi = psi0.amplitudes().clone();
    let mut out = vec![TrajectoryPoint {
        t: 0.0,
        state: psi0.clone(),
    }];
    for (j, t_mid) in schedule.midpoints().enumerate() {
        psi = h.step(t_mid, dt) * psi;
        let done = j + 1;
        if done % record_every == 0 || done == steps {
            out.push(TrajectoryPoint {
                t: done as f64 * dt,
                state: PureState::normalized(psi.clone())?,
            });
        }
    }
    Ok(out)
}

/// Final state only.
pub fn propagate_final(h: &TimeDependentHamiltonian, psi0: &PureState) -> Result<PureState> {
    let traj = propagate(h, psi0, h.schedule().steps())?;
    Ok(traj
        .last()
        .expect("trajectory is never empty")
        .state
        .clone())
}

/// Evolves from `t0` to `t1` (both inside the schedule window) using
/// `steps` midpoint steps of the same H(t).
pub fn evolve_interval(
    h: &TimeDependentHamiltonian,
    psi: &PureState,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<PureState> {
    if psi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.dim(),
        });
    }
    if t1 < t0 || steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "invalid interval [{t0}, {t1}] with {steps} steps"
        )));
    }
    let dt = (t1 - t0) / steps as f64;
    let mut v = psi.amplitudes().clone();
    for j in 0..steps {
        v = h.step(t0 + (j as f64 + 0.5) * dt, dt) * v;
    }
    PureState::normalized(v)
}

/// Per-step propagation on raw matrices for callers that evolve many
/// small blocks with a shared schedule, over the steps in `steps`. Both
/// matrices must be Hermitian.
pub(crate) fn propagate_raw(
    static_part: &DMatrix<C64>,
    coupling_part: &DMatrix<C64>,
    schedule: &Schedule,
    mut psi: DVector<C64>,
    steps: std::ops::Range<usize>,
) -> DVector<C64> {
    let dt = schedule.dt();
    for j in steps {
        let t_mid = (j as f64 + 0.5) * dt;
        let h = static_part + coupling_part * c(schedule.g(t_mid), 0.0);
        psi = exp_i_hermitian(&h, dt) * psi;
    }
    psi
}

/// ΔE: distance from the `protected_index`-th eigenvalue (ascending order)
/// to the nearest other eigenvalue.
pub fn adiabatic_gap(h0: &Operator, protected_index: usize) -> Result<f64> {
    let eig = eig_hermitian(h0)?;
    let n = eig.values.len();
    if protected_index >= n {
        return Err(Error::InvalidParameter(format!(
            "level index {protected_index} out of range for dimension {n}"
        )));
    }
    if n == 1 {
        return Err(Error::InvalidParameter(
            "a one-level system has no gap".into(),
        ));
    }
    let lp = eig.values[protected_index];
    let gap = eig
        .values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != protected_index)
        .map(|(_, &l)| (l - lp).abs())
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-10 {
        return Err(Error::DegenerateLevel { gap });
    }
    Ok(gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinAxis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldAxis {
    Y,
    MinusX,
}

/// Rotates the +1 eigenstate of σ_X or σ_Y onto +Z with a field along Y or
/// −X respectively: H = −(ω/2)σ_field for a quarter Larmor period.
pub fn rotate_spin_to_z(initial_axis: SpinAxis) -> Result<(PureState, FieldAxis)> {
    const OMEGA: f64 = 1.0;
    let (initial, field_axis, field) = match initial_axis {
        SpinAxis::X => (PureState::plus_x(), FieldAxis::Y, Operator::pauli_y()),
        SpinAxis::Y => (
            PureState::plus_y(),
            FieldAxis::MinusX,
            Operator::pauli_x().scale(-1.0),
        ),
    };
    let h = field.scale(-OMEGA / 2.0);
    let quarter_period = PI / (2.0 * OMEGA);
    let tdh = TimeDependentHamiltonian::constant(h, quarter_period, 64)?;
    Ok((propagate_final(&tdh, &initial)?, field_axis))
}

/// Writes a trajectory as CSV: `t`, then `re_k`, `im_k` for each amplitude.
pub fn write_trajectory_csv<W: Write>(writer: W, trajectory: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = trajectory.first().map_or(0, |p| p.state.dim());
    let mut header = vec!["t".to_string()];
    for k in 0..dim {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    w.write_record(&header)?;
    for p in trajectory {
        let mut row = vec![p.t.to_string()];
        for z in p.state.amplitudes().iter() {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
