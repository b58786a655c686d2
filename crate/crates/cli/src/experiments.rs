//! One function per experiment: parameters in, report and table out.

use protomeas::defaults::PhysicalDefaults;
use protomeas::dynamics::{Schedule, TimeDependentHamiltonian};
use protomeas::entropy::{
    entanglement_growth, entropy_under_unitary, von_neumann_entropy, EntropyReport,
};
use protomeas::hilbert::{eig_hermitian, partial_trace, Subsystem};
use protomeas::io::{ensemble_from_specs, StateSpec};
use protomeas::mixtures::{
    averaged_spin_stats, beam_merge_demo, conditional_distribution, despagnat_experiment,
    ensemble_density_matrix, frequency_convergence, sample, total_spin_z_stats, DrawMode,
    DrawRecord, FiniteEnsemble, SpinStats,
};
use protomeas::protective::{
    build_protection_hamiltonian, entangled_setup, error_scaling_study, run_protective_with,
    Apparatus, ProtectiveRecord, ProtectiveSetup, Readout, ScalingRow,
};
use protomeas::tomography::{
    hermitian_basis, reconstruct_with, tomograph_via_protective, ReconstructionOptions, Tomogram,
};
use protomeas::{DensityMatrix, Operator};
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::output::{num, Artifact, Table};
use crate::CliError;

pub struct Context {
    pub experiment: Experiment,
    pub seed: u64,
    pub defaults: PhysicalDefaults,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    experiment: &'static str,
    schema_version: u32,
    seed: u64,
    defaults: &'a PhysicalDefaults,
    result: T,
}

fn wrap<T: Serialize>(ctx: &Context, result: T) -> Result<Value, CliError> {
    serde_json::to_value(Report {
        experiment: ctx.experiment.name(),
        schema_version: SCHEMA_VERSION,
        seed: ctx.seed,
        defaults: &ctx.defaults,
        result,
    })
    .map_err(|e| CliError::Runtime(e.to_string()))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn run(ctx: &Context, parameters: Value) -> Result<Artifact, CliError> {
    let p = "parameters";
    match ctx.experiment {
        Experiment::Protective => protective(ctx, parse_at(p, parameters)?),
        Experiment::ErrorScaling => error_scaling(ctx, parse_at(p, parameters)?),
        Experiment::Tomography => tomography(ctx, parse_at(p, parameters)?),
        Experiment::Entropy => entropy(ctx, parse_at(p, parameters)?),
        Experiment::Ensemble => ensemble(ctx, parse_at(p, parameters)?),
        Experiment::BeamMerge => {
            let _: BeamMergeParams = parse_at(p, parameters)?;
            beam_merge(ctx)
        }
        Experiment::Frequency => frequency(ctx, parse_at(p, parameters)?),
    }
}

/// Protection, protected state and (lifted) observable from config fields,
/// with a placeholder schedule.
fn base_setup(
    protection: &Protection,
    state: Option<&StateSpec>,
    observable: &Operator,
    subsystem_dims: Option<[usize; 2]>,
    d: &PhysicalDefaults,
) -> Result<ProtectiveSetup, CliError> {
    let (h, psi) = match protection {
        Protection::Hamiltonian(h) => {
            let psi = match state {
                Some(s) => s.to_state()?,
                None => eig_hermitian(h)?.vector(0),
            };
            (h.clone(), psi)
        }
        Protection::Projector { gap } => {
            let psi = state
                .ok_or_else(|| invalid("parameters.state: required with projector protection"))?
                .to_state()?;
            (
                build_protection_hamiltonian(&psi, gap.unwrap_or(d.gap))?,
                psi,
            )
        }
    };
    let lifted = match subsystem_dims {
        Some([d1, d2]) => {
            if d1 * d2 != psi.dim() {
                return Err(invalid(format!(
                    "parameters.subsystem_dims: {d1}x{d2} does not match state dimension {}",
                    psi.dim()
                )));
            }
            if observable.dim() != d1 {
                return Err(invalid(format!(
                    "parameters.observable: dimension {} does not match first factor {d1}",
                    observable.dim()
                )));
            }
            observable.tensor(&Operator::identity(d2))
        }
        None => observable.clone(),
    };
    let app = Apparatus::from_defaults(d)?;
    Ok(ProtectiveSetup::new(
        h,
        psi,
        lifted,
        Schedule::new(1.0, 1, d.envelope)?,
        app,
    )?)
}

fn schedule_for(
    probe: &ProtectiveSetup,
    s: &ScheduleParams,
    d: &PhysicalDefaults,
) -> Result<Schedule, CliError> {
    let envelope = s.envelope.unwrap_or(d.envelope);
    Ok(match s.steps {
        Some(steps) => Schedule::new(s.total_time, steps, envelope)?,
        None => ProtectiveSetup::default_schedule(
            probe.protection_hamiltonian(),
            probe.observable(),
            probe.apparatus(),
            s.total_time,
            envelope,
            d.steps_per_unit,
        )?,
    })
}

#[derive(Serialize)]
struct ProtectiveResult {
    gap: f64,
    exact: f64,
    estimate: f64,
    error: f64,
    pointer_shift: f64,
    disturbance: f64,
    schedule: Schedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_shot: Option<f64>,
}

fn protective(ctx: &Context, p: ProtectiveParams) -> Result<Artifact, CliError> {
    let d = &ctx.defaults;
    let probe = base_setup(
        &p.protection,
        p.state.as_ref(),
        &p.observable,
        p.subsystem_dims,
        d,
    )?;
    let schedule = schedule_for(&probe, &p.schedule, d)?;
    let setup = probe.with_schedule(schedule);
    let readout = match p.readout {
        ReadoutMode::Mean => Readout::Mean,
        ReadoutMode::SingleShot => Readout::SingleShot { seed: ctx.seed },
    };
    let out = run_protective_with(&setup, readout)?;
    let exact = setup.exact_value();
    let r = ProtectiveResult {
        gap: setup.gap(),
        exact,
        estimate: out.estimate,
        error: (out.estimate - exact).abs(),
        pointer_shift: out.pointer_shift,
        disturbance: out.disturbance,
        schedule: out.schedule_used,
        single_shot: out.single_shot,
    };
    let mut table = Table::new(&[
        "estimate",
        "exact",
        "error",
        "disturbance",
        "pointer_shift",
        "T",
        "steps",
        "gap",
        "single_shot",
    ]);
    table.push(vec![
        num(r.estimate),
        num(r.exact),
        num(r.error),
        num(r.disturbance),
        num(r.pointer_shift),
        num(r.schedule.total_time()),
        r.schedule.steps().to_string(),
        num(r.gap),
        r.single_shot.map(num).unwrap_or_default(),
    ]);
    let summary = format!(
        "protective: estimate {:.6} (exact {:.6}, error {:.2e}, disturbance {:.2e}) at T = {}",
        r.estimate,
        r.exact,
        r.error,
        r.disturbance,
        r.schedule.total_time()
    );
    Ok(Artifact {
        report: wrap(ctx, r)?,
        table,
        summary,
    })
}

fn error_scaling(ctx: &Context, p: ErrorScalingParams) -> Result<Artifact, CliError> {
    let d = &ctx.defaults;
    let probe = base_setup(
        &p.protection,
        p.state.as_ref(),
        &p.observable,
        p.subsystem_dims,
        d,
    )?;
    let gap = probe.gap();
    let t_values: Vec<f64> = match (&p.t_factors, &p.t_values) {
        (Some(f), None) => f.iter().map(|x| x / gap).collect(),
        (None, Some(t)) => t.clone(),
        _ => {
            return Err(invalid(
                "parameters: give exactly one of `T_factors` and `T_values`",
            ))
        }
    };
    let first = *t_values
        .first()
        .ok_or_else(|| invalid("parameters: the T ladder is empty"))?;
    let base = ScheduleParams {
        total_time: first,
        steps: None,
        envelope: p.envelope,
    };
    let setup = probe.clone().with_schedule(schedule_for(&probe, &base, d)?);
    let rows = error_scaling_study(&setup, &t_values)?;
    let mut table = Table::new(&["T", "T_gap", "estimate", "exact", "error", "disturbance"]);
    for r in &rows {
        table.push(vec![
            num(r.total_time),
            num(r.total_time * gap),
            num(r.estimate),
            num(r.exact),
            num(r.error),
            num(r.disturbance),
        ]);
    }
    let (head, tail) = (&rows[0], &rows[rows.len() - 1]);
    let summary = format!(
        "error-scaling: {} durations, error {:.2e} at T·ΔE = {} to {:.2e} at T·ΔE = {}",
        rows.len(),
        head.error,
        head.total_time * gap,
        tail.error,
        tail.total_time * gap
    );
    #[derive(Serialize)]
    struct ScalingResult {
        gap: f64,
        rows: Vec<ScalingRow>,
    }
    Ok(Artifact {
        report: wrap(ctx, ScalingResult { gap, rows })?,
        table,
        summary,
    })
}

#[derive(Serialize)]
struct TomographyResult {
    rho: DensityMatrix,
    residual: f64,
    projected_residual: f64,
    clipped_mass: f64,
    residual_exceeded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_trace_distance: Option<f64>,
    tomogram: Tomogram,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    protective_records: Vec<ProtectiveRecord>,
}

fn tomography(ctx: &Context, p: TomographyParams) -> Result<Artifact, CliError> {
    let d = &ctx.defaults;
    let options = |bound: Option<f64>| ReconstructionOptions {
        residual_bound: bound.unwrap_or(ReconstructionOptions::default().residual_bound),
    };
    let (tomogram, set, truth, records, opts) = match p {
        TomographyParams::Exact {
            rho,
            noise_sigma,
            residual_bound,
        } => {
            let set = hermitian_basis(rho.dim())?;
            let mut t = Tomogram::exact(&rho, &set)?;
            if noise_sigma != 0.0 {
                t = t.with_gaussian_noise(noise_sigma, ctx.seed)?;
            }
            (t, set, Some(rho), Vec::new(), options(residual_bound))
        }
        TomographyParams::Tomogram {
            tomogram,
            residual_bound,
        } => {
            let set = hermitian_basis(tomogram.dim())?;
            (tomogram, set, None, Vec::new(), options(residual_bound))
        }
        TomographyParams::Protective {
            state,
            subsystem_dims,
            residual_bound,
        } => {
            let psi = state.to_state()?;
            let h = build_protection_hamiltonian(&psi, d.gap)?;
            let app = Apparatus::from_defaults(d)?;
            let total = d.time_factor / d.gap;
            let schedule = |lifted: &Operator| {
                ProtectiveSetup::default_schedule(
                    &h,
                    lifted,
                    &app,
                    total,
                    d.envelope,
                    d.steps_per_unit,
                )
            };
            let (run, set, truth) = match subsystem_dims {
                Some([d1, d2]) => {
                    if d1 * d2 != psi.dim() {
                        return Err(invalid(format!(
                            "parameters.subsystem_dims: {d1}x{d2} does not match state dimension {}",
                            psi.dim()
                        )));
                    }
                    let set = hermitian_basis(d1)?;
                    let run = tomograph_via_protective(
                        |o| {
                            let s = schedule(&o.operator.tensor(&Operator::identity(d2)))?;
                            entangled_setup(&psi, &o.operator, (d1, d2), d.gap, s, app)
                        },
                        &set,
                    )?;
                    let truth = partial_trace(&psi.density_matrix(), (d1, d2), Subsystem::First)?;
                    (run, set, truth)
                }
                None => {
                    let set = hermitian_basis(psi.dim())?;
                    let run = tomograph_via_protective(
                        |o| {
                            ProtectiveSetup::new(
                                h.clone(),
                                psi.clone(),
                                o.operator.clone(),
                                schedule(&o.operator)?,
                                app,
                            )
                        },
                        &set,
                    )?;
                    (run, set, psi.density_matrix())
                }
            };
            (
                run.tomogram,
                set,
                Some(truth),
                run.records,
                options(residual_bound),
            )
        }
    };
    let rec = reconstruct_with(&tomogram, &set, opts)?;
    let truth_trace_distance = truth.map(|t| rec.rho.trace_distance(&t)).transpose()?;
    let dim = rec.rho.dim();
    let mut table = Table::new(&["row", "col", "re", "im"]);
    for i in 0..dim {
        for j in 0..dim {
            let z = rec.rho.matrix()[(i, j)];
            table.push(vec![i.to_string(), j.to_string(), num(z.re), num(z.im)]);
        }
    }
    let mut summary = format!(
        "tomography: d = {dim}, {} observables, residual {:.2e}, clipped {:.2e}",
        set.observables().len(),
        rec.residual,
        rec.clipped_mass
    );
    if let Some(t) = truth_trace_distance {
        summary += &format!(", trace distance to input {t:.2e}");
    }
    if rec.residual_exceeded {
        summary += " (residual above bound: inconsistent data)";
    }
    let r = TomographyResult {
        rho: rec.rho,
        residual: rec.residual,
        projected_residual: rec.projected_residual,
        clipped_mass: rec.clipped_mass,
        residual_exceeded: rec.residual_exceeded,
        truth_trace_distance,
        tomogram,
        protective_records: records,
    };
    Ok(Artifact {
        report: wrap(ctx, r)?,
        table,
        summary,
    })
}

fn entropy(ctx: &Context, p: EntropyParams) -> Result<Artifact, CliError> {
    match p {
        EntropyParams::State { rho, unitary } => {
            #[derive(Serialize)]
            struct R {
                #[serde(flatten)]
                report: EntropyReport,
                #[serde(rename = "S_bits")]
                bits: f64,
                #[serde(rename = "S_after_unitary", skip_serializing_if = "Option::is_none")]
                after: Option<f64>,
            }
            let report = von_neumann_entropy(&rho)?;
            let after = unitary
                .map(|u| entropy_under_unitary(&rho, &u).map(|x| x.1))
                .transpose()?;
            let mut table = Table::new(&["S_nats", "S_bits", "purity", "S_after_unitary"]);
            table.push(vec![
                num(report.value),
                num(report.bits()),
                num(report.purity),
                after.map(num).unwrap_or_default(),
            ]);
            let summary = format!(
                "entropy: S = {:.6} nats, purity {:.6}",
                report.value, report.purity
            );
            let bits = report.bits();
            Ok(Artifact {
                report: wrap(
                    ctx,
                    R {
                        report,
                        bits,
                        after,
                    },
                )?,
                table,
                summary,
            })
        }
        EntropyParams::Growth {
            static_part,
            coupling,
            dims,
            state,
            schedule,
            times,
        } => {
            let coupling = coupling.unwrap_or_else(|| Operator::zeros(static_part.dim()));
            let envelope = schedule.envelope.unwrap_or(ctx.defaults.envelope);
            let s = match schedule.steps {
                Some(n) => Schedule::new(schedule.total_time, n, envelope)?,
                None => Schedule::with_step_rule(
                    schedule.total_time,
                    envelope,
                    static_part.spectral_norm(),
                    coupling.spectral_norm(),
                    ctx.defaults.steps_per_unit,
                )?,
            };
            let h = TimeDependentHamiltonian::new(static_part, coupling, s)?;
            let total = s.total_time();
            let times =
                times.unwrap_or_else(|| (0..=20).map(|k| total * k as f64 / 20.0).collect());
            let psi0 = state.to_state()?;
            let curve = entanglement_growth(&h, &psi0, (dims[0], dims[1]), &times)?;
            let mut table = Table::new(&["t", "S_nats", "S_bits"]);
            for &(t, s) in &curve {
                table.push(vec![num(t), num(s), num(s / std::f64::consts::LN_2)]);
            }
            let peak = curve.iter().map(|c| c.1).fold(0.0, f64::max);
            let summary = format!(
                "entropy: {} samples on [0, {total}], peak subsystem S = {peak:.6} nats",
                curve.len()
            );
            #[derive(Serialize)]
            struct Point {
                t: f64,
                #[serde(rename = "S_nats")]
                s: f64,
            }
            let points: Vec<Point> = curve.into_iter().map(|(t, s)| Point { t, s }).collect();
            Ok(Artifact {
                report: wrap(ctx, points)?,
                table,
                summary,
            })
        }
    }
}

fn ensemble(ctx: &Context, p: EnsembleParams) -> Result<Artifact, CliError> {
    if p.n < 2 || p.n % 2 != 0 {
        return Err(invalid(format!(
            "parameters.N: must be a positive even integer, got {}",
            p.n
        )));
    }
    if p.trials == 0 {
        return Err(invalid("parameters.trials: must be at least 1"));
    }
    if p.draw.is_some() && p.components.is_none() {
        return Err(invalid("parameters.draw: needs `components`"));
    }
    let custom = p
        .components
        .as_deref()
        .map(ensemble_from_specs)
        .transpose()?;

    let report = despagnat_experiment(p.n, p.trials, ctx.seed, p.keep_trials)?;
    let averaged_z = averaged_spin_stats(&FiniteEnsemble::z_mixture(p.n)?)?;
    let averaged_x = averaged_spin_stats(&FiniteEnsemble::x_mixture(p.n)?)?;

    #[derive(Serialize)]
    struct Custom {
        rho: DensityMatrix,
        #[serde(skip_serializing_if = "Option::is_none")]
        total_spin_z: Option<SpinStats>,
        #[serde(skip_serializing_if = "Option::is_none")]
        averaged_spin_z: Option<SpinStats>,
        #[serde(skip_serializing_if = "Option::is_none")]
        draw: Option<DrawRecord>,
        /// Next-draw distribution given the draws.
        #[serde(skip_serializing_if = "Option::is_none")]
        conditional: Option<Vec<f64>>,
    }
    let custom = match custom {
        Some(e) => {
            let qubits = e.dim() == 2;
            let (draw, conditional) = match &p.draw {
                Some(dp) => {
                    let rec = sample(&e, dp.n, dp.mode, ctx.seed)?;
                    let exhausted =
                        dp.mode == DrawMode::WithoutReplacement && dp.n as u64 == e.total();
                    let cond = if exhausted {
                        None
                    } else {
                        Some(conditional_distribution(&e, &rec.outcomes, dp.mode)?)
                    };
                    (Some(rec), cond)
                }
                None => (None, None),
            };
            Some(Custom {
                rho: ensemble_density_matrix(&e)?,
                total_spin_z: qubits.then(|| total_spin_z_stats(&e)).transpose()?,
                averaged_spin_z: qubits.then(|| averaged_spin_stats(&e)).transpose()?,
                draw,
                conditional,
            })
        }
        None => None,
    };

    let mut table;
    if p.keep_trials {
        table = Table::new(&["trial", "sigma_z_z_preparation", "sigma_z_x_preparation"]);
        for (k, (z, x)) in report
            .z_preparation
            .per_trial
            .iter()
            .zip(&report.x_preparation.per_trial)
            .enumerate()
        {
            table.push(vec![k.to_string(), z.to_string(), x.to_string()]);
        }
    } else {
        table = Table::new(&[
            "preparation",
            "analytic_mean",
            "analytic_std",
            "empirical_mean",
            "empirical_std",
            "averaged_std",
        ]);
        for (s, avg) in [
            (&report.z_preparation, averaged_z),
            (&report.x_preparation, averaged_x),
        ] {
            table.push(vec![
                s.label.clone(),
                num(s.analytic_mean),
                num(s.analytic_std),
                num(s.empirical_mean),
                num(s.empirical_std),
                num(avg.std),
            ]);
        }
    }
    let summary = format!(
        "ensemble: N = {}, {} trials, std of Σz z-prep {:.4} (analytic {}), x-prep {:.4} (analytic {}), single-system ρ distance {:.1e}",
        p.n,
        p.trials,
        report.z_preparation.empirical_std,
        report.z_preparation.analytic_std,
        report.x_preparation.empirical_std,
        report.x_preparation.analytic_std,
        report.rho_trace_distance
    );
    #[derive(Serialize)]
    struct R {
        #[serde(flatten)]
        report: protomeas::mixtures::DespagnatReport,
        averaged_spin_z: [SpinStats; 2],
        #[serde(skip_serializing_if = "Option::is_none")]
        custom: Option<Custom>,
    }
    Ok(Artifact {
        report: wrap(
            ctx,
            R {
                report,
                averaged_spin_z: [averaged_z, averaged_x],
                custom,
            },
        )?,
        table,
        summary,
    })
}

fn beam_merge(ctx: &Context) -> Result<Artifact, CliError> {
    let r = beam_merge_demo()?;
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("full_trace_distance", r.full_trace_distance),
        ("spin_trace_distance", r.spin_trace_distance),
        ("path_trace_distance", r.path_trace_distance),
    ] {
        table.push(vec![k.into(), num(v)]);
    }
    let summary = format!(
        "beam-merge: trace distance full {:.6}, spin {:.1e}, path {:.1e}",
        r.full_trace_distance, r.spin_trace_distance, r.path_trace_distance
    );
    Ok(Artifact {
        report: wrap(ctx, r)?,
        table,
        summary,
    })
}

fn frequency(ctx: &Context, p: FrequencyParams) -> Result<Artifact, CliError> {
    let rows = frequency_convergence(&p.weights, &p.n_ladder, p.n_draws, ctx.seed, p.mc_trials)?;
    let mu = p.weights.len();
    let mut header = vec![
        "N".to_string(),
        "distance".into(),
        "memory_ratio".into(),
        "empirical_distance".into(),
    ];
    header.extend((0..mu).map(|i| format!("count_{i}")));
    header.extend((0..mu).map(|i| format!("conditional_{i}")));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for r in &rows {
        let mut row = vec![
            r.n_total.to_string(),
            num(r.distance),
            num(r.memory_ratio),
            r.empirical_distance.map(num).unwrap_or_default(),
        ];
        row.extend(r.counts.iter().map(|c| c.to_string()));
        row.extend(r.conditional.iter().map(|&c| num(c)));
        table.push(row);
    }
    let summary = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => format!(
            "frequency: {} sizes, distance {:.3e} at N = {} to {:.3e} at N = {}",
            rows.len(),
            a.distance,
            a.n_total,
            b.distance,
            b.n_total
        ),
        _ => "frequency: empty ladder".into(),
    };
    Ok(Artifact {
        report: wrap(ctx, rows)?,
        table,
        summary,
    })
}
