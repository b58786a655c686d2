//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};
use std::time::Instant;

use common::*;
use protomeas::defaults::PhysicalDefaults;
use protomeas::dynamics::*;
use protomeas::entropy::*;
use protomeas::hilbert::*;
use protomeas::mixtures::*;
use protomeas::protective::*;
use protomeas::tomography::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

fn tilted() -> (Operator, PureState) {
    let h = Operator::pauli_z()
        .add(&Operator::pauli_x().scale(0.5))
        .unwrap()
        .scale(-1.0 / 1.25_f64.sqrt());
    let ground = eig_hermitian(&h).unwrap().vector(0);
    (h, ground)
}

fn entangled_schedule(
    h: &Operator,
    a: &Operator,
    app: &Apparatus,
    d: &PhysicalDefaults,
) -> Schedule {
    let lifted = a.tensor(&Operator::identity(2));
    ProtectiveSetup::default_schedule(
        h,
        &lifted,
        app,
        d.time_factor / d.gap,
        d.envelope,
        d.steps_per_unit,
    )
    .unwrap()
}

fn protective_fidelity() -> Vec<Check> {
    let start = Instant::now();
    let (h, ground) = tilted();
    // protected state has Bloch vector (½, 0, 1)/√1.25
    let exact = 0.5 / 1.25_f64.sqrt();
    let setup = ProtectiveSetup::with_defaults(
        h,
        ground,
        Operator::pauli_x(),
        &PhysicalDefaults::default(),
    )
    .unwrap();
    let gap = setup.gap();
    let est = run_protective(&setup).unwrap().estimate;
    let ladder: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|f| f / gap).collect();
    let rows = error_scaling_study(&setup, &ladder).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        check(
            (est - exact).abs() <= 1e-2,
            format!(
                "|estimate − ⟨σx⟩| = {:.2e} at T = 50/ΔE",
                (est - exact).abs()
            ),
        ),
        check(
            errors[3] < errors[0],
            format!(
                "errors along T·ΔE = 10,20,40,80: {}",
                errors
                    .iter()
                    .map(|e| format!("{e:.2e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ),
        check(elapsed < 30.0, format!("runtime {elapsed:.1} s")),
    ]
}

fn entangled_reduction() -> Vec<Check> {
    let start = Instant::now();
    let d = PhysicalDefaults::default();
    let app = Apparatus::from_defaults(&d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let chi = random_state(&mut rng, 4);
        let a = random_hermitian(&mut rng, 2);
        let h = build_protection_hamiltonian(&chi, d.gap).unwrap();
        let s = entangled_schedule(&h, &a, &app, &d);
        let est = run_protective_entangled(&chi, &a, (2, 2), d.gap, s, app)
            .unwrap()
            .estimate;
        let rho1 = partial_trace(&chi.density_matrix(), (2, 2), Subsystem::First).unwrap();
        worst = worst.max((est - expectation(&rho1, &a).unwrap()).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        check(
            worst <= 1e-2,
            format!("worst |estimate − tr ρ₁a| over 20 states = {worst:.2e}"),
        ),
        check(elapsed < 300.0, format!("runtime {elapsed:.1} s")),
    ]
}

fn tomographic_round_trip() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 4] {
        let set = hermitian_basis(d).unwrap();
        for _ in 0..100 {
            let rho = random_density(&mut rng, d);
            let rec = reconstruct(&Tomogram::exact(&rho, &set).unwrap(), &set).unwrap();
            worst = worst.max(rec.rho.trace_distance(&rho).unwrap());
        }
    }
    let d = PhysicalDefaults::default();
    let app = Apparatus::from_defaults(&d).unwrap();
    let chi = PureState::bell();
    let h = build_protection_hamiltonian(&chi, d.gap).unwrap();
    let set = hermitian_basis(2).unwrap();
    let run = tomograph_via_protective(
        |o| {
            entangled_setup(
                &chi,
                &o.operator,
                (2, 2),
                d.gap,
                entangled_schedule(&h, &o.operator, &app, &d),
                app,
            )
        },
        &set,
    )
    .unwrap();
    let bell_err = run
        .reconstruction
        .rho
        .trace_distance(&DensityMatrix::maximally_mixed(2).unwrap())
        .unwrap();
    vec![
        check(
            worst <= 1e-10,
            format!("worst exact-input trace distance {worst:.2e}"),
        ),
        check(
            bell_err <= 5e-2,
            format!("protective Bell-reduced tomography distance from ½I {bell_err:.2e}"),
        ),
    ]
}

fn entropy_claims() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pure = von_neumann_entropy(&random_state(&mut rng, 3).density_matrix())
        .unwrap()
        .value;
    let half = von_neumann_entropy(&DensityMatrix::maximally_mixed(2).unwrap())
        .unwrap()
        .value;
    let mut worst_u: f64 = 0.0;
    for k in 0..100 {
        let d = 2 + k % 3;
        let (before, after) =
            entropy_under_unitary(&random_density(&mut rng, d), &random_unitary(&mut rng, d))
                .unwrap();
        worst_u = worst_u.max((before - after).abs());
    }
    let xx = Operator::pauli_x().tensor(&Operator::pauli_x());
    let h = TimeDependentHamiltonian::constant(xx, FRAC_PI_2, 200).unwrap();
    let curve = entanglement_growth(
        &h,
        &tensor(&PureState::zero(), &PureState::zero()),
        (2, 2),
        &[FRAC_PI_4, FRAC_PI_2],
    )
    .unwrap();
    vec![
        check(pure.abs() <= 1e-10, format!("S(pure) = {pure:.2e}")),
        check(
            (half - LN_2).abs() <= 1e-10,
            format!("S(½I) − ln 2 = {:.2e}", half - LN_2),
        ),
        check(
            worst_u <= 1e-9,
            format!("worst |S(UρU†) − S(ρ)| = {worst_u:.2e}"),
        ),
        check(
            (curve[0].1 - LN_2).abs() <= 1e-6,
            format!("S(π/4) − ln 2 = {:.2e}", curve[0].1 - LN_2),
        ),
        check(
            curve[1].1.abs() <= 1e-6,
            format!("S(π/2) = {:.2e}", curve[1].1),
        ),
    ]
}

fn binomial_moments(n: u64) -> (f64, f64) {
    // Σz = 2k − N with k ~ Bin(N, ½), moments summed over the pmf
    let ln_pmf = |k: u64| -> f64 {
        (1..=k)
            .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
            .sum::<f64>()
            - n as f64 * LN_2
    };
    let (mut m1, mut m2) = (0.0, 0.0);
    for k in 0..=n {
        let p = ln_pmf(k).exp();
        let s = 2.0 * k as f64 - n as f64;
        m1 += p * s;
        m2 += p * s * s;
    }
    (m1, (m2 - m1 * m1).sqrt())
}

fn fluctuation_claims() -> Vec<Check> {
    let n = 100;
    let z = total_spin_z_stats(&FiniteEnsemble::z_mixture(n).unwrap()).unwrap();
    let x = total_spin_z_stats(&FiniteEnsemble::x_mixture(n).unwrap()).unwrap();
    let trials = 10_000;
    let r = despagnat_experiment(n, trials, 5, true).unwrap();
    let (oracle_mean, oracle_std) = binomial_moments(n);
    let emp = &r.x_preparation;
    let se_mean = oracle_std / (trials as f64).sqrt();
    vec![
        check(
            z.mean == 0.0 && z.std == 0.0,
            format!("z-mixture analytic ({}, {})", z.mean, z.std),
        ),
        check(
            x.mean == 0.0 && x.std == (n as f64).sqrt(),
            format!("x-mixture analytic ({}, {})", x.mean, x.std),
        ),
        check(
            r.z_preparation.empirical_std == 0.0,
            format!("z-mixture empirical std {}", r.z_preparation.empirical_std),
        ),
        check(
            (emp.empirical_std - 10.0).abs() <= 0.5,
            format!("x-mixture empirical std {:.3} vs 10", emp.empirical_std),
        ),
        check(
            (oracle_std - 10.0).abs() < 1e-9
                && (emp.empirical_mean - oracle_mean).abs() <= 3.0 * se_mean,
            format!(
                "binomial oracle std {oracle_std:.6}, empirical mean {:.3} (3 SE = {:.3})",
                emp.empirical_mean,
                3.0 * se_mean
            ),
        ),
        check(
            emp.per_trial
                .iter()
                .all(|v| v.rem_euclid(2) == 0 && v.abs() <= n as i64),
            "every Σz trial value is even and within ±N",
        ),
    ]
}

fn averaged_spin() -> Vec<Check> {
    [100_u64, 400, 10_000]
        .iter()
        .map(|&n| {
            let s = averaged_spin_stats(&FiniteEnsemble::x_mixture(n).unwrap()).unwrap();
            let expected = 1.0 / (n as f64).sqrt();
            check(
                s.std == expected,
                format!("N = {n}: std {} vs 1/√N {}", s.std, expected),
            )
        })
        .collect()
}

fn memory_effect() -> Vec<Check> {
    let e = FiniteEnsemble::from_counts([(PureState::zero(), 3), (PureState::one(), 3)]).unwrap();
    // enumerate the 20 orderings of ↑↑↑↓↓↓ and condition on ↑↑ first
    let (mut given, mut up) = (0, 0);
    for mask in 0_u32..64 {
        if mask.count_ones() == 3 && mask & 0b11 == 0b11 {
            given += 1;
            up += ((mask >> 2) & 1) as usize;
        }
    }
    let oracle = [up as f64 / given as f64, 1.0 - up as f64 / given as f64];
    let without = conditional_distribution(&e, &[0, 0], DrawMode::WithoutReplacement).unwrap();
    let with = conditional_distribution(&e, &[0, 0], DrawMode::WithReplacement).unwrap();
    vec![
        check(
            oracle == [0.25, 0.75] && without == oracle,
            format!("without replacement {without:?}, enumeration {oracle:?}"),
        ),
        check(with == [0.5, 0.5], format!("with replacement {with:?}")),
    ]
}

fn beam_merge() -> Vec<Check> {
    let r = beam_merge_demo().unwrap();
    // spin⊗path, index 2s + p
    let q = 0.25;
    let a_oracle = [
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ];
    let b_oracle = [
        [q, 0.0, q, 0.0],
        [0.0, q, 0.0, -q],
        [q, 0.0, q, 0.0],
        [0.0, -q, 0.0, q],
    ];
    let mut construction: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            construction = construction
                .max((r.rho_full_a.matrix()[(i, j)] - C64::new(a_oracle[i][j], 0.0)).norm())
                .max((r.rho_full_b.matrix()[(i, j)] - C64::new(b_oracle[i][j], 0.0)).norm());
        }
    }
    // A − B splits into path blocks {0,2} and {1,3}; closed-form 2×2 eigenvalues
    let mut half_norm = 0.0;
    for (u, v) in [(0, 2), (1, 3)] {
        let da = a_oracle[u][u] - b_oracle[u][u];
        let dc = a_oracle[v][v] - b_oracle[v][v];
        let db = a_oracle[u][v] - b_oracle[u][v];
        let mid = 0.5 * (da + dc);
        let rad = (0.25 * (da - dc).powi(2) + db * db).sqrt();
        half_norm += 0.5 * ((mid + rad).abs() + (mid - rad).abs());
    }
    vec![
        check(
            construction < 1e-15,
            format!("preparations match the stated construction (max dev {construction:.1e})"),
        ),
        check(
            (r.full_trace_distance - half_norm).abs() <= 1e-10,
            format!(
                "full trace distance {:.12} vs eigenvalue oracle {half_norm:.12}",
                r.full_trace_distance
            ),
        ),
        check(
            (r.full_trace_distance - 0.5).abs() <= 1e-10,
            format!(
                "full trace distance {:.12} vs stated 0.5",
                r.full_trace_distance
            ),
        ),
        check(
            r.spin_trace_distance <= 1e-12,
            format!("spin reductions differ by {:.1e}", r.spin_trace_distance),
        ),
    ]
}

fn neutron_rotation() -> Vec<Check> {
    let target = PureState::zero().density_matrix();
    let (from_x, fx) = rotate_spin_to_z(SpinAxis::X).unwrap();
    let (from_y, fy) = rotate_spin_to_z(SpinAxis::Y).unwrap();
    let (rx, ry) = (from_x.density_matrix(), from_y.density_matrix());
    let dx = rx.trace_distance(&target).unwrap();
    let dy = ry.trace_distance(&target).unwrap();
    let dxy = rx.trace_distance(&ry).unwrap();
    vec![
        check(
            fx == FieldAxis::Y && fy == FieldAxis::MinusX,
            format!("fields {fx:?}, {fy:?}"),
        ),
        check(
            dx <= 1e-6 && dy <= 1e-6,
            format!("distances from |0⟩⟨0|: {dx:.1e}, {dy:.1e}"),
        ),
        check(dxy <= 1e-6, format!("paths agree within {dxy:.1e}")),
    ]
}

fn determinism() -> Vec<Check> {
    let twice = |f: &dyn Fn() -> String| f() == f();
    let (h, ground) = tilted();
    let setup = ProtectiveSetup::with_defaults(
        h,
        ground,
        Operator::pauli_y(),
        &PhysicalDefaults::default(),
    )
    .unwrap();
    let protective = || {
        let mut out = serde_json::to_string(&run_protective(&setup).unwrap()).unwrap();
        out += &serde_json::to_string(
            &run_protective_with(&setup, Readout::SingleShot { seed: 9 }).unwrap(),
        )
        .unwrap();
        out
    };
    let despagnat =
        || serde_json::to_string(&despagnat_experiment(50, 200, 10, true).unwrap()).unwrap();
    let noise = || {
        let set = hermitian_basis(3).unwrap();
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        Tomogram::exact(&rho, &set)
            .unwrap()
            .with_gaussian_noise(0.1, 10)
            .unwrap()
            .to_json()
            .unwrap()
    };
    let draws = || {
        let e = FiniteEnsemble::x_mixture(40).unwrap();
        let a = serde_json::to_string(&sample(&e, 30, DrawMode::WithoutReplacement, 10).unwrap())
            .unwrap();
        a + &serde_json::to_string(&sample(&e, 30, DrawMode::WithReplacement, 10).unwrap()).unwrap()
    };
    let frequency = || {
        serde_json::to_string(&frequency_convergence(&[0.5, 0.5], &[10, 100], 2, 10, 500).unwrap())
            .unwrap()
    };
    vec![
        check(
            twice(&protective),
            "protective outcomes (mean and single-shot)",
        ),
        check(twice(&despagnat), "fluctuation experiment report"),
        check(twice(&noise), "noisy tomogram"),
        check(twice(&draws), "ensemble draws"),
        check(twice(&frequency), "frequency convergence table"),
    ]
}

fn main() {
    let criteria: [(&str, fn() -> Vec<Check>); 10] = [
        ("protective measurement fidelity", protective_fidelity),
        ("entangled reduction", entangled_reduction),
        ("tomographic round trip", tomographic_round_trip),
        ("entropy", entropy_claims),
        ("fluctuations 0 and √N", fluctuation_claims),
        ("averaged spin 1/√N", averaged_spin),
        ("memory effect", memory_effect),
        ("beam merge", beam_merge),
        ("neutron rotation", neutron_rotation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let checks = run();
        let ok = checks.iter().all(|c| c.ok);
        println!(
            "{} criterion {:>2}: {name}",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
        for c in checks {
            println!("    [{}] {}", if c.ok { "ok" } else { "FAILED" }, c.detail);
        }
        failed += usize::from(!ok);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
