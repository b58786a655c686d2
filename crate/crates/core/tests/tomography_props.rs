mod common;

use common::*;
use protomeas::defaults::PhysicalDefaults;
use protomeas::hilbert::*;
use protomeas::protective::*;
use protomeas::tomography::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_tomograms_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for d in [2, 3, 4] {
        let set = hermitian_basis(d).unwrap();
        for k in 0..100 {
            let rho = if k % 3 == 0 {
                random_low_rank(&mut rng, d, 1 + k % d)
            } else {
                random_density(&mut rng, d)
            };
            let rec = reconstruct(&Tomogram::exact(&rho, &set).unwrap(), &set).unwrap();
            assert!(rec.rho.trace_distance(&rho).unwrap() <= 1e-10);
            assert!(!rec.residual_exceeded);
        }
    }
}

#[test]
fn noisy_tomograms_still_give_density_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for d in [2, 3, 4] {
        let set = hermitian_basis(d).unwrap();
        for k in 0..60 {
            let rho = random_low_rank(&mut rng, d, 1);
            let sigma = [0.01, 0.1, 0.3][k % 3];
            let noisy = Tomogram::exact(&rho, &set)
                .unwrap()
                .with_gaussian_noise(sigma, k as u64)
                .unwrap();
            let rec = reconstruct(&noisy, &set).unwrap();
            let m = rec.rho.matrix();
            assert!((m.trace().re - 1.0).abs() < 1e-10);
            assert!(rec.rho.spectrum()[0] >= -1e-10);
            assert!(max_abs(&(m - m.adjoint())) < 1e-12);
        }
    }
}

#[test]
fn global_phase_is_invisible() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for d in [2, 3] {
        let set = hermitian_basis(d).unwrap();
        for _ in 0..20 {
            let psi = random_state(&mut rng, d);
            let shifted = psi.with_global_phase(rng.random_range(0.0..6.28));
            let a = Tomogram::exact(&psi.density_matrix(), &set).unwrap();
            let b = Tomogram::exact(&shifted.density_matrix(), &set).unwrap();
            for (x, y) in a.entries().iter().zip(b.entries()) {
                assert!((x.value - y.value).abs() < 1e-12);
            }
            let ra = reconstruct(&a, &set).unwrap().rho;
            let rb = reconstruct(&b, &set).unwrap().rho;
            assert!(ra.trace_distance(&rb).unwrap() < 1e-12);
        }
    }
}

/// Brute-force minimum of Σ(tr(σA) − m)² over a 0.01 grid of the Bloch ball.
fn grid_minimum(m: [f64; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let n = 100_i32;
    for i in -n..=n {
        let x = i as f64 / n as f64;
        for j in -n..=n {
            let y = j as f64 / n as f64;
            for k in -n..=n {
                let z = k as f64 / n as f64;
                if x * x + y * y + z * z > 1.0 {
                    continue;
                }
                let r = (1.0 - m[0]).powi(2)
                    + (x - m[1]).powi(2)
                    + (y - m[2]).powi(2)
                    + (z - m[3]).powi(2);
                best = best.min(r);
            }
        }
    }
    best
}

#[test]
fn projection_is_no_worse_than_any_grid_state() {
    let set = hermitian_basis(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..6 {
        // measured Bloch vectors outside the ball
        let dir = random_state(&mut rng, 2)
            .density_matrix()
            .bloch_vector()
            .unwrap();
        let len = rng.random_range(1.05..1.6);
        let m = [1.0, dir[0] * len, dir[1] * len, dir[2] * len];
        let entries = ["I", "X", "Y", "Z"]
            .iter()
            .zip(m)
            .map(|(l, v)| TomogramEntry {
                label: l.to_string(),
                value: v,
            })
            .collect();
        let tomo = Tomogram::new(2, entries, TomogramSource::Exact).unwrap();
        let rec = reconstruct(&tomo, &set).unwrap();
        let best = grid_minimum(m);
        assert!(
            rec.projected_residual <= best + 1e-12,
            "{} > {best}",
            rec.projected_residual
        );
        assert!(best - rec.projected_residual < 0.02);
        assert!(rec.clipped_mass > 0.0);
    }
}

#[test]
fn tomogram_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let set = hermitian_basis(3).unwrap();
    let t = Tomogram::exact(&random_density(&mut rng, 3), &set).unwrap();
    assert_eq!(Tomogram::from_json(&t.to_json().unwrap()).unwrap(), t);
    assert!(Tomogram::from_json(
        r#"{"dim":2,"entries":[{"label":"X","value":1},{"label":"X","value":0}],"source":"exact"}"#
    )
    .is_err());
}

#[test]
fn partial_sets_are_rank_deficient() {
    let set = ObservableSet::new(
        2,
        vec![
            LabeledObservable {
                label: "X".into(),
                operator: Operator::pauli_x(),
            },
            LabeledObservable {
                label: "Z".into(),
                operator: Operator::pauli_z(),
            },
        ],
    )
    .unwrap();
    assert!(!set.is_informationally_complete());
    let t = Tomogram::exact(&DensityMatrix::maximally_mixed(2).unwrap(), &set).unwrap();
    assert!(reconstruct(&t, &set).is_err());
}

fn qubit_protective(target: PureState) -> DensityMatrix {
    let d = PhysicalDefaults::default();
    let h = build_protection_hamiltonian(&target, d.gap).unwrap();
    let set = hermitian_basis(2).unwrap();
    let factory = |o: &LabeledObservable| {
        ProtectiveSetup::with_defaults(h.clone(), target.clone(), o.operator.clone(), &d)
    };
    tomograph_via_protective(factory, &set)
        .unwrap()
        .reconstruction
        .rho
}

fn entangled_protective(chi: PureState) -> DensityMatrix {
    let d = PhysicalDefaults::default();
    let app = Apparatus::from_defaults(&d).unwrap();
    let h = build_protection_hamiltonian(&chi, d.gap).unwrap();
    let set = hermitian_basis(2).unwrap();
    let factory = |o: &LabeledObservable| {
        let lifted = o.operator.tensor(&Operator::identity(2));
        let s = ProtectiveSetup::default_schedule(
            &h,
            &lifted,
            &app,
            d.time_factor / d.gap,
            d.envelope,
            d.steps_per_unit,
        )?;
        entangled_setup(&chi, &o.operator, (2, 2), d.gap, s, app)
    };
    tomograph_via_protective(factory, &set)
        .unwrap()
        .reconstruction
        .rho
}

#[test]
fn protective_tomography_examples() {
    let rho = qubit_protective(PureState::zero());
    assert!(
        rho.trace_distance(&PureState::zero().density_matrix())
            .unwrap()
            <= 5e-2
    );

    let rho = entangled_protective(PureState::bell());
    assert!(
        rho.trace_distance(&DensityMatrix::maximally_mixed(2).unwrap())
            .unwrap()
            <= 5e-2
    );

    let cs = [C64::new(0.7_f64.sqrt(), 0.0), C64::new(0.3_f64.sqrt(), 0.0)];
    let basis = [PureState::zero(), PureState::one()];
    let rho = entangled_protective(PureState::schmidt(&cs, &basis, &basis).unwrap());
    assert!(
        rho.trace_distance(&DensityMatrix::diagonal(&[0.7, 0.3]).unwrap())
            .unwrap()
            <= 5e-2
    );
}
