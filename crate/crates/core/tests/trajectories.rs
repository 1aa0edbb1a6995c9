use seaqt_bell::dynamics::{first_crossing, EvolutionTrace, IntegrationSettings, Termination};
use seaqt_bell::lindblad::{integrate_lindblad, lindblad_entropy_rate, LindbladParams};
use seaqt_bell::measures::entropy;
use seaqt_bell::perturbation::weighted_average;
use seaqt_bell::qmat::{eig_hermitian, kron, CMatrix, Subsystem, KERNEL_THRESHOLD};
use seaqt_bell::seaqt::{self, entropy_generation, SeaqtParams, SeaqtVariant};
use seaqt_bell::states::{bell_diagonal, gibbs_state, validate, CConfig, CompositeHamiltonian, DensityMatrix};

const K: f64 = KERNEL_THRESHOLD;

fn zeta_state(zeta: f64) -> DensityMatrix {
    weighted_average(&bell_diagonal(&CConfig::BASELINE).unwrap(), zeta).unwrap()
}

fn settings(t_end: f64, stride: usize) -> IntegrationSettings {
    IntegrationSettings {
        t_end,
        sample_stride: stride,
        ..Default::default()
    }
}

fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let w = eig_hermitian(&(*a - *b)).unwrap();
    0.5 * w.values().iter().map(|x| x.abs()).sum::<f64>()
}

fn assert_unit_trace(trace: &EvolutionTrace) {
    for s in &trace.states {
        assert!((s.trace().re - 1.0).abs() < 1e-9);
        assert!(s.hermitian_violation() < 1e-12);
    }
}

#[test]
fn gibbs_product_is_a_fixed_point() {
    let h = CompositeHamiltonian::default();
    let p = SeaqtParams::default();
    let ga = gibbs_state(&h.local(Subsystem::A), p.beta_r).unwrap();
    let rho0 = validate(&kron(&ga, &ga).unwrap()).unwrap();
    let trace = seaqt::integrate(&rho0, &h, &p, &settings(1.0, 10)).unwrap();
    assert_eq!(trace.terminated_by, Termination::Stationarity);
    assert!(trace.entropy_generation.iter().all(|&s| s.abs() < 1e-12));
}

#[test]
fn isolated_variant_conserves_energy_and_raises_entropy() {
    let h = CompositeHamiltonian::default();
    let p = SeaqtParams {
        variant: SeaqtVariant::Isolated,
        ..Default::default()
    };
    let trace = seaqt::integrate(&zeta_state(0.68), &h, &p, &settings(5.0, 10)).unwrap();
    assert_unit_trace(&trace);
    let e0 = trace.measures[0].energy;
    assert!(trace.measures.iter().all(|m| (m.energy - e0).abs() < 1e-8));
    assert!(trace.entropy_rate.iter().all(|&r| r >= -1e-10));
    let sgen = entropy_generation(&trace, &p);
    let s0 = trace.measures[0].entropy;
    for (g, m) in sgen.iter().zip(&trace.measures) {
        assert_eq!(*g, m.entropy - s0);
    }
}

#[test]
fn reservoir_run_generates_entropy_and_kills_nonlocality() {
    let h = CompositeHamiltonian::default();
    let p = SeaqtParams::default();
    let trace = seaqt::integrate(&zeta_state(0.68), &h, &p, &settings(10.0, 10)).unwrap();
    assert_unit_trace(&trace);
    assert!(trace.entropy_generation.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    assert!(*trace.entropy_generation.last().unwrap() > 1e-3);
    assert_eq!(entropy_generation(&trace, &p), trace.entropy_generation);
    let b = trace.series(|m| m.chsh_max);
    assert!(b[0] > 2.0);
    assert!(first_crossing(&trace.times, &b, 2.0).is_some());
}

#[test]
fn bell_diagonal_seaqt_motion_is_purely_symplectic() {
    let h = CompositeHamiltonian::default();
    let rho0 = bell_diagonal(&CConfig::BASELINE).unwrap();
    for variant in [SeaqtVariant::Isolated] {
        let p = SeaqtParams {
            variant,
            ..Default::default()
        };
        let trace = seaqt::integrate(&rho0, &h, &p, &settings(1.0, 50)).unwrap();
        assert_eq!(trace.terminated_by, Termination::Stationarity);
        let m0 = trace.measures[0];
        let m1 = trace.final_measures();
        assert!((m0.concurrence - m1.concurrence).abs() < 1e-12);
        assert!((m0.chsh_max - m1.chsh_max).abs() < 1e-12);
    }
}

#[test]
fn kernel_is_preserved() {
    // c = (1, 0.4, -0.4) has two exact zero eigenvalues
    let h = CompositeHamiltonian::default();
    let rho0 = bell_diagonal(&CConfig::new(1.0, 0.4, -0.4).unwrap()).unwrap();
    let kernel_before = eig_hermitian(&rho0).unwrap();
    assert!(kernel_before.values()[1] < K);
    let s = IntegrationSettings {
        stop_at_stationary: false,
        ..settings(2.0, 100)
    };
    let iso = SeaqtParams {
        variant: SeaqtVariant::Isolated,
        ..Default::default()
    };
    let trace = seaqt::integrate(&rho0, &h, &iso, &s).unwrap();
    for st in &trace.states {
        let w = eig_hermitian(st).unwrap();
        assert!(w.values()[0] <= 10.0 * K && w.values()[1] <= 10.0 * K);
    }

    // The reservoir term D_J (x) rho_Jbar only sees the marginals, so it pushes
    // a correlated rank-deficient state out of the positive cone at second
    // order; the integrator reports it instead of clamping silently.
    let res = seaqt::integrate(&rho0, &h, &SeaqtParams::default(), &s);
    assert!(matches!(res, Err(seaqt_bell::Error::StepRejected { .. })), "{res:?}");
}

#[test]
fn rk4_converges_at_fourth_order() {
    let h = CompositeHamiltonian::default();
    let p = SeaqtParams::default();
    let rho0 = zeta_state(0.68);
    let run = |dt: f64| {
        let s = IntegrationSettings {
            dt,
            t_end: 0.2,
            sample_stride: usize::MAX,
            stop_at_stationary: false,
            ..Default::default()
        };
        *seaqt::integrate(&rho0, &h, &p, &s).unwrap().final_state().matrix()
    };
    let reference = run(1e-3 / 64.0);
    let ratio = run(1e-3).max_abs_diff(&reference) / run(5e-4).max_abs_diff(&reference);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn lindblad_bell_diagonal_with_equal_c_is_frozen() {
    let h = CompositeHamiltonian::new(0.0, 0.0);
    let rho0 = bell_diagonal(&CConfig::new(0.4, 0.4, -0.4).unwrap()).unwrap();
    let trace = integrate_lindblad(&rho0, &h, &LindbladParams::default(), &settings(2.0, 10)).unwrap();
    assert_eq!(trace.terminated_by, Termination::Stationarity);
    assert!(trace.final_state().max_abs_diff(&rho0) < 1e-15);
    assert_eq!(trace.final_measures().entropy, entropy(&rho0, K));
}

#[test]
fn lindblad_keeps_populations_and_inner_coherence() {
    let rho0 = zeta_state(0.68);
    for (ea, eb) in [(0.0, 0.0), (1.0, 1.0)] {
        let h = CompositeHamiltonian::new(ea, eb);
        let trace = integrate_lindblad(&rho0, &h, &LindbladParams::default(), &settings(3.0, 20)).unwrap();
        assert_unit_trace(&trace);
        for s in &trace.states {
            assert!((s[(1, 2)].norm() - rho0[(1, 2)].norm()).abs() < 1e-8);
            if ea == 0.0 {
                for i in 0..4 {
                    assert!((s[(i, i)].re - rho0[(i, i)].re).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn lindblad_flow_is_linear() {
    let h = CompositeHamiltonian::default();
    let p = LindbladParams::default();
    let s = IntegrationSettings {
        stop_at_stationary: false,
        ..settings(1.0, 100)
    };
    let r1 = zeta_state(0.68);
    let r2 = bell_diagonal(&CConfig::new(-0.3, 0.5, 0.2).unwrap()).unwrap();
    let end = |r: &DensityMatrix| *integrate_lindblad(r, &h, &p, &s).unwrap().final_state().matrix();
    let mixed = end(&r1.mix(&r2, 0.5));
    let separate = (end(&r1) + end(&r2)).scale(0.5);
    assert!(mixed.max_abs_diff(&separate) < 1e-8);
}

#[test]
fn lindblad_stationary_state_is_not_canonical() {
    let h = CompositeHamiltonian::default();
    let rho0 = bell_diagonal(&CConfig::BASELINE).unwrap();
    let trace = integrate_lindblad(&rho0, &h, &LindbladParams::default(), &settings(40.0, 1000)).unwrap();
    assert_eq!(trace.terminated_by, Termination::Stationarity);
    let g = gibbs_state(&h.local(Subsystem::A), 1.0).unwrap();
    let gg = kron(&g, &g).unwrap();
    assert!(trace_distance(trace.final_state(), &gg) > 1e-3);
}

#[test]
fn lindblad_entropy_rate_matches_finite_differences() {
    // The smallest eigenvalue starts near 7e-4, so the third derivative of S
    // is large early on and the central difference needs a fine spacing.
    let h = CompositeHamiltonian::new(0.0, 0.0);
    let p = LindbladParams::default();
    let s = IntegrationSettings {
        dt: 2e-5,
        stop_at_stationary: false,
        ..settings(1.0, 1)
    };
    let trace = integrate_lindblad(&zeta_state(0.68), &h, &p, &s).unwrap();
    let st = trace.series(|m| m.entropy);
    for k in 1..trace.len() - 1 {
        let fd = (st[k + 1] - st[k - 1]) / (trace.times[k + 1] - trace.times[k - 1]);
        let formula = lindblad_entropy_rate(&trace.states[k], &p, K);
        assert!((formula - fd).abs() <= 1e-5, "t = {}: {formula} vs {fd}", trace.times[k]);
        assert!((trace.entropy_rate[k] - formula).abs() < 1e-12);
    }
}

#[test]
fn lindblad_keeps_concurrence_while_nonlocality_dies() {
    let h = CompositeHamiltonian::default();
    let trace = integrate_lindblad(&zeta_state(0.68), &h, &LindbladParams::default(), &settings(3.0, 5)).unwrap();
    let e0 = trace.measures[0].concurrence;
    assert!(trace.measures.iter().all(|m| (m.concurrence - e0).abs() < 0.05 * e0));
    assert!(trace.final_measures().chsh_max < 2.0);
}
