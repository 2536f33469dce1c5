// SPDX-License-Identifier: Apache-2.0

use gmon_control::dynamics::{
    build_hamiltonian, evolve, gap_at, infidelity, propagator, q_commutator_norm, Case, ControlParams, CornerSpectra,
    StateVector,
};
use gmon_control::linalg::{self, C64};
use gmon_control::optimizer::adjoint_gradient;
use gmon_control::pontryagin::{solve_switching_time, SwitchedTrajectory, SINGULAR_THRESHOLD};
use gmon_control::protocol::{make_pwc, Protocol, Segment};
use gmon_control::robustness::{jitter_samples, monte_carlo, NominalProtocol, TimingJitter};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn case() -> impl Strategy<Value = Case> {
    prop_oneof![Just(Case::Plus), Just(Case::Minus)]
}

fn state() -> impl Strategy<Value = StateVector> {
    prop::array::uniform8(-1.0..1.0_f64)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let c = std::array::from_fn(|i| C64::new(v[i] / n, v[i + 4] / n));
            StateVector::new(c)
        })
}

fn protocol(max_segments: usize) -> impl Strategy<Value = Protocol> {
    (
        case(),
        prop::collection::vec((0.0..0.5_f64, 0.0..=1.0_f64, 0.0..=1.0_f64), 1..=max_segments),
    )
        .prop_map(|(case, segs)| {
            let segments = segs.into_iter().map(|(dt, b, j)| Segment { dt, b, j }).collect();
            Protocol::new(case, segments).unwrap()
        })
}

fn random_pwc(rng: &mut ChaCha8Rng, n: usize, case: Case, lo: f64, hi: f64) -> Protocol {
    let tau = 0.05 + 1.5 * rng.random::<f64>();
    let values: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                lo + (hi - lo) * rng.random::<f64>(),
                lo + (hi - lo) * rng.random::<f64>(),
            )
        })
        .collect();
    make_pwc(tau, &values, case).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn evolution_conserves_norm(p in protocol(8), psi in state()) {
        let out = evolve(&psi, &p).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagators_are_unitary_and_compose(
        b in 0.0..=1.0_f64, j in 0.0..=1.0_f64, c in case(), t1 in -3.0..3.0_f64, t2 in -3.0..3.0_f64
    ) {
        let h = build_hamiltonian(&ControlParams::new(b, j, c).unwrap()).unwrap();
        let u1 = propagator(&h, t1).unwrap();
        let u2 = propagator(&h, t2).unwrap();
        let u12 = propagator(&h, t1 + t2).unwrap();
        prop_assert!(u1.unitarity_defect() < 1e-12);
        prop_assert!(linalg::max_abs_diff(u1.then_after(&u2).matrix(), u12.matrix()) < 1e-12);
        prop_assert!(linalg::max_abs_diff(u1.then_after(&u1.adjoint()).matrix(), &linalg::identity()) < 1e-12);
    }

    #[test]
    fn equal_fields_commute_with_the_swap(b in 0.0..=1.0_f64, j in 0.0..=1.0_f64) {
        let h = build_hamiltonian(&ControlParams::new(b, j, Case::Plus).unwrap()).unwrap();
        prop_assert_eq!(q_commutator_norm(&h), 0.0);
    }

    #[test]
    fn error_is_a_probability(p in protocol(6), psi in state()) {
        let e = gmon_control::dynamics::error(&evolve(&psi, &p).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn protocol_json_round_trips(p in protocol(6)) {
        let back = Protocol::from_json(&p.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.case(), p.case());
        prop_assert_eq!(back.segments(), p.segments());
        prop_assert!((back.tau() - p.tau()).abs() < 1e-15);
    }

    #[test]
    fn costate_pairing_is_time_invariant(tau in 0.05..1.5_f64, frac in 0.0..=1.0_f64, s in 0.0..=1.0_f64) {
        let t_b = tau * frac;
        let traj = SwitchedTrajectory::new(tau, t_b).unwrap();
        let end = traj.costate(tau).overlap(&traj.state(tau));
        let t = tau * s;
        let mid = traj.costate(t).overlap(&traj.state(t));
        prop_assert!((mid - end).norm() < 1e-10);
    }

    #[test]
    fn costate_follows_the_state_equation(tau in 0.05..1.5_f64, frac in 0.0..=1.0_f64) {
        let t_b = tau * frac;
        let traj = SwitchedTrajectory::new(tau, t_b).unwrap();
        let p = Protocol::new(Case::Minus, vec![
            Segment { dt: t_b, b: 0.0, j: 1.0 },
            Segment { dt: tau - t_b, b: 1.0, j: 1.0 },
        ]).unwrap();
        let start = traj.costate(0.0);
        let pushed = evolve(&StateVector::new(start.pi), &p).unwrap();
        let end = traj.costate(tau);
        for i in 0..4 {
            prop_assert!((pushed.c[i] - end.pi[i]).norm() < 1e-10);
        }
        prop_assert!((start.norm_sqr() - end.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn minus_case_gap_stays_open(b in 0.0..=1.0_f64) {
        prop_assert!(gap_at(Case::Minus, b, 1.0 - b).unwrap() > 0.0);
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    // Controls kept away from the box faces so that central steps stay legal.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p = random_pwc(&mut rng, 5, Case::Minus, 0.01, 0.99);
        let init = StateVector::psi_minus_initial();
        let g = adjoint_gradient(&p, &init).unwrap();
        let values: Vec<(f64, f64)> = p.segments().iter().map(|s| (s.b, s.j)).collect();
        let eval = |v: &[(f64, f64)]| infidelity(&evolve(&init, &make_pwc(p.tau(), v, Case::Minus).unwrap()).unwrap());
        for k in 0..5 {
            for which in 0..2 {
                let mut plus = values.clone();
                let mut minus = values.clone();
                if which == 0 {
                    plus[k].0 += h;
                    minus[k].0 -= h;
                } else {
                    plus[k].1 += h;
                    minus[k].1 -= h;
                }
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                worst = worst.max((fd - g[k + 5 * which]).abs());
            }
        }
    }
    assert!(worst < 1e-5, "max deviation {worst}");
}

#[test]
fn equal_fields_never_reach_the_singlet() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = 1 + (rng.random::<u32>() % 10) as usize;
        let p = random_pwc(&mut rng, n, Case::Plus, 0.0, 1.0);
        let e = infidelity(&evolve(&StateVector::psi_plus_initial(), &p).unwrap());
        assert!((e - 1.0).abs() < 1e-12, "{e}");
    }
}

/// Sample mean and its standard error.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn within_3se(xs: &[f64], expect: f64) -> bool {
    let (m, se) = mean_and_se(xs);
    (m - expect).abs() <= 3.0 * se
}

#[test]
fn jitter_moments() {
    let eps = 0.02;
    let js = jitter_samples(eps, 100_000, 42);
    let d = |f: fn(&TimingJitter) -> f64| js.iter().map(f).collect::<Vec<f64>>();
    let var = eps * eps / 12.0;
    for x in [d(|j| j.dt0), d(|j| j.dt1), d(|j| j.dt2)] {
        assert!(within_3se(&x, 0.0));
        assert!(x.iter().all(|v| v.abs() <= eps / 2.0));
    }
    assert!(within_3se(&d(|j| j.dt0 * j.dt0), var));
    assert!(within_3se(&d(|j| j.dt1 * j.dt1), var));
    assert!(within_3se(&d(|j| j.dt2 * j.dt2), var));
    assert!(within_3se(&d(|j| j.dt0 * j.dt1), 0.0));
    assert!(within_3se(&d(|j| j.dt1 * j.dt2), 0.0));
    assert!(within_3se(&d(|j| j.dt0 * j.dt2), 0.0));

    let d21 = |j: &TimingJitter| j.dt2 - j.dt1;
    let d10 = |j: &TimingJitter| j.dt1 - j.dt0;
    let sq21: Vec<f64> = js.iter().map(|j| d21(j).powi(2)).collect();
    let sq10: Vec<f64> = js.iter().map(|j| d10(j).powi(2)).collect();
    let cross: Vec<f64> = js.iter().map(|j| d21(j) * d10(j)).collect();
    assert!(within_3se(&sq21, eps * eps / 6.0));
    assert!(within_3se(&sq10, eps * eps / 6.0));
    assert!(within_3se(&cross, -eps * eps / 12.0));
}

fn exact_nominal() -> NominalProtocol {
    NominalProtocol::from_durations(std::f64::consts::FRAC_PI_6, 0.4077417659).unwrap()
}

#[test]
fn perturbed_error_agrees_with_protocol_evolution() {
    let n = exact_nominal();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let mut draw = || 0.1 * (rng.random::<f64>() - 0.5);
        let j = TimingJitter::new(draw(), draw(), draw()).unwrap();
        let direct = infidelity(&evolve(&StateVector::psi_minus_initial(), &n.jittered_protocol(&j).unwrap()).unwrap());
        assert!((n.perturbed_error(&j).unwrap() - direct).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let n = exact_nominal();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo(&n, 0.02, 20_000, 77).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn optimal_trajectory_obeys_the_sign_rule() {
    let tau = 0.75;
    let t_b = solve_switching_time(tau).unwrap();
    let traj = SwitchedTrajectory::new(tau, t_b).unwrap();
    for i in 0..=2000 {
        let t = tau * i as f64 / 2000.0;
        let s = traj.switching(t);
        let b_on = t >= t_b;
        if s > SINGULAR_THRESHOLD {
            assert!(b_on, "s({t}) = {s} but B = 0");
        }
        if s < -SINGULAR_THRESHOLD {
            assert!(!b_on, "s({t}) = {s} but B = 1");
        }
    }
}

#[test]
fn corner_spectra_match_direct_propagation() {
    let spectra = CornerSpectra::new(Case::Minus).unwrap();
    let h = build_hamiltonian(&ControlParams::new(1.0, 1.0, Case::Minus).unwrap()).unwrap();
    let direct = propagator(&h, 0.37).unwrap();
    assert!(linalg::max_abs_diff(&spectra.both_on().exp_i(0.37), direct.matrix()) < 1e-14);
}
