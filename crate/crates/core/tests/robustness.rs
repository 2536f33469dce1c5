// SPDX-License-Identifier: Apache-2.0

use gmon_control::dynamics::Case;
use gmon_control::optimizer::min_time_search;
use gmon_control::robustness::{analytic_mean, monte_carlo, sweep, NominalProtocol, TimingJitter};

const SAMPLES: usize = 100_000;
const SEED: u64 = 1;

fn nominal() -> NominalProtocol {
    let m = min_time_search(Case::Minus, 1e-6, 1e-4).unwrap();
    NominalProtocol::from_min_time(&m).unwrap()
}

#[test]
fn nominal_protocol_is_exact() {
    let n = nominal();
    assert!(n.perturbed_error(&TimingJitter::default()).unwrap() < 1e-6);
}

#[test]
fn mean_and_spread_at_two_percent() {
    let s = monte_carlo(&nominal(), 0.02, SAMPLES, SEED).unwrap();
    let mean = s.mean_over_eps2();
    let std = s.std_over_eps2();
    assert!((mean - 2.0 / 3.0).abs() <= 0.02 * 2.0 / 3.0, "{mean}");
    assert!((std - 0.647).abs() <= 0.05 * 0.647, "{std}");
}

#[test]
fn ratio_to_leading_order_approaches_one() {
    let n = nominal();
    for &eps in &[0.005, 0.01, 0.02] {
        let r = monte_carlo(&n, eps, SAMPLES, SEED).unwrap().mean_error / analytic_mean(eps);
        assert!((r - 1.0).abs() < 0.01, "ε={eps}: {r}");
    }
}

#[test]
fn second_order_expansion_matches_monte_carlo() {
    let n = nominal();
    let eps = 0.005;
    let mc = monte_carlo(&n, eps, SAMPLES, SEED).unwrap().mean_error;
    assert!((n.second_order_mean(eps) / mc - 1.0).abs() < 0.01);
}

#[test]
fn both_statistics_scale_quadratically() {
    let r = sweep(&nominal(), &[0.005, 0.01, 0.02, 0.04], SAMPLES, SEED).unwrap();
    assert_eq!(r.rows.len(), 4);
    let mean = r.mean_exponent.unwrap();
    let std = r.std_exponent.unwrap();
    assert!((mean - 2.0).abs() <= 0.05, "{mean}");
    assert!((std - 2.0).abs() <= 0.05, "{std}");
}
