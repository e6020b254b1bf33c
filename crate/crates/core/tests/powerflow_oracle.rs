mod common;

use dgopt_core::powerflow::{solve_horizon, solve_hour, InjectionSet, SolveStatus};
use dgopt_core::profile::HOURS;
use dgopt_core::{HourlySeries, NetworkModel, SeriesKind};
use proptest::prelude::*;

// Computed once with the Newton oracle in tests/common.
const BASE_LOSS_KW: f64 = 202.677126456;
const BASE_VMIN_PU: f64 = 0.9130904794;
const BASE_VDEV_PU: f64 = 1.7009444234;

fn max_dv(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn assert_matches_oracle(net: &NetworkModel, inj: &InjectionSet) {
    let sweep = solve_hour(net, inj).unwrap();
    assert_eq!(sweep.status, SolveStatus::Converged);
    let oracle = common::newton(net, inj);
    let dv = max_dv(&sweep.v_mag, &oracle.v_mag);
    assert!(dv <= 1e-6, "max |dV| = {dv:e}");
    let rel = (sweep.total_loss_kw() - oracle.loss_kw).abs() / oracle.loss_kw;
    assert!(
        rel <= 1e-6,
        "loss {} vs {}",
        sweep.total_loss_kw(),
        oracle.loss_kw
    );
}

#[test]
fn base_case_matches_frozen_oracle_values() {
    let net = NetworkModel::ieee33();
    let sol = solve_hour(&net, &InjectionSet::zeros(33)).unwrap();
    let (bus, v) = sol.min_voltage();
    assert_eq!(net.buses()[bus].id, 18);
    assert!((v - BASE_VMIN_PU).abs() < 1e-6);
    assert!((sol.total_loss_kw() - BASE_LOSS_KW).abs() / BASE_LOSS_KW < 1e-6);
    assert!((sol.voltage_deviation(1.0) - BASE_VDEV_PU).abs() < 1e-6);
    assert_matches_oracle(&net, &InjectionSet::zeros(33));
}

#[test]
fn flat_horizon_is_24_nominal_hours() {
    let net = NetworkModel::ieee33();
    let flat = HourlySeries::constant(SeriesKind::LoadMultiplier, 1.0).unwrap();
    let h = solve_horizon(&net, &flat, &vec![InjectionSet::zeros(33); HOURS]).unwrap();
    assert!((h.total_loss_kwh - 24.0 * BASE_LOSS_KW).abs() < 1e-4);
    assert!((h.vdev_puh - 24.0 * BASE_VDEV_PU).abs() < 1e-5);
}

#[test]
fn power_balance_holds() {
    let net = NetworkModel::ieee33();
    let mut inj = InjectionSet::zeros(33);
    inj.add(18, 600.0, 100.0).unwrap();
    inj.add(25, 300.0, 0.0).unwrap();
    let sol = solve_hour(&net, &inj).unwrap();
    let (p, q) = net.total_demand();
    let p_bal = sol.slack_p_kw + inj.total_p_kw() - p - sol.total_loss_kw();
    let q_bal = sol.slack_q_kvar + inj.total_q_kvar() - q - sol.total_loss_kvar();
    assert!(p_bal.abs() < 1e-5 && q_bal.abs() < 1e-5, "{p_bal} {q_bal}");
}

#[test]
fn losses_grow_with_load() {
    let net = NetworkModel::ieee33();
    let mut prev = 0.0;
    for m in [0.2, 0.4, 0.6, 0.8, 1.0, 1.2] {
        let loss = solve_hour(&net.scale_loads(m).unwrap(), &InjectionSet::zeros(33))
            .unwrap()
            .total_loss_kw();
        assert!(loss > prev);
        prev = loss;
    }
}

fn injections_33() -> impl Strategy<Value = InjectionSet> {
    prop::collection::vec((2usize..=33, 0.0..1500.0f64, -300.0..300.0f64), 0..4).prop_map(|units| {
        let mut inj = InjectionSet::zeros(33);
        for (bus, p, q) in units {
            inj.add(bus, p, q).unwrap();
        }
        inj
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sweep_matches_newton_on_33_bus(inj in injections_33()) {
        assert_matches_oracle(&NetworkModel::ieee33(), &inj);
    }

    #[test]
    fn sweep_matches_newton_on_random_trees(
        n in 2usize..=40,
        parents in prop::collection::vec(0.0..1.0f64, 39),
        loads in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 39),
        imp in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 39),
    ) {
        let net = common::random_tree(n, &parents, &loads, &imp);
        assert_matches_oracle(&net, &InjectionSet::zeros(n));
    }

    #[test]
    fn local_generation_does_not_lower_voltage(bus in 2usize..=33, p in 0.0..800.0f64) {
        let net = NetworkModel::ieee33();
        let base = solve_hour(&net, &InjectionSet::zeros(33)).unwrap();
        let mut inj = InjectionSet::zeros(33);
        inj.add(bus, p, 0.0).unwrap();
        let sol = solve_hour(&net, &inj).unwrap();
        prop_assert!(sol.v_mag[bus - 1] >= base.v_mag[bus - 1] - 1e-12);
    }
}
