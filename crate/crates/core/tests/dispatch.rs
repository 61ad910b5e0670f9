mod common;

use ffr_core::dispatch::{closed_form_sensitivity, min_commitment, unit_sensitivity, Commitment, Method, UnitRecord};
use ffr_core::io::read_fleet;
use ffr_core::turbine::TurbineParams;
use ffr_core::Error;
use proptest::prelude::*;

fn table1() -> Vec<UnitRecord> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table1.csv");
    read_fleet(std::fs::File::open(path).unwrap()).unwrap()
}

fn rec(id: String, dp: f64, s: f64) -> UnitRecord {
    UnitRecord {
        id,
        v_w: 10.0,
        delta_p_max: dp,
        sensitivity: s,
    }
}

/// Smallest feasible cardinality and the best uplift at that cardinality,
/// by enumerating every subset.
fn brute_force(units: &[UnitRecord], required: f64) -> Option<(usize, f64)> {
    let n = units.len();
    let mut best: Option<(usize, f64)> = None;
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        let sum: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| units[i].uplift()).sum();
        if sum >= required {
            best = match best {
                Some((bk, bs)) if bk < k || (bk == k && bs >= sum) => Some((bk, bs)),
                _ => Some((k, sum)),
            };
        }
    }
    best
}

#[test]
fn table_one_needs_units_one_and_two() {
    let units = table1();
    assert_eq!(units.len(), 5);
    let c = min_commitment(&units, 0.09).unwrap();
    let s = c.schedule().unwrap();
    assert_eq!(s.committed, ["1", "2"]);
    assert_eq!(s.method, Method::Exhaustive);
    assert!((s.predicted_uplift - (0.3347 * 0.1526 + 0.2652 * 0.2089)).abs() < 1e-12);
    assert!(s.predicted_uplift >= 0.09);
    // no single unit suffices and {1, 2} is the best pair
    assert!(units.iter().all(|u| u.uplift() < 0.09));
    let pair = |a: usize, b: usize| units[a].uplift() + units[b].uplift();
    for a in 0..5 {
        for b in a + 1..5 {
            assert!(pair(a, b) <= pair(0, 1));
        }
    }
    assert_eq!(brute_force(&units, 0.09).unwrap().0, 2);
}

#[test]
fn trivial_requirements() {
    let units = table1();
    let s = min_commitment(&units, 0.0).unwrap();
    assert!(s.schedule().unwrap().committed.is_empty());
    let total: f64 = units.iter().map(UnitRecord::uplift).sum();
    match min_commitment(&units, total + 0.01).unwrap() {
        Commitment::Infeasible { achievable_uplift, .. } => assert!((achievable_uplift - total).abs() < 1e-12),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn zero_capacity_unit_adds_nothing() {
    assert_eq!(rec("z".into(), 0.0, 0.25).uplift(), 0.0);
}

#[test]
fn invalid_fleets_rejected() {
    assert!(matches!(min_commitment(&[], 0.1), Err(Error::Input(_))));
    assert!(min_commitment(&[rec("a".into(), -0.1, 0.1)], 0.0).is_err());
    assert!(min_commitment(&[rec("a".into(), 0.1, 0.1)], -1.0).is_err());
}

#[test]
fn large_fleets_fall_back_to_greedy() {
    let units: Vec<UnitRecord> = (0..30).map(|i| rec(format!("u{i:02}"), 0.01 * (i % 7) as f64, 0.1)).collect();
    let s = min_commitment(&units, 0.05).unwrap();
    let s = s.schedule().unwrap();
    assert_eq!(s.method, Method::Greedy);
    assert!(s.predicted_uplift >= 0.05);
}

fn fleet(max: usize) -> impl Strategy<Value = Vec<UnitRecord>> {
    prop::collection::vec((0.0f64..0.5, 0.0f64..0.3), 1..=max).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (dp, s))| rec(format!("u{i}"), dp, s))
            .collect()
    })
}

proptest! {
    #[test]
    fn matches_exhaustive_optimum(units in fleet(12), frac in 0.0f64..1.1) {
        let total: f64 = units.iter().map(UnitRecord::uplift).sum();
        let required = frac * total;
        let got = min_commitment(&units, required).unwrap();
        match (brute_force(&units, required), got) {
            (Some((k, best)), Commitment::Feasible(s)) => {
                prop_assert_eq!(s.committed.len(), k);
                prop_assert!((s.predicted_uplift - best).abs() <= 1e-12);
                prop_assert!(s.predicted_uplift >= required);
            }
            (None, Commitment::Infeasible { .. }) => {}
            (b, g) => prop_assert!(false, "brute force {:?}, scheduler {:?}", b, g),
        }
    }

    #[test]
    fn scaling_sensitivities_keeps_selection(units in fleet(10), frac in 0.0f64..1.0, e in -3i32..4) {
        let c = 2f64.powi(e);
        let total: f64 = units.iter().map(UnitRecord::uplift).sum();
        let required = frac * total;
        let scaled: Vec<UnitRecord> = units
            .iter()
            .map(|u| UnitRecord { sensitivity: u.sensitivity * c, ..u.clone() })
            .collect();
        let a = min_commitment(&units, required).unwrap();
        let b = min_commitment(&scaled, required * c).unwrap();
        prop_assert_eq!(
            a.schedule().map(|s| s.committed.clone()),
            b.schedule().map(|s| s.committed.clone())
        );
    }

    #[test]
    fn feasible_schedules_meet_requirement(units in fleet(30), frac in 0.0f64..1.2) {
        let total: f64 = units.iter().map(UnitRecord::uplift).sum();
        let required = frac * total;
        if let Commitment::Feasible(s) = min_commitment(&units, required).unwrap() {
            let sum: f64 = units
                .iter()
                .filter(|u| s.committed.contains(&u.id))
                .map(UnitRecord::uplift)
                .sum();
            prop_assert!(sum >= required);
            prop_assert!(s.predicted_uplift >= required);
        }
    }
}

#[test]
fn sensitivity_is_stable_under_probe_doubling() {
    let scenario = common::single_unit(10.0, 0.1, 10.0, 20.0, 30.0);
    let a = unit_sensitivity(&scenario, 0, 0.01).unwrap();
    let b = unit_sensitivity(&scenario, 0, 0.02).unwrap();
    assert!(a > 0.0);
    assert!(((a - b) / a).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn sensitivity_matches_closed_form_for_a_stiff_rotor() {
    // a rotor heavy enough that the surge does not sag, triggered at once,
    // injects the flat plateau the closed form assumes
    let mut scenario = common::single_unit(10.0, 0.1, 10.0, 20.0, 30.0);
    scenario.deadband = 0.0;
    let t = &mut scenario.fleet[0].turbine;
    *t = TurbineParams { h_t: 500.0, ..TurbineParams::reference() };
    let cosim = unit_sensitivity(&scenario, 0, 0.01).unwrap();
    let closed = closed_form_sensitivity(&scenario.sfr).unwrap();
    assert!(((cosim - closed) / closed).abs() < 0.10, "co-sim {cosim} vs closed form {closed}");
}

#[test]
fn oversized_probe_rejected() {
    let scenario = common::single_unit(10.0, 0.1, 10.0, 20.0, 30.0);
    // 0.8 pu on a 3000 MVA farm is 0.033 pu of the system, above the 0.03 event
    assert!(matches!(unit_sensitivity(&scenario, 0, 0.8), Err(Error::ProbeTooLarge { .. })));
    assert!(unit_sensitivity(&scenario, 3, 0.01).is_err());
}
