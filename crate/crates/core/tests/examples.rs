//! Frozen hand-computed values for the class estimators and the harness.

use ainfty::classes::{self, ClassId, WeightRole, WindowFamily};
use ainfty::dyadic::{GMode, IntegerInterval, PrefixSums, Transform};
use ainfty::harness::{self, ClassConstants, EdgeId, HarnessConfig, TransferOutcome, VerdictStatus};
use ainfty::oracle;
use ainfty::orbit::OrbitSample;

const ALL_T: [Transform; 5] = [
    Transform::Identity,
    Transform::Log,
    Transform::ApDual(2.0),
    Transform::Power(2.0),
    Transform::PowerExcess(0.5),
];

fn unit(omega: &[f64]) -> PrefixSums {
    PrefixSums::build(&OrbitSample::unweighted(omega.to_vec()).unwrap(), &ALL_T, GMode::Unweighted).unwrap()
}

fn weighted(omega: &[f64], g: &[f64]) -> PrefixSums {
    PrefixSums::build(&OrbitSample::new(omega.to_vec(), g.to_vec()).unwrap(), &ALL_T, GMode::Weighted).unwrap()
}

fn whole(n: usize) -> IntegerInterval {
    IntegerInterval { start: 0, len: n }
}

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "{a} != {b}");
}

#[test]
fn muckenhoupt_of_one_four() {
    close(classes::ap_window(&unit(&[1.0, 4.0]), whole(2), 2.0).unwrap(), 1.5625);
    let r = classes::ap_constant(&unit(&[2.5; 5]), &WindowFamily::all(5), 2.0).unwrap();
    close(r.value.unwrap(), 1.0);
}

#[test]
fn reverse_holder_unweighted_and_weighted() {
    close(classes::rh_window(&unit(&[1.0, 3.0]), whole(2), 2.0).unwrap(), 5f64.sqrt() / 2.0);
    close(
        classes::rh_window(&weighted(&[1.0, 3.0], &[1.0, 3.0]), whole(2), 2.0).unwrap(),
        7f64.sqrt() / 2.5,
    );
}

#[test]
fn exp_and_sw_of_one_four() {
    let ps = unit(&[1.0, 4.0]);
    close(classes::exp_window(&ps, whole(2)).unwrap(), 1.25);
    close(classes::sw_window(&ps, whole(2), 0.5).unwrap(), 2.5 / 2.25);
}

#[test]
fn avg_delta_of_one_hundred() {
    close(classes::delta_window(&unit(&[1.0, 100.0]), whole(2), 0.1), 0.5);
    let r = classes::avg_delta_curve(&unit(&[7.0; 4]), &WindowFamily::all(4), &classes::default_gamma_grid()).unwrap();
    assert!(r.curve.unwrap().points.iter().all(|p| p[1] == 0.0));
}

#[test]
fn lambda_of_four_one_one() {
    let r = classes::lambda_constant(&unit(&[4.0, 1.0, 1.0]), &WindowFamily::new(classes::WindowMode::All, 3, 3), 0.5).unwrap();
    assert_eq!(r.value, Some(2.0));
    assert_eq!(r.witness.unwrap().lambda, Some(2.0));
}

#[test]
fn cf_frontier_of_four_two_one() {
    let c = classes::frontier_curve(&unit(&[4.0, 2.0, 1.0]), classes::FrontierKind::Cf, whole(3)).unwrap();
    let want = [[1.0 / 3.0, 4.0 / 7.0], [2.0 / 3.0, 6.0 / 7.0], [1.0, 1.0]];
    for (p, w) in c.points.iter().zip(want) {
        close(p[0], w[0]);
        close(p[1], w[1]);
    }
    let f = oracle::subset_frontier(&unit(&[4.0, 2.0, 1.0]), whole(3), classes::FrontierKind::Cf).unwrap();
    close(f.max_v_within(1.0 / 3.0, 1e-12), 4.0 / 7.0);
}

#[test]
fn cf_check_on_constant_weight_passes() {
    let r = classes::cf_check(&unit(&[3.0; 5]), &WindowFamily::all(5), 1.01, 0.7).unwrap();
    assert!(r.passed);
}

#[test]
fn log_of_one_three() {
    close(classes::log_window(&unit(&[1.0, 3.0]), whole(2)), 1.5 * 1.5f64.ln() / 2.0);
    close(classes::log_window(&unit(&[2.0; 3]), whole(3)), 0.0);
}

#[test]
fn medians() {
    assert_eq!(classes::median(&[5.0, 1.0, 3.0], whole(3)), 3.0);
    close(classes::med_window(&unit(&[5.0, 1.0, 3.0]), whole(3)), 1.0);
    assert_eq!(classes::median(&[1.0, 2.0, 3.0, 4.0], whole(4)), 2.0);
}

#[test]
fn doubling_examples() {
    let r = classes::doubling_constant(&unit(&[1.0; 8]), &WindowFamily::all(8), WeightRole::Omega).unwrap();
    assert_eq!(r.value, Some(3.0));
    assert_eq!(r.witness.as_ref().unwrap().window.len, 3);
    assert_eq!(
        classes::doubling_window(&unit(&[1.0, 1.0, 2.0, 4.0]), whole(4), WeightRole::Omega).unwrap().0,
        4.0
    );
}

#[test]
fn transfer_examples() {
    let feasible = |edge, src| match harness::transfer_constants(edge, &src, None).unwrap() {
        TransferOutcome::Feasible { constants } => constants,
        other => panic!("{other:?}"),
    };
    assert_eq!(
        feasible(EdgeId::T3, ClassConstants::ReverseHolder { c: 1.118, q: 2.0 }),
        ClassConstants::CoifmanFefferman { c: 1.118, eps: 0.5 }
    );
    assert_eq!(
        feasible(EdgeId::T6, ClassConstants::Muckenhoupt { alpha: 0.5, beta: 0.5 }),
        ClassConstants::AvgDelta { gamma: 0.5, delta: 0.5 }
    );
    match feasible(EdgeId::T7, ClassConstants::ReverseHolder { c: 1.0, q: 2.0 }) {
        ClassConstants::Log { c } => close(c, 8.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn dual_reverse_holder_bounds_a2_of_one_four() {
    // RH_2 of omega^{-1} against omega on (1, 4) is 1.25, and 1.25^2 equals A_2.
    let s = OrbitSample::unweighted(vec![1.0, 4.0]).unwrap();
    let dual = PrefixSums::build(&s.dual(), &[Transform::Identity, Transform::Power(2.0)], GMode::Weighted).unwrap();
    close(classes::rh_window(&dual, whole(2), 2.0).unwrap(), 1.25);
    let v = harness::verify_sample(&s, &HarnessConfig::default(), &[EdgeId::T14]).unwrap();
    assert_eq!(v[0].status, VerdictStatus::Pass);
    close(v[0].target_measured.unwrap(), 1.5625);
    close(v[0].bound.unwrap(), 1.5625);
}

#[test]
fn constant_weight_passes_every_edge() {
    let s = OrbitSample::unweighted(vec![2.0; 9]).unwrap();
    let v = harness::verify_sample(&s, &HarnessConfig::default(), &EdgeId::ALL).unwrap();
    assert_eq!(v.len(), 15);
    assert!(v.iter().all(|x| x.status == VerdictStatus::Pass), "{v:?}");
}

#[test]
fn duality_hand_case() {
    let out = oracle::duality_check(&OrbitSample::unweighted(vec![1.0, 9.0]).unwrap(), 0.5, 0.4).unwrap();
    assert!(out.agree());
}

#[test]
fn every_class_has_a_name() {
    for c in ClassId::ALL {
        assert_eq!(c.name().parse::<ClassId>().unwrap(), c);
    }
}
