use ainfty::classes::{self, ClassConstantReport, WeightRole, WindowFamily, WindowMode};
use ainfty::dyadic::{GMode, PrefixSums, Transform};
use ainfty::orbit::OrbitSample;
use proptest::prelude::*;

const T: [Transform; 3] = [Transform::Identity, Transform::ApDual(2.0), Transform::Power(2.0)];

fn positive(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|k| prop::collection::vec(-4.0f64..4.0, k).prop_map(|v| v.into_iter().map(f64::exp).collect()))
}

fn reports(omega: &[f64], g: &[f64], fam: &WindowFamily) -> Vec<(&'static str, ClassConstantReport)> {
    let s = OrbitSample::new(omega.to_vec(), g.to_vec()).unwrap();
    let ps = PrefixSums::build(&s, &T, GMode::Weighted).unwrap();
    vec![
        ("ap", classes::ap_constant(&ps, fam, 2.0).unwrap()),
        ("rh", classes::rh_constant(&ps, fam, 2.0).unwrap()),
        ("log", classes::log_constant(&ps, fam).unwrap()),
        ("cf", classes::cf_constant(&ps, fam, 0.5).unwrap()),
        ("lambda", classes::lambda_constant(&ps, fam, 0.5).unwrap()),
        ("delta", classes::delta_at(&ps, fam, 0.5).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constants_are_invariant_under_scaling(
        omega in positive(2..=20),
        a in 0.1f64..10.0,
        b in 0.1f64..10.0,
        g_seed in prop::collection::vec(0.2f64..5.0, 20),
    ) {
        let n = omega.len();
        let g = &g_seed[..n];
        let fam = WindowFamily::all(n);
        let scaled_w: Vec<f64> = omega.iter().map(|x| x * a).collect();
        let scaled_g: Vec<f64> = g.iter().map(|x| x * b).collect();
        let base = reports(&omega, g, &fam);
        let other = reports(&scaled_w, &scaled_g, &fam);
        for ((name, x), (_, y)) in base.iter().zip(&other) {
            let (x, y) = (x.value.unwrap(), y.value.unwrap());
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{name}: {x} vs {y}");
        }
    }

    #[test]
    fn witnesses_lie_in_the_family_and_attain_the_value(
        omega in positive(2..=24),
        anchored in any::<bool>(),
        kmin in 1usize..4,
    ) {
        let n = omega.len();
        let kmin = kmin.min(n);
        let mode = if anchored { WindowMode::Anchored } else { WindowMode::All };
        let fam = WindowFamily::new(mode, kmin, n);
        let s = OrbitSample::unweighted(omega.clone()).unwrap();
        let ps = PrefixSums::build(&s, &T, GMode::Weighted).unwrap();
        let windows = fam.windows(n);
        let ap = classes::ap_constant(&ps, &fam, 2.0).unwrap();
        let w = ap.witness.as_ref().unwrap().window;
        prop_assert!(windows.contains(&w));
        prop_assert_eq!(classes::ap_window(&ps, w, 2.0).unwrap(), ap.value.unwrap());
        for other in &windows {
            prop_assert!(classes::ap_window(&ps, *other, 2.0).unwrap() <= ap.value.unwrap());
        }
        let lam = classes::lambda_constant(&ps, &fam, 0.5).unwrap();
        let lw = lam.witness.as_ref().unwrap();
        prop_assert!(windows.contains(&lw.window));
        prop_assert_eq!(classes::lambda_window(&ps, lw.window, 0.5).unwrap().0, lam.value.unwrap());
        if n >= 2 && kmin <= n {
            let fam2 = WindowFamily::new(mode, kmin.max(2), n);
            let d = classes::doubling_constant(&ps, &fam2, WeightRole::Omega).unwrap();
            let dw = d.witness.as_ref().unwrap();
            prop_assert!(dw.window.contains_interval(&dw.child.unwrap()));
            prop_assert!(d.value.unwrap() > 1.0);
        }
    }

    #[test]
    fn frontier_curves_are_valid(omega in positive(1..=16), g in positive(16..=16)) {
        let n = omega.len();
        let s = OrbitSample::new(omega, g[..n].to_vec()).unwrap();
        let ps = PrefixSums::build(&s, &T, GMode::Weighted).unwrap();
        for kind in [classes::FrontierKind::Cf, classes::FrontierKind::Am, classes::FrontierKind::Amhat] {
            let c = classes::frontier_curve(&ps, kind, ainfty::dyadic::IntegerInterval { start: 0, len: n }).unwrap();
            prop_assert!(c.validate().is_ok(), "{kind:?}: {c:?}");
            prop_assert_eq!(*c.points.last().unwrap(), [1.0, 1.0]);
        }
    }

    #[test]
    fn constants_respect_their_floors(omega in positive(1..=20)) {
        let n = omega.len();
        for (name, r) in reports(&omega, &vec![1.0; n], &WindowFamily::all(n)) {
            if let Some(floor) = r.class.floor() {
                prop_assert!(r.value.unwrap() >= floor * (1.0 - 1e-15), "{name}: {:?}", r.value);
            }
        }
    }
}
