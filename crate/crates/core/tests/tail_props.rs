use bpire_core::env::presets;
use bpire_core::kernel::{kernel_exact, kernel_mc_series, r1, KernelSeries, McMode};
use bpire_core::tail::{case1_constant, find_root, survival_from_kernel, t_enclosure, RootOptions, DecayCase, BAND_K};
use bpire_core::McPlan;
use proptest::prelude::*;

fn geometric(n: usize) -> KernelSeries {
    let h: Vec<f64> = (0..=n).map(|i| 0.5 * 0.5f64.powi(i as i32 + 1)).collect();
    KernelSeries::synthetic(h, vec![0.0; n + 1], 0.5, 0.5).unwrap()
}

#[test]
fn geometric_kernel_three_ways() {
    let k = geometric(200);
    let curve = survival_from_kernel(&k, 0.5, 50).unwrap();
    let cert = find_root(&k, &RootOptions::default()).unwrap();
    let c = case1_constant(&k, 0.5, cert.r).unwrap();
    for n in 2..=50 {
        let closed = 0.125 * 0.75f64.powi(n as i32 - 2);
        assert!((curve.value(n).unwrap() - closed).abs() <= 1e-12);
        assert!((c.predict(cert.r, n) - closed).abs() <= 1e-12);
    }
}

#[test]
fn recurrence_reproduces_r1() {
    for name in presets::NAMES {
        let env = presets::by_name(name).unwrap();
        let k = kernel_exact(&env, 3).unwrap();
        let r = r1(&env).unwrap();
        let c = survival_from_kernel(&k, r, 3).unwrap();
        assert_eq!(c.value(1), Some(r));
        assert!((k.hstar[0].value - r).abs() <= 1e-15);
    }
}

#[test]
fn exact_curves_are_monotone() {
    for name in presets::NAMES {
        let env = presets::by_name(name).unwrap();
        let k = kernel_exact(&env, 16).unwrap();
        let c = survival_from_kernel(&k, r1(&env).unwrap(), 17).unwrap();
        assert!(c.is_monotone(), "{name}");
        assert!(c.points.iter().all(|p| (0.0..=1.0).contains(&p.value)));
    }
}

#[test]
fn certificates_bracket_the_root() {
    let d1 = kernel_exact(&presets::d1(), 120).unwrap();
    let cert = find_root(&d1, &RootOptions::default()).unwrap();
    assert!(t_enclosure(&d1, cert.bracket.lo, BAND_K).hi < 1.0);
    assert!(t_enclosure(&d1, cert.bracket.hi, BAND_K).lo > 1.0);
    assert!(cert.bracket.width() <= 1e-9 * cert.r);

    let env = presets::e_strong2();
    let mc = kernel_mc_series(&env, 250, 50_000, McMode::Tilted, &McPlan::new(3, 16)).unwrap();
    let opts = RootOptions { accept_rel_width: 5e-2, ..RootOptions::default() };
    let cert = find_root(&mc, &opts).unwrap();
    assert_eq!(cert.case, DecayCase::Case1);
    assert!(cert.r > 1.0 && cert.r < 1.0 / mc.gamma);
    assert!(t_enclosure(&mc, cert.bracket.lo, BAND_K).hi < 1.0);
    assert!(t_enclosure(&mc, cert.bracket.hi, BAND_K).lo > 1.0);
}

#[test]
fn short_kernel_is_undecided_with_estimate() {
    let k = kernel_exact(&presets::d1(), 20).unwrap();
    match find_root(&k, &RootOptions::default()) {
        Err(bpire_core::Error::Undecided { required_n: Some(n), .. }) => assert!(n > 20),
        other => panic!("{other:?}"),
    }
}

#[test]
fn case1_constant_is_stable_under_extension() {
    let env = presets::d1();
    let r1v = r1(&env).unwrap();
    let k100 = kernel_exact(&env, 100).unwrap();
    let k110 = kernel_exact(&env, 110).unwrap();
    let r = find_root(&k100, &RootOptions::default()).unwrap().r;
    let a = case1_constant(&k100, r1v, r).unwrap().value;
    let b = case1_constant(&k110, r1v, r).unwrap().value;
    assert!((a - b).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    /// Any rational kernel `H_n = c q^{n+1}` with `H* = 0` has the closed form
    /// `R_n = R_1 c q (q + c q)^{n-2}` for `n >= 2`.
    #[test]
    fn geometric_family(c in 0.05f64..0.9, q in 0.1f64..0.9, r1 in 0.0f64..1.0) {
        let n_max = 40;
        let h: Vec<f64> = (0..=n_max).map(|i| c * q.powi(i as i32 + 1)).collect();
        let k = KernelSeries::synthetic(h, vec![0.0; n_max + 1], q, c).unwrap();
        let curve = survival_from_kernel(&k, r1, 30).unwrap();
        let rho = q * (1.0 + c);
        for n in 2..=30 {
            let want = r1 * c * q * rho.powi(n as i32 - 2);
            prop_assert!((curve.value(n).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}
