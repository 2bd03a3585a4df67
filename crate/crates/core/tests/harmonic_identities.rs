use bpire_core::env::{presets, EnvModel};
use bpire_core::harmonic::{harmonic_check, renewal_u, renewal_u_horizon, Which};
use bpire_core::McPlan;

fn centred(name: &str) -> EnvModel {
    let env = presets::by_name(name).unwrap();
    env.tilt(env.classify().unwrap().delta)
}

const CAP: u64 = 10_000_000;
const SAMPLES: u64 = 2_000;

#[test]
fn harmonicity_on_centred_walks() {
    for (idx, name) in ["e_weak", "e_inter", "e_weak2"].iter().enumerate() {
        let env = centred(name);
        for (j, x) in [0.0, 1.0, 2.0].into_iter().enumerate() {
            let plan = McPlan::new(100 * idx as u64 + j as u64, 16);
            let u = harmonic_check(Which::U, &env, x, CAP, SAMPLES, &plan).unwrap();
            assert!(u.residual.value.abs() <= 3.0 * u.residual.se, "{name} U x={x}: {u:?}");
            let v = harmonic_check(Which::V, &env, -x, CAP, SAMPLES, &plan.derive(7)).unwrap();
            assert!(v.residual.value.abs() <= 3.0 * v.residual.se, "{name} V x={}: {v:?}", -x);
        }
    }
}

#[test]
fn ladder_and_horizon_estimators_agree() {
    for name in ["e_weak", "e_weak2"] {
        let env = centred(name);
        for x in [0.5, 1.5] {
            let a = renewal_u(&env, x, CAP, 4_000, &McPlan::new(1, 16)).unwrap();
            let b = renewal_u_horizon(&env, x, 10_000, 4_000, &McPlan::new(2, 16)).unwrap();
            let se = (a.se * a.se + b.se * b.se).sqrt();
            assert!((a.value - b.value).abs() <= 3.0 * se, "{name} x={x}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn renewal_function_is_nondecreasing_on_a_grid() {
    let env = centred("e_weak2");
    let plan = McPlan::new(3, 16);
    let vals: Vec<f64> = [0.25, 0.75, 1.5, 3.0]
        .iter()
        .map(|&x| renewal_u(&env, x, CAP, 2_000, &plan).unwrap().value)
        .collect();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
}
