use bpire_core::laws::{compose_chain, compose_chain_complement, lf_compose, PgfLaw};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = PgfLaw> {
    prop_oneof![
        (0.0f64..5.0, 0.01f64..1.0).prop_map(|(b, u)| PgfLaw::linear_fractional(u * (1.0 + b), b).unwrap()),
        (0.01f64..8.0).prop_map(|l| PgfLaw::poisson(l).unwrap()),
        (0.0f64..0.95).prop_map(|q| PgfLaw::geometric(q).unwrap()),
        prop::collection::vec(0.0f64..1.0, 1..8)
            .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| {
                let t: f64 = w.iter().sum();
                PgfLaw::table(w.iter().map(|x| x / t).collect()).unwrap()
            }),
    ]
}

fn lf() -> impl Strategy<Value = PgfLaw> {
    (0.0f64..5.0, 0.01f64..1.0).prop_map(|(b, u)| PgfLaw::linear_fractional(u * (1.0 + b), b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn eval_at_one_is_one(f in law()) {
        prop_assert!((f.eval(1.0) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn eval_is_monotone_and_in_unit_interval(f in law(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (f.eval(lo), f.eval(hi));
        prop_assert!((0.0..=1.0 + 1e-15).contains(&fl));
        prop_assert!(fl <= fh + 1e-15);
        prop_assert!((f.eval(0.0) - f.p0()).abs() <= 1e-12);
    }

    #[test]
    fn complement_matches_eval(f in law(), s in 0.0f64..1.0) {
        prop_assert!((1.0 - f.eval(s) - f.eval_complement(1.0 - s)).abs() <= 1e-12);
    }

    #[test]
    fn lf_compose_matches_iterated_eval(f in lf(), g in lf()) {
        let (a, b) = (f.as_lf().unwrap(), g.as_lf().unwrap());
        let c = lf_compose(a, b);
        for i in 0..100 {
            let s = i as f64 / 99.0;
            prop_assert!((c.eval(s) - f.eval(g.eval(s))).abs() <= 1e-12);
        }
    }

    #[test]
    fn compose_chain_at_zero_is_monotone(laws in prop::collection::vec(law(), 1..12)) {
        // F_{0,n}(0) is nondecreasing in n
        let mut prev = 0.0;
        for n in 1..=laws.len() {
            let v = compose_chain(&laws[..n], 0.0);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn chain_paths_agree(laws in prop::collection::vec(lf(), 1..10), s in 0.0f64..1.0) {
        let fast = compose_chain_complement(&laws, 1.0 - s);
        let slow = laws.iter().rev().fold(1.0 - s, |v, f| f.eval_complement(v));
        prop_assert!((fast - slow).abs() <= 1e-12);
    }

    #[test]
    fn mean_is_derivative_at_one(f in law()) {
        let h = 1e-6;
        let d = (f.eval(1.0) - f.eval(1.0 - h)) / h;
        prop_assert!((d - f.mean()).abs() <= 1e-4 * (1.0 + f.mean()) + 1e-4 * f.second_moment());
    }
}

#[test]
fn theta_of_half_half_lf() {
    let f = PgfLaw::linear_fractional(0.5, 0.5).unwrap();
    assert!((f.theta(1).unwrap() - 4.0).abs() <= 1e-12);
}
