//! Named example environments.

use alloc::vec::Vec;

use super::EnvModel;
use crate::laws::PgfLaw;
use crate::math::exp;

pub const NAMES: &[&str] = &["d1", "e_weak", "e_inter", "e_weak2", "e_strong2", "e_case2"];

fn lf(m: f64, b: f64) -> PgfLaw {
    PgfLaw::linear_fractional(m, b).expect("preset law")
}

fn poisson(lambda: f64) -> PgfLaw {
    PgfLaw::poisson(lambda).expect("preset law")
}

fn build(triples: Vec<(PgfLaw, PgfLaw, f64)>) -> EnvModel {
    EnvModel::from_triples(triples).expect("preset environment")
}

/// Constant environment: LF(1/2, 1/2) offspring, Poisson(1) immigration.
pub fn d1() -> EnvModel {
    build(alloc::vec![(lf(0.5, 0.5), poisson(1.0), 1.0)])
}

fn pm1(p_up: f64) -> EnvModel {
    let e = core::f64::consts::E;
    build(alloc::vec![
        (lf(e, 2.0), poisson(1.0), p_up),
        (lf(1.0 / e, 0.5), poisson(1.0), 1.0 - p_up),
    ])
}

/// Walk steps of +-1, weakly subcritical.
pub fn e_weak() -> EnvModel {
    pm1(0.3)
}

/// Walk steps of +-1 at the intermediate boundary.
pub fn e_inter() -> EnvModel {
    pm1(1.0 / (1.0 + exp(2.0)))
}

fn two_state(up: PgfLaw, imm: PgfLaw) -> EnvModel {
    build(alloc::vec![(up, imm.clone(), 0.3), (lf(0.3, 0.5), imm, 0.7)])
}

/// Non-lattice, weakly subcritical.
pub fn e_weak2() -> EnvModel {
    two_state(lf(2.5, 2.0), poisson(1.0))
}

/// Non-lattice, strongly subcritical.
pub fn e_strong2() -> EnvModel {
    two_state(lf(1.5, 1.0), poisson(1.0))
}

/// Like `e_weak2` with sparse immigration, so the kernel transform stays
/// below one at the tilt boundary.
pub fn e_case2() -> EnvModel {
    two_state(lf(2.5, 2.0), poisson(0.1))
}

pub fn by_name(name: &str) -> Option<EnvModel> {
    Some(match name {
        "d1" => d1(),
        "e_weak" => e_weak(),
        "e_inter" => e_inter(),
        "e_weak2" => e_weak2(),
        "e_strong2" => e_strong2(),
        "e_case2" => e_case2(),
        _ => return None,
    })
}
