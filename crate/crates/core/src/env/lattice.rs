//! Lattice detection for the support of the walk increments.

use crate::math::{fabs, floor};

const DENOM_MAX: f64 = 1e6;
const RATIO_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatticeVerdict {
    /// Every value is zero.
    Degenerate,
    /// All values are integer multiples of the span.
    Lattice(f64),
    Nonlattice,
}

/// Smallest denominator `q <= 1e6` among the continued-fraction convergents
/// `p/q` of `r` with `|r q - p| <= 1e-9`.
fn rational_denominator(r: f64) -> Option<f64> {
    let (mut h_prev, mut h) = (1.0f64, floor(r));
    let (mut k_prev, mut k) = (0.0f64, 1.0f64);
    let mut frac = r - floor(r);
    loop {
        if fabs(r * k - h) <= RATIO_TOL {
            return Some(k);
        }
        if frac < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = floor(inv);
        frac = inv - a;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        if k_next > DENOM_MAX {
            return None;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
}

/// Largest `d` such that every `x` is an integer multiple of `d`, up to the
/// rationalization tolerance.
pub fn lattice_span(xs: &[f64]) -> LatticeVerdict {
    let mut nonzero = xs.iter().copied().filter(|x| fabs(*x) > ZERO_TOL);
    let Some(first) = nonzero.next() else {
        return LatticeVerdict::Degenerate;
    };
    let mut d = fabs(first);
    for x in nonzero {
        match rational_denominator(fabs(x) / d) {
            Some(q) => d /= q,
            None => return LatticeVerdict::Nonlattice,
        }
    }
    if d <= ZERO_TOL {
        return LatticeVerdict::Nonlattice;
    }
    let on_grid = xs.iter().all(|x| {
        let k = *x / d;
        fabs(k - floor(k + 0.5)) <= RATIO_TOL
    });
    if on_grid {
        LatticeVerdict::Lattice(d)
    } else {
        LatticeVerdict::Nonlattice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_steps() {
        assert_eq!(lattice_span(&[1.0, -1.0]), LatticeVerdict::Lattice(1.0));
        match lattice_span(&[2.0, -3.0, 4.0]) {
            LatticeVerdict::Lattice(d) => assert!((d - 1.0).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        match lattice_span(&[0.5, -0.75]) {
            LatticeVerdict::Lattice(d) => assert!((d - 0.25).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn irrational_ratio() {
        let xs = [1.5f64.ln(), 0.3f64.ln()];
        assert_eq!(lattice_span(&xs), LatticeVerdict::Nonlattice);
        assert_eq!(lattice_span(&[1.0, -core::f64::consts::SQRT_2]), LatticeVerdict::Nonlattice);
    }

    #[test]
    fn single_and_zero() {
        assert!(matches!(lattice_span(&[0.5f64.ln()]), LatticeVerdict::Lattice(_)));
        assert_eq!(lattice_span(&[0.0]), LatticeVerdict::Degenerate);
        assert_eq!(lattice_span(&[0.0, 2.0]), LatticeVerdict::Lattice(2.0));
    }
}
