//! Float helpers routed through `libm` so results do not depend on the
//! platform math library.

pub(crate) use libm::{exp, expm1, fabs, floor, lgamma, log, log1p, pow, sqrt};

/// `1 - (1 - v)^z` with full relative precision for small `v`.
pub(crate) fn one_minus_pow_complement(v: f64, z: f64) -> f64 {
    if v >= 1.0 {
        return 1.0;
    }
    -expm1(z * log1p(-v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_power_small_v() {
        let v = 1e-18;
        let got = one_minus_pow_complement(v, 3.0);
        assert!((got / (3.0 * v) - 1.0).abs() < 1e-12);
        assert_eq!(one_minus_pow_complement(1.0, 2.0), 1.0);
    }
}
