//! From kernel series to the life-period tail `R_n = P(zeta > n)`.
//!
//! With `H(s) = sum_{n>=0} H_n s^n` and `H*(s) = sum_{n>=1} H*_n s^n`, the
//! generating function of `R_n` is `(s H*(s) + s R_1) / (1 - s H(s))`, which
//! gives the recurrence
//! `R_n = H*_{n-1} + sum_{m=1}^{n-1} H_{n-1-m} R_m` for `n >= 2`.
//! The decay of `R_n` is governed by the smallest root of `T(r) = r H(r) = 1`
//! on `(1, 1/gamma)`, located here with interval enclosures that account for
//! the truncation of the series and for Monte Carlo error in the kernel.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::env::RegimeKind;
use crate::error::{Error, Result};
use crate::kernel::KernelSeries;
use crate::math::{exp, log, pow, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Recurrence,
    Empirical,
    ClosedForm,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Recurrence => "recurrence",
            Provenance::Empirical => "empirical",
            Provenance::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalPoint {
    pub n: usize,
    pub value: f64,
    pub half_width: f64,
    pub provenance: Provenance,
}

/// `R_1..R_N`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalCurve {
    pub points: Vec<SurvivalPoint>,
}

impl SurvivalCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `R_n` for `n >= 1`.
    pub fn get(&self, n: usize) -> Option<&SurvivalPoint> {
        n.checked_sub(1).and_then(|i| self.points.get(i))
    }

    pub fn value(&self, n: usize) -> Option<f64> {
        self.get(n).map(|p| p.value)
    }

    /// Whether the curve is nonincreasing up to the combined half-widths.
    pub fn is_monotone(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].value <= w[0].value + w[0].half_width + w[1].half_width + 1e-15)
    }
}

/// Half-widths are this many first-order standard errors.
pub const BAND_K: f64 = 3.0;

/// `R_1..R_N` from the recurrence. Kernel standard errors are pushed through
/// the (linear) recurrence to first order, treating entries as independent.
pub fn survival_from_kernel(h: &KernelSeries, r1: f64, n: usize) -> Result<SurvivalCurve> {
    if !(0.0..=1.0).contains(&r1) {
        return Err(Error::Domain(format!("R1 = {r1} outside [0, 1]")));
    }
    let available = h.h.len().min(h.hstar.len());
    if n > available {
        return Err(Error::MissingKernelEntries { needed: n, available });
    }
    let hv = h.h_values();
    let hsv = h.hstar_values();
    let mut r = Vec::with_capacity(n + 1);
    r.push(0.0);
    if n >= 1 {
        r.push(r1);
    }
    for k in 2..=n {
        let conv: f64 = (1..k).map(|m| hv[k - 1 - m] * r[m]).sum();
        r.push(hsv[k - 1] + conv);
    }

    // d R_k / d H_j and d R_k / d H*_j, only when some entry carries an error
    let noisy = h.h.iter().chain(&h.hstar).any(|e| e.se > 0.0);
    let mut var = alloc::vec![0.0; n + 1];
    if noisy && n >= 2 {
        let mut jh: Vec<Vec<f64>> = alloc::vec![Vec::new(); n + 1];
        let mut js: Vec<Vec<f64>> = alloc::vec![Vec::new(); n + 1];
        jh[1] = alloc::vec![0.0; n];
        js[1] = alloc::vec![0.0; n];
        for k in 2..=n {
            let mut dh = alloc::vec![0.0; n];
            let mut ds = alloc::vec![0.0; n];
            for j in 0..=k - 2 {
                dh[j] = r[k - 1 - j];
            }
            ds[k - 1] = 1.0;
            for m in 2..k {
                let c = hv[k - 1 - m];
                if c == 0.0 {
                    continue;
                }
                for j in 0..n {
                    dh[j] += c * jh[m][j];
                    ds[j] += c * js[m][j];
                }
            }
            var[k] = (0..n)
                .map(|j| {
                    let a = dh[j] * h.h[j].se;
                    let b = ds[j] * h.hstar[j].se;
                    a * a + b * b
                })
                .sum();
            jh[k] = dh;
            js[k] = ds;
        }
    }

    let points = (1..=n)
        .map(|k| SurvivalPoint { n: k, value: r[k], half_width: BAND_K * sqrt(var[k]), provenance: Provenance::Recurrence })
        .collect();
    Ok(SurvivalCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DecayCase {
    /// A root `1 < r < 1/gamma` of `r H(r) = 1`; geometric decay `r^{-n}`.
    Case1,
    /// Weakly subcritical with `T(1/gamma) < 1`; decay `gamma^n / n^{3/2}`.
    Case2,
    /// `T(1/gamma)` indistinguishable from 1.
    Case3Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Kernel entries enter the enclosures as `value +- band_k * se`.
    pub band_k: f64,
    /// Largest accepted bracket width relative to `r`.
    pub accept_rel_width: f64,
    /// Half-width of the band around 1 that counts as the boundary case.
    pub boundary_band: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { band_k: BAND_K, accept_rel_width: 1e-9, boundary_band: 1e-4 }
    }
}

/// Outcome of the root search.
///
/// `t1` encloses `T(1/gamma)`. It is rigorous (given the kernel bands) except
/// for weakly subcritical kernels, whose tail beyond `N` at `1/gamma` is
/// bounded through the `n^{-3/2}` profile fitted on the second half of the
/// series; `t1_certified` records which applies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RootCertificate {
    pub case: DecayCase,
    pub r: f64,
    pub bracket: Interval,
    pub t1: Interval,
    pub t1_certified: bool,
    /// Truncation bound added to the upper enclosure at `bracket.hi`.
    pub bound: f64,
    pub n_used: usize,
}

struct Enclosure<'a> {
    h: &'a KernelSeries,
    k: f64,
}

impl Enclosure<'_> {
    fn n(&self) -> usize {
        self.h.n_max()
    }

    /// `sum_{n>N} C gamma^{n+1} r^{n+1}`.
    fn geometric_tail(&self, r: f64) -> f64 {
        let x = self.h.gamma * r;
        if x >= 1.0 {
            return f64::INFINITY;
        }
        self.h.tail_const * pow(x, (self.n() + 2) as f64) / (1.0 - x)
    }

    /// Truncated `T(r)` with kernel entries moved by `sign * k * se`.
    fn partial(&self, r: f64, sign: f64) -> f64 {
        let mut pw = r;
        let mut acc = 0.0;
        for e in &self.h.h {
            acc += (e.value + sign * self.k * e.se).max(0.0) * pw;
            pw *= r;
        }
        acc
    }

    fn at(&self, r: f64) -> Interval {
        Interval { lo: self.partial(r, -1.0), hi: self.partial(r, 1.0) + self.geometric_tail(r) }
    }

    /// Tail of `T(1/gamma)` beyond `N` from the `c (n+1)^{-3/2}` profile.
    fn power_tail_at_inverse_gamma(&self) -> f64 {
        let n = self.n();
        let g_inv = 1.0 / self.h.gamma;
        let c = (n / 2..=n)
            .map(|i| {
                let e = &self.h.h[i];
                (e.value + self.k * e.se) * pow(g_inv, (i + 1) as f64) * pow((i + 1) as f64, 1.5)
            })
            .fold(0.0, f64::max);
        c * 2.0 / sqrt((n + 1) as f64)
    }
}

/// Enclosure of `T(r) = r H(r)` with kernel entries at `value +- band_k * se`
/// and the geometric truncation bound beyond `N`.
pub fn t_enclosure(h: &KernelSeries, r: f64, band_k: f64) -> Interval {
    Enclosure { h, k: band_k }.at(r)
}

fn undecided(reason: String, required_n: Option<usize>) -> Error {
    Error::Undecided { reason, required_n }
}

/// Smallest `N` whose geometric truncation bound at `r` is below `tol`.
fn required_n(h: &KernelSeries, r: f64, tol: f64) -> Option<usize> {
    let x = h.gamma * r;
    if !(x < 1.0) || tol <= 0.0 {
        return None;
    }
    let n = log(tol * (1.0 - x) / h.tail_const) / log(x) - 2.0;
    Some(if n.is_finite() && n > 0.0 { n as usize + 1 } else { 1 })
}

/// Locate the root of `r H(r) = 1` and classify the tail regime.
pub fn find_root(h: &KernelSeries, opts: &RootOptions) -> Result<RootCertificate> {
    if !(h.gamma > 0.0 && h.gamma < 1.0) {
        return Err(Error::Domain(format!("gamma = {} must lie in (0, 1)", h.gamma)));
    }
    let enc = Enclosure { h, k: opts.band_k };
    let n_used = h.n_max();
    let g_inv = 1.0 / h.gamma;
    let weak = h.kind == Some(RegimeKind::Weakly) || h.kind.is_none();

    let partial_t1 = Interval { lo: enc.partial(g_inv, -1.0), hi: enc.partial(g_inv, 1.0) };
    let (t1, t1_certified) = if weak {
        (Interval { lo: partial_t1.lo, hi: partial_t1.hi + enc.power_tail_at_inverse_gamma() }, false)
    } else {
        // strongly and intermediate kernels make H(1/gamma) infinite
        (Interval { lo: partial_t1.lo, hi: f64::INFINITY }, true)
    };

    if weak && h.kind.is_some() && t1.hi < 1.0 {
        return Ok(RootCertificate {
            case: DecayCase::Case2,
            r: g_inv,
            bracket: Interval { lo: g_inv, hi: g_inv },
            t1,
            t1_certified,
            bound: t1.hi - partial_t1.hi,
            n_used,
        });
    }
    if t1.lo <= 1.0 {
        let band = opts.boundary_band;
        if weak && t1.lo >= 1.0 - band && t1.hi <= 1.0 + band {
            return Ok(RootCertificate {
                case: DecayCase::Case3Boundary,
                r: g_inv,
                bracket: Interval { lo: g_inv, hi: g_inv },
                t1,
                t1_certified,
                bound: t1.hi - partial_t1.hi,
                n_used,
            });
        }
        return Err(undecided(
            format!("enclosure [{}, {}] of T(1/gamma) does not separate from 1", t1.lo, t1.hi),
            None,
        ));
    }

    // a root exists in (1, 1/gamma): T is increasing and T(1/gamma) > 1
    let mut lo = 1.0;
    let at_one = enc.at(lo);
    if at_one.hi >= 1.0 {
        return Err(undecided(
            format!("cannot certify T(1) < 1 (upper enclosure {})", at_one.hi),
            required_n(h, 1.0, 1.0 - at_one.lo),
        ));
    }
    let mut hi = g_inv;
    for _ in 0..400 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let t = enc.at(mid);
        if t.lo > 1.0 {
            hi = mid;
        } else if t.hi < 1.0 {
            lo = mid;
        } else {
            break;
        }
    }
    let width = hi - lo;
    if width > opts.accept_rel_width * hi {
        let se_part = enc.partial(hi, 1.0) - enc.partial(hi, -1.0);
        let trunc = enc.geometric_tail(hi);
        let reason = format!(
            "root bracket [{lo}, {hi}] wider than {} relative (band from kernel errors {se_part:e}, truncation {trunc:e})",
            opts.accept_rel_width
        );
        let need = if trunc > se_part { required_n(h, hi, 0.5 * opts.accept_rel_width) } else { None };
        return Err(undecided(reason, need));
    }
    let r = central_root(&enc, lo, hi);
    Ok(RootCertificate {
        case: DecayCase::Case1,
        r,
        bracket: Interval { lo, hi },
        t1,
        t1_certified,
        bound: enc.geometric_tail(hi),
        n_used,
    })
}

/// Root of the truncated central `T` inside the certified bracket.
fn central_root(enc: &Enclosure<'_>, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if enc.partial(mid, 0.0) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The prefactor `(r H*(r) + r R_1) / (H(r) + r H'(r))` with an enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Case1Constant {
    pub value: f64,
    pub enclosure: Interval,
}

impl Case1Constant {
    /// `value * r^{-n-1}`.
    pub fn predict(&self, r: f64, n: usize) -> f64 {
        self.value * pow(r, -((n + 1) as f64))
    }
}

pub fn case1_constant(h: &KernelSeries, r1: f64, r: f64) -> Result<Case1Constant> {
    let n = h.n_max();
    let x = h.gamma * r;
    if !(r > 0.0) || x >= 1.0 {
        return Err(Error::Domain(format!("r = {r} must lie in (0, 1/gamma)")));
    }
    let k = BAND_K;
    let (mut num, mut num_lo, mut num_hi) = (r * r1, r * r1, r * r1);
    let (mut den, mut den_lo, mut den_hi) = (0.0, 0.0, 0.0);
    let mut pw = 1.0;
    for i in 0..=n {
        let e = &h.h[i];
        let c = (i + 1) as f64 * pw;
        den += c * e.value;
        den_lo += c * (e.value - k * e.se).max(0.0);
        den_hi += c * (e.value + k * e.se);
        if i >= 1 {
            let s = &h.hstar[i];
            let c = r * pw;
            num += c * s.value;
            num_lo += c * (s.value - k * s.se).max(0.0);
            num_hi += c * (s.value + k * s.se);
        }
        pw *= r;
    }
    // sum_{i>N} (i+1) C gamma^{i+1} r^i and sum_{i>N} C* gamma^{i+1} r^{i+1}
    let np1 = (n + 1) as f64;
    den_hi += h.tail_const * h.gamma * (((np1 + 1.0) * pow(x, np1)) / (1.0 - x) + pow(x, np1 + 1.0) / ((1.0 - x) * (1.0 - x)));
    num_hi += h.tail_const_star * pow(x, np1 + 1.0) / (1.0 - x);
    if !(den_lo > 0.0) {
        return Err(Error::Domain("denominator enclosure contains zero".into()));
    }
    Ok(Case1Constant { value: num / den, enclosure: Interval { lo: num_lo / den_hi, hi: num_hi / den_lo } })
}

/// `value * r^{-n-1}` for `n = 1..=n_max`.
pub fn case1_curve(c: &Case1Constant, r: f64, n_max: usize) -> SurvivalCurve {
    let points = (1..=n_max)
        .map(|n| SurvivalPoint { n, value: c.predict(r, n), half_width: 0.0, provenance: Provenance::ClosedForm })
        .collect();
    SurvivalCurve { points }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FitModel {
    /// `log R_n = log A + n log rate`.
    PureExponential,
    /// `log(R_n gamma^{-n}) = log A + power log n`.
    ExponentialTimesPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub model: FitModel,
    pub rate: f64,
    pub power: f64,
    pub prefactor: f64,
    pub window: (usize, usize),
    pub residual_rms: f64,
}

/// Default window `[N/3, 2N/3]`.
pub fn default_window(n: usize) -> (usize, usize) {
    ((n / 3).max(1), (2 * n / 3).max(2))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms residual)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x) * (y - a - b * x)).sum();
    (a, b, sqrt(ss / n))
}

pub fn decay_fit(curve: &SurvivalCurve, model: FitModel, window: Option<(usize, usize)>, gamma: Option<f64>) -> Result<FitResult> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(curve.len()));
    if lo < 1 || hi > curve.len() || hi <= lo {
        return Err(Error::Domain(format!("window [{lo}, {hi}] outside curve range [1, {}]", curve.len())));
    }
    let pts = &curve.points[lo - 1..hi];
    if let Some(p) = pts.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {} at n = {}", p.value, p.n)));
    }
    match model {
        FitModel::PureExponential => {
            let xs: Vec<f64> = pts.iter().map(|p| p.n as f64).collect();
            let ys: Vec<f64> = pts.iter().map(|p| log(p.value)).collect();
            let (a, b, rms) = least_squares(&xs, &ys);
            Ok(FitResult { model, rate: exp(b), power: 0.0, prefactor: exp(a), window: (lo, hi), residual_rms: rms })
        }
        FitModel::ExponentialTimesPower => {
            let gamma = gamma.ok_or_else(|| Error::Domain("exponential-times-power fit needs gamma".into()))?;
            if !(gamma > 0.0) {
                return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
            }
            let lg = log(gamma);
            let xs: Vec<f64> = pts.iter().map(|p| log(p.n as f64)).collect();
            let ys: Vec<f64> = pts.iter().map(|p| log(p.value) - p.n as f64 * lg).collect();
            let (a, b, rms) = least_squares(&xs, &ys);
            Ok(FitResult { model, rate: gamma, power: b, prefactor: exp(a), window: (lo, hi), residual_rms: rms })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets;
    use crate::kernel::{kernel_exact, r1};
    use alloc::vec;

    fn geometric(n: usize) -> KernelSeries {
        let h: Vec<f64> = (0..=n).map(|i| 0.5 * 0.5f64.powi(i as i32 + 1)).collect();
        KernelSeries::synthetic(h, vec![0.0; n + 1], 0.5, 0.5).unwrap()
    }

    fn closed(n: usize) -> f64 {
        0.125 * 0.75f64.powi(n as i32 - 2)
    }

    #[test]
    fn zero_kernel() {
        let k = KernelSeries::synthetic(vec![0.0; 10], vec![0.0; 10], 0.5, 1.0).unwrap();
        let c = survival_from_kernel(&k, 0.7, 10).unwrap();
        assert_eq!(c.value(1), Some(0.7));
        assert!((2..=10).all(|n| c.value(n) == Some(0.0)));
        let mut k = k;
        k.kind = Some(RegimeKind::Weakly);
        let cert = find_root(&k, &RootOptions::default()).unwrap();
        assert_eq!(cert.case, DecayCase::Case2);
    }

    #[test]
    fn geometric_recurrence() {
        let c = survival_from_kernel(&geometric(60), 0.5, 50).unwrap();
        assert_eq!(c.value(1), Some(0.5));
        for n in 2..=50 {
            assert!((c.value(n).unwrap() - closed(n)).abs() < 1e-12);
        }
        assert!(c.points.iter().all(|p| p.provenance == Provenance::Recurrence && p.half_width == 0.0));
    }

    #[test]
    fn geometric_root_and_constant() {
        let k = geometric(200);
        let cert = find_root(&k, &RootOptions::default()).unwrap();
        assert_eq!(cert.case, DecayCase::Case1);
        assert!((cert.r - 4.0 / 3.0).abs() < 1e-9);
        assert!(cert.bracket.contains(4.0 / 3.0));
        let c = case1_constant(&k, 0.5, cert.r).unwrap();
        assert!((c.value - 8.0 / 27.0).abs() < 1e-9);
        assert!(c.enclosure.contains(c.value) && c.enclosure.width() < 1e-12);
        for n in 2..=50 {
            assert!((c.predict(cert.r, n) / closed(n) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_numerator_constant() {
        let k = geometric(100);
        let c = case1_constant(&k, 0.0, 4.0 / 3.0).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn d1_curve_and_root() {
        let env = presets::d1();
        let k = kernel_exact(&env, 100).unwrap();
        let c = survival_from_kernel(&k, r1(&env).unwrap(), 12).unwrap();
        let want = k.hstar[1].value + k.h[0].value * r1(&env).unwrap();
        assert!((c.value(2).unwrap() - want).abs() < 1e-15);
        assert!((c.value(2).unwrap() - 0.278018).abs() < 1e-6);
        assert!(c.is_monotone());
        let cert = find_root(&k, &RootOptions::default()).unwrap();
        assert_eq!(cert.case, DecayCase::Case1);
        assert!(cert.r > 1.0 && cert.r < 2.0);
        assert!(cert.t1_certified);
    }

    #[test]
    fn fits_on_exact_data() {
        let pts = (1..=100)
            .map(|n| SurvivalPoint { n, value: 0.5 * 0.8f64.powi(n as i32), half_width: 0.0, provenance: Provenance::ClosedForm })
            .collect();
        let c = SurvivalCurve { points: pts };
        let f = decay_fit(&c, FitModel::PureExponential, Some((10, 60)), None).unwrap();
        assert!((f.rate - 0.8).abs() < 1e-12 && (f.prefactor - 0.5).abs() < 1e-12 && f.residual_rms < 1e-12);

        let pts = (1..=100)
            .map(|n| SurvivalPoint {
                n,
                value: 0.9f64.powi(n as i32) * (n as f64).powf(-1.5),
                half_width: 0.0,
                provenance: Provenance::ClosedForm,
            })
            .collect();
        let c = SurvivalCurve { points: pts };
        let f = decay_fit(&c, FitModel::ExponentialTimesPower, None, Some(0.9)).unwrap();
        assert!((f.power + 1.5).abs() < 1e-12);
        assert_eq!(f.window, (33, 66));
        assert!(decay_fit(&c, FitModel::ExponentialTimesPower, None, None).is_err());
        assert!(decay_fit(&c, FitModel::PureExponential, Some((0, 10)), None).is_err());
    }

    #[test]
    fn nonpositive_values_rejected() {
        let k = KernelSeries::synthetic(vec![0.0; 10], vec![0.0; 10], 0.5, 1.0).unwrap();
        let c = survival_from_kernel(&k, 0.7, 10).unwrap();
        assert!(decay_fit(&c, FitModel::PureExponential, Some((1, 5)), None).is_err());
    }

    #[test]
    fn missing_entries() {
        let k = geometric(5);
        assert!(matches!(survival_from_kernel(&k, 0.5, 10), Err(Error::MissingKernelEntries { .. })));
    }
}
