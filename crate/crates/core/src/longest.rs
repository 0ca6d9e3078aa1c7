//! The longest head run `L(n)`: `F_ℓ(n) = P(L(n) < ℓ)` exactly (by a
//! positive recursion and by an alternating series), the Poisson-regime
//! approximation, and the dominant-root approximation built on the root
//! `w0` of `f(w) = 1 - w + p^ℓ q w^{ℓ+1}`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use log::{debug, warn};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Result, RunsError};
use crate::moments::{binom_term, Evaluated};
use crate::scalar::{binom, exact_of_f64, CancellationMonitor, Scalar};

/// `|p - ℓ/(ℓ+1)|` below which `w0 = 1/p` is a double root.
pub const DEGENERATE_TOL: f64 = 1e-14;

const BISECTION_STEPS: usize = 200;
const BISECTION_RTOL: f64 = 1e-15;
const ALL_ROOTS_MAX_LEN: u32 = 30;

fn check_len(len: u32) -> Result<()> {
    if len == 0 {
        Err(RunsError::InvalidArgument("run length must be ≥ 1".into()))
    } else {
        Ok(())
    }
}

fn check_bias(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(RunsError::InvalidArgument(format!(
            "coin bias must lie in (0,1), got {p}"
        )))
    }
}

/// Shared driver for the two positive recursions
/// `X(m) = c + Σ_{i<ℓ} q p^i X(m-1-i)` with `X(m) = init` for `m < ℓ`.
/// Calls `emit(m, X(m))` for every `m ≤ n` and returns `X(n)`.
fn window_recursion<T: Scalar>(
    n: u64,
    len: u32,
    p: &T,
    init: T,
    c: T,
    mut emit: impl FnMut(u64, &T),
) -> T {
    let l = len as usize;
    for m in 0..(l as u64).min(n + 1) {
        emit(m, &init);
    }
    if (n as usize) < l {
        return init;
    }
    let q = T::one() - p.clone();
    let coef: Vec<T> = (0..l).map(|i| q.clone() * p.powu(i as u64)).collect();
    // ring[k % ℓ] holds X(k); the newest value sits at (m-1) % ℓ.
    let mut ring: Vec<T> = vec![init; l];
    for m in l as u64..=n {
        let mut v = c.clone();
        for (i, a) in coef.iter().enumerate() {
            let k = (m - 1 - i as u64) as usize % l;
            v = v + a.clone() * ring[k].clone();
        }
        emit(m, &v);
        ring[m as usize % l] = v;
    }
    ring[n as usize % l].clone()
}

/// `F_ℓ(n) = P(L(n) < ℓ)` by the recursion
/// `F_ℓ(n) = Σ_{i=0}^{ℓ-1} q p^i F_ℓ(n-1-i)`, `F_ℓ(m) = 1` for `m < ℓ`.
pub fn f_exact<T: Scalar>(n: u64, len: u32, p: &T) -> T {
    assert!(len >= 1, "run length must be ≥ 1");
    unit_clamp(window_recursion(n, len, p, T::one(), T::zero(), |_, _| {}))
}

/// Float rounding can push a sum of probabilities just past 1.
fn unit_clamp<T: Scalar>(v: T) -> T {
    if v > T::one() {
        T::one()
    } else if v < T::zero() {
        T::zero()
    } else {
        v
    }
}

/// `[F_ℓ(0), ..., F_ℓ(n)]` from a single pass of the recursion.
pub fn f_exact_upto<T: Scalar>(n: u64, len: u32, p: &T) -> Vec<T> {
    assert!(len >= 1, "run length must be ≥ 1");
    let mut out = Vec::with_capacity(n as usize + 1);
    window_recursion(n, len, p, T::one(), T::zero(), |_, v| out.push(unit_clamp(v.clone())));
    out
}

/// `P(L(n) ≥ ℓ) = 1 - F_ℓ(n)`, by the complementary recursion
/// `D(n) = p^ℓ + Σ_{i<ℓ} q p^i D(n-1-i)`, `D(m) = 0` for `m < ℓ`. Accurate
/// when the probability is tiny.
pub fn exceed_exact<T: Scalar>(n: u64, len: u32, p: &T) -> T {
    assert!(len >= 1, "run length must be ≥ 1");
    unit_clamp(window_recursion(n, len, p, T::zero(), p.powu(len as u64), |_, _| {}))
}

/// `b^n F_ℓ(n)` for `p = a/b`, an integer: scaling the recursion by `b^m`
/// gives `A(m) = Σ_{i<ℓ} (b-a) a^i A(m-1-i)` with `A(m) = b^m` for `m < ℓ`.
fn scaled_f(n: u64, len: u32, a: &BigInt, b: &BigInt) -> BigInt {
    let l = len as usize;
    if n < len as u64 {
        return b.pow(n as u32);
    }
    let coef: Vec<BigInt> = (0..l).map(|i| (b - a) * a.pow(i as u32)).collect();
    let mut ring: Vec<BigInt> = (0..l as u32).map(|m| b.pow(m)).collect();
    for m in l as u64..=n {
        let mut v = BigInt::zero();
        for (i, c) in coef.iter().enumerate() {
            v += c * &ring[(m - 1 - i as u64) as usize % l];
        }
        ring[m as usize % l] = v;
    }
    ring[n as usize % l].clone()
}

/// [`f_exact`] for a rational bias, in integer arithmetic with a single
/// reduction at the end. Much faster than the generic routine for large `n`.
pub fn f_exact_rational(n: u64, len: u32, p: &BigRational) -> BigRational {
    assert!(len >= 1, "run length must be ≥ 1");
    let b = p.denom();
    BigRational::new(scaled_f(n, len, p.numer(), b), b.pow(n as u32))
}

/// [`exceed_exact`] for a rational bias, via [`f_exact_rational`].
pub fn exceed_exact_rational(n: u64, len: u32, p: &BigRational) -> BigRational {
    assert!(len >= 1, "run length must be ≥ 1");
    let b = p.denom();
    let bn = b.pow(n as u32);
    BigRational::new(&bn - scaled_f(n, len, p.numer(), b), bn)
}

/// The `r`-th bracket of the series,
/// `C(n-ℓr, r) p^{ℓr} q^r + C(n-ℓr, r-1) p^{ℓr} q^{r-1}`.
fn series_term<T: Scalar>(n: u64, len: u32, r: u64, p: &T) -> T {
    let q = T::one() - p.clone();
    let m = n as i64 - len as i64 * r as i64;
    let pl = p.powu(len as u64 * r);
    let qr = q.powu(r - 1);
    pl * qr * (binom::<T>(m, r as i64) * q + binom::<T>(m, r as i64 - 1))
}

fn series_term_f64(n: u64, len: u32, r: u64, p: f64) -> f64 {
    let m = n as i64 - len as i64 * r as i64;
    let lr = len as i64 * r as i64;
    let r = r as i64;
    binom_term(m, r, p, lr, r) + binom_term(m, r - 1, p, lr, r - 1)
}

/// Largest `r` with a nonzero series bracket.
fn series_top(n: u64, len: u32) -> u64 {
    (n + 1) / (len as u64 + 1)
}

/// `P(L(n) ≥ ℓ) = Σ_{r ≥ 1} (-1)^{r-1} [bracket_r]` in exact arithmetic.
pub fn exceed_series_exact<T: Scalar>(n: u64, len: u32, p: &T) -> T {
    assert!(len >= 1, "run length must be ≥ 1");
    let mut acc = T::zero();
    for r in 1..=series_top(n, len) {
        let t = series_term(n, len, r, p);
        acc = if r % 2 == 1 { acc + t } else { acc - t };
    }
    acc
}

/// `F_ℓ(n)` from the alternating series
/// `1 + Σ_{r ≥ 1} (-1)^r [C(n-ℓr, r) p^{ℓr} q^r + C(n-ℓr, r-1) p^{ℓr} q^{r-1}]`.
pub fn f_series_exact<T: Scalar>(n: u64, len: u32, p: &T) -> T {
    T::one() - exceed_series_exact(n, len, p)
}

fn series_checked(n: u64, len: u32, p: f64, complement: bool) -> Evaluated {
    assert!(len >= 1, "run length must be ≥ 1");
    let mut mon = CancellationMonitor::default();
    let mut acc = if complement { 0.0 } else { 1.0 };
    mon.observe(acc);
    for r in 1..=series_top(n, len) {
        let t = series_term_f64(n, len, r, p);
        let t = if (r % 2 == 1) == complement { t } else { -t };
        mon.observe(t);
        acc += t;
    }
    let cancellation = mon.ratio(acc);
    if !mon.unsafe_for(acc) {
        return Evaluated {
            value: acc,
            cancellation,
            exact_fallback: false,
        };
    }
    warn!("series for F_{len}({n}): cancellation ratio {cancellation:.3e}, recomputing exactly");
    let pe = exact_of_f64(p);
    let exact: BigRational = if complement {
        exceed_series_exact(n, len, &pe)
    } else {
        f_series_exact(n, len, &pe)
    };
    Evaluated {
        value: exact.to_f64(),
        cancellation,
        exact_fallback: true,
    }
}

/// Float evaluation of [`f_series_exact`] with the cancellation monitor.
pub fn f_series_checked(n: u64, len: u32, p: f64) -> Evaluated {
    series_checked(n, len, p, false)
}

/// Float evaluation of [`exceed_series_exact`] with the cancellation monitor.
pub fn exceed_series_checked(n: u64, len: u32, p: f64) -> Evaluated {
    series_checked(n, len, p, true)
}

pub fn f_series(n: u64, len: u32, p: f64) -> f64 {
    f_series_checked(n, len, p).value
}

/// How an [`ApproxReport`] value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Poisson,
    DominantRoot,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Poisson => "poisson",
            Method::DominantRoot => "dominant-root",
        }
    }
}

/// An approximation of `P(L(n) < ℓ)` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    /// Approximation of `P(L(n) < ℓ)`, clamped to `[0, 1]`.
    pub value: f64,
    /// `1 - value`, computed without cancellation where possible.
    pub complement: f64,
    pub method: Method,
    pub w0: Option<f64>,
    pub c0: Option<f64>,
    pub n: u64,
    pub ell: u32,
    pub p: f64,
    /// The raw formula left `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl ApproxReport {
    fn new(value: f64, complement: f64, method: Method, n: u64, ell: u32, p: f64) -> Self {
        let clamped = !(0.0..=1.0).contains(&value);
        let (value, complement) = if clamped {
            let v = value.clamp(0.0, 1.0);
            (v, 1.0 - v)
        } else {
            (value, complement)
        };
        Self {
            value,
            complement,
            method,
            w0: None,
            c0: None,
            n,
            ell,
            p,
            clamped,
        }
    }
}

/// Exact `P(L(n) < ℓ)` in report form.
pub fn exact_report(n: u64, len: u32, p: f64) -> Result<ApproxReport> {
    check_len(len)?;
    check_bias(p)?;
    Ok(ApproxReport::new(
        f_exact(n, len, &p),
        exceed_exact(n, len, &p),
        Method::Exact,
        n,
        len,
        p,
    ))
}

/// `exp(-(n-ℓ) p^ℓ q - p^ℓ) = exp(-E G_ℓ(n))`.
pub fn poisson_approx(n: u64, len: u32, p: f64) -> Result<ApproxReport> {
    check_len(len)?;
    check_bias(p)?;
    let pl = p.powi(len as i32);
    let exponent = -((n as f64 - len as f64) * pl * (1.0 - p) + pl);
    Ok(ApproxReport::new(
        exponent.exp(),
        -exponent.exp_m1(),
        Method::Poisson,
        n,
        len,
        p,
    ))
}

/// The dominant real root of `f(w) = 1 - w + p^ℓ q w^{ℓ+1}` other than `1/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootInfo {
    pub w0: f64,
    /// `w0 - 1`, kept separately because `w0` can round to 1 when `p^ℓ q`
    /// is below machine precision.
    pub w0_minus_one: f64,
    pub ell: u32,
    pub p: f64,
    /// `p = ℓ/(ℓ+1)`, where `1/p` is a double root and `w0 = 1/p`.
    pub degenerate: bool,
    /// `|f(w0)|`.
    pub residual: f64,
}

/// `f(w) = 1 - w + p^ℓ q w^{ℓ+1}`.
pub fn f_poly(len: u32, p: f64, w: f64) -> f64 {
    1.0 - w + p.powi(len as i32) * (1.0 - p) * w.powi(len as i32 + 1)
}

/// `f(1 + δ) = -δ + p^ℓ q (1+δ)^{ℓ+1}`.
fn f_shifted(len: u32, p: f64, delta: f64) -> f64 {
    p.powi(len as i32) * (1.0 - p) * (1.0 + delta).powi(len as i32 + 1) - delta
}

/// The critical point `w* = 1/(p ((ℓ+1) q)^{1/ℓ})` of `f`.
pub fn critical_point(len: u32, p: f64) -> f64 {
    1.0 / (p * ((len as f64 + 1.0) * (1.0 - p)).powf(1.0 / len as f64))
}

/// Bisection for the root of `f(1 + δ)` with `δ` in `[lo, hi]`.
fn bisect(len: u32, p: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f = |d| f_shifted(len, p, d);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RunsError::Numerical(format!(
            "root bracket failed for ℓ={len}, p={p}: f(1+{lo:e})={flo:e}, f(1+{hi:e})={fhi:e}"
        )));
    }
    let lo_sign = flo.signum();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= BISECTION_RTOL * mid {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

fn compute_root(len: u32, p: f64) -> Result<RootInfo> {
    let l = len as f64;
    let crit = l / (l + 1.0);
    let degenerate = (p - crit).abs() < DEGENERATE_TOL;
    let delta = if degenerate {
        (1.0 - p) / p
    } else if p < crit {
        if (crit - p) < 1e-8 {
            debug!("ℓ={len}, p={p} is near-degenerate; using the simple-root bracket");
        }
        // f(1 + p^ℓ q) > 0 and f((ℓ+1)/ℓ) < 0
        bisect(len, p, p.powi(len as i32) * (1.0 - p), 1.0 / l)?
    } else {
        let lo = critical_point(len, p) - 1.0;
        if f_shifted(len, p, lo) >= 0.0 {
            // f is flat to working precision at its minimum
            lo
        } else {
            let mut hi = 2.0 * (lo + 1.0);
            let mut steps = 0;
            while f_shifted(len, p, hi) <= 0.0 {
                hi *= 2.0;
                steps += 1;
                if steps > 1100 {
                    return Err(RunsError::Numerical(format!(
                        "no upper bracket for the root at ℓ={len}, p={p}"
                    )));
                }
            }
            bisect(len, p, lo, hi)?
        }
    };
    Ok(RootInfo {
        w0: 1.0 + delta,
        w0_minus_one: delta,
        ell: len,
        p,
        degenerate,
        residual: f_shifted(len, p, delta).abs(),
    })
}

type RootKey = (u32, u64);

fn root_cache() -> &'static RwLock<HashMap<RootKey, RootInfo>> {
    static CACHE: OnceLock<RwLock<HashMap<RootKey, RootInfo>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The root `w0`, by bisection on a bracket that provably contains it and
/// not `1/p`. Results are memoised per `(ℓ, p)`.
pub fn root_w0(len: u32, p: f64) -> Result<RootInfo> {
    check_len(len)?;
    check_bias(p)?;
    let key = (len, p.to_bits());
    if let Some(info) = root_cache().read().ok().and_then(|c| c.get(&key).copied()) {
        return Ok(info);
    }
    let info = compute_root(len, p)?;
    if let Ok(mut c) = root_cache().write() {
        c.insert(key, info);
    }
    Ok(info)
}

/// `P(L(n) < ℓ) ≈ c w0^{-n-1}` with
/// `c = (1 - (w0 p)^ℓ) / (1 - (ℓ+1) q (w0 p)^ℓ)`, and `2 (ℓ/(ℓ+1))^{n+1}`
/// in the degenerate case `p = ℓ/(ℓ+1)`.
pub fn second_approx(n: u64, len: u32, p: f64) -> Result<ApproxReport> {
    let root = root_w0(len, p)?;
    let w0 = root.w0;
    let l = len as f64;
    let (lead, c0) = if root.degenerate {
        (2.0, 2.0 / w0)
    } else {
        let u = (w0 * p).powi(len as i32);
        let c = (1.0 - u) / (1.0 - (l + 1.0) * (1.0 - p) * u);
        (c, c / w0)
    };
    let decay = -(n as f64 + 1.0) * root.w0_minus_one.ln_1p();
    let value = lead * decay.exp();
    let complement = if lead == 1.0 {
        -decay.exp_m1()
    } else {
        1.0 - value
    };
    let mut report = ApproxReport::new(value, complement, Method::DominantRoot, n, len, p);
    report.w0 = Some(w0);
    report.c0 = Some(c0);
    Ok(report)
}

/// All `ℓ + 1` roots of `f`, via simultaneous (Durand–Kerner) iteration on
/// the scaled polynomial `u^{ℓ+1} - u/q + p/q` with `w = u/p`. The known
/// root `u = 1` (`w = 1/p`) is divided out first, and in the degenerate case
/// divided out twice.
pub fn all_roots(len: u32, p: f64) -> Result<Vec<Complex64>> {
    check_len(len)?;
    check_bias(p)?;
    if len > ALL_ROOTS_MAX_LEN {
        return Err(RunsError::Resource {
            what: "root finder degree",
            requested: len as u64,
            limit: ALL_ROOTS_MAX_LEN as u64,
        });
    }
    let q = 1.0 - p;
    let root = root_w0(len, p)?;
    // u^ℓ + ... + u - p/q, coefficients from the constant term upward
    let mut poly: Vec<f64> = vec![-p / q];
    poly.extend(std::iter::repeat_n(1.0, len as usize));
    let mut known = vec![Complex64::new(1.0 / p, 0.0)];
    if root.degenerate {
        poly = deflate_unit(&poly);
        known.push(Complex64::new(1.0 / p, 0.0));
    }
    let found = durand_kerner(&poly)?;
    known.extend(found.into_iter().map(|u| u / p));
    Ok(known)
}

/// Divides a real polynomial (constant term first) by `u - 1`.
fn deflate_unit(poly: &[f64]) -> Vec<f64> {
    let deg = poly.len() - 1;
    let mut out = vec![0.0; deg];
    let mut carry = 0.0;
    for k in (1..=deg).rev() {
        carry += poly[k];
        out[k - 1] = carry;
    }
    out
}

fn horner(poly: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for c in poly.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

fn durand_kerner(poly: &[f64]) -> Result<Vec<Complex64>> {
    let deg = poly.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = poly[deg];
    let monic: Vec<Complex64> = poly.iter().map(|&c| Complex64::new(c / lead, 0.0)).collect();
    let radius = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) * (radius / seed.norm().powi(k as i32 + 1)).min(radius))
        .collect();
    let mut converged = false;
    for _ in 0..20_000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let (v, _) = horner(&monic, z[i]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(1e-300, 0.0);
            }
            let step = v / den;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1.0));
        }
        if delta < 1e-15 {
            converged = true;
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (v, d) = horner(&monic, *zi);
            if d.norm() == 0.0 {
                break;
            }
            let next = *zi - v / d;
            if horner(&monic, next).0.norm() < v.norm() {
                *zi = next;
            } else {
                break;
            }
        }
    }
    let worst = z
        .iter()
        .map(|zi| horner(&monic, *zi).0.norm() / zi.norm().max(1.0).powi(deg as i32))
        .fold(0.0, f64::max);
    if !converged && worst > 1e-9 {
        return Err(RunsError::Numerical(format!(
            "root iteration did not converge (worst scaled residual {worst:e})"
        )));
    }
    Ok(z)
}

/// Result of [`threshold_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdProbe {
    pub ell: u32,
    pub value: f64,
    /// The threshold fell below 1 and was raised to `ℓ = 1`.
    pub clamped: bool,
}

/// `F_ℓ(n)` at `ℓ = ⌈a log_{1/p} n + log_{1/p} b⌉`.
pub fn threshold_probe(n: u64, a: f64, b: f64, p: f64) -> Result<ThresholdProbe> {
    check_bias(p)?;
    if n < 2 || a.is_nan() || b.is_nan() || a <= 0.0 || b <= 0.0 {
        return Err(RunsError::InvalidArgument(format!(
            "threshold probe needs n ≥ 2, a > 0, b > 0 (got n={n}, a={a}, b={b})"
        )));
    }
    let base = (1.0 / p).ln();
    let t = (a * (n as f64).ln() + b.ln()) / base;
    let raw = t.ceil();
    let clamped = raw < 1.0;
    let ell = if clamped { 1 } else { raw as u32 };
    Ok(ThresholdProbe {
        ell,
        value: f_exact(n, ell, &p),
        clamped,
    })
}
