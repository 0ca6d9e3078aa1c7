//! Binomial moments of `G_ℓ(n)` and `R(n)`, and the pmf of `G_ℓ(n)`
//! obtained from them by inclusion-exclusion.

use log::warn;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::Result;
use crate::geo::check_joint;
use crate::scalar::{
    binom, binom_exact, binom_f64, exact_of_f64, factorial, falling_factorial, ln_binom, CancellationMonitor,
    Scalar,
};

/// Largest first argument for which float binomials are formed directly.
const DIRECT_BINOM_LIMIT: i64 = 10_000;

/// An alternating-sum result together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    /// `max |term| / |value|` of the float pass.
    pub cancellation: f64,
    /// Whether the float pass was discarded and the sum redone exactly.
    pub exact_fallback: bool,
}

/// `C(a, b) · p^e1 · q^e2` in floating point, staying finite when the
/// binomial alone would overflow or the powers alone would underflow.
pub(crate) fn binom_term(a: i64, b: i64, p: f64, e1: i64, e2: i64) -> f64 {
    let q = 1.0 - p;
    if a <= DIRECT_BINOM_LIMIT {
        let c = binom_f64(a, b);
        if c == 0.0 {
            return 0.0;
        }
        let pp = p.powi(e1 as i32);
        let qq = q.powi(e2 as i32);
        let v = c * pp * qq;
        if c.is_finite() && pp.is_normal() && qq.is_normal() && v.is_normal() {
            return v;
        }
    }
    match ln_binom(a, b) {
        None => 0.0,
        Some(lc) => (lc + e1 as f64 * p.ln() + e2 as f64 * q.ln()).exp(),
    }
}

fn check_len(len: u32) {
    assert!(len >= 1, "run length must be ≥ 1");
}

/// `E C(G_ℓ(n), r) = p^{ℓr} q^{r-1} [C(n+1-ℓr, r) - p C(n-ℓr, r)]`, and 1
/// for `r = 0`.
pub fn binom_moment_g<T: Scalar>(n: u64, len: u32, r: u64, p: &T) -> T {
    check_len(len);
    if r == 0 {
        return T::one();
    }
    let q = T::one() - p.clone();
    let lr = len as i64 * r as i64;
    let (n, r) = (n as i64, r as i64);
    p.powu(lr as u64)
        * q.powu(r as u64 - 1)
        * (binom::<T>(n + 1 - lr, r) - p.clone() * binom::<T>(n - lr, r))
}

/// Float version of [`binom_moment_g`] usable for large `n`.
pub fn binom_moment_g_f64(n: u64, len: u32, r: u64, p: f64) -> f64 {
    check_len(len);
    if r == 0 {
        return 1.0;
    }
    let lr = len as i64 * r as i64;
    let (n, r) = (n as i64, r as i64);
    binom_term(n + 1 - lr, r, p, lr, r - 1) - binom_term(n - lr, r, p, lr + 1, r - 1)
}

/// `E R_ℓ(n)`; zero for `ℓ > n` and `p^n` for `ℓ = n`.
pub fn mean_r<T: Scalar>(n: u64, len: u32, p: &T) -> T {
    check_len(len);
    let l = len as u64;
    if l > n {
        return T::zero();
    }
    if l == n {
        return p.powu(n);
    }
    let m = T::from_u64(n - l);
    let two = T::from_u64(2);
    p.powu(l)
        * (m.clone() + T::one() - two * m.clone() * p.clone()
            + (m - T::one()) * p.clone() * p.clone())
}

/// Largest `r` with a nonzero binomial moment of `G_ℓ(n)`.
pub fn max_order(n: u64, len: u32) -> u64 {
    (n + 1) / (len as u64 + 1)
}

/// `P(G_ℓ(n) = x)` in exact arithmetic, by inclusion-exclusion over the
/// binomial moments.
pub fn pmf_g_exact<T: Scalar>(n: u64, len: u32, x: u64, p: &T) -> T {
    let top = max_order(n, len);
    if x > top {
        return T::zero();
    }
    let moments: Vec<T> = (x..=top).map(|r| binom_moment_g(n, len, r, p)).collect();
    invert_moments(x, &moments)
}

/// `Σ_{r ≥ x} (-1)^{r-x} C(r, x) M_r` with `moments[k] = M_{x+k}`.
fn invert_moments<T: Scalar>(x: u64, moments: &[T]) -> T {
    let mut acc = T::zero();
    for (k, m) in moments.iter().enumerate() {
        let r = x + k as u64;
        let t = binom::<T>(r as i64, x as i64) * m.clone();
        acc = if k % 2 == 0 { acc + t } else { acc - t };
    }
    acc
}

/// `[P(G_ℓ(n) = 0), ..., P(G_ℓ(n) = max_order)]` in exact arithmetic, sharing
/// the binomial moments across `x`.
pub fn pmf_g_exact_all<T: Scalar>(n: u64, len: u32, p: &T) -> Vec<T> {
    let top = max_order(n, len);
    let moments: Vec<T> = (0..=top).map(|r| binom_moment_g(n, len, r, p)).collect();
    (0..=top)
        .map(|x| invert_moments(x, &moments[x as usize..]))
        .collect()
}

/// Float inversion of `moments[k] = M_{x+k}` with its cancellation ratio.
fn invert_f64(x: u64, moments: &[f64]) -> (f64, CancellationMonitor) {
    let mut mon = CancellationMonitor::default();
    let mut acc = 0.0;
    for (k, m) in moments.iter().enumerate() {
        let r = x + k as u64;
        let t = binom_f64(r as i64, x as i64) * m;
        let t = if k % 2 == 0 { t } else { -t };
        mon.observe(t);
        acc += t;
    }
    (acc, mon)
}

/// `P(G_ℓ(n) = x)` in floating point with a cancellation monitor; falls back
/// to exact arithmetic on the exact value of `p` when the float sum is
/// unreliable.
pub fn pmf_g_checked(n: u64, len: u32, x: u64, p: f64) -> Evaluated {
    check_len(len);
    let top = max_order(n, len);
    if x > top {
        return Evaluated {
            value: 0.0,
            cancellation: 1.0,
            exact_fallback: false,
        };
    }
    let moments: Vec<f64> = (x..=top).map(|r| binom_moment_g_f64(n, len, r, p)).collect();
    let (acc, mon) = invert_f64(x, &moments);
    let cancellation = mon.ratio(acc);
    if !mon.unsafe_for(acc) {
        return Evaluated {
            value: acc,
            cancellation,
            exact_fallback: false,
        };
    }
    warn!(
        "pmf of G_{len}({n}) at x={x}: cancellation ratio {cancellation:.3e}, recomputing exactly"
    );
    let exact: BigRational = pmf_g_exact(n, len, x, &exact_of_f64(p));
    Evaluated {
        value: exact.to_f64(),
        cancellation,
        exact_fallback: true,
    }
}

/// `P(G_ℓ(n) = x)`.
pub fn pmf_g(n: u64, len: u32, x: u64, p: f64) -> f64 {
    pmf_g_checked(n, len, x, p).value
}

/// The whole law of `G_ℓ(n)` as `[P(G = 0), ..., P(G = max_order)]`, each
/// entry evaluated as in [`pmf_g_checked`] with the moments shared.
pub fn pmf_g_all_checked(n: u64, len: u32, p: f64) -> Vec<Evaluated> {
    check_len(len);
    let top = max_order(n, len);
    let moments: Vec<f64> = (0..=top).map(|r| binom_moment_g_f64(n, len, r, p)).collect();
    let mut out: Vec<Evaluated> = (0..=top)
        .map(|x| {
            let (acc, mon) = invert_f64(x, &moments[x as usize..]);
            Evaluated {
                value: acc,
                cancellation: mon.ratio(acc),
                exact_fallback: mon.unsafe_for(acc),
            }
        })
        .collect();
    if out.iter().any(|e| e.exact_fallback) {
        warn!("pmf of G_{len}({n}): cancellation in the float pass, recomputing exactly");
        let pe = exact_of_f64(p);
        let exact: Vec<BigRational> = (0..=top).map(|r| binom_moment_g(n, len, r, &pe)).collect();
        for (x, e) in out.iter_mut().enumerate() {
            if e.exact_fallback {
                e.value = invert_moments(x as u64, &exact[x..]).to_f64();
            }
        }
    }
    out
}

/// The whole law of `G_ℓ(n)` as `[P(G = 0), ..., P(G = max_order)]`.
pub fn pmf_g_all(n: u64, len: u32, p: f64) -> Vec<f64> {
    pmf_g_all_checked(n, len, p).into_iter().map(|e| e.value).collect()
}

/// `H_ℓ(x, y; z) = Σ_{m ≥ 0} z^m C(x+m, x) C(x+y-ℓm, x+m)`.
pub fn hyper_h<T: Scalar>(len: u32, x: i64, y: i64, z: &T) -> T {
    check_len(len);
    let l = len as i64;
    if y < 0 {
        return T::zero();
    }
    let coeffs: Vec<BigInt> = (0..=y / (l + 1))
        .map(|m| (binom_exact(x + m, x) * binom_exact(x + y - l * m, x + m)).into())
        .collect();
    T::horner_int(&coeffs, z)
}

/// `P(G_ℓ(n) = x)` through the finite hypergeometric sums:
/// `p^{ℓx} q^{x-1} [H_ℓ(x, n+1-(ℓ+1)x; -p^ℓ q) - p H_ℓ(x, n-(ℓ+1)x; -p^ℓ q)]`.
pub fn pmf_g_via_hyper<T: Scalar>(n: u64, len: u32, x: u64, p: &T) -> T {
    check_len(len);
    let q = T::one() - p.clone();
    let l = len as i64;
    let (n, xi) = (n as i64, x as i64);
    let z = -(p.powu(len as u64) * q.clone());
    let bracket = hyper_h(len, xi, n + 1 - (l + 1) * xi, &z)
        - p.clone() * hyper_h(len, xi, n - (l + 1) * xi, &z);
    let scale = if x == 0 {
        T::one() / q
    } else {
        q.powu(x - 1)
    };
    p.powu(len as u64 * x) * scale * bracket
}

/// `E Π_j C(R_{ℓ_j}(n), r_j)` for distinct lengths `ℓ_j`:
/// `(q^{-1} / Π r_j!) Σ_{s=0}^{r₀+1} (-p)^s C(r₀+1, s) (n+1-ℓ·r-s)_{r₀} Π (p^{ℓ_j} q)^{r_j}`.
pub fn joint_binom_moment_r<T: Scalar>(n: u64, lens: &[u32], orders: &[u64], p: &T) -> Result<T> {
    let (dot, r0) = check_joint(lens, orders)?;
    let q = T::one() - p.clone();
    let base = n as i64 + 1 - dot as i64;
    let mut sum = T::zero();
    let mut ps = T::one();
    for s in 0..=r0 + 1 {
        let t = ps.clone() * binom::<T>(r0 as i64 + 1, s as i64) * falling_factorial::<T>(base - s as i64, r0);
        sum = if s % 2 == 0 { sum + t } else { sum - t };
        ps = ps * p.clone();
    }
    let denom = orders
        .iter()
        .fold(q.clone(), |acc, &r| acc * factorial::<T>(r));
    Ok(sum * p.powu(dot) * q.powu(r0) / denom)
}
