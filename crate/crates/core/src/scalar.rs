//! Numeric plumbing shared by every module: a small field abstraction that
//! lets the same formula run in `f64` or in exact `BigRational` arithmetic,
//! plus binomial coefficients with the zero conventions used throughout.

use std::fmt::Debug;
use std::ops::Neg;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// A number type the exact formulas can be evaluated in.
///
/// Implemented for `f64` (production) and `BigRational` (exact reference).
pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Num + Neg<Output = Self> + Send + Sync {
    fn from_u64(v: u64) -> Self;
    fn from_bigint(v: BigInt) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self {
        if v < 0 {
            -Self::from_u64(v.unsigned_abs())
        } else {
            Self::from_u64(v as u64)
        }
    }

    /// `Σ_m c_m z^m` for integer coefficients (constant term first).
    fn horner_int(coeffs: &[BigInt], z: &Self) -> Self {
        coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, c| acc * z.clone() + Self::from_bigint(c.clone()))
    }

    /// `self^e` by repeated squaring.
    fn powu(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_bigint(v: BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powu(&self, e: u64) -> Self {
        if e <= i32::MAX as u64 {
            self.powi(e as i32)
        } else {
            self.powf(e as f64)
        }
    }
}

impl Scalar for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_bigint(v: BigInt) -> Self {
        BigRational::from_integer(v)
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    /// Sums over the common denominator `b^deg` and normalises once.
    fn horner_int(coeffs: &[BigInt], z: &Self) -> Self {
        let (a, b) = (z.numer(), z.denom());
        let mut num = BigInt::zero();
        let mut bpow = BigInt::one();
        for c in coeffs.iter().rev() {
            num = num * a + c * &bpow;
            bpow *= b;
        }
        let deg = coeffs.len().saturating_sub(1);
        BigRational::new(num, num_traits::pow(b.clone(), deg))
    }
}

/// Converts a big rational to the nearest-ish `f64`, staying accurate even
/// when numerator and denominator individually overflow `f64`.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let n = r.numer();
    let d = r.denom();
    if let (Some(a), Some(b)) = (n.to_f64(), d.to_f64()) {
        if a.is_finite() && b.is_finite() && b != 0.0 && a.abs() < 1e300 && b < 1e300 {
            let v = a / b;
            if v.is_normal() {
                return v;
            }
        }
    }
    // Scale so that the integer quotient carries ~64 significant bits.
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = 64 - (nb - db);
    let (num, den) = if shift >= 0 {
        (n.abs() << shift as usize, d.clone())
    } else {
        (n.abs(), d.clone() << (-shift) as usize)
    };
    let q = (num / den).to_f64().unwrap_or(f64::NAN);
    let mag = q * 2f64.powi(-(shift as i32));
    if n.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Exact rational from a decimal or ratio literal such as `"0.25"` or `"1/3"`.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", if int.is_empty() { "0" } else { int }, frac);
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac.len());
    Some(BigRational::new(numer, denom))
}

/// Exact value of an `f64` (every finite double is a dyadic rational).
pub fn exact_of_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

const PASCAL_ROWS: usize = 512;

/// Rows `0..PASCAL_ROWS` of Pascal's triangle, left halves only.
fn pascal() -> &'static [Vec<BigUint>] {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(PASCAL_ROWS);
        rows.push(vec![BigUint::one()]);
        for a in 1..PASCAL_ROWS {
            let prev = &rows[a - 1];
            let at = |b: usize| -> BigUint {
                let b = b.min(a - 1 - b);
                prev[b].clone()
            };
            let row: Vec<BigUint> = (0..=a / 2)
                .map(|b| if b == 0 { BigUint::one() } else { at(b - 1) + at(b) })
                .collect();
            rows.push(row);
        }
        rows
    })
}

/// Binomial coefficient `C(a, b)` as an exact integer; zero when `b < 0`,
/// `a < 0` or `b > a`.
pub fn binom_exact(a: i64, b: i64) -> BigUint {
    if a < 0 || b < 0 || b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    if (a as usize) < PASCAL_ROWS {
        return pascal()[a as usize][b as usize].clone();
    }
    let mut acc = BigUint::one();
    for i in 1..=b {
        acc *= BigUint::from((a - b + i) as u64);
        acc /= BigUint::from(i as u64);
    }
    acc
}

/// `C(a, b)` evaluated in the scalar type `T`, with the same zero conventions.
pub fn binom<T: Scalar>(a: i64, b: i64) -> T {
    T::from_bigint(BigInt::from(binom_exact(a, b)))
}

/// `C(a, b)` in floating point, computed multiplicatively. Returns `+inf`
/// on overflow; callers that can hit that use [`ln_binom`].
pub fn binom_f64(a: i64, b: i64) -> f64 {
    if a < 0 || b < 0 || b > a {
        return 0.0;
    }
    let b = b.min(a - b);
    let mut acc = 1.0f64;
    for i in 1..=b {
        acc = acc * (a - b + i) as f64 / i as f64;
    }
    acc
}

/// `ln C(a, b)`, or `None` where the coefficient is zero.
pub fn ln_binom(a: i64, b: i64) -> Option<f64> {
    if a < 0 || b < 0 || b > a {
        return None;
    }
    let b = b.min(a - b);
    Some((1..=b).map(|i| (((a - b + i) as f64) / i as f64).ln()).sum())
}

/// Falling factorial `(m)_r = m(m-1)...(m-r+1)`, taken to be zero when
/// `m < 0` so that it matches `r! C(m, r)` under the binomial conventions.
pub fn falling_factorial<T: Scalar>(m: i64, r: u64) -> T {
    if m < 0 {
        return T::zero();
    }
    let mut acc = T::one();
    for i in 0..r as i64 {
        if m - i <= 0 {
            return T::zero();
        }
        acc = acc * T::from_i64(m - i);
    }
    acc
}

pub fn factorial<T: Scalar>(r: u64) -> T {
    (1..=r).fold(T::one(), |acc, i| acc * T::from_u64(i))
}

/// Relative size of the largest summand against the final sum of an
/// alternating series; used to decide when float evaluation is unsafe.
#[derive(Debug, Clone, Copy, Default)]
pub struct CancellationMonitor {
    max_term: f64,
}

/// Ratio above which alternating float sums are redone exactly.
pub const CANCELLATION_LIMIT: f64 = 1e5;

impl CancellationMonitor {
    pub fn observe(&mut self, term: f64) {
        self.max_term = self.max_term.max(term.abs());
    }

    pub fn ratio(&self, result: f64) -> f64 {
        if self.max_term == 0.0 {
            1.0
        } else if result == 0.0 {
            f64::INFINITY
        } else {
            self.max_term / result.abs()
        }
    }

    pub fn unsafe_for(&self, result: f64) -> bool {
        !result.is_finite() || self.ratio(result) > CANCELLATION_LIMIT
    }
}
