//! Run statistics observed up to an independent geometric time.
//!
//! With `N*` geometric on `{1, 2, ...}` with `P(N* = n) = w^{n-1}(1-w)`,
//! the starred quantities are the run statistics of the first `N* - 1`
//! tosses. Every law here is a closed-form ratio of polynomials in
//! `α = wp`, `β = wq`, `γ = 1 - w`, so the functions are generic over
//! [`Scalar`] and evaluate exactly in rational arithmetic.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Result, RunsError};
use crate::runvec::ZSeq;
use crate::scalar::{factorial, Scalar};

/// Coin bias `p` together with the geometric weight `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T = f64> {
    p: T,
    w: T,
}

impl<T: Scalar> Params<T> {
    pub fn new(p: T, w: T) -> Result<Self> {
        let open_unit = |v: &T| *v > T::zero() && *v < T::one();
        if !open_unit(&p) {
            return Err(RunsError::InvalidArgument(format!(
                "coin bias must lie in (0,1), got {:?}",
                p
            )));
        }
        if !open_unit(&w) {
            return Err(RunsError::InvalidArgument(format!(
                "geometric weight must lie in (0,1), got {:?}",
                w
            )));
        }
        Ok(Self { p, w })
    }

    pub fn p(&self) -> T {
        self.p.clone()
    }

    pub fn q(&self) -> T {
        T::one() - self.p.clone()
    }

    pub fn w(&self) -> T {
        self.w.clone()
    }

    /// Probability of a head before stopping, `α = wp`.
    pub fn alpha(&self) -> T {
        self.w.clone() * self.p.clone()
    }

    /// Probability of a tail before stopping, `β = wq`.
    pub fn beta(&self) -> T {
        self.w.clone() * self.q()
    }

    /// Stopping probability, `γ = 1 - w`.
    pub fn gamma(&self) -> T {
        T::one() - self.w.clone()
    }
}

/// The two-parameter law on `{0, 1, 2, ...}` with mass `alpha0` at zero and
/// geometric tail ratio `beta0`:
/// `Q{0} = alpha0`, `Q{n} = (1 - alpha0)(1 - beta0) beta0^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoLaw<T = f64> {
    pub alpha0: T,
    pub beta0: T,
}

impl<T: Scalar> GeoLaw<T> {
    pub fn new(alpha0: T, beta0: T) -> Result<Self> {
        if alpha0 < T::zero() || alpha0 > T::one() || beta0 < T::zero() || beta0 >= T::one() {
            return Err(RunsError::InvalidArgument(format!(
                "Geo parameters out of range: alpha0={alpha0:?}, beta0={beta0:?}"
            )));
        }
        Ok(Self { alpha0, beta0 })
    }

    pub fn pmf(&self, n: u64) -> T {
        if n == 0 {
            return self.alpha0.clone();
        }
        (T::one() - self.alpha0.clone())
            * (T::one() - self.beta0.clone())
            * self.beta0.powu(n - 1)
    }

    pub fn mean(&self) -> T {
        (T::one() - self.alpha0.clone()) / (T::one() - self.beta0.clone())
    }

    /// `E C(X, r)` for `r ≥ 1`; `r = 0` gives 1.
    pub fn binom_moment(&self, r: u64) -> T {
        if r == 0 {
            return T::one();
        }
        (T::one() - self.alpha0.clone()) * self.beta0.powu(r - 1)
            / (T::one() - self.beta0.clone()).powu(r)
    }
}

impl GeoLaw<f64> {
    /// Probability generating function `E θ^X`. Fails near the pole at
    /// `θ = 1/beta0`.
    pub fn pgf(&self, theta: Complex64) -> Result<Complex64> {
        let den = Complex64::new(1.0, 0.0) - theta * self.beta0;
        if den.norm() < 1e-12 {
            return Err(RunsError::Domain(format!(
                "pgf evaluated at its pole θ = {theta}"
            )));
        }
        Ok((Complex64::new(self.alpha0, 0.0) + theta * (1.0 - self.alpha0 - self.beta0)) / den)
    }
}

/// Law of `N*` itself.
pub fn stopping_time_law<T: Scalar>(w: T) -> GeoLaw<T> {
    GeoLaw {
        alpha0: T::zero(),
        beta0: w,
    }
}

/// Law of the number of heads `S(N* - 1)`.
pub fn heads_star_law<T: Scalar>(params: &Params<T>) -> GeoLaw<T> {
    let d = T::one() - params.beta();
    GeoLaw {
        alpha0: params.gamma() / d.clone(),
        beta0: params.alpha() / d,
    }
}

/// `Σ_{j ≥ 1, j ≠ ℓ} α^j`, in closed form.
fn sigma_excluding<T: Scalar>(len: u32, params: &Params<T>) -> T {
    let a = params.alpha();
    a.clone() / (T::one() - a.clone()) - a.powu(len as u64)
}

/// Law of `R*_ℓ`, the number of runs of length exactly `ℓ`.
pub fn r_star_law<T: Scalar>(len: u32, params: &Params<T>) -> Result<GeoLaw<T>> {
    check_len(len)?;
    let sigma = sigma_excluding(len, params);
    let b = params.beta();
    let den = T::one() - b.clone() - b.clone() * sigma.clone();
    Ok(GeoLaw {
        alpha0: params.gamma() * (T::one() + sigma) / den.clone(),
        beta0: b * params.alpha().powu(len as u64) / den,
    })
}

/// Law of `G*_ℓ`, the number of runs of length at least `ℓ`.
pub fn g_star_law<T: Scalar>(len: u32, params: &Params<T>) -> Result<GeoLaw<T>> {
    check_len(len)?;
    let a_l = params.alpha().powu(len as u64);
    let g = params.gamma();
    let den = g.clone() + params.beta() * a_l.clone();
    Ok(GeoLaw {
        alpha0: g * (T::one() - a_l.clone()) / den.clone(),
        beta0: params.beta() * a_l / den,
    })
}

/// `P(L* < ℓ)` where `L*` is the longest run before stopping.
pub fn l_star_cdf<T: Scalar>(len: u32, params: &Params<T>) -> Result<T> {
    Ok(g_star_law(len, params)?.alpha0)
}

/// `P(shortest run of R* ≥ ℓ)`, counting the event "no run at all" (shortest
/// run `+∞`) in the tail.
///
/// Substituting `h(x) = 1{shortest(x) ≥ ℓ}` into the stopped identity gives
/// `γ(1 - α + α^ℓ) / ((1 - α) - β(1 - α + α^ℓ))`. Note the `(1 - α)` in the
/// denominator; see [`shortest_star_tail_printed`].
pub fn shortest_star_tail<T: Scalar>(len: u32, params: &Params<T>) -> Result<T> {
    check_len(len)?;
    let a = params.alpha();
    let k = T::one() - a.clone() + a.powu(len as u64);
    Ok(params.gamma() * k.clone() / ((T::one() - a) - params.beta() * k))
}

/// Mass of the shortest-run functional at `+∞`, i.e. `P(R* = 0) = γ/(1-β)`.
pub fn shortest_star_defect<T: Scalar>(params: &Params<T>) -> T {
    params.gamma() / (T::one() - params.beta())
}

/// The shortest-run tail with `γ` in place of `1 - α` in the denominator, as
/// the formula is commonly printed. It exceeds 1 for typical parameters
/// (e.g. 2 at `ℓ = 1`, `p = w = 1/2`) and is kept only for comparison.
pub fn shortest_star_tail_printed<T: Scalar>(len: u32, params: &Params<T>) -> Result<T> {
    check_len(len)?;
    let a = params.alpha();
    let k = T::one() - a.clone() + a.powu(len as u64);
    Ok(params.gamma() * k.clone() / (params.gamma() - params.beta() * k))
}

/// `E h(R*)` for the linear functional `h(x) = Σ_j c_j x_j`.
pub fn linear_functional_mean<T: Scalar>(coeffs: &BTreeMap<u32, T>, params: &Params<T>) -> Result<T> {
    if coeffs.contains_key(&0) {
        return Err(RunsError::InvalidArgument(
            "linear functional coefficients are indexed by run length ≥ 1".into(),
        ));
    }
    let a = params.alpha();
    let one_minus = T::one() - a.clone();
    let sum = coeffs
        .iter()
        .fold(T::zero(), |acc, (&j, c)| acc + a.powu(j as u64) * c.clone());
    Ok(one_minus.clone() * one_minus * sum / params.gamma())
}

/// Joint pgf `E z^{R*}` with `z_j` read from `z` for `j ≤ max_len` and taken
/// as 1 beyond; the tail `Σ_{j > max_len} α^j` is summed in closed form.
pub fn joint_pgf_star(z: &ZSeq, max_len: u32, params: &Params<f64>) -> Result<Complex64> {
    let a = params.alpha();
    let b = params.beta();
    let mut s = Complex64::new(a.powu(max_len as u64 + 1) / (1.0 - a), 0.0);
    let mut apow = 1.0;
    for j in 1..=max_len {
        apow *= a;
        s += z.get(j) * apow;
    }
    let one = Complex64::new(1.0, 0.0);
    let den = one - b - s * b;
    if den.norm() < 1e-12 {
        return Err(RunsError::Domain("joint pgf denominator vanishes".into()));
    }
    Ok((one + s) * params.gamma() / den)
}

/// `E Π_j C(R*_{ℓ_j}, r_j)` for distinct lengths `ℓ_j` and `Σ r_j ≥ 1`.
pub fn joint_binom_moment_star<T: Scalar>(lens: &[u32], orders: &[u64], params: &Params<T>) -> Result<T> {
    let (dot, r0) = check_joint(lens, orders)?;
    let a = params.alpha();
    let coef = orders
        .iter()
        .fold(factorial::<T>(r0), |acc, &r| acc / factorial::<T>(r));
    Ok(coef * a.powu(dot)
        * params.beta().powu(r0 - 1)
        * (T::one() - a).powu(r0 + 1)
        / params.gamma().powu(r0))
}

fn check_len(len: u32) -> Result<()> {
    if len == 0 {
        Err(RunsError::InvalidArgument("run length must be ≥ 1".into()))
    } else {
        Ok(())
    }
}

/// Validates a `(ℓ, r)` pair of vectors and returns `(ℓ·r, Σ r)`.
pub(crate) fn check_joint(lens: &[u32], orders: &[u64]) -> Result<(u64, u64)> {
    if lens.len() != orders.len() || lens.is_empty() {
        return Err(RunsError::InvalidArgument(
            "length and order vectors must be nonempty and of equal size".into(),
        ));
    }
    if lens.contains(&0) {
        return Err(RunsError::InvalidArgument("run lengths must be ≥ 1".into()));
    }
    let mut sorted = lens.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(RunsError::InvalidArgument("run lengths must be distinct".into()));
    }
    let r0: u64 = orders.iter().sum();
    if r0 == 0 {
        return Err(RunsError::InvalidArgument("total order Σ r_j must be ≥ 1".into()));
    }
    let dot = lens.iter().zip(orders).map(|(&l, &r)| l as u64 * r).sum();
    Ok((dot, r0))
}
