//! Exact finite-`n` laws of the run vector `R(n)` and of the exceedance
//! vector `G(n) = σ(R(n))`.
//!
//! The engine works at the level of distributions. Conditioning on the
//! first tail gives
//!
//! ```text
//! L{R(n)} = q Σ_{j=0}^{n-1} p^j · (L{R(n-j-1)} shifted by e_j) + p^n δ_{e_n}
//! ```
//!
//! and the expectation of any functional is then a finite sum over the
//! support. The law of `G(n)` follows from the same recursion with the shift
//! `e_j` replaced by `σ(e_j) = e_1 + ... + e_j`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::error::{Result, RunsError};
use crate::runvec::{RunVector, ZSeq};
use crate::scalar::Scalar;

/// Largest `n` the distribution engine accepts by default. The support of
/// `L{R(n)}` is in bijection with partitions of at most `n + 1` into parts
/// of size ≥ 2, so it grows like the partition numbers (about 2·10⁶ atoms
/// at `n = 64`).
pub const DEFAULT_STATE_CAP: usize = 64;

/// Exact law of a random element of `ℤ₊*` after `n` tosses.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDistribution<T = f64> {
    n: usize,
    p: T,
    atoms: Vec<(RunVector, T)>,
}

impl<T: Scalar> RunDistribution<T> {
    /// Builds a law from arbitrary atoms, merging duplicates and dropping
    /// zero weights.
    pub fn from_atoms<I: IntoIterator<Item = (RunVector, T)>>(n: usize, p: T, atoms: I) -> Self {
        let mut merged: BTreeMap<RunVector, T> = BTreeMap::new();
        for (x, w) in atoms {
            let slot = merged.entry(x).or_insert_with(T::zero);
            *slot = slot.clone() + w;
        }
        let atoms = merged.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        Self { n, p, atoms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &T {
        &self.p
    }

    /// Atoms sorted by [`RunVector`] order.
    pub fn atoms(&self) -> &[(RunVector, T)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self, x: &RunVector) -> T {
        self.atoms
            .binary_search_by(|(y, _)| y.cmp(x))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// `E f(X)` for a scalar-valued `f`, summed in atom order.
    pub fn expect_with<F: Fn(&RunVector) -> T>(&self, f: F) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, (x, w)| acc + w.clone() * f(x))
    }

    /// `E h(X)` for a vector-valued functional, in `f64`.
    pub fn expect(&self, h: &dyn Functional) -> Vec<f64> {
        let mut acc = vec![0.0; h.dim()];
        let mut buf = vec![0.0; h.dim()];
        for (x, w) in &self.atoms {
            h.eval(x, &mut buf);
            let w = w.to_f64();
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += w * b;
            }
        }
        acc
    }

    /// Image law under `f`.
    pub fn pushforward<F: Fn(&RunVector) -> RunVector>(&self, f: F) -> Self {
        Self::from_atoms(
            self.n,
            self.p.clone(),
            self.atoms.iter().map(|(x, w)| (f(x), w.clone())),
        )
    }

    /// Law of an integer-valued statistic of the atoms.
    pub fn marginal<F: Fn(&RunVector) -> u64>(&self, f: F) -> BTreeMap<u64, T> {
        let mut out: BTreeMap<u64, T> = BTreeMap::new();
        for (x, w) in &self.atoms {
            let slot = out.entry(f(x)).or_insert_with(T::zero);
            *slot = slot.clone() + w.clone();
        }
        out
    }

    /// Total-variation distance `½ Σ |P(x) - Q(x)|`, in `f64`.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let mut diff: BTreeMap<&RunVector, f64> = BTreeMap::new();
        for (x, w) in &self.atoms {
            *diff.entry(x).or_default() += w.to_f64();
        }
        for (x, w) in &other.atoms {
            *diff.entry(x).or_default() -= w.to_f64();
        }
        0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
    }

    /// Same law with weights converted to `f64`.
    pub fn to_f64(&self) -> RunDistribution<f64> {
        RunDistribution {
            n: self.n,
            p: self.p.to_f64(),
            atoms: self.atoms.iter().map(|(x, w)| (x.clone(), w.to_f64())).collect(),
        }
    }

    fn json_with(&self, p: Value, weight: impl Fn(&T) -> Value) -> Value {
        let mut atoms: Vec<(String, Value)> = self
            .atoms
            .iter()
            .map(|(x, w)| (x.to_string(), weight(w)))
            .collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let atoms: Vec<Value> = atoms
            .into_iter()
            .map(|(x, w)| json!({ "x": x, "w": w }))
            .collect();
        json!({ "n": self.n, "p": p, "atoms": atoms })
    }
}

impl RunDistribution<f64> {
    /// `{"n":…, "p":…, "atoms":[{"x":"1^2,3^1","w":…},…]}` with atoms sorted
    /// by their text key.
    pub fn to_json(&self) -> Value {
        self.json_with(json!(self.p), |w| json!(w))
    }
}

impl RunDistribution<BigRational> {
    /// As [`RunDistribution::<f64>::to_json`] but with `p` and the weights
    /// written as exact `"a/b"` strings.
    pub fn to_json_exact(&self) -> Value {
        self.json_with(json!(self.p.to_string()), |w| json!(w.to_string()))
    }
}

/// A `d`-dimensional functional `h : ℤ₊* → ℝ^d`.
pub trait Functional: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &RunVector, out: &mut [f64]);

    /// Evaluates on a dense histogram where `counts[ℓ]` is the number of runs
    /// of length `ℓ` (`counts[0]` unused). Simulation calls this form.
    fn eval_counts(&self, counts: &[u32], out: &mut [f64]) {
        let x = RunVector::from_pairs(
            counts
                .iter()
                .enumerate()
                .skip(1)
                .map(|(len, &c)| (len as u32, c)),
        );
        self.eval(&x, out);
    }
}

/// Wraps a closure `RunVector -> f64` as a one-dimensional functional.
pub struct FnFunctional<F>(pub F);

impl<F: Fn(&RunVector) -> f64 + Sync> Functional for FnFunctional<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &RunVector, out: &mut [f64]) {
        out[0] = (self.0)(x);
    }
}

/// The functionals that can be referred to by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedFunctional {
    /// `1{longest < ℓ}`
    LongestBelow(u32),
    /// Number of runs, with multiplicity.
    TotalRuns,
    /// Number of heads.
    HeadCount,
    /// `x_ℓ`, runs of length exactly `ℓ`.
    RunsOfLength(u32),
    /// `Σ_{k ≥ ℓ} x_k`, runs of length at least `ℓ`.
    RunsAtLeast(u32),
}

pub const FUNCTIONAL_REGISTRY: &str = "longest<ℓ, total_runs, head_count, R_ℓ, G_ℓ";

impl FromStr for NamedFunctional {
    type Err = RunsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || {
            RunsError::InvalidArgument(format!(
                "unknown functional {s:?}; expected one of: {FUNCTIONAL_REGISTRY}"
            ))
        };
        let positive = |t: &str| -> Result<u32> {
            match t.trim().parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(unknown()),
            }
        };
        match s {
            "total_runs" => return Ok(Self::TotalRuns),
            "head_count" => return Ok(Self::HeadCount),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("longest<") {
            return positive(rest).map(Self::LongestBelow);
        }
        if let Some(rest) = s.strip_prefix("R_") {
            return positive(rest).map(Self::RunsOfLength);
        }
        if let Some(rest) = s.strip_prefix("G_") {
            return positive(rest).map(Self::RunsAtLeast);
        }
        Err(unknown())
    }
}

impl fmt::Display for NamedFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LongestBelow(l) => write!(f, "longest<{l}"),
            Self::TotalRuns => f.write_str("total_runs"),
            Self::HeadCount => f.write_str("head_count"),
            Self::RunsOfLength(l) => write!(f, "R_{l}"),
            Self::RunsAtLeast(l) => write!(f, "G_{l}"),
        }
    }
}

impl Functional for NamedFunctional {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &RunVector, out: &mut [f64]) {
        out[0] = match *self {
            Self::LongestBelow(l) => (x.longest() < l) as u8 as f64,
            Self::TotalRuns => x.total_runs() as f64,
            Self::HeadCount => x.head_count() as f64,
            Self::RunsOfLength(l) => x.get(l) as f64,
            Self::RunsAtLeast(l) => x.exceed(l) as f64,
        };
    }

    fn eval_counts(&self, counts: &[u32], out: &mut [f64]) {
        let at = |l: u32| counts.get(l as usize).copied().unwrap_or(0);
        let top = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        out[0] = match *self {
            Self::LongestBelow(l) => (top < l as usize) as u8 as f64,
            Self::TotalRuns => counts.iter().skip(1).map(|&c| c as f64).sum(),
            Self::HeadCount => counts
                .iter()
                .enumerate()
                .map(|(len, &c)| len as f64 * c as f64)
                .sum(),
            Self::RunsOfLength(l) => at(l) as f64,
            Self::RunsAtLeast(l) => counts
                .iter()
                .skip(l as usize)
                .map(|&c| c as f64)
                .sum(),
        };
    }
}

/// Which vector the engine tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Run counts `R(n)`; a first run of length `j` adds `e_j`.
    Runs,
    /// Exceedance counts `G(n)`; a first run of length `j` adds `σ(e_j)`.
    Exceedances,
}

impl Target {
    fn shifted(self, x: &RunVector, j: u32) -> RunVector {
        match self {
            Target::Runs => x.plus_unit(j),
            Target::Exceedances => {
                let mut y = x.clone();
                for k in 1..=j {
                    y.add_runs(k, 1);
                }
                y
            }
        }
    }

    fn terminal(self, n: u32) -> RunVector {
        self.shifted(&RunVector::zero(), n)
    }
}

/// Memo table of the laws at `0, 1, ..., n` tosses. Distinct vectors are
/// interned once; each law stores `(atom id, weight)` pairs in id order.
pub struct LawTable<T> {
    target: Target,
    p: T,
    q: T,
    cap: usize,
    vectors: Vec<RunVector>,
    index: HashMap<RunVector, u32>,
    laws: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> LawTable<T> {
    /// Table for the run vector `R(n)`.
    pub fn runs(p: T) -> Result<Self> {
        Self::new(Target::Runs, p)
    }

    /// Table for the exceedance vector `G(n)`, built by its own recursion.
    pub fn exceedances(p: T) -> Result<Self> {
        Self::new(Target::Exceedances, p)
    }

    fn new(target: Target, p: T) -> Result<Self> {
        if !(p > T::zero() && p < T::one()) {
            return Err(RunsError::InvalidArgument(format!(
                "coin bias must lie in (0,1), got {p:?}"
            )));
        }
        let mut table = Self {
            target,
            q: T::one() - p.clone(),
            p,
            cap: DEFAULT_STATE_CAP,
            vectors: Vec::new(),
            index: HashMap::new(),
            laws: Vec::new(),
        };
        let zero = table.intern(RunVector::zero());
        table.laws.push(vec![(zero, T::one())]);
        Ok(table)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    fn intern(&mut self, x: RunVector) -> u32 {
        if let Some(&id) = self.index.get(&x) {
            return id;
        }
        let id = self.vectors.len() as u32;
        self.vectors.push(x.clone());
        self.index.insert(x, id);
        id
    }

    /// Largest `n` currently tabulated.
    pub fn max_n(&self) -> usize {
        self.laws.len() - 1
    }

    /// Extends the table through `n` tosses.
    pub fn extend_to(&mut self, n: usize) -> Result<()> {
        if n > self.cap {
            return Err(RunsError::Resource {
                what: "distribution engine state space",
                requested: n as u64,
                limit: self.cap as u64,
            });
        }
        let mut ppow: Vec<T> = vec![T::one()];
        while self.laws.len() <= n {
            let m = self.laws.len();
            while ppow.len() <= m {
                let next = ppow.last().unwrap().clone() * self.p.clone();
                ppow.push(next);
            }
            let mut acc: Vec<Option<T>> = vec![None; self.vectors.len()];
            let mut touched: Vec<u32> = Vec::new();
            let mut add = |acc: &mut Vec<Option<T>>, id: u32, w: T| {
                let i = id as usize;
                if i >= acc.len() {
                    acc.resize(i + 1, None);
                }
                match &mut acc[i] {
                    Some(v) => *v = v.clone() + w,
                    slot @ None => {
                        *slot = Some(w);
                        touched.push(id);
                    }
                }
            };
            for (j, pj) in ppow.iter().enumerate().take(m) {
                let coef = self.q.clone() * pj.clone();
                let prev = std::mem::take(&mut self.laws[m - j - 1]);
                for (id, w) in &prev {
                    let target = if j == 0 {
                        *id
                    } else {
                        let y = self.target.shifted(&self.vectors[*id as usize], j as u32);
                        self.intern(y)
                    };
                    add(&mut acc, target, coef.clone() * w.clone());
                }
                self.laws[m - j - 1] = prev;
            }
            let last = self.intern(self.target.terminal(m as u32));
            add(&mut acc, last, ppow[m].clone());
            touched.sort_unstable();
            let law = touched
                .into_iter()
                .map(|id| (id, acc[id as usize].take().unwrap()))
                .collect();
            self.laws.push(law);
        }
        Ok(())
    }

    /// The law at `n` tosses, extending the table if needed.
    pub fn law(&mut self, n: usize) -> Result<RunDistribution<T>> {
        self.extend_to(n)?;
        let mut atoms: Vec<(RunVector, T)> = self.laws[n]
            .iter()
            .map(|(id, w)| (self.vectors[*id as usize].clone(), w.clone()))
            .collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(RunDistribution {
            n,
            p: self.p.clone(),
            atoms,
        })
    }

    /// `E f(X_n)` computed directly from the table without materialising
    /// the law.
    pub fn expect_with<F: Fn(&RunVector) -> T>(&mut self, n: usize, f: F) -> Result<T> {
        self.extend_to(n)?;
        Ok(self.laws[n]
            .iter()
            .fold(T::zero(), |acc, (id, w)| acc + w.clone() * f(&self.vectors[*id as usize])))
    }
}

/// Exact law of `R(n)`.
pub fn run_distribution<T: Scalar>(n: usize, p: T) -> Result<RunDistribution<T>> {
    LawTable::runs(p)?.law(n)
}

/// `E h(R(n))`.
pub fn expect(n: usize, p: f64, h: &dyn Functional) -> Result<Vec<f64>> {
    Ok(run_distribution(n, p)?.expect(h))
}

/// Exact law of `G(n)`, as the `σ`-pushforward of the law of `R(n)`.
pub fn g_distribution<T: Scalar>(n: usize, p: T) -> Result<RunDistribution<T>> {
    Ok(run_distribution(n, p)?.pushforward(RunVector::tail_sums))
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

/// Runs the pgf recursion `Φ_m = q Φ_{m-1} + q Σ_{j=1}^{m-1} p^j c_j Φ_{m-j-1} + p^m c_m`
/// for a coefficient sequence `c` and returns `Φ_n`.
fn pgf_recursion(n: usize, p: f64, coef: &[Complex64]) -> Complex64 {
    let q = 1.0 - p;
    let mut phi: Vec<Complex64> = Vec::with_capacity(n + 1);
    phi.push(Complex64::new(1.0, 0.0));
    let ppow: Vec<f64> = (0..=n).map(|j| p.powi(j as i32)).collect();
    for m in 1..=n {
        let mut v = phi[m - 1] * q;
        for j in 1..m {
            v += coef[j] * phi[m - j - 1] * (q * ppow[j]);
        }
        v += coef[m] * ppow[m];
        phi.push(v);
    }
    phi[n]
}

/// `Φ_n(z) = E z^{R(n)}`.
pub fn pgf_r(n: usize, p: f64, z: &ZSeq) -> Result<Complex64> {
    check_bias(p)?;
    let coef: Vec<Complex64> = (0..=n as u32).map(|j| z.get(j)).collect();
    Ok(pgf_recursion(n, p, &coef))
}

/// `Ψ_n(z) = E z^{G(n)}`; the recursion carries the products `z_1 ⋯ z_j`.
pub fn pgf_g(n: usize, p: f64, z: &ZSeq) -> Result<Complex64> {
    check_bias(p)?;
    let mut coef = Vec::with_capacity(n + 1);
    let mut prod = Complex64::new(1.0, 0.0);
    coef.push(prod);
    for j in 1..=n as u32 {
        prod *= z.get(j);
        coef.push(prod);
    }
    Ok(pgf_recursion(n, p, &coef))
}

/// `Ψ_{n,ℓ}(θ) = E θ^{G_ℓ(n)}`, the specialisation of [`pgf_g`] at
/// `z = 1 + (θ - 1) e_ℓ`.
pub fn pgf_g_ell(n: usize, p: f64, len: u32, theta: Complex64) -> Result<Complex64> {
    if len == 0 {
        return Err(RunsError::InvalidArgument("run length must be ≥ 1".into()));
    }
    if n < len as usize {
        check_bias(p)?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    pgf_g(n, p, &ZSeq::single(len, theta))
}
