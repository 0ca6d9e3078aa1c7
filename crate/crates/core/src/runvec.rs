//! Finitely supported run-count vectors.
//!
//! A [`RunVector`] maps a run length `ℓ ≥ 1` to the number of runs of that
//! length. Only nonzero counts are stored and entries are kept sorted by
//! length, so equality, hashing and ordering all act on the canonical form.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::RunsError;

type Entries = SmallVec<[(u32, u32); 4]>;

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunVector {
    entries: Entries,
}

/// Length of the shortest run; `Infinite` for the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shortest {
    Finite(u32),
    Infinite,
}

impl RunVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit vector `e_j`; `e_0` is the zero vector.
    pub fn unit(j: u32) -> Self {
        let mut v = Self::zero();
        if j > 0 {
            v.entries.push((j, 1));
        }
        v
    }

    /// Builds a vector from `(length, count)` pairs in any order. Zero counts
    /// are dropped and repeated lengths are merged.
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (len, count) in pairs {
            v.add_runs(len, count);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Count of runs of exactly length `len`.
    pub fn get(&self, len: u32) -> u32 {
        match self.entries.binary_search_by_key(&len, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Iterates `(length, count)` in increasing length.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.iter().copied()
    }

    /// Adds `count` runs of length `len` in place. Length 0 is the origin
    /// and leaves the vector unchanged.
    pub fn add_runs(&mut self, len: u32, count: u32) {
        if len == 0 || count == 0 {
            return;
        }
        match self.entries.binary_search_by_key(&len, |e| e.0) {
            Ok(i) => self.entries[i].1 += count,
            Err(i) => self.entries.insert(i, (len, count)),
        }
    }

    /// `self + e_j`.
    pub fn plus_unit(&self, j: u32) -> Self {
        let mut v = self.clone();
        v.add_runs(j, 1);
        v
    }

    pub fn add(&self, other: &RunVector) -> RunVector {
        let mut v = self.clone();
        for (len, count) in other.iter() {
            v.add_runs(len, count);
        }
        v
    }

    /// Longest run length, 0 for the zero vector.
    pub fn longest(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.0)
    }

    pub fn shortest(&self) -> Shortest {
        self.entries
            .first()
            .map_or(Shortest::Infinite, |e| Shortest::Finite(e.0))
    }

    /// Number of runs, counted with multiplicity.
    pub fn total_runs(&self) -> u64 {
        self.entries.iter().map(|e| e.1 as u64).sum()
    }

    /// Number of distinct run lengths present, `Σ 1{x_ℓ > 0}`.
    pub fn distinct_lengths(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Total number of heads, `Σ ℓ·x_ℓ`.
    pub fn head_count(&self) -> u64 {
        self.entries.iter().map(|&(l, c)| l as u64 * c as u64).sum()
    }

    /// Number of runs of length at least `k`.
    pub fn exceed(&self, k: u32) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.0 >= k)
            .map(|e| e.1 as u64)
            .sum()
    }

    /// Fewest tosses that can realise this vector: heads plus one separating
    /// tail between consecutive runs.
    pub fn min_tosses(&self) -> u64 {
        if self.is_zero() {
            0
        } else {
            self.head_count() + self.total_runs() - 1
        }
    }

    /// Tail-sum map `σ(x)_k = Σ_{j ≥ k} x_j`, sending the run vector to the
    /// vector of exceedance counts.
    pub fn tail_sums(&self) -> RunVector {
        let mut out = Entries::with_capacity(self.longest() as usize);
        let mut acc = 0u32;
        let mut idx = self.entries.len();
        let mut k = self.longest();
        while k >= 1 {
            while idx > 0 && self.entries[idx - 1].0 >= k {
                acc += self.entries[idx - 1].1;
                idx -= 1;
            }
            out.push((k, acc));
            k -= 1;
        }
        out.reverse();
        RunVector { entries: out }
    }

    /// Inverse of [`tail_sums`](Self::tail_sums) on its image. Returns
    /// `None` when the input is not non-increasing from index 1.
    pub fn from_tail_sums(g: &RunVector) -> Option<RunVector> {
        let top = g.longest();
        let mut v = RunVector::zero();
        for k in 1..=top {
            let here = g.get(k);
            let next = g.get(k + 1);
            if here < next || here == 0 {
                return None;
            }
            v.add_runs(k, here - next);
        }
        Some(v)
    }

    /// Run vector of a finite 0/1 sequence (true = head).
    pub fn of_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zero();
        let mut current = 0u32;
        for b in bits {
            if b {
                current += 1;
            } else if current > 0 {
                v.add_runs(current, 1);
                current = 0;
            }
        }
        v.add_runs(current, 1);
        v
    }
}

/// Convenience wrapper over [`RunVector::of_bits`] for `0/1` slices.
pub fn run_vector_of(bits: &[u8]) -> RunVector {
    RunVector::of_bits(bits.iter().map(|&b| b != 0))
}

impl fmt::Display for RunVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (len, count)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{len}^{count}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RunVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RunVector({self})")
    }
}

impl FromStr for RunVector {
    type Err = RunsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" {
            return Ok(RunVector::zero());
        }
        let bad = || RunsError::InvalidArgument(format!("malformed run vector {s:?}"));
        let mut v = RunVector::zero();
        let mut last = 0;
        for part in s.split(',') {
            let (len, count) = part.split_once('^').ok_or_else(bad)?;
            let len: u32 = len.trim().parse().map_err(|_| bad())?;
            let count: u32 = count.trim().parse().map_err(|_| bad())?;
            if len == 0 || count == 0 || len <= last {
                return Err(bad());
            }
            last = len;
            v.add_runs(len, count);
        }
        Ok(v)
    }
}

/// Argument of a multivariate generating function: a sequence
/// `z_1, z_2, ...` that equals 1 except at finitely many indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZSeq {
    values: std::collections::BTreeMap<u32, Complex64>,
}

impl ZSeq {
    pub fn ones() -> Self {
        Self::default()
    }

    /// `z_j = θ` at `j = len`, 1 elsewhere.
    pub fn single(len: u32, theta: Complex64) -> Self {
        let mut z = Self::ones();
        z.set(len, theta);
        z
    }

    pub fn set(&mut self, j: u32, value: Complex64) -> &mut Self {
        if j > 0 {
            self.values.insert(j, value);
        }
        self
    }

    pub fn get(&self, j: u32) -> Complex64 {
        self.values.get(&j).copied().unwrap_or(Complex64::new(1.0, 0.0))
    }

    /// Largest index carrying a value other than the default.
    pub fn support_end(&self) -> u32 {
        self.values.keys().next_back().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.values.iter().map(|(&j, &v)| (j, v))
    }
}

impl RunVector {
    /// Monomial `z^x = Π z_ℓ^{x_ℓ}`.
    pub fn monomial(&self, z: &ZSeq) -> Complex64 {
        self.iter()
            .fold(Complex64::new(1.0, 0.0), |acc, (len, count)| acc * z.get(len).powu(count))
    }
}
