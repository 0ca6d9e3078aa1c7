//! Reference computations: brute-force enumeration of all `2^n` toss
//! sequences, and seeded Monte Carlo.
//!
//! Simulation is reproducible independently of the worker count. Trial `t`
//! draws from its own ChaCha8 stream (key from the seed, stream id `t`),
//! trials are grouped in fixed-size blocks, and block partials are merged in
//! block order.

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, RunsError};
use crate::portmanteau::{Functional, RunDistribution};
use crate::runvec::RunVector;
use crate::scalar::Scalar;

/// Largest `n` accepted by [`enumerate`].
pub const ENUMERATION_CAP: usize = 24;

/// Trials per reduction block; fixed so results do not depend on scheduling.
const BLOCK: u64 = 4096;

/// Exact law of `R(n)` by listing every toss sequence.
pub fn enumerate<T: Scalar>(n: usize, p: T) -> Result<RunDistribution<T>> {
    if n > ENUMERATION_CAP {
        return Err(RunsError::Resource {
            what: "enumeration length",
            requested: n as u64,
            limit: ENUMERATION_CAP as u64,
        });
    }
    if !(p > T::zero() && p < T::one()) {
        return Err(RunsError::InvalidArgument(format!(
            "coin bias must lie in (0,1), got {p:?}"
        )));
    }
    let mut tally: HashMap<(RunVector, u32), u64> = HashMap::new();
    for word in 0u32..(1u32 << n) {
        let x = RunVector::of_bits((0..n).map(|i| word >> i & 1 == 1));
        *tally.entry((x, word.count_ones())).or_default() += 1;
    }
    let q = T::one() - p.clone();
    let mut entries: Vec<_> = tally.into_iter().collect();
    entries.sort();
    let atoms: Vec<(RunVector, T)> = entries
        .into_iter()
        .map(|((x, h), count)| {
            let w = T::from_u64(count) * p.powu(h as u64) * q.powu((n as u32 - h) as u64);
            (x, w)
        })
        .collect();
    Ok(RunDistribution::from_atoms(n, p, atoms))
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: u64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

/// Sample means and their standard errors, one per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trials: u64,
}

/// Running mean and sum of squared deviations per coordinate.
#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / k;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }
}

/// Tosses one sequence and records its run-length histogram in `counts`
/// (`counts[ℓ]` = runs of length `ℓ`). Returns the longest run length, so
/// `counts[..=longest]` covers every nonzero entry.
fn toss_histogram(rng: &mut ChaCha8Rng, n: u64, threshold: Option<u64>, counts: &mut [u32]) -> usize {
    let mut cur = 0usize;
    let mut longest = 0usize;
    let mut remaining = n;
    while remaining > 0 {
        let k = remaining.min(64) as u32;
        let w = match threshold {
            None => rng.next_u64(),
            Some(t) => {
                let mut w = 0u64;
                for i in 0..k {
                    w |= ((rng.next_u64() < t) as u64) << i;
                }
                w
            }
        };
        let mut pos = 0u32;
        while pos < k {
            let ones = (w >> pos).trailing_ones().min(k - pos);
            cur += ones as usize;
            pos += ones;
            if pos >= k {
                break;
            }
            if cur > 0 {
                counts[cur] += 1;
                longest = longest.max(cur);
                cur = 0;
            }
            pos += (w >> pos).trailing_zeros().min(k - pos);
        }
        remaining -= k as u64;
    }
    if cur > 0 {
        counts[cur] += 1;
        longest = longest.max(cur);
    }
    longest
}

fn run_block(cfg: &SimConfig, h: &dyn Functional, block: u64) -> Moments {
    let dim = h.dim();
    let mut acc = Moments::new(dim);
    let mut counts = vec![0u32; cfg.n as usize + 1];
    let mut out = vec![0.0; dim];
    // p = 1/2 uses every bit of each draw; otherwise one draw per toss.
    let threshold = if cfg.p == 0.5 {
        None
    } else {
        Some((cfg.p * 2f64.powi(64)) as u64)
    };
    let start = block * BLOCK;
    let end = (start + BLOCK).min(cfg.trials);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for t in start..end {
        rng.set_stream(t);
        rng.set_word_pos(0);
        let top = toss_histogram(&mut rng, cfg.n, threshold, &mut counts);
        h.eval_counts(&counts[..=top], &mut out);
        acc.push(&out);
        counts[..=top].fill(0);
    }
    acc
}

/// Estimates `E h(R(n))` from `cfg.trials` independent sequences.
pub fn simulate(cfg: &SimConfig, h: &dyn Functional) -> Result<SimResult> {
    if cfg.trials == 0 {
        return Err(RunsError::InvalidArgument("trials must be ≥ 1".into()));
    }
    if !(cfg.p > 0.0 && cfg.p < 1.0) {
        return Err(RunsError::InvalidArgument(format!(
            "coin bias must lie in (0,1), got {}",
            cfg.p
        )));
    }
    let blocks = cfg.trials.div_ceil(BLOCK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| RunsError::Numerical(format!("cannot start worker pool: {e}")))?;
    let partials: Vec<Moments> =
        pool.install(|| (0..blocks).into_par_iter().map(|b| run_block(cfg, h, b)).collect());
    let mut total = Moments::new(h.dim());
    for part in &partials {
        total.merge(part);
    }
    let n = total.count as f64;
    let std_err = total
        .m2
        .iter()
        .map(|s| if total.count > 1 { (s / (n - 1.0) / n).sqrt() } else { 0.0 })
        .collect();
    Ok(SimResult {
        mean: total.mean,
        std_err,
        trials: total.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portmanteau::NamedFunctional;
    use num_rational::BigRational;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn enumeration_small_cases() {
        let law = enumerate(3, r(1, 2)).unwrap();
        let expect = [
            ("0", r(1, 8)),
            ("1^1", r(3, 8)),
            ("1^2", r(1, 8)),
            ("2^1", r(2, 8)),
            ("3^1", r(1, 8)),
        ];
        assert_eq!(law.len(), expect.len());
        for (x, w) in expect {
            assert_eq!(law.weight(&x.parse().unwrap()), w);
        }
        let zero = enumerate(0, 0.3).unwrap();
        assert_eq!(zero.atoms(), &[(RunVector::zero(), 1.0)]);
        let five = enumerate(5, r(1, 2)).unwrap();
        assert_eq!(five.expect_with(|x| r((x.longest() >= 2) as i64, 1)), r(19, 32));
        assert!(enumerate(25, 0.5).is_err());
    }

    #[test]
    fn histogram_matches_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1u64, 5, 63, 64, 65, 200] {
            for threshold in [None, Some(u64::MAX / 3)] {
                let mut counts = vec![0u32; n as usize + 1];
                let mut copy = rng.clone();
                let top = toss_histogram(&mut rng, n, threshold, &mut counts);
                let mut bits = Vec::new();
                let mut left = n;
                while left > 0 {
                    let k = left.min(64);
                    match threshold {
                        None => {
                            let w = copy.next_u64();
                            bits.extend((0..k).map(|i| w >> i & 1 == 1));
                        }
                        Some(t) => bits.extend((0..k).map(|_| copy.next_u64() < t)),
                    }
                    left -= k;
                }
                let x = RunVector::of_bits(bits);
                assert_eq!(top as u32, x.longest());
                for (len, c) in x.iter() {
                    assert_eq!(counts[len as usize], c);
                }
                assert_eq!(counts.iter().map(|&c| c as u64).sum::<u64>(), x.total_runs());
            }
        }
    }

    #[test]
    fn simulation_is_deterministic_and_sane() {
        let cfg = SimConfig {
            n: 3,
            p: 0.5,
            trials: 20_000,
            seed: 11,
            workers: 1,
        };
        let h = NamedFunctional::RunsOfLength(2);
        let a = simulate(&cfg, &h).unwrap();
        let b = simulate(&SimConfig { workers: 3, ..cfg }, &h).unwrap();
        assert_eq!(a, b);
        assert!((a.mean[0] - 0.25).abs() < 4.0 * a.std_err[0]);
        let heads = simulate(
            &SimConfig {
                n: 100,
                p: 0.3,
                ..cfg
            },
            &NamedFunctional::HeadCount,
        )
        .unwrap();
        assert!((heads.mean[0] - 30.0).abs() < 4.0 * heads.std_err[0]);
        assert!(simulate(&SimConfig { trials: 0, ..cfg }, &h).is_err());
    }
}
