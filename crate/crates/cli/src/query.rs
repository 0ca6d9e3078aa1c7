//! Queries about the geometrically stopped run vector.
//!
//! ```text
//! L*<ℓ   L*>=ℓ            longest run
//! R*_ℓ=k  G*_ℓ=k  S*=k  N*=k    point masses
//! E[R*_ℓ] E[G*_ℓ] E[S*] E[N*]   means
//! shortest*>=ℓ  shortest*=inf   shortest run
//! ```

use std::str::FromStr;

use runs_core::geo::{
    g_star_law, heads_star_law, l_star_cdf, r_star_law, shortest_star_defect, shortest_star_tail,
    stopping_time_law, GeoLaw, Params,
};
use runs_core::{Result, RunsError, Scalar};

pub const GRAMMAR: &str =
    "L*<ℓ, L*>=ℓ, R*_ℓ=k, G*_ℓ=k, S*=k, N*=k, E[R*_ℓ], E[G*_ℓ], E[S*], E[N*], shortest*>=ℓ, shortest*=inf";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Runs(u32),
    Exceed(u32),
    Heads,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    LongestBelow(u32),
    LongestAtLeast(u32),
    Mass(Count, u64),
    Mean(Count),
    ShortestAtLeast(u32),
    NoRuns,
}

impl FromStr for Query {
    type Err = RunsError;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || RunsError::InvalidArgument(format!("cannot parse query {s:?}; expected one of: {GRAMMAR}"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        let len = |t: &str| match t.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(bad()),
        };
        let count = |t: &str| -> Result<Count> {
            if let Some(l) = t.strip_prefix("R*_") {
                Ok(Count::Runs(len(l)?))
            } else if let Some(l) = t.strip_prefix("G*_") {
                Ok(Count::Exceed(len(l)?))
            } else if t == "S*" {
                Ok(Count::Heads)
            } else if t == "N*" {
                Ok(Count::Stop)
            } else {
                Err(bad())
            }
        };
        if let Some(l) = s.strip_prefix("L*>=") {
            return Ok(Query::LongestAtLeast(len(l)?));
        }
        if let Some(l) = s.strip_prefix("L*<") {
            return Ok(Query::LongestBelow(len(l)?));
        }
        if s == "shortest*=inf" {
            return Ok(Query::NoRuns);
        }
        if let Some(l) = s.strip_prefix("shortest*>=") {
            return Ok(Query::ShortestAtLeast(len(l)?));
        }
        if let Some(inner) = s.strip_prefix("E[").and_then(|t| t.strip_suffix(']')) {
            return Ok(Query::Mean(count(inner)?));
        }
        if let Some((lhs, k)) = s.split_once('=') {
            return Ok(Query::Mass(count(lhs)?, num(k)?));
        }
        Err(bad())
    }
}

fn law<T: Scalar>(c: Count, params: &Params<T>) -> Result<GeoLaw<T>> {
    match c {
        Count::Runs(l) => r_star_law(l, params),
        Count::Exceed(l) => g_star_law(l, params),
        Count::Heads => Ok(heads_star_law(params)),
        Count::Stop => Ok(stopping_time_law(params.w())),
    }
}

impl Query {
    pub fn eval<T: Scalar>(&self, params: &Params<T>) -> Result<T> {
        match *self {
            Query::LongestBelow(l) => l_star_cdf(l, params),
            Query::LongestAtLeast(l) => Ok(T::one() - l_star_cdf(l, params)?),
            Query::Mass(c, k) => Ok(law(c, params)?.pmf(k)),
            Query::Mean(c) => Ok(law(c, params)?.mean()),
            Query::ShortestAtLeast(l) => shortest_star_tail(l, params),
            Query::NoRuns => Ok(shortest_star_defect(params)),
        }
    }
}
