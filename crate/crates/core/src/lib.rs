//! Exact and approximate distributions of success runs in Bernoulli
//! sequences.
//!
//! * [`runvec`]: the run vector type and counting functionals.
//! * [`geo`]: closed forms under a geometric number of tosses.
//! * [`portmanteau`]: exact finite-`n` laws of `R(n)` and `G(n)`.
//! * [`moments`]: binomial moments and the pmf of `G_ℓ(n)`.
//! * [`longest`]: the longest-run distribution and its approximations.
//! * [`oracle`]: brute-force enumeration and Monte Carlo.

pub mod error;
pub mod geo;
pub mod longest;
pub mod moments;
pub mod oracle;
pub mod portmanteau;
pub mod runvec;
pub mod scalar;

pub use error::{Result, RunsError};
pub use geo::{GeoLaw, Params};
pub use portmanteau::{Functional, LawTable, NamedFunctional, RunDistribution};
pub use runvec::{run_vector_of, RunVector, Shortest, ZSeq};
pub use scalar::{parse_ratio, Scalar};

pub use num_complex::Complex64;
pub use num_rational::BigRational;
