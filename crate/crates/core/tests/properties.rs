use num_rational::BigRational;
use proptest::prelude::*;
use runs_core::longest::{exceed_exact, f_exact, f_series, poisson_approx, root_w0, second_approx};
use runs_core::moments::{binom_moment_g_f64, pmf_g_all};
use runs_core::oracle::enumerate;
use runs_core::portmanteau::run_distribution;
use runs_core::{run_vector_of, RunVector};

fn bias() -> impl Strategy<Value = f64> {
    (1u32..99).prop_map(|k| k as f64 / 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn longest_cdf_is_monotone(n in 0u64..300, len in 1u32..25, p in bias()) {
        let f = f_exact(n, len, &p);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f_exact(n + 1, len, &p) <= f + 1e-15);
        prop_assert!(f_exact(n, len + 1, &p) >= f - 1e-15);
        prop_assert!((f + exceed_exact(n, len, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_agrees_with_recursion(n in 0u64..400, len in 1u32..30, p in bias()) {
        let a = f_exact(n, len, &p);
        let b = f_series(n, len, p);
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn pmf_of_exceedances_is_a_law(n in 0u64..61, len in 1u32..12, p in bias()) {
        let pmf = pmf_g_all(n, len, p);
        let total: f64 = pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(pmf.iter().all(|&v| v > -1e-12 && v < 1.0 + 1e-12));
        let mean: f64 = pmf.iter().enumerate().map(|(x, v)| x as f64 * v).sum();
        prop_assert!((mean - binom_moment_g_f64(n, len, 1, p)).abs() < 1e-9);
        prop_assert!((pmf[0] - f_exact(n, len, &p)).abs() < 1e-10);
    }

    #[test]
    fn approximations_stay_in_unit_interval(n in 0u64..5000, len in 1u32..20, p in bias()) {
        let a = poisson_approx(n, len, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.value));
        let b = second_approx(n, len, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&b.value));
        prop_assert!(b.c0.unwrap() > 0.0);
    }

    #[test]
    fn dominant_root_invariants(len in 1u32..40, p in bias()) {
        let info = root_w0(len, p).unwrap();
        let l = len as f64;
        prop_assert!(info.w0_minus_one > 0.0);
        prop_assert!(info.residual <= 1e-14 * info.w0.powi(len as i32 + 1).max(1.0));
        if p < l / (l + 1.0) {
            prop_assert!(info.w0 < (l + 1.0) / l);
        }
        if !info.degenerate {
            prop_assert!((info.w0 - 1.0 / p).abs() > 1e-9);
        }
    }

    #[test]
    fn enumeration_masses(n in 0usize..13, k in 1i64..10) {
        let p = BigRational::new(k.into(), 10.into());
        let law = enumerate(n, p.clone()).unwrap();
        prop_assert_eq!(law.total_mass(), BigRational::from_integer(1.into()));
        prop_assert_eq!(law, run_distribution(n, p).unwrap());
    }

    #[test]
    fn run_vector_matches_bits(bits in proptest::collection::vec(0u8..2, 0..80)) {
        let x = run_vector_of(&bits);
        prop_assert_eq!(x.head_count(), bits.iter().map(|&b| b as u64).sum::<u64>());
        prop_assert!(x.min_tosses() <= bits.len() as u64);
        let s = x.to_string();
        prop_assert_eq!(s.parse::<RunVector>().unwrap(), x);
    }
}

#[test]
fn root_based_error_shrinks_with_n() {
    for (len, p) in [(2u32, 0.5f64), (3, 0.3), (5, 0.6), (7, 0.5)] {
        let mut prev = f64::INFINITY;
        for n in [100u64, 300, 1000, 3000, 10_000] {
            let exact = f_exact(n, len, &p);
            if exact < 1e-300 {
                break;
            }
            let approx = second_approx(n, len, p).unwrap().value;
            let rel = (approx - exact).abs() / exact;
            assert!(rel <= prev * 1.0000001 + 1e-12, "ℓ={len} p={p} n={n}: {rel:e} after {prev:e}");
            prev = rel;
        }
    }
}

#[test]
fn poisson_regime_closes_gap() {
    // n p^ℓ q held near θ = 1 as n grows
    let (p, q) = (0.5f64, 0.5f64);
    let mut prev = f64::INFINITY;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let len = ((n as f64 * q).ln() / 2f64.ln()).round() as u32;
        let gap = (poisson_approx(n, len, p).unwrap().value - f_exact(n, len, &p)).abs();
        assert!(gap < prev, "n={n}: {gap:e}");
        prev = gap;
    }
    assert!(prev < 1e-4);
}
