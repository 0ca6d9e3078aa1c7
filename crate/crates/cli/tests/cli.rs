use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use runs_core::longest::exceed_exact;
use runs_core::moments::binom_moment_g_f64;

fn runs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_runs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = runs(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let headers = rd.headers().unwrap().iter().map(String::from).collect();
        let rows = rd
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        Csv { headers, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.headers
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.headers))
    }

    fn num(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// `(file, args)` for every committed table.
fn tables() -> Vec<(&'static str, Vec<&'static str>)> {
    let base = ["longest", "--rational"];
    let with = |extra: &[&'static str]| base.iter().chain(extra).copied().collect::<Vec<_>>();
    vec![
        (
            "tail_n10000.csv",
            with(&["--n", "10000", "--p", "1/2", "--ell", "10,12,14,20,50", "--methods", "exact,poisson"]),
        ),
        ("ell2_p1_2.csv", with(&["--n", "5,7,10,20", "--p", "1/2", "--ell", "2"])),
        ("ell2_p1_3.csv", with(&["--n", "5,7,10,20", "--p", "1/3", "--ell", "2"])),
        ("ell2_p4_5.csv", with(&["--n", "5,7,10,20", "--p", "4/5", "--ell", "2"])),
        ("ell7_p1_2.csv", with(&["--n", "100,500,1500,3000", "--p", "1/2", "--ell", "7"])),
        ("ell10_p2_3.csv", with(&["--n", "100,500,1500,3000", "--p", "2/3", "--ell", "10"])),
    ]
}

#[test]
fn tables_match_golden_files() {
    for (file, args) in tables() {
        let want = Csv::parse(&std::fs::read_to_string(golden(file)).unwrap());
        let got = Csv::parse(&stdout(&args));
        assert_eq!(got.headers, want.headers, "{file}");
        assert_eq!(got.rows.len(), want.rows.len(), "{file}");
        for (r, (g, w)) in got.rows.iter().zip(&want.rows).enumerate() {
            for (c, h) in want.headers.iter().enumerate() {
                // rational exact column and integer keys are reproducible bit for bit
                if matches!(h.as_str(), "n" | "ell" | "exact") {
                    assert_eq!(g[c], w[c], "{file} row {r} {h}");
                } else {
                    let (a, b): (f64, f64) = (g[c].parse().unwrap(), w[c].parse().unwrap());
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{file} row {r} {h}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn tail_table_agrees_with_reference_values() {
    let reference = [
        (0.992583894386551, 0.992394672192560),
        (0.705167040532444, 0.704616988848744),
        (0.262835671849087, 0.262736242068365),
        (0.004748524931253, 0.004748478671106),
        (4.41957581641815e-12, 4.42000000000001e-12),
    ];
    let t = Csv::parse(&std::fs::read_to_string(golden("tail_n10000.csv")).unwrap());
    for (r, (exact, approx)) in reference.iter().enumerate() {
        assert!((t.num(r, "exact") - exact).abs() <= 1e-12);
        assert!((t.num(r, "poisson") - approx).abs() <= 1e-12);
    }
}

/// `(n, exact, poisson)`; an empty string skips the cell.
type Entry = (u64, &'static str, &'static str);

/// Reference entries per golden file.
fn printed_comparisons() -> Vec<(&'static str, Vec<Entry>)> {
    vec![
        (
            "ell2_p1_2.csv",
            vec![(5, "0.59375", "0.46474"), (7, "0.73438", "0.58314"), (10, "0.85938", "0.71350"), (20, "0.98311", "0.91792")],
        ),
        (
            "ell2_p1_3.csv",
            // the reference lists 0.76411 for the poisson entry at n = 20; the value is 0.76412
            vec![(5, "0.32510", "0.28347"), (7, "0.44033", "0.38213"), (10, "0.57730", "0.50525"), (20, "0.83415", "")],
        ),
        (
            "ell2_p4_5.csv",
            vec![
                (5, "0.94208", "0.64084"),
                (7, "0.98509", "0.72196"),
                (10, "0.9980232", "0.8106201"),
                (20, "0.9999975", "0.9473453"),
            ],
        ),
        (
            "ell7_p1_2.csv",
            vec![
                (100, "0.31752", "0.31002"),
                (500, "0.86364", "0.85537"),
                (1500, "0.99757", "0.99709"),
                (3000, "0.9999941986", "0.9999916997"),
            ],
        ),
        (
            "ell10_p2_3.csv",
            // the reference lists 0.41583 for the poisson entry at n = 100; the value is 0.41584
            vec![
                (100, "0.43531", ""),
                (500, "0.95209", "0.94214"),
                (1500, "0.999900", "0.999821"),
                (3000, "0.9999999904", "0.9999999694"),
            ],
        ),
    ]
}

fn agrees_at_shown_precision(value: f64, printed: &str) -> bool {
    let decimals = printed.split_once('.').map_or(0, |(_, f)| f.len()) as i32;
    let want: f64 = printed.parse().unwrap();
    (value - want).abs() <= 0.5 * 10f64.powi(-decimals) * (1.0 + 1e-9)
}

#[test]
fn comparison_tables_agree_with_reference_values() {
    for (file, rows) in printed_comparisons() {
        let t = Csv::parse(&std::fs::read_to_string(golden(file)).unwrap());
        for (r, (n, exact, poisson)) in rows.iter().enumerate() {
            assert_eq!(t.num(r, "n") as u64, *n);
            assert!(agrees_at_shown_precision(t.num(r, "exact"), exact), "{file} n={n} exact");
            if !poisson.is_empty() {
                assert!(agrees_at_shown_precision(t.num(r, "poisson"), poisson), "{file} n={n} poisson");
            }
        }
    }
}

#[test]
fn error_columns_are_relative_percentages() {
    let t = Csv::parse(&stdout(&["longest", "--n", "5..20", "--p", "1/2", "--ell", "2"]));
    assert_eq!(t.rows.len(), 16);
    assert_eq!(t.headers, ["n", "ell", "exact", "poisson", "poisson_err_pct", "root", "root_err_pct"]);
    for r in 0..t.rows.len() {
        let exact = t.num(r, "exact");
        for m in ["poisson", "root"] {
            let pct = (t.num(r, m) - exact).abs() / exact * 100.0;
            let shown = t.num(r, &format!("{m}_err_pct"));
            assert!((pct - shown).abs() <= 5e-3 * pct.max(1e-300), "row {r} {m}: {pct} vs {shown}");
        }
    }
    // 21.7% at three significant digits
    assert_eq!(t.rows[0][t.col("poisson_err_pct")], "21.7");
}

#[test]
fn empty_sequence_has_no_runs() {
    let t = Csv::parse(&stdout(&["longest", "--n", "0", "--ell", "1"]));
    assert_eq!(t.num(0, "exact"), 0.0);
}

#[test]
fn figure_one_curves() {
    let t = Csv::parse(&stdout(&["figure", "1"]));
    assert_eq!(t.headers, ["n", "ell", "tail", "log2_n"]);
    let mut seen = HashMap::new();
    for r in 0..t.rows.len() {
        let n = t.num(r, "n") as u64;
        let len = t.num(r, "ell") as u32;
        assert!((t.num(r, "tail") - exceed_exact(n, len, &0.5)).abs() <= 1e-14);
        *seen.entry(n).or_insert(0) += 1;
        if n == 1000 {
            assert!((t.num(r, "log2_n") - 9.9658).abs() < 1e-4);
        }
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn figure_two_curves_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("fig2.svg");
    let t = Csv::parse(&stdout(&["figure", "2", "--svg", svg.to_str().unwrap()]));
    assert_eq!(t.headers, ["p", "n", "ell", "exact", "approx"]);
    for r in 0..t.rows.len() {
        let (p, n, l) = (t.num(r, "p"), t.num(r, "n"), t.num(r, "ell"));
        let q = 1.0 - p;
        let pl = p.powf(l);
        let want = 1.0 - (-(n - l) * pl * q - pl).exp();
        assert!((t.num(r, "approx") - want).abs() <= 1e-13);
        assert!((t.num(r, "exact") - exceed_exact(n as u64, l as u32, &p)).abs() <= 1e-14);
    }
    let text = std::fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polyline") && text.contains("<circle"));
}

#[test]
fn three_toss_law() {
    let t = Csv::parse(&stdout(&["dist", "--n", "3", "--p", "1/2", "--exact"]));
    assert_eq!(t.headers, ["x", "w", "w_exact"]);
    let law: Vec<(String, String)> = t.rows.iter().map(|r| (r[0].clone(), r[2].clone())).collect();
    let want = [("0", "1/8"), ("1^1", "3/8"), ("1^2", "1/8"), ("2^1", "1/4"), ("3^1", "1/8")];
    assert_eq!(law, want.map(|(a, b)| (a.to_string(), b.to_string())));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&["--format", "json", "dist", "--n", "3", "--p", "1/2", "--exact"])).unwrap();
    assert_eq!(json["atoms"].as_array().unwrap().len(), 5);
    assert_eq!(json["p"], "1/2");
}

#[test]
fn exceedance_count_law_sums_to_one() {
    let t = Csv::parse(&stdout(&["dist", "--n", "40", "--p", "0.3", "--target", "G_ell", "--ell", "2"]));
    let total: f64 = (0..t.rows.len()).map(|r| t.num(r, "w")).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!((t.num(0, "w") - 1.0 + exceed_exact(40, 2, &0.3)).abs() < 1e-13);
}

#[test]
fn mean_exceedances_match_poisson_exponent() {
    let t = Csv::parse(&stdout(&["moments", "--n", "10000", "--p", "1/2", "--ell", "10", "--r", "1"]));
    let v = t.num(0, "value");
    assert!((v - binom_moment_g_f64(10_000, 10, 1, 0.5)).abs() < 1e-12);
    // the Poisson column of the first table row is 1 - exp(-E G_10)
    assert!((v + (1.0f64 - 0.992394672192560).ln()).abs() < 1e-10);
    let exact = Csv::parse(&stdout(&["moments", "--n", "10000", "--ell", "10", "--exact"]));
    assert_eq!(exact.rows[0][exact.col("exact")], "1249/256");
    let joint = Csv::parse(&stdout(&["moments", "--n", "12", "--kind", "r", "--ell", "1,2", "--r", "1,1", "--exact"]));
    assert_eq!(joint.rows[0][joint.col("ell")], "1;2");
}

#[test]
fn stopped_queries() {
    let t = Csv::parse(&stdout(&["stopped", "--p", "1/2", "--w", "1/2", "--query", "L*<1", "--query", "E[R*_1]"]));
    assert_eq!(t.headers, ["query", "value", "exact"]);
    assert_eq!(t.rows[0][2], "2/3");
    assert_eq!(t.rows[1][2], "9/32");
    let out = runs(&["stopped", "--query", "L*<<1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulation_is_seeded_and_worker_independent() {
    let args = |w: &'static str| {
        vec!["--seed", "7", "simulate", "--n", "100", "--trials", "20000", "--functional", "head_count", "--workers", w]
    };
    let one = stdout(&args("1"));
    assert_eq!(one, stdout(&args("4")));
    let t = Csv::parse(&one);
    assert!((t.num(0, "mean") - 50.0).abs() < 4.0 * t.num(0, "std_err"));
}

#[test]
fn unknown_functional_lists_registry() {
    let out = runs(&["simulate", "--n", "10", "--functional", "median"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["longest<", "total_runs", "head_count", "R_", "G_"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| runs(args).status.code();
    assert_eq!(code(&["longest", "--ell", "0"]), Some(2));
    assert_eq!(code(&["longest", "--ell", "3", "--methods", "poisson", "--rational"]), Some(2));
    assert_eq!(code(&["longest", "--ell", "3", "--p", "1.5"]), Some(2));
    assert_eq!(code(&["longest", "--ell", "3", "--n", "9..4"]), Some(2));
    assert_eq!(code(&["longest", "--bogus"]), Some(2));
    assert_eq!(code(&["moments", "--n", "5", "--ell", "1,2"]), Some(2));
    assert_eq!(code(&["dist", "--n", "100"]), Some(3));
    assert_eq!(code(&["roots", "--ell", "40"]), Some(3));
    assert_eq!(code(&["roots", "--ell", "4"]), Some(0));
}

#[test]
fn roots_listing() {
    let t = Csv::parse(&stdout(&["roots", "--ell", "3", "--p", "1/2"]));
    assert_eq!(t.headers, ["kind", "re", "im", "modulus"]);
    assert_eq!(t.rows.len(), 4);
    assert_eq!(t.rows[0][0], "w0");
    assert_eq!(t.rows[1][0], "1/p");
    let w0 = t.num(0, "re");
    assert!((1.0 - w0 + 0.0625 * w0.powi(4)).abs() < 1e-14);
    for r in 2..4 {
        assert!(t.num(r, "modulus") > 2.0);
    }
}

#[test]
fn every_csv_reparses_and_json_mirrors_it() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["longest", "--n", "5..8,30", "--p", "0.35", "--ell", "2..4"],
        vec!["longest", "--n", "50", "--ell", "3", "--methods", "root,poisson"],
        vec!["dist", "--n", "7", "--p", "2/5"],
        vec!["dist", "--n", "7", "--target", "G", "--exact"],
        vec!["dist", "--n", "30", "--target", "G_ell", "--ell", "3", "--exact"],
        vec!["moments", "--n", "60", "--kind", "r", "--ell", "1,3", "--r", "2,1"],
        vec!["stopped", "--p", "0.3", "--w", "0.6", "--query", "shortest*>=2", "--query", "G*_2=1"],
        vec!["simulate", "--n", "30", "--trials", "500", "--functional", "longest<4"],
        vec!["roots", "--ell", "5", "--p", "5/6"],
        vec!["figure", "1"],
    ];
    for args in cases {
        let text = stdout(&args);
        let t = Csv::parse(&text);
        assert!(!t.rows.is_empty(), "{args:?}");
        assert!(t.rows.iter().all(|r| r.len() == t.headers.len()));
        let mut json_args = vec!["--format", "json"];
        json_args.extend(&args);
        let v: serde_json::Value = serde_json::from_str(&stdout(&json_args)).unwrap();
        if let Some(rows) = v.as_array() {
            assert_eq!(rows.len(), t.rows.len(), "{args:?}");
            let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
            assert_eq!(keys, t.headers.iter().collect::<Vec<_>>(), "{args:?}");
        } else {
            assert!(v["atoms"].is_array(), "{args:?}");
        }
    }
}

#[test]
fn output_file_and_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = runs(&["--precision", "5", "--out", path.to_str().unwrap(), "longest", "--n", "5", "--ell", "2", "--methods", "exact"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap(), "n,ell,exact\n5,2,0.59375\n");
    let t = Csv::parse(&stdout(&["--precision", "3", "longest", "--n", "7", "--ell", "2", "--methods", "exact"]));
    assert_eq!(t.rows[0][2], "0.734");
}
