use std::io;

use num_traits::{One, Zero};
use runs_core::geo::Params;
use runs_core::longest::{all_roots, exceed_exact, exceed_exact_rational, poisson_approx, root_w0, second_approx};
use runs_core::moments::{binom_moment_g, binom_moment_g_f64, joint_binom_moment_r, pmf_g_all, pmf_g_exact_all};
use runs_core::oracle::{simulate as run_simulation, SimConfig};
use runs_core::portmanteau::{g_distribution, run_distribution};
use runs_core::scalar::{exact_of_f64, ratio_to_f64};
use runs_core::{parse_ratio, BigRational, NamedFunctional, RunDistribution, RunsError};
use serde_json::{json, Value};

use crate::fmt::{error_pct, sig, ERROR_DIGITS};
use crate::output::{Cell, OutputSpec, Table};
use crate::query::Query;
use crate::svg::{Plot, Series, Style};
use crate::{DistArgs, FigureArgs, Kind, LongestArgs, MethodArg, MomentsArgs, RootsArgs, SimulateArgs, StoppedArgs, Target};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runs(#[from] RunsError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Runs(RunsError::InvalidArgument(_)) => 2,
            _ => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// A probability given on the command line, kept both exactly and as `f64`.
#[derive(Debug, Clone)]
pub struct Prob {
    pub exact: BigRational,
    pub value: f64,
}

impl Prob {
    fn parse(name: &str, s: &str) -> Result<Self> {
        let exact = match parse_ratio(s) {
            Some(r) => r,
            None => match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => exact_of_f64(v),
                _ => return Err(CliError::Usage(format!("--{name}: cannot parse {s:?} as a decimal or a/b"))),
            },
        };
        if exact <= BigRational::zero() || exact >= BigRational::one() {
            return Err(CliError::Usage(format!("--{name} must lie strictly between 0 and 1, got {s}")));
        }
        let value = ratio_to_f64(&exact);
        Ok(Prob { exact, value })
    }
}

/// Parses `5..20,30,40..42` into an ascending-as-written list; ranges are
/// inclusive.
pub fn parse_list(name: &str, s: &str) -> Result<Vec<u64>> {
    let bad = || CliError::Usage(format!("--{name}: expected a list like 5..20,30, got {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn parse_lengths(s: &str) -> Result<Vec<u32>> {
    parse_list("ell", s)?
        .into_iter()
        .map(|v| match u32::try_from(v) {
            Ok(l) if l >= 1 => Ok(l),
            _ => Err(CliError::Usage(format!("--ell: run lengths must be in 1..=2^32-1, got {v}"))),
        })
        .collect()
}

pub fn longest(a: &LongestArgs, output: &OutputSpec) -> Result<()> {
    let ns = parse_list("n", &a.n)?;
    let lens = parse_lengths(&a.ell)?;
    let p = Prob::parse("p", &a.p)?;
    let mut methods = a.methods.clone();
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(CliError::Usage("--methods must name at least one method".into()));
    }
    if a.rational && !methods.contains(&MethodArg::Exact) {
        return Err(CliError::Usage("--rational applies to the exact column; add exact to --methods".into()));
    }
    let with_exact = methods.contains(&MethodArg::Exact);
    let mut columns = vec!["n".to_string(), "ell".to_string()];
    for m in &methods {
        match m {
            MethodArg::Exact => columns.push("exact".into()),
            MethodArg::Poisson => columns.push("poisson".into()),
            MethodArg::Root => columns.push("root".into()),
        }
        if with_exact && *m != MethodArg::Exact {
            columns.push(format!("{}_err_pct", columns.last().unwrap()));
        }
    }
    let mut table = Table::new(columns);
    for &n in &ns {
        for &len in &lens {
            let mut row = vec![Cell::from(n), Cell::from(len)];
            let exact = if with_exact {
                Some(if a.rational {
                    ratio_to_f64(&exceed_exact_rational(n, len, &p.exact))
                } else {
                    exceed_exact(n, len, &p.value)
                })
            } else {
                None
            };
            for m in &methods {
                let v = match m {
                    MethodArg::Exact => exact.unwrap(),
                    MethodArg::Poisson => poisson_approx(n, len, p.value)?.complement,
                    MethodArg::Root => second_approx(n, len, p.value)?.complement,
                };
                row.push(Cell::Num(v));
                if let (Some(e), false) = (exact, *m == MethodArg::Exact) {
                    row.push(error_pct(v, e).map_or(Cell::Empty, |x| Cell::Fixed(x, ERROR_DIGITS)));
                }
            }
            table.push(row);
        }
    }
    Ok(output.emit_table(&table)?)
}

const FIG1_NS: [u64; 3] = [10, 100, 1000];
const FIG1_MAX_LEN: u32 = 20;
const FIG2_N: u64 = 1000;
const FIG2_PS: [(&str, f64); 3] = [("0.25", 0.25), ("0.5", 0.5), ("0.75", 0.75)];
const FIG2_MAX_LEN: u32 = 40;

pub fn figure(a: &FigureArgs, output: &OutputSpec) -> Result<()> {
    let (table, plot) = if a.fig == 1 { figure_one()? } else { figure_two()? };
    output.emit_table(&table)?;
    if let Some(path) = &a.svg {
        std::fs::write(path, plot.render())?;
    }
    Ok(())
}

fn figure_one() -> Result<(Table, Plot)> {
    let mut table = Table::new(["n", "ell", "tail", "log2_n"]);
    let mut series = Vec::new();
    for (i, &n) in FIG1_NS.iter().enumerate() {
        let marker = (n as f64).log2();
        let mut points = Vec::new();
        for len in 1..=FIG1_MAX_LEN {
            let v = exceed_exact(n, len, &0.5);
            table.push(vec![n.into(), len.into(), v.into(), marker.into()]);
            points.push((len as f64, v));
        }
        series.push(Series {
            label: format!("n = {n}"),
            points,
            style: Style::Line,
            colour: i,
        });
    }
    let plot = Plot {
        title: "P(L(n) ≥ ℓ), p = 1/2".into(),
        x_label: "ℓ".into(),
        y_label: "P(L(n) ≥ ℓ)".into(),
        series,
        markers: FIG1_NS.iter().map(|&n| (n as f64).log2()).collect(),
    };
    Ok((table, plot))
}

fn figure_two() -> Result<(Table, Plot)> {
    let mut table = Table::new(["p", "n", "ell", "exact", "approx"]);
    let mut series = Vec::new();
    for (i, &(label, p)) in FIG2_PS.iter().enumerate() {
        let mut dots = Vec::new();
        let mut line = Vec::new();
        for len in 1..=FIG2_MAX_LEN {
            let exact = exceed_exact(FIG2_N, len, &p);
            let approx = poisson_approx(FIG2_N, len, p)?.complement;
            table.push(vec![Cell::Text(label.into()), FIG2_N.into(), len.into(), exact.into(), approx.into()]);
            dots.push((len as f64, exact));
            line.push((len as f64, approx));
        }
        series.push(Series {
            label: format!("p = {label}, exact"),
            points: dots,
            style: Style::Dots,
            colour: i,
        });
        series.push(Series {
            label: format!("p = {label}, approximation"),
            points: line,
            style: Style::Line,
            colour: i,
        });
    }
    let plot = Plot {
        title: format!("P(L({FIG2_N}) ≥ ℓ)"),
        x_label: "ℓ".into(),
        y_label: "P(L(n) ≥ ℓ)".into(),
        series,
        markers: Vec::new(),
    };
    Ok((table, plot))
}

pub fn dist(a: &DistArgs, output: &OutputSpec) -> Result<()> {
    let p = Prob::parse("p", &a.p)?;
    let n = a.n;
    if a.target != Target::GEll && a.ell.is_some() {
        return Err(CliError::Usage("--ell only applies to --target G_ell".into()));
    }
    if a.target == Target::GEll {
        let len = match a.ell {
            Some(l) if l >= 1 => l,
            _ => return Err(CliError::Usage("--target G_ell needs --ell ≥ 1".into())),
        };
        let (weights, exact): (Vec<f64>, Option<Vec<String>>) = if a.exact {
            let w = pmf_g_exact_all(n, len, &p.exact);
            (w.iter().map(ratio_to_f64).collect(), Some(w.iter().map(|v| v.to_string()).collect()))
        } else {
            (pmf_g_all(n, len, p.value), None)
        };
        return emit_pmf(n, &p, len, &weights, exact.as_deref(), output);
    }
    let size = usize::try_from(n).map_err(|_| CliError::Usage(format!("--n too large: {n}")))?;
    let law_of = |exact: bool| -> Result<(RunDistribution<f64>, Option<RunDistribution<BigRational>>)> {
        if exact {
            let law = match a.target {
                Target::R => run_distribution(size, p.exact.clone())?,
                _ => g_distribution(size, p.exact.clone())?,
            };
            Ok((law.to_f64(), Some(law)))
        } else {
            let law = match a.target {
                Target::R => run_distribution(size, p.value)?,
                _ => g_distribution(size, p.value)?,
            };
            Ok((law, None))
        }
    };
    let (law, exact) = law_of(a.exact)?;
    match output.format {
        crate::output::Format::Json => {
            let value = match &exact {
                Some(law) => law.to_json_exact(),
                None => round_json(law.to_json(), output.precision),
            };
            Ok(output.emit_json(&value)?)
        }
        crate::output::Format::Csv => {
            let mut atoms: Vec<(String, f64, Option<String>)> = match &exact {
                Some(e) => e
                    .atoms()
                    .iter()
                    .map(|(x, w)| (x.to_string(), ratio_to_f64(w), Some(w.to_string())))
                    .collect(),
                None => law.atoms().iter().map(|(x, w)| (x.to_string(), *w, None)).collect(),
            };
            atoms.sort_by(|a, b| a.0.cmp(&b.0));
            let mut columns = vec!["x", "w"];
            if exact.is_some() {
                columns.push("w_exact");
            }
            let mut table = Table::new(columns);
            for (x, w, e) in atoms {
                let mut row = vec![Cell::Text(x), Cell::Num(w)];
                if let Some(e) = e {
                    row.push(Cell::Text(e));
                }
                table.push(row);
            }
            Ok(output.emit_table(&table)?)
        }
    }
}

fn emit_pmf(
    n: u64,
    p: &Prob,
    len: u32,
    weights: &[f64],
    exact: Option<&[String]>,
    output: &OutputSpec,
) -> Result<()> {
    let mut columns = vec!["x", "w"];
    if exact.is_some() {
        columns.push("w_exact");
    }
    let mut table = Table::new(columns);
    for (x, &w) in weights.iter().enumerate() {
        let mut row = vec![Cell::from(x as u64), Cell::Num(w)];
        if let Some(e) = exact {
            row.push(Cell::Text(e[x].clone()));
        }
        table.push(row);
    }
    match output.format {
        crate::output::Format::Csv => Ok(output.emit_table(&table)?),
        crate::output::Format::Json => {
            let atoms: Vec<Value> = match exact {
                Some(e) => e.iter().enumerate().map(|(x, w)| json!({ "x": x, "w": w })).collect(),
                None => weights
                    .iter()
                    .enumerate()
                    .map(|(x, &w)| json!({ "x": x, "w": round(w, output.precision) }))
                    .collect(),
            };
            let p_value = if exact.is_some() {
                json!(p.exact.to_string())
            } else {
                json!(p.value)
            };
            Ok(output.emit_json(&json!({ "n": n, "p": p_value, "ell": len, "atoms": atoms }))?)
        }
    }
}

fn round(v: f64, digits: usize) -> f64 {
    if v.is_finite() {
        sig(v, digits).parse().expect("formatted float")
    } else {
        v
    }
}

/// Rounds every non-integer number in `v` to `digits` significant digits.
fn round_json(v: Value, digits: usize) -> Value {
    match v {
        Value::Number(num) if num.is_f64() => Value::from(round(num.as_f64().unwrap(), digits)),
        Value::Array(items) => Value::Array(items.into_iter().map(|x| round_json(x, digits)).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, x)| (k, round_json(x, digits))).collect()),
        other => other,
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn moments(a: &MomentsArgs, output: &OutputSpec) -> Result<()> {
    let p = Prob::parse("p", &a.p)?;
    let n = a.n;
    if a.ell.contains(&0) {
        return Err(CliError::Usage("--ell: run lengths must be ≥ 1".into()));
    }
    let (value, exact): (f64, Option<BigRational>) = match a.kind {
        Kind::G => {
            let (&[len], &[r]) = (a.ell.as_slice(), a.r.as_slice()) else {
                return Err(CliError::Usage("--kind g takes a single --ell and a single --r".into()));
            };
            if a.exact {
                let v = binom_moment_g(n, len, r, &p.exact);
                (ratio_to_f64(&v), Some(v))
            } else {
                (binom_moment_g_f64(n, len, r, p.value), None)
            }
        }
        Kind::R => {
            if a.ell.len() != a.r.len() {
                return Err(CliError::Usage(format!(
                    "--ell has {} entries but --r has {}",
                    a.ell.len(),
                    a.r.len()
                )));
            }
            if a.exact {
                let v = joint_binom_moment_r(n, &a.ell, &a.r, &p.exact)?;
                (ratio_to_f64(&v), Some(v))
            } else {
                (joint_binom_moment_r(n, &a.ell, &a.r, &p.value)?, None)
            }
        }
    };
    let kind = match a.kind {
        Kind::G => "g",
        Kind::R => "r",
    };
    let mut columns = vec!["n", "kind", "ell", "r", "value"];
    if exact.is_some() {
        columns.push("exact");
    }
    let mut table = Table::new(columns);
    let mut row = vec![
        Cell::from(n),
        Cell::from(kind),
        Cell::Text(join(&a.ell)),
        Cell::Text(join(&a.r)),
        Cell::Num(value),
    ];
    if let Some(e) = exact {
        row.push(Cell::Text(e.to_string()));
    }
    table.push(row);
    Ok(output.emit_table(&table)?)
}

pub fn stopped(a: &StoppedArgs, output: &OutputSpec) -> Result<()> {
    let p = Prob::parse("p", &a.p)?;
    let w = Prob::parse("w", &a.w)?;
    let params = Params::new(p.exact, w.exact)?;
    let mut table = Table::new(["query", "value", "exact"]);
    for text in &a.query {
        let q: Query = text.parse()?;
        let v = q.eval(&params)?;
        table.push(vec![Cell::Text(text.clone()), Cell::Num(ratio_to_f64(&v)), Cell::Text(v.to_string())]);
    }
    Ok(output.emit_table(&table)?)
}

pub fn simulate(a: &SimulateArgs, seed: u64, output: &OutputSpec) -> Result<()> {
    let p = Prob::parse("p", &a.p)?;
    let h: NamedFunctional = a.functional.parse()?;
    let cfg = SimConfig {
        n: a.n,
        p: p.value,
        trials: a.trials,
        seed,
        workers: a.workers,
    };
    let res = run_simulation(&cfg, &h)?;
    let mut table = Table::new(["functional", "n", "trials", "seed", "mean", "std_err"]);
    table.push(vec![
        Cell::Text(h.to_string()),
        a.n.into(),
        res.trials.into(),
        Cell::Text(seed.to_string()),
        res.mean[0].into(),
        res.std_err[0].into(),
    ]);
    Ok(output.emit_table(&table)?)
}

pub fn roots(a: &RootsArgs, output: &OutputSpec) -> Result<()> {
    let p = Prob::parse("p", &a.p)?;
    let info = root_w0(a.ell, p.value)?;
    let inv_p = 1.0 / p.value;
    let mut rows: Vec<(u8, f64, f64)> = Vec::new();
    let mut seen_w0 = false;
    for z in all_roots(a.ell, p.value)? {
        let near = |x: f64| (z.re - x).abs() <= 1e-9 * x && z.im.abs() <= 1e-9 * x;
        let rank = if !seen_w0 && near(info.w0) {
            seen_w0 = true;
            0
        } else if near(inv_p) {
            1
        } else {
            2
        };
        rows.push((rank, z.re, z.im));
    }
    rows.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then((x.1.hypot(x.2)).total_cmp(&y.1.hypot(y.2)))
            .then(x.1.total_cmp(&y.1))
            .then(x.2.total_cmp(&y.2))
    });
    let mut table = Table::new(["kind", "re", "im", "modulus"]);
    for (rank, re, im) in rows {
        let kind = ["w0", "1/p", "other"][rank as usize];
        table.push(vec![Cell::from(kind), re.into(), im.into(), re.hypot(im).into()]);
    }
    Ok(output.emit_table(&table)?)
}
