//! Number formatting shared by every subcommand.

/// `v` rounded to `digits` significant digits, ties to even on the exact
/// binary value. Plain notation for exponents in `-5..digits`, scientific
/// otherwise; trailing zeros are dropped.
pub fn sig(v: f64, digits: usize) -> String {
    render(v, digits, false)
}

/// As [`sig`] but keeps trailing zeros, so exactly `digits` significant
/// digits are shown.
pub fn sig_padded(v: f64, digits: usize) -> String {
    render(v, digits, true)
}

fn render(v: f64, digits: usize, padded: bool) -> String {
    let trim = |s: &str| if padded { s.to_string() } else { trim(s) };
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let s = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let body: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < -5 || exp >= digits as i32 {
        let m = trim(&insert_point(&body, 1));
        return format!("{sign}{m}e{exp}");
    }
    let plain = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), body)
    } else {
        insert_point(&body, exp as usize + 1)
    };
    format!("{sign}{}", trim(&plain))
}

fn insert_point(body: &str, at: usize) -> String {
    if at >= body.len() {
        format!("{body}{}", "0".repeat(at - body.len()))
    } else {
        format!("{}.{}", &body[..at], &body[at..])
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Relative error `|approx - exact| / exact` in percent; `None` when the
/// exact value is zero.
pub fn error_pct(approx: f64, exact: f64) -> Option<f64> {
    (exact != 0.0).then(|| (approx - exact).abs() / exact.abs() * 100.0)
}

/// Digits used for error percentages.
pub const ERROR_DIGITS: usize = 3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.992583894386551, 15), "0.992583894386551");
        assert_eq!(sig(4.41957581641815e-12, 15), "4.41957581641815e-12");
        assert_eq!(sig(0.0, 15), "0");
        assert_eq!(sig(2.0 / 3.0, 5), "0.66667");
        assert_eq!(sig(-1234.5, 3), "-1.23e3");
        assert_eq!(sig(1234.5, 6), "1234.5");
        assert_eq!(sig(1e-5, 4), "0.00001");
        assert_eq!(sig(100.0, 3), "100");
        assert_eq!(sig(9.9996, 4), "10");
        assert_eq!(sig_padded(17.0, 3), "17.0");
        assert_eq!(sig_padded(0.001, 2), "0.0010");
        assert_eq!(sig_padded(1.1e-9, 3), "1.10e-9");
        assert_eq!(sig_padded(100.0, 3), "100");
    }

    #[test]
    fn ties_round_to_even() {
        // 0.125 and 0.375 are exact in binary
        assert_eq!(sig(0.125, 2), "0.12");
        assert_eq!(sig(0.375, 2), "0.38");
        assert_eq!(sig(2.5, 1), "2");
        assert_eq!(sig(3.5, 1), "4");
    }

    #[test]
    fn output_reparses() {
        for v in [1.0 / 3.0, 6.02e23, -7.5e-9, 0.5, 123456.789] {
            let back: f64 = sig(v, 15).parse().unwrap();
            assert!((back - v).abs() <= 1e-14 * v.abs());
        }
    }

    #[test]
    fn percent_error() {
        assert_eq!(error_pct(1.5, 1.0), Some(50.0));
        assert_eq!(error_pct(1.0, 0.0), None);
    }
}
