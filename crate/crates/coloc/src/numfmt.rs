//! Deterministic numeric formatting for file outputs.
//!
//! All CSV/JSON emitted by the CLI carries at most 12 significant digits so
//! that identical runs produce byte-identical files regardless of how the
//! values were accumulated internally.

/// Number of significant digits used in serialized output.
pub const OUTPUT_SIG_DIGITS: usize = 12;

/// Round to `sig` significant digits, returning an f64.
pub fn round_sig(x: f64, sig: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", sig - 1, x).parse().unwrap_or(x)
}

/// Format with `sig` significant digits as a plain decimal string.
///
/// Trailing zeros in the fraction are trimmed (`0.5`, not
/// `0.500000000000`); very large or small magnitudes fall back to
/// scientific notation.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if !(-5..=15).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp >= 0 {
        let point = exp as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            out.push_str(&"0".repeat(point - digits.len()));
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    } else {
        out.push_str("0.");
        out.push_str(&"0".repeat((-exp - 1) as usize));
        out.push_str(&digits);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = trimmed.to_string();
    }
    out
}

/// Shorthand for the output policy: 12 significant digits.
pub fn fmt(x: f64) -> String {
    fmt_sig(x, OUTPUT_SIG_DIGITS)
}

fn trim_zeros(mantissa: &str) -> String {
    if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        mantissa.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_values() {
        assert_eq!(fmt(0.0), "0");
        assert_eq!(fmt(0.5), "0.5");
        assert_eq!(fmt(-0.5), "-0.5");
        assert_eq!(fmt(1.0), "1");
        assert_eq!(fmt(10.0), "10");
        assert_eq!(fmt(12345.0), "12345");
    }

    #[test]
    fn twelve_digit_precision() {
        assert_eq!(fmt(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(fmt(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt(-2.2453705803391), "-2.24537058034");
        assert_eq!(fmt(0.00012345678901234), "0.000123456789012");
    }

    #[test]
    fn extreme_magnitudes_use_scientific() {
        assert_eq!(fmt(1.5e-9), "1.5e-9");
        assert!(fmt(1.5e-30).contains('e'));
        assert!(fmt(2.5e20).contains('e'));
    }

    #[test]
    fn round_sig_is_stable() {
        let x = 0.1 + 0.2;
        assert_eq!(round_sig(x, 12), 0.3);
        assert_eq!(round_sig(0.0, 12), 0.0);
        let y = round_sig(std::f64::consts::PI, 12);
        assert_eq!(round_sig(y, 12), y);
    }

    #[test]
    fn non_finite() {
        assert_eq!(fmt(f64::NAN), "nan");
        assert_eq!(fmt(f64::INFINITY), "inf");
        assert_eq!(fmt(f64::NEG_INFINITY), "-inf");
    }
}
