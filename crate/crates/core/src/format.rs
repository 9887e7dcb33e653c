//! Number formatting shared by every CSV writer.

/// Formats `x` with `digits` significant digits, `%g`-style: trailing zeros
/// are trimmed and scientific notation is used for very small or large
/// magnitudes.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NA".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Twelve significant digits, the precision used by all numeric outputs.
pub fn g12(x: f64) -> String {
    sig(x, 12)
}

/// `NA` for missing values.
pub fn opt_g12(x: Option<f64>) -> String {
    x.map(g12).unwrap_or_else(|| "NA".to_string())
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
