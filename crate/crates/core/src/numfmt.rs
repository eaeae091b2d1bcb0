//! Locale-independent number formatting shared by every CSV and JSON writer.

/// Formats `x` with 12 significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round once in scientific form so the exponent reflects the rounding.
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits, for JSON export.
pub fn round12(x: f64) -> f64 {
    g12(x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(3.0), "3");
        assert_eq!(g12(-2.5), "-2.5");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(2.0f64.sqrt() * 1000.0), "1414.21356237");
        assert_eq!(g12(1.234e-9), "1.234e-9");
        assert_eq!(g12(6.02214076e23), "6.02214076e23");
        assert_eq!(g12(9.9999999999999), "10");
        assert_eq!(g12(-1e-20), "-1e-20");
    }

    #[test]
    fn round_trip_precision() {
        let x = std::f64::consts::PI;
        assert!((round12(x) - x).abs() < 1e-11);
    }
}
