//! Number formatting shared by every text output.

/// Formats `x` with six significant digits, trimming trailing zeros.
///
/// Magnitudes outside `[1e-4, 1e6)` switch to exponent notation. Non-finite
/// values print as `nan`, `inf` or `-inf`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so that e.g. 999999.7 is classified by its rounded exponent.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Round half up (toward +inf) to an integer count.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0495208), "1.04952");
        assert_eq!(sig6(3520.0898), "3520.09");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(-2.0), "-2");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn half_up() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.4999), 2);
        assert_eq!(round_half_up(3683.5), 3684);
        assert_eq!(round_half_up(-0.5), 0);
    }
}
