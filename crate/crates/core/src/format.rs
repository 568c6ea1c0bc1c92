//! Decimal formatting shared by every text output.
//!
//! Floats are written with 12 significant digits in the style of C's `%.12g`:
//! fixed notation for decimal exponents in `-4..12`, scientific otherwise,
//! trailing zeros stripped.

const SIGNIFICANT: usize = 12;

pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // rounding may carry into the next decade, so read the exponent back
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

/// `x` rounded to the value its 12-digit rendering denotes.
pub fn round_sig12(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.25), "0.25");
        assert_eq!(sig12(0.5000000000000001), "0.5");
        assert_eq!(sig12(0.030153689607045803), "0.030153689607");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(123456789012.0), "123456789012");
        assert_eq!(sig12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(sig12(0.0000123), "1.23e-05");
        assert_eq!(sig12(0.000123), "0.000123");
        assert_eq!(sig12(9.9999999999996), "10");
        assert_eq!(sig12(1e-20), "1e-20");
    }

    #[test]
    fn rounding_is_idempotent() {
        let x = (std::f64::consts::PI / 18.0).sin().powi(2);
        let r = round_sig12(x);
        assert_eq!(round_sig12(r), r);
        assert_eq!(sig12(r), sig12(x));
    }
}
