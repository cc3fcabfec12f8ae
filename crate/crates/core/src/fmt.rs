//! Number formatting shared by the machine-readable writers.

/// Formats `x` with 17 significant digits, positional where that stays
/// readable and scientific otherwise. Parses back to the same `f64`.
pub fn sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if exp >= 0 {
        let point = exp as usize + 1;
        let (int, frac) = digits.split_at(point.min(digits.len()));
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

/// Two decimals, for human-readable tables.
pub fn two(x: f64) -> String {
    format!("{x:.2}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &x in &[1.0, 88.826_439_609_804_23, 9.869_604_401_089_358, 1e-7, 123_456_789.123, -4.5, 1e20, 99.999_999_999_999_99] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert!(sig17(88.826_439_609_804_23).starts_with("88.826"));
        assert_eq!(sig17(0.0), "0");
        assert_eq!(two(631.654_6), "631.65");
    }
}
