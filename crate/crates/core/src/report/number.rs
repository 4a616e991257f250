/// Formats a measurement for display: rounded half away from zero to two
/// decimals on the shortest decimal representation of `v`, then trailing
/// zeros and a dangling point are stripped (`85.70` → `85.7`, `2.00` → `2`).
///
/// Rounding works on decimal digits so that `1.005` becomes `1.01`, as a
/// reader of the printed value would expect.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    // Display for f64 prints the shortest round-trip digits without exponent.
    let repr = format!("{}", v.abs());
    let (int_part, frac_part) = match repr.split_once('.') {
        Some((i, f)) => (i, f),
        None => (repr.as_str(), ""),
    };
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let mut frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    frac.resize(frac.len().max(3), 0);
    let round_up = frac[2] >= 5;
    frac.truncate(2);
    digits.extend_from_slice(&frac);
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let int_str: String = digits[..split].iter().map(|d| char::from(b'0' + d)).collect();
    let mut frac_str: String = digits[split..].iter().map(|d| char::from(b'0' + d)).collect();
    while frac_str.ends_with('0') {
        frac_str.pop();
    }
    let is_zero = int_str.bytes().all(|b| b == b'0') && frac_str.is_empty();
    let mut out = String::new();
    if v.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.push_str(&int_str);
    if !frac_str.is_empty() {
        out.push('.');
        out.push_str(&frac_str);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::format_value;

    #[test]
    fn table_style_values() {
        assert_eq!(format_value(84.41), "84.41");
        assert_eq!(format_value(84.410), "84.41");
        assert_eq!(format_value(85.70), "85.7");
        assert_eq!(format_value(6.60), "6.6");
        assert_eq!(format_value(0.080), "0.08");
        assert_eq!(format_value(2.00), "2");
        assert_eq!(format_value(-1.29), "-1.29");
        assert_eq!(format_value(-3.56), "-3.56");
    }

    #[test]
    fn rounding() {
        assert_eq!(format_value(84.4149), "84.41");
        assert_eq!(format_value(84.415), "84.42");
        assert_eq!(format_value(1.005), "1.01");
        assert_eq!(format_value(9.995), "10");
        assert_eq!(format_value(99.999), "100");
        assert_eq!(format_value(-0.004), "0");
        assert_eq!(format_value(-0.005), "-0.01");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(1e-12), "0");
        assert_eq!(format_value(123456.789), "123456.79");
    }
}
