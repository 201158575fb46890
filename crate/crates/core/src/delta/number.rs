//! Number formatting and string-to-number conversion with Lua 5.2 rules.

/// Formats a number the way the reference interpreter prints it (`%.14g`).
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return if x.is_sign_negative() { "-nan" } else { "nan" }.to_string();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    const PRECISION: i32 = 14;
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..PRECISION).contains(&exp) {
        let decimals = (PRECISION - 1 - exp) as usize;
        strip_fraction(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_fraction(mantissa), sign, exp.abs())
    }
}

fn strip_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn is_lua_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

fn trim(bytes: &[u8]) -> &[u8] {
    let start = bytes
        .iter()
        .position(|b| !is_lua_space(*b))
        .unwrap_or(bytes.len());
    let end = bytes
        .iter()
        .rposition(|b| !is_lua_space(*b))
        .map_or(start, |e| e + 1);
    &bytes[start..end]
}

/// Converts a numeral string (decimal or hexadecimal, surrounding
/// whitespace allowed) to a number. `inf` and `nan` spellings are rejected.
pub fn str_to_number(bytes: &[u8]) -> Option<f64> {
    let s = trim(bytes);
    if s.iter().any(|b| matches!(b, b'n' | b'N')) {
        return None;
    }
    if s.iter().any(|b| matches!(b, b'x' | b'X')) {
        return parse_hex(s);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &[u8]) -> Option<f64> {
    // Validate the strtod grammar first, since Rust's parser is more lenient
    // in some places (e.g. "infinity") and stricter in none that matter.
    let mut i = 0;
    if matches!(s.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < s.len() && s[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < s.len() && s[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < s.len() && matches!(s[i], b'e' | b'E') {
        i += 1;
        if i < s.len() && matches!(s[i], b'+' | b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != s.len() {
        return None;
    }
    std::str::from_utf8(s).ok()?.parse::<f64>().ok()
}

fn parse_hex(s: &[u8]) -> Option<f64> {
    let mut i = 0;
    let negative = match s.first() {
        Some(b'-') => {
            i += 1;
            true
        }
        Some(b'+') => {
            i += 1;
            false
        }
        _ => false,
    };
    if !(s.len() >= i + 2 && s[i] == b'0' && matches!(s[i + 1], b'x' | b'X')) {
        return None;
    }
    i += 2;
    let mut mantissa = 0.0f64;
    let mut exponent: i64 = 0;
    let mut any_digit = false;
    let mut seen_dot = false;
    while i < s.len() {
        let b = s[i];
        if b == b'.' {
            if seen_dot {
                break;
            }
            seen_dot = true;
        } else if let Some(d) = (b as char).to_digit(16) {
            mantissa = mantissa * 16.0 + d as f64;
            if seen_dot {
                exponent -= 4;
            }
            any_digit = true;
        } else {
            break;
        }
        i += 1;
    }
    if !any_digit {
        return None;
    }
    if i < s.len() && matches!(s[i], b'p' | b'P') {
        i += 1;
        let mut exp_negative = false;
        if i < s.len() && matches!(s[i], b'+' | b'-') {
            exp_negative = s[i] == b'-';
            i += 1;
        }
        let start = i;
        let mut e: i64 = 0;
        while i < s.len() && s[i].is_ascii_digit() {
            e = (e * 10 + (s[i] - b'0') as i64).min(1 << 20);
            i += 1;
        }
        if i == start {
            return None;
        }
        exponent += if exp_negative { -e } else { e };
    }
    if i != s.len() {
        return None;
    }
    let value = mantissa * 2f64.powi(exponent.clamp(-4000, 4000) as i32);
    Some(if negative { -value } else { value })
}

/// `tonumber(s, base)` for an explicit base in 2..=36.
pub fn str_to_number_base(bytes: &[u8], base: u32) -> Option<f64> {
    let s = trim(bytes);
    let (negative, digits) = match s.first() {
        Some(b'-') => (true, &s[1..]),
        _ => (false, s),
    };
    if digits.is_empty() {
        return None;
    }
    let mut acc = 0.0f64;
    for b in digits {
        let d = (*b as char).to_digit(36)?;
        if d >= base {
            return None;
        }
        acc = acc * base as f64 + d as f64;
    }
    Some(if negative { -acc } else { acc })
}

/// Floored modulo as defined by the reference interpreter.
pub fn lua_mod(a: f64, b: f64) -> f64 {
    a - (a / b).floor() * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_like_reference_interpreter() {
        let cases: &[(f64, &str)] = &[
            (1.0, "1"),
            (-3.0, "-3"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.33333333333333"),
            (1e14, "1e+14"),
            (1e15, "1e+15"),
            (123456789012345.0, "1.2345678901234e+14"),
            (12345678901234.0, "12345678901234"),
            (2f64.powi(53), "9.007199254741e+15"),
            (1e100, "1e+100"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-0.0, "-0"),
            (f64::INFINITY, "inf"),
            (f64::NEG_INFINITY, "-inf"),
            (1.23456, "1.23456"),
            (100.0, "100"),
        ];
        for (x, s) in cases {
            assert_eq!(format_number(*x), *s, "formatting {x:?}");
        }
    }

    #[test]
    fn converts_numerals() {
        assert_eq!(str_to_number(b"0x10"), Some(16.0));
        assert_eq!(str_to_number(b" 10 "), Some(10.0));
        assert_eq!(str_to_number(b"inf"), None);
        assert_eq!(str_to_number(b"nan"), None);
        assert_eq!(str_to_number(b"1e"), None);
        assert_eq!(str_to_number(b"."), None);
        assert_eq!(str_to_number(b".5"), Some(0.5));
        assert_eq!(str_to_number(b"5."), Some(5.0));
        assert_eq!(str_to_number(b"-2.5e1"), Some(-25.0));
        assert_eq!(str_to_number(b"0xA23p-4"), Some(162.1875));
        assert_eq!(str_to_number(b"0x.8"), Some(0.5));
        assert_eq!(str_to_number(b"-0x10"), Some(-16.0));
        assert_eq!(str_to_number(b"0x"), None);
        assert_eq!(str_to_number(b"1 2"), None);
        assert_eq!(str_to_number(b""), None);
    }

    #[test]
    fn converts_with_base() {
        assert_eq!(str_to_number_base(b"z", 36), Some(35.0));
        assert_eq!(str_to_number_base(b"ff", 16), Some(255.0));
        assert_eq!(str_to_number_base(b" -101 ", 2), Some(-5.0));
        assert_eq!(str_to_number_base(b"2", 2), None);
    }

    #[test]
    fn floored_modulo() {
        assert_eq!(lua_mod(5.0, -3.0), -1.0);
        assert_eq!(lua_mod(-5.0, 3.0), 1.0);
        assert_eq!(lua_mod(5.5, 2.0), 1.5);
    }
}
