//! Number and token formatting shared by reports and the model file.

/// Formats `v` with 6 significant digits, `%g` style.
pub(crate) fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Exact hexadecimal floating-point rendering (C99 `%a` layout).
pub(crate) fn hexf(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let frac = format!("{mant:013x}");
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{frac}p{e:+}")
    }
}

/// Parses the output of [`hexf`]. Returns `None` on anything else.
pub(crate) fn parse_hexf(s: &str) -> Option<f64> {
    match s {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix("0x")?;
    let (body, exp) = rest.split_once('p')?;
    let exp: i32 = exp.parse().ok()?;
    let (lead, frac) = match body.split_once('.') {
        Some((l, f)) => (l, f),
        None => (body, ""),
    };
    if frac.len() > 13 || !frac.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let mut mant = 0u64;
    for (i, c) in frac.chars().enumerate() {
        let digit = c.to_digit(16)? as u64;
        mant |= digit << (48 - 4 * i);
    }
    let sign_bit = if neg { 1u64 << 63 } else { 0 };
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&exp) {
                return None;
            }
            sign_bit | (((exp + 1023) as u64) << 52) | mant
        }
        "0" if mant == 0 => sign_bit,
        "0" if exp == -1022 => sign_bit | mant,
        _ => return None,
    };
    Some(f64::from_bits(bits))
}

/// Percent-escapes characters that would break whitespace/`|`/`;` tokenization.
pub(crate) fn escape_token(s: &str) -> String {
    if s.is_empty() {
        return "%".to_string();
    }
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_graphic() && !matches!(b, b'%' | b'|' | b';' | b'#' | b',') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub(crate) fn unescape_token(s: &str) -> Option<String> {
    if s == "%" {
        return Some(String::new());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig6_matches_printf_g() {
        assert_eq!(sig6(18.5), "18.5");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(0.600123456), "0.600123");
        assert_eq!(sig6(123456789.0), "1.23457e+08");
        assert_eq!(sig6(0.0000123), "1.23e-05");
        assert_eq!(sig6(-2.0), "-2");
        assert_eq!(sig6(999999.5), "1e+06");
        assert_eq!(sig6(100.0), "100");
    }

    #[test]
    fn hexf_known_values() {
        assert_eq!(hexf(1.0), "0x1p+0");
        assert_eq!(hexf(-2.5), "-0x1.4p+1");
        assert_eq!(hexf(0.0), "0x0p+0");
        assert_eq!(hexf(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
        assert_eq!(parse_hexf("0x1.8p+1"), Some(3.0));
        assert_eq!(parse_hexf("0x2p+1"), None);
        assert_eq!(parse_hexf("1.0"), None);
    }

    #[test]
    fn escape_round_trip() {
        for s in ["age", "blood type", "a|b;c", "", "100%", "naïve"] {
            let e = escape_token(s);
            assert!(!e.contains(' '));
            assert_eq!(unescape_token(&e).as_deref(), Some(s));
        }
    }

    proptest! {
        #[test]
        fn hexf_round_trips_bitwise(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            prop_assert_eq!(parse_hexf(&hexf(v)).map(f64::to_bits), Some(bits));
        }
    }
}
