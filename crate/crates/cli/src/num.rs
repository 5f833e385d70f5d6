//! Locale-independent number rendering with 12 significant digits.

const SIG: usize = 12;

/// `%.12g`-style rendering: fixed notation for exponents in `[-5, 12)`,
/// scientific otherwise, trailing zeros trimmed. `-0` prints as `0`.
pub fn g12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Let the formatter do the rounding, then re-layout its digits.
    let sci = format!("{:.*e}", SIG - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if !(-5..SIG as i32).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let dot = if tail.is_empty() { "" } else { "." };
        return format!("{sign}{head}{dot}{tail}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        join(int, frac)
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        join("0", &format!("{zeros}{digits}"))
    };
    format!("{sign}{body}")
}

fn join(int: &str, frac: &str) -> String {
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}

/// The value rounded to 12 significant digits, for JSON output.
pub fn r12(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::Value::from(g12(v).parse::<f64>().expect("round trip"))
    } else {
        serde_json::Value::Null
    }
}
