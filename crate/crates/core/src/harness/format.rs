use serde_json::Value;

/// Formats a real with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let x = round6(x);
    let digits = 5 - x.abs().log10().floor() as i32;
    if (0..=12).contains(&digits) {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

/// Rounds a real to 6 significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Rounds every non-integer number in a JSON tree to 6 significant digits.
pub fn sig6_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round6(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sig6_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, sig6_json(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(20.0), "20.0000");
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(93.2291666), "93.2292");
        assert_eq!(sig6(0.99999999), "1.00000");
        assert_eq!(round6(1234567.0), 1234570.0);
        assert_eq!(
            sig6_json(serde_json::json!([0.1234567, 3])),
            serde_json::json!([0.123457, 3])
        );
    }
}
