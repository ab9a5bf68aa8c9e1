//! Numeric arguments written as products and quotients of numbers and `T`.
//!
//! `T` is the problem-3 period, so `T/100`, `35*T/100` and `2e5*T/100` are all
//! valid; so are plain decimals and fractions such as `1/20`.

use hbvm::CASSINI_PERIOD;

/// Evaluates `atom (('*' | '/') atom)*`, left to right.
pub fn parse_quantity(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty value".into());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let atom = parse_atom(&rest[..end]).ok_or_else(|| format!("cannot parse '{text}'"))?;
        match op {
            '*' => value *= atom,
            _ => value /= atom,
        }
        if end == rest.len() {
            break;
        }
        op = rest[end..].chars().next().unwrap();
        rest = &rest[end + 1..];
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{text}' is not a finite number"))
    }
}

fn parse_atom(atom: &str) -> Option<f64> {
    match atom.trim() {
        "T" => Some(CASSINI_PERIOD),
        other => other.parse().ok(),
    }
}

/// Clap adapter for positive quantities.
pub fn positive_quantity(text: &str) -> Result<f64, String> {
    let v = parse_quantity(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive value, got {v}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_quantity("0.5").unwrap(), 0.5);
        assert_eq!(parse_quantity("1/20").unwrap(), 0.05);
        assert_eq!(parse_quantity("T").unwrap(), 3.131990057003955);
        assert_eq!(parse_quantity("T/100").unwrap(), 3.131990057003955 / 100.0);
        assert_eq!(
            parse_quantity(" 35*T/100 ").unwrap(),
            35.0 * 3.131990057003955 / 100.0
        );
        assert_eq!(
            parse_quantity("2e5*T/100").unwrap(),
            2e5 * 3.131990057003955 / 100.0
        );
        assert_eq!(parse_quantity("-1e-5").unwrap(), -1e-5);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "x", "1/", "T//2", "1/0", "*2"] {
            assert!(parse_quantity(bad).is_err(), "{bad}");
        }
        assert!(positive_quantity("0").is_err());
        assert!(positive_quantity("-T").is_err());
    }
}
