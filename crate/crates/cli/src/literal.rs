use num_complex::Complex64;

fn real(text: &str) -> Result<f64, String> {
    let x: f64 = text.parse().map_err(|_| format!("'{text}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(x)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` without spaces; `i` alone means one.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    if text.is_empty() || text.contains(char::is_whitespace) {
        return Err(format!("complex literal '{text}' must be non-empty with no spaces (a+bi)"));
    }
    let Some(body) = text.strip_suffix('i') else {
        return Ok(Complex64::new(real(text)?, 0.0));
    };
    let bytes = body.as_bytes();
    // last sign that is not leading and not part of an exponent
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (real(&body[..j])?, &body[j..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => real(s)?,
    };
    Ok(Complex64::new(re, im))
}
