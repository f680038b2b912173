//! Parsers for command-line literals.

use num_complex::Complex64;
use pextremal::Exponent;

/// Parses `a+bi`, `a-bi`, `bi`, `a` (spaces ignored, scientific notation allowed).
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    let bad = || format!("invalid complex literal '{s}'");
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not the leading sign or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Comma-separated complex coordinates.
pub fn parse_point(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(parse_complex).collect()
}

/// Points separated by `;`, coordinates by `,`.
pub fn parse_points(s: &str) -> Result<Vec<Vec<Complex64>>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(parse_point)
        .collect()
}

pub fn parse_exponent(s: &str) -> Result<Exponent, String> {
    s.trim().parse::<Exponent>().map_err(|e| e.to_string())
}
