//! Quantities with unit suffixes.
//!
//! Frequencies given in `Hz`, `kHz`, `MHz` or `GHz` are ordinary
//! frequencies and are multiplied by 2π; a bare number (or `rad/s`, `/s`)
//! is already angular. Times accept `ns`, `us`/`µs`, `ms` and `s`, lengths
//! `nm`, `um`/`µm`, `mm` and `m`. A bare number is in SI units.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse {input:?} as a {kind}: {reason}")]
pub struct UnitError {
    pub input: String,
    pub kind: &'static str,
    pub reason: &'static str,
}

fn split(input: &str) -> (&str, &str) {
    let s = input.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            // an exponent marker is part of the number when a digit or sign follows
            let exponent = (c == 'e' || c == 'E') && s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+');
            !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || exponent)
        })
        .map_or(s.len(), |(i, _)| i);
    (s[..end].trim(), s[end..].trim())
}

/// Decimal exponent of a unit and whether it denotes an ordinary frequency.
type Scale = (i32, bool);

fn parse_with(input: &str, kind: &'static str, scale: impl Fn(&str) -> Option<Scale>) -> Result<f64, UnitError> {
    let err = |reason| UnitError { input: input.to_string(), kind, reason };
    let (number, unit) = split(input);
    let value: f64 = number.parse().map_err(|_| err("not a number"))?;
    let (exp, cyclic) = scale(unit).ok_or_else(|| err("unknown unit"))?;
    // divide for negative exponents so that e.g. 50us is exactly 50e-6
    let mut v = if exp >= 0 { value * 10f64.powi(exp) } else { value / 10f64.powi(-exp) };
    if cyclic {
        v *= 2.0 * PI;
    }
    if !v.is_finite() {
        return Err(err("not finite"));
    }
    Ok(v)
}

/// Angular frequency or rate in rad/s.
pub fn parse_frequency(input: &str) -> Result<f64, UnitError> {
    parse_with(input, "frequency", |u| match u {
        "" | "rad/s" | "/s" | "1/s" => Some((0, false)),
        "Hz" | "hz" => Some((0, true)),
        "kHz" | "khz" => Some((3, true)),
        "MHz" | "mhz" => Some((6, true)),
        "GHz" | "ghz" => Some((9, true)),
        _ => None,
    })
}

/// Time in seconds.
pub fn parse_time(input: &str) -> Result<f64, UnitError> {
    parse_with(input, "time", |u| match u {
        "" | "s" => Some((0, false)),
        "ms" => Some((-3, false)),
        "us" | "µs" | "μs" => Some((-6, false)),
        "ns" => Some((-9, false)),
        _ => None,
    })
}

/// Length in metres.
pub fn parse_length(input: &str) -> Result<f64, UnitError> {
    parse_with(input, "length", |u| match u {
        "" | "m" => Some((0, false)),
        "mm" => Some((-3, false)),
        "um" | "µm" | "μm" => Some((-6, false)),
        "nm" => Some((-9, false)),
        _ => None,
    })
}

/// Plain number without unit.
pub fn parse_number(input: &str) -> Result<f64, UnitError> {
    parse_with(input, "number", |u| u.is_empty().then_some((0, false)))
}
