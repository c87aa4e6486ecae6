//! C99-style hexadecimal floating point (`%a`) formatting and parsing, so
//! model files round-trip every `f64` bit-exactly.

use crate::error::{Error, Result};

const MANTISSA_BITS: u32 = 52;
const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;

pub fn format(value: f64) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    let sign = if value.is_sign_negative() { "-" } else { "" };
    if value.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = value.to_bits();
    let exp_bits = ((bits >> MANTISSA_BITS) & 0x7ff) as i32;
    let mantissa = bits & MANTISSA_MASK;
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let digits = format!("{mantissa:013x}");
    let digits = digits.trim_end_matches('0');
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let exp_sign = if exp >= 0 { "+" } else { "-" };
    format!("{sign}0x{lead}{frac}p{exp_sign}{}", exp.abs())
}

/// Parse the output of [`format`]. Only the canonical form is accepted.
pub fn parse(text: &str) -> Result<f64> {
    let bad = || Error::Invalid(format!("malformed hexadecimal float `{text}`"));
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let value = match body {
        "nan" if !negative => return Ok(f64::NAN),
        "inf" => f64::INFINITY,
        _ => {
            let body = body.strip_prefix("0x").ok_or_else(bad)?;
            let (mant, exp) = body.split_once('p').ok_or_else(bad)?;
            let exp: i32 = exp.parse().map_err(|_| bad())?;
            let (lead, frac) = mant.split_once('.').unwrap_or((mant, ""));
            if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(bad());
            }
            let frac_bits = if frac.is_empty() {
                0
            } else {
                u64::from_str_radix(&format!("{frac:0<13}"), 16).map_err(|_| bad())?
            };
            match lead {
                "0" if frac_bits == 0 => 0.0,
                "0" if exp == -1022 => f64::from_bits(frac_bits),
                "1" if (-1022..=1023).contains(&exp) => {
                    f64::from_bits((((exp + 1023) as u64) << MANTISSA_BITS) | frac_bits)
                }
                _ => return Err(bad()),
            }
        }
    };
    Ok(if negative { -value } else { value })
}
