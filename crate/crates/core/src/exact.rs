//! Exact rational scalars and points.
//!
//! Every fiber coordinate is a `BigRational`. Decimal literals are parsed
//! exactly ("0.1" is 1/10, not the nearest double), and "p/q" is accepted too.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// A point of the fiber `[0,1]^m`.
pub type Point = Vec<Q>;

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn qi(value: i64) -> Q {
    Q::from_integer(BigInt::from(value))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Parses `"3"`, `"-0.125"`, `"1/3"` or `"2.5e-3"` into an exact rational.
pub fn parse_q(text: &str) -> Result<Q> {
    let s = text.trim();
    let err = || Error::ParseNumber(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_q(n)?;
        let d = parse_q(d)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Q::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Converts a double through its shortest round-trip decimal representation,
/// so `0.1_f64` becomes exactly 1/10.
pub fn q_from_f64(value: f64) -> Result<Q> {
    if !value.is_finite() {
        return Err(Error::ParseNumber(value.to_string()));
    }
    parse_q(&format!("{value:e}"))
}

/// Nearest double. Handles numerators and denominators far outside the
/// `f64` exponent range by shifting before dividing.
pub fn to_f64(value: &Q) -> f64 {
    if value.is_zero() {
        return 0.0;
    }
    let numer = value.numer();
    let denom = value.denom();
    let nb = numer.bits() as i64;
    let db = denom.bits() as i64;
    if nb < 1000 && db < 1000 {
        if let (Some(n), Some(d)) = (numer.to_f64(), denom.to_f64()) {
            if n.is_finite() && d.is_finite() {
                return n / d;
            }
        }
    }
    // keep 64 significant bits of each and fold the rest into an exponent
    let n_shift = (nb - 64).max(0);
    let d_shift = (db - 64).max(0);
    let n = (numer.abs() >> n_shift as usize).to_f64().unwrap_or(0.0);
    let d = (denom >> d_shift as usize).to_f64().unwrap_or(1.0);
    let mag = n / d * 2f64.powi((n_shift - d_shift) as i32);
    if numer.is_negative() {
        -mag
    } else {
        mag
    }
}

pub fn point_to_f64(point: &[Q]) -> Vec<f64> {
    point.iter().map(to_f64).collect()
}

/// Sum-metric distance `d1(x, y) = Σ |x_s − y_s|`, exactly.
pub fn d1(x: &[Q], y: &[Q]) -> Q {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

pub fn in_unit(value: &Q) -> bool {
    !value.is_negative() && *value <= Q::one()
}

/// Decimal rendering used in CSV/JSON output.
pub fn fmt_q(value: &Q) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{:.17e}", to_f64(value))
    }
}

/// Midpoint of two rationals.
pub fn midpoint(a: &Q, b: &Q) -> Q {
    (a + b) / qi(2)
}
