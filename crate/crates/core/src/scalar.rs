//! Numeric abstraction shared by the metric, planning and assurance code.
//!
//! Coverage metrics are ratios of small counts and SLO thresholds are short
//! decimals, so every computation here can be carried out exactly with
//! [`Rational64`]. The same code also runs over `f32`/`f64` when exactness
//! is not required.

use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Scalar type used by metrics, cost sums and compliance checks.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + Send + Sync + Signed + 'static
{
    /// Exact (or correctly rounded) `numer / denom`. `denom` must be non-zero.
    fn ratio(numer: u64, denom: u64) -> Self;

    /// Converts a configuration value (a short decimal in practice).
    fn from_f64(value: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Fixed four-decimal rendering, round-half-even on the exact value.
    fn fixed4(self) -> String;

    fn from_u64(value: u64) -> Self {
        Self::ratio(value, 1)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn ratio(numer: u64, denom: u64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn fixed4(self) -> String {
        // std formatting rounds the exact binary value half-to-even.
        let s = format!("{:.4}", self);
        if s == "-0.0000" {
            "0.0000".to_string()
        } else {
            s
        }
    }
}

impl Scalar for f32 {
    fn ratio(numer: u64, denom: u64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn from_f64(value: f64) -> Self {
        value as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn fixed4(self) -> String {
        (self as f64).fixed4()
    }
}

impl Scalar for Rational64 {
    fn ratio(numer: u64, denom: u64) -> Self {
        Rational64::new(numer as i64, denom as i64)
    }

    fn from_f64(value: f64) -> Self {
        // Configuration decimals such as 0.85 must map to 17/20, not to the
        // exact binary expansion, otherwise sums overflow i64 quickly.
        if value.is_finite() && value == value.trunc() && value.abs() < 1e15 {
            return Rational64::from_integer(value as i64);
        }
        let mut scale: i64 = 1;
        for _ in 0..9 {
            scale *= 10;
            let scaled = value * scale as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() < 1e-9 * scale as f64 && rounded.abs() < 9e15 {
                return Rational64::new(rounded as i64, scale);
            }
        }
        Rational64::approximate_float(value).unwrap_or_else(Rational64::zero)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn fixed4(self) -> String {
        let negative = self < Rational64::zero();
        let scaled = self.abs() * Rational64::from_integer(10_000);
        let floor = scaled.floor();
        let frac = scaled - floor;
        let half = Rational64::new(1, 2);
        let mut units = floor.to_integer();
        if frac > half || (frac == half && units % 2 == 1) {
            units += 1;
        }
        let sign = if negative && units != 0 { "-" } else { "" };
        format!("{}{}.{:04}", sign, units / 10_000, units % 10_000)
    }
}

/// Serializes a scalar as a JSON number with exactly four decimals.
pub fn serialize_fixed4<S: Scalar, Ser: serde::Serializer>(value: &S, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
    use serde::Serialize;
    let raw = serde_json::value::RawValue::from_string(value.fixed4()).map_err(serde::ser::Error::custom)?;
    raw.serialize(serializer)
}

/// As [`serialize_fixed4`], for optional values (`null` when absent).
pub fn serialize_opt_fixed4<S: Scalar, Ser: serde::Serializer>(
    value: &Option<S>,
    serializer: Ser,
) -> Result<Ser::Ok, Ser::Error> {
    match value {
        Some(v) => serialize_fixed4(v, serializer),
        None => serializer.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_from_config_decimals() {
        assert_eq!(Rational64::from_f64(0.85), Rational64::new(17, 20));
        assert_eq!(Rational64::from_f64(0.4), Rational64::new(2, 5));
        assert_eq!(Rational64::from_f64(200.0), Rational64::from_integer(200));
        assert_eq!(Rational64::from_f64(1.5), Rational64::new(3, 2));
    }

    #[test]
    fn fixed4_is_half_even() {
        assert_eq!(Rational64::new(5, 6).fixed4(), "0.8333");
        assert_eq!(Rational64::new(1, 80_000).fixed4(), "0.0000");
        assert_eq!(Rational64::new(3, 80_000).fixed4(), "0.0000");
        assert_eq!(Rational64::new(1, 20_000).fixed4(), "0.0000");
        assert_eq!(Rational64::new(3, 20_000).fixed4(), "0.0002");
        assert_eq!(Rational64::from_integer(1).fixed4(), "1.0000");
        assert_eq!(0.5f64.fixed4(), "0.5000");
        assert_eq!(0.00015f64.fixed4(), 0.00015f64.fixed4());
        assert_eq!((2.0f64 / 3.0).fixed4(), "0.6667");
    }

    #[test]
    fn float_and_exact_agree_on_simple_ratios() {
        for d in 1..=12u64 {
            for n in 0..=d {
                let exact = Rational64::ratio(n, d);
                let approx = f64::ratio(n, d);
                assert_eq!(exact.fixed4(), approx.fixed4(), "{n}/{d}");
            }
        }
    }
}
