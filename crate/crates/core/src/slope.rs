//! Slope inputs: floats, exact rationals and named constants.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest `k` accepted by `liouville(k)`; `8!` = 40320 bits is already far beyond any scan.
pub const MAX_LIOUVILLE_TERMS: u32 = 8;

/// A slope value together with its exact rational form when one was supplied.
///
/// Decimal strings are read as floats and never snapped to rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct Slope {
    pub label: String,
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Slope {
    pub fn float(value: f64) -> Self {
        Self {
            label: format!("{value}"),
            value,
            exact: None,
        }
    }

    pub fn from_ratio(r: BigRational) -> Self {
        Self {
            label: r.to_string(),
            value: r.to_f64().unwrap_or(f64::NAN),
            exact: Some(r),
        }
    }

    pub fn rational(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::from_ratio(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(n, 1)
    }

    /// The truncated Liouville sum `sum_{j=1..k} 2^{-j!}` as an exact dyadic rational.
    pub fn liouville(k: u32) -> Result<Self> {
        if k == 0 || k > MAX_LIOUVILLE_TERMS {
            return Err(Error::InvalidArgument(format!(
                "liouville(k) needs 1 <= k <= {MAX_LIOUVILLE_TERMS}, got {k}"
            )));
        }
        let mut sum = BigRational::zero();
        let mut fact: u32 = 1;
        for j in 1..=k {
            fact *= j;
            let den = BigInt::one() << fact as usize;
            sum += BigRational::new(BigInt::one(), den);
        }
        let mut s = Self::from_ratio(sum);
        s.label = format!("liouville({k})");
        Ok(s)
    }

    pub fn sqrt2() -> Self {
        Self::named("sqrt2", std::f64::consts::SQRT_2)
    }

    pub fn sqrt3() -> Self {
        Self::named("sqrt3", 3f64.sqrt())
    }

    pub fn golden() -> Self {
        Self::named("golden", (1.0 + 5f64.sqrt()) / 2.0)
    }

    fn named(label: &str, value: f64) -> Self {
        Self {
            label: label.to_string(),
            value,
            exact: None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.value == 0.0,
        }
    }
}

impl FromStr for Slope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidArgument(format!("unrecognized slope '{s}'"));
        match t {
            "sqrt2" => return Ok(Self::sqrt2()),
            "sqrt3" => return Ok(Self::sqrt3()),
            "golden" | "phi" => return Ok(Self::golden()),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("liouville(") {
            let k = rest.strip_suffix(')').ok_or_else(bad)?;
            return Self::liouville(k.trim().parse().map_err(|_| bad())?);
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::InvalidArgument(format!("zero denominator in slope '{s}'")));
            }
            return Ok(Self::from_ratio(BigRational::new(p, q)));
        }
        if let Ok(n) = t.parse::<BigInt>() {
            return Ok(Self::from_ratio(BigRational::from_integer(n)));
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Ok(Self {
            label: t.to_string(),
            value: v,
            exact: None,
        })
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_constants() {
        assert_eq!("sqrt2".parse::<Slope>().unwrap().value, std::f64::consts::SQRT_2);
        assert!(("golden".parse::<Slope>().unwrap().value - 1.618033988749895).abs() < 1e-15);
        assert!(!"sqrt3".parse::<Slope>().unwrap().is_exact());
    }

    #[test]
    fn parses_rationals_exactly() {
        let s: Slope = "1/2".parse().unwrap();
        assert_eq!(s.exact, Some(BigRational::new(1.into(), 2.into())));
        let z: Slope = "0".parse().unwrap();
        assert!(z.is_exact() && z.is_zero());
        let d: Slope = "0.5".parse().unwrap();
        assert!(!d.is_exact());
        assert_eq!(d.value, 0.5);
        assert!("1/0".parse::<Slope>().is_err());
        assert!("abc".parse::<Slope>().is_err());
    }

    #[test]
    fn liouville_sum_is_dyadic() {
        let s: Slope = "liouville(3)".parse().unwrap();
        // 1/2 + 1/4 + 1/64
        assert_eq!(s.exact, Some(BigRational::new(49.into(), 64.into())));
        let five = Slope::liouville(5).unwrap();
        assert_eq!(five.exact.as_ref().unwrap().denom(), &(BigInt::one() << 120usize));
        assert!((five.value - 0.765625).abs() < 1e-6);
        assert!(Slope::liouville(0).is_err());
        assert!(Slope::liouville(9).is_err());
    }
}
