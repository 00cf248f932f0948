//! Continued fractions of exact rationals and of float inputs with a tracked error interval.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::slope::Slope;

/// A real number known exactly or up to an absolute error.
#[derive(Clone, Debug, PartialEq)]
pub enum RealInput {
    Exact(BigRational),
    /// `value` is an exact dyadic rational; the represented number lies within `radius` of it.
    Interval { value: BigRational, radius: BigRational },
}

impl RealInput {
    /// Float input with an error of half an ulp.
    pub fn from_f64(x: f64) -> Self {
        let value = BigRational::from_float(x).expect("finite float");
        let ulp = if x == 0.0 {
            f64::MIN_POSITIVE
        } else {
            let bits = x.abs().to_bits();
            f64::from_bits(bits + 1) - x.abs()
        };
        let radius = BigRational::from_float(ulp / 2.0).expect("finite ulp");
        RealInput::Interval { value, radius }
    }

    pub fn from_slope(s: &Slope) -> Self {
        match &s.exact {
            Some(r) => RealInput::Exact(r.clone()),
            None => Self::from_f64(s.value),
        }
    }

    pub fn center(&self) -> &BigRational {
        match self {
            RealInput::Exact(r) => r,
            RealInput::Interval { value, .. } => value,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, RealInput::Exact(_))
    }
}

/// Partial quotients of an exact rational (terminates).
pub fn partial_quotients(r: &BigRational, max_terms: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
    while !den.is_zero() && out.len() < max_terms {
        let (q, rem) = num.div_mod_floor(&den);
        out.push(q);
        num = den;
        den = rem;
    }
    out
}

/// Partial quotients shared by every number in `[lo, hi]`, hence certified for the input.
pub fn certified_quotients(input: &RealInput, max_terms: usize) -> Vec<BigInt> {
    match input {
        RealInput::Exact(r) => partial_quotients(r, max_terms),
        RealInput::Interval { value, radius } => {
            let mut lo = value - radius;
            let mut hi = value + radius;
            let mut out = Vec::new();
            while out.len() < max_terms {
                let a = lo.floor();
                if a != hi.floor() {
                    break;
                }
                let fl = &lo - &a;
                let fh = &hi - &a;
                out.push(a.to_integer());
                if fl.is_zero() || fh.is_zero() {
                    break;
                }
                // x -> 1/(x - a) reverses the order of the endpoints.
                let new_lo = fh.recip();
                let new_hi = fl.recip();
                lo = new_lo;
                hi = new_hi;
            }
            out
        }
    }
}

/// A convergent `p / q` with `q > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
}

/// Convergents from partial quotients.
pub fn convergents(quotients: &[BigInt]) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    for a in quotients {
        let p = a * &p0 + &p1;
        let q = a * &q0 + &q1;
        p1 = std::mem::replace(&mut p0, p.clone());
        q1 = std::mem::replace(&mut q0, q.clone());
        out.push(Convergent { p, q });
    }
    out
}

/// Fractions `(p_{n-1} + j p_n) / (q_{n-1} + j q_n)` at the two ends of each run,
/// `j = 1` and the largest `j < a_{n+1}` keeping the denominator `<= max_q`.
pub fn semiconvergent_endpoints(quotients: &[BigInt], max_q: &BigInt) -> Vec<Convergent> {
    let conv = convergents(quotients);
    let mut out = Vec::new();
    for n in 0..conv.len().saturating_sub(1) {
        let a_next = &quotients[n + 1];
        if a_next <= &BigInt::one() {
            continue;
        }
        let (pp, qp) = if n == 0 {
            (BigInt::one(), BigInt::zero())
        } else {
            (conv[n - 1].p.clone(), conv[n - 1].q.clone())
        };
        let (pn, qn) = (&conv[n].p, &conv[n].q);
        let room = if max_q > &qp { (max_q - &qp) / qn } else { BigInt::zero() };
        let j_max = room.min(a_next - BigInt::one());
        if j_max < BigInt::one() {
            continue;
        }
        for j in [BigInt::one(), j_max.clone()] {
            let c = Convergent {
                p: &pp + &j * pn,
                q: &qp + &j * qn,
            };
            if !out.contains(&c) {
                out.push(c);
            }
            if j_max.is_one() {
                break;
            }
        }
    }
    out
}

/// `log2 |r|` for a nonzero rational, accurate even far outside the `f64` range.
pub fn log2_abs(r: &BigRational) -> f64 {
    fn log2_int(n: &BigInt) -> f64 {
        let bits = n.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (n.abs() >> shift as usize).to_f64().unwrap();
        top.log2() + shift as f64
    }
    assert!(!r.is_zero(), "log of zero");
    log2_int(r.numer()) - log2_int(r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn quotients_of_rationals() {
        let q = partial_quotients(&ratio(415, 93), 10);
        let want: Vec<BigInt> = [4, 2, 6, 7].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(q, want);
        let c = convergents(&q);
        assert_eq!(c.last().unwrap(), &Convergent { p: 415.into(), q: 93.into() });
        assert_eq!(c[1], Convergent { p: 9.into(), q: 2.into() });
    }

    #[test]
    fn golden_float_certifies_fibonacci_quotients() {
        let phi = RealInput::from_f64((1.0 + 5f64.sqrt()) / 2.0);
        let q = certified_quotients(&phi, 200);
        assert!(q.len() >= 35, "{}", q.len());
        assert!(q.iter().all(|a| a.is_one()));
        let c = convergents(&q);
        assert_eq!(c[10], Convergent { p: 144.into(), q: 89.into() });
    }

    #[test]
    fn liouville_quotients_match_known_expansion() {
        let l = Slope::liouville(5).unwrap();
        let q = partial_quotients(l.exact.as_ref().unwrap(), 13);
        let want: Vec<BigInt> = [0u64, 1, 3, 3, 1, 2, 1, 4095, 3, 1, 3, 3, 1]
            .iter()
            .map(|&x| BigInt::from(x))
            .collect();
        assert_eq!(q[..13], want[..]);
        let c = convergents(&q);
        assert_eq!(c[6], Convergent { p: 49.into(), q: 64.into() });
    }

    #[test]
    fn semiconvergents_fill_runs() {
        // 3/4 -> [0; 1, 3]: semiconvergents between 1/1 and 3/4 are 1/2 and 2/3.
        let q = partial_quotients(&ratio(3, 4), 10);
        let s = semiconvergent_endpoints(&q, &BigInt::from(100));
        assert!(s.contains(&Convergent { p: 1.into(), q: 2.into() }));
        assert!(s.contains(&Convergent { p: 2.into(), q: 3.into() }));
    }

    #[test]
    fn log2_of_tiny_rationals() {
        let r = BigRational::new(BigInt::from(3), BigInt::one() << 2000usize);
        assert!((log2_abs(&r) - (3f64.log2() - 2000.0)).abs() < 1e-12);
        assert!((log2_abs(&ratio(-8, 1)) - 3.0).abs() < 1e-15);
    }
}
