//! Exact rational scalars and the integer combinatorics used throughout.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational; the only scalar type in the crate.
pub type Scalar = BigRational;

pub fn q(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn qfact(n: u64) -> Scalar {
    Scalar::from_integer(factorial(n))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Double factorial on odd integers with the continuation
/// `(-2k-1)!! = (-1)^k / (2k-1)!!` for negative arguments.
pub fn double_factorial(n: i64) -> Result<Scalar> {
    if n % 2 == 0 {
        return Err(Error::Domain(format!("double factorial of even argument {n}")));
    }
    if n >= -1 {
        let mut acc = BigInt::one();
        let mut k = n;
        while k > 1 {
            acc *= BigInt::from(k);
            k -= 2;
        }
        return Ok(Scalar::from_integer(acc));
    }
    // n = -2k-1 with k >= 1
    let k = (-n - 1) / 2;
    let pos = double_factorial(2 * k - 1)?;
    let sign = if k % 2 == 0 { q(1) } else { q(-1) };
    Ok(sign / pos)
}

pub fn pow_scalar(base: &Scalar, e: u64) -> Scalar {
    num_traits::pow(base.clone(), e as usize)
}

/// `p/q` form (or `p` for integers), the serialized representation.
pub fn fmt_scalar(s: &Scalar) -> String {
    if s.denom().is_one() {
        s.numer().to_string()
    } else {
        format!("{}/{}", s.numer(), s.denom())
    }
}

pub fn parse_scalar(text: &str) -> Result<Scalar> {
    let t = text.trim();
    let parsed = match t.split_once('/') {
        Some((a, b)) => {
            let num: BigInt = a.trim().parse().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad rational {t:?}"),
            })?;
            let den: BigInt = b.trim().parse().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad rational {t:?}"),
            })?;
            if den.is_zero() {
                return Err(Error::Parse { pos: 0, msg: "zero denominator".into() });
            }
            Scalar::new(num, den)
        }
        None => Scalar::from_integer(t.parse().map_err(|_| Error::Parse {
            pos: 0,
            msg: format!("bad rational {t:?}"),
        })?),
    };
    Ok(parsed)
}

/// All positive divisors of a nonzero integer, by trial division.
pub(crate) fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if n.is_multiple_of(&d) {
            let other = &n / &d;
            if other != d {
                large.push(other);
            }
            small.push(d.clone());
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

pub(crate) fn lcm_denoms<'a>(it: impl IntoIterator<Item = &'a Scalar>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(5).unwrap(), q(15));
        assert_eq!(double_factorial(-1).unwrap(), q(1));
        assert_eq!(double_factorial(-3).unwrap(), q(-1));
        assert_eq!(double_factorial(-5).unwrap(), qf(1, 3));
        assert!(double_factorial(4).is_err());
    }

    #[test]
    fn double_factorial_reflection() {
        // 1/((2k-1)!! (-2k-1)!!) = (-1)^k
        for k in 1..8i64 {
            let prod = double_factorial(2 * k - 1).unwrap() * double_factorial(-2 * k - 1).unwrap();
            let expect = if k % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(q(1) / prod, expect);
        }
    }

    #[test]
    fn scalar_text_round_trip() {
        for s in ["0", "-3", "7/12", "-1/24"] {
            assert_eq!(fmt_scalar(&parse_scalar(s).unwrap()), s);
        }
        assert!(parse_scalar("1/0").is_err());
    }

    #[test]
    fn divisors_of_twelve() {
        let d: Vec<i64> = divisors(&BigInt::from(12))
            .iter()
            .map(|b| b.try_into().unwrap())
            .collect();
        assert_eq!(d, vec![1, 2, 3, 4, 6, 12]);
    }
}
