//! Dense univariate polynomials over the rationals.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::scalar::{divisors, lcm_denoms, q, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct UPoly {
    /// `c[k]` is the coefficient of `z^k`; no trailing zeros.
    c: Vec<Scalar>,
}

impl UPoly {
    pub fn new(mut c: Vec<Scalar>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn zero() -> Self {
        UPoly { c: Vec::new() }
    }

    pub fn constant(s: Scalar) -> Self {
        UPoly::new(vec![s])
    }

    pub fn x() -> Self {
        UPoly::new(vec![q(0), q(1)])
    }

    /// `z - r`
    pub fn linear(r: &Scalar) -> Self {
        UPoly::new(vec![-r.clone(), q(1)])
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lc(&self) -> Scalar {
        self.c.last().cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.c.get(k).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.c.iter().rev().fold(Scalar::zero(), |acc, c| acc * x + c)
    }

    pub fn deriv(&self) -> Self {
        UPoly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * q(k as i64))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        UPoly::new(self.c.iter().map(|c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = q(1) / self.lc();
        self.scale(&inv)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut out = vec![Scalar::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(UPoly::constant(q(1)), |acc, _| acc.mul(self))
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.c.len() - 1;
        let lc_inv = q(1) / d.lc();
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (UPoly::zero(), self.clone());
        }
        let mut quo = vec![Scalar::zero(); r.len() - dd];
        for k in (dd..r.len()).rev() {
            let coef = &r[k] * &lc_inv;
            if coef.is_zero() {
                continue;
            }
            for (j, dc) in d.c.iter().enumerate() {
                r[k - dd + j] -= &coef * dc;
            }
            quo[k - dd] = coef;
        }
        r.truncate(dd);
        (UPoly::new(quo), UPoly::new(r))
    }

    /// Monic gcd (zero if both inputs are zero).
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Returns `(g, s, t)` with `s*self + t*o = g`, `g` monic.
    pub fn ext_gcd(&self, o: &Self) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (UPoly::constant(q(1)), UPoly::zero());
        let (mut t0, mut t1) = (UPoly::zero(), UPoly::constant(q(1)));
        while !r1.is_zero() {
            let (quo, rem) = r0.divrem(&r1);
            r0 = std::mem::replace(&mut r1, rem);
            let s2 = s0.sub(&quo.mul(&s1));
            s0 = std::mem::replace(&mut s1, s2);
            let t2 = t0.sub(&quo.mul(&t1));
            t0 = std::mem::replace(&mut t1, t2);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = q(1) / r0.lc();
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    /// Distinct rational roots (each listed once).
    pub fn rational_roots(&self) -> Vec<Scalar> {
        let mut roots = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return roots;
        }
        let den = lcm_denoms(self.c.iter());
        let ints: Vec<BigInt> = self
            .c
            .iter()
            .map(|c| (c * Scalar::from_integer(den.clone())).to_integer())
            .collect();
        let low = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
        if low > 0 {
            roots.push(Scalar::zero());
        }
        let ints = &ints[low..];
        if ints.len() <= 1 {
            return roots;
        }
        let a0 = &ints[0];
        let an = ints.last().unwrap();
        let reduced = UPoly::new(self.c[low..].to_vec());
        for p in divisors(a0) {
            for qq in divisors(an) {
                for sign in [1i64, -1] {
                    let cand = Scalar::new(&p * BigInt::from(sign), qq.clone());
                    if !roots.contains(&cand) && reduced.eval(&cand).is_zero() {
                        roots.push(cand);
                    }
                }
            }
        }
        roots.sort();
        roots
    }

    /// Multiplicity of `r` as a root.
    pub fn root_multiplicity(&self, r: &Scalar) -> u32 {
        let mut p = self.clone();
        let lin = UPoly::linear(r);
        let mut m = 0;
        while !p.is_zero() && p.eval(r).is_zero() {
            p = p.divrem(&lin).0;
            m += 1;
        }
        m
    }

    /// Squarefree decomposition `p = lc * prod a_i^i` (Yun); returns `(i, a_i)` with
    /// nonconstant monic `a_i`.
    pub fn squarefree(&self) -> Vec<(u32, UPoly)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let fp = f.deriv();
        let a0 = f.gcd(&fp);
        let mut b = f.divrem(&a0).0;
        let mut c = fp.divrem(&a0).0;
        let mut d = c.sub(&b.deriv());
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((i, a.clone()));
            }
            b = b.divrem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = d.divrem(&a).0;
            d = c.sub(&b.deriv());
            i += 1;
        }
        out
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.c.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            write!(f, "{}", c.abs())?;
            if k > 0 {
                write!(f, "*z^{k}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar::qf;

    fn p(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&x| q(x)).collect())
    }

    #[test]
    fn divrem_and_gcd() {
        let a = p(&[-1, 0, 1]); // z^2 - 1
        let b = p(&[1, 1]);
        let (quo, rem) = a.divrem(&b);
        assert_eq!(quo, p(&[-1, 1]));
        assert!(rem.is_zero());
        assert_eq!(a.gcd(&p(&[-1, 1]).mul(&p(&[2, 1]))), p(&[-1, 1]));
    }

    #[test]
    fn ext_gcd_bezout() {
        let a = p(&[1, 0, 1]);
        let b = p(&[0, 1, 1]);
        let (g, s, t) = a.ext_gcd(&b);
        assert_eq!(s.mul(&a).add(&t.mul(&b)), g);
        assert_eq!(g, p(&[1]));
    }

    #[test]
    fn roots_and_squarefree() {
        // (2z - 1)(z + 3)^2 z
        let f = p(&[-1, 2]).mul(&p(&[3, 1]).pow(2)).mul(&p(&[0, 1]));
        assert_eq!(f.rational_roots(), vec![q(-3), q(0), qf(1, 2)]);
        assert_eq!(f.root_multiplicity(&q(-3)), 2);
        let sq = f.squarefree();
        assert_eq!(sq.len(), 2);
        assert_eq!(sq[1], (2, p(&[3, 1])));
        assert!(p(&[1, 0, 1]).rational_roots().is_empty());
    }
}
