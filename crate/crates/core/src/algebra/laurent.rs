//! Truncated Laurent series with explicit precision bookkeeping.

use std::fmt;

use num_traits::{One, Zero};

use super::multirat::MultiRat;
use super::scalar::{q, Scalar};
use crate::error::{Error, Result};

/// Coefficient ring of a series.
pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn scaled(&self, s: &Scalar) -> Self;
    fn try_inv(&self) -> Result<Self>;
    fn from_scalar(s: Scalar) -> Self;
}

impl Ring for Scalar {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self.clone()
    }
    fn scaled(&self, s: &Scalar) -> Self {
        self * s
    }
    fn try_inv(&self) -> Result<Self> {
        if Zero::is_zero(self) {
            Err(Error::DivisionByZero)
        } else {
            Ok(q(1) / self)
        }
    }
    fn from_scalar(s: Scalar) -> Self {
        s
    }
}

impl Ring for MultiRat {
    fn zero() -> Self {
        MultiRat::zero()
    }
    fn one() -> Self {
        MultiRat::one()
    }
    fn is_zero(&self) -> bool {
        MultiRat::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negate(&self) -> Self {
        self.neg()
    }
    fn scaled(&self, s: &Scalar) -> Self {
        self.scale(s)
    }
    fn try_inv(&self) -> Result<Self> {
        self.inv()
    }
    fn from_scalar(s: Scalar) -> Self {
        MultiRat::constant(s)
    }
}

/// Precision marker for series that are exact (finite sums).
pub const EXACT: i64 = i64::MAX;

/// `sum_{e < prec} c_e t^e + O(t^prec)`; coefficients start at exponent `val`.
#[derive(Clone, PartialEq)]
pub struct Laurent<C> {
    val: i64,
    coeffs: Vec<C>,
    prec: i64,
}

impl<C: Ring> Laurent<C> {
    pub fn new(val: i64, coeffs: Vec<C>, prec: i64) -> Self {
        let mut s = Laurent { val, coeffs, prec };
        s.tidy();
        s
    }

    pub fn exact(val: i64, coeffs: Vec<C>) -> Self {
        Laurent::new(val, coeffs, EXACT)
    }

    pub fn zero() -> Self {
        Laurent { val: 0, coeffs: Vec::new(), prec: EXACT }
    }

    /// Zero with limited precision, `O(t^prec)`.
    pub fn big_o(prec: i64) -> Self {
        Laurent { val: prec, coeffs: Vec::new(), prec }
    }

    pub fn constant(c: C) -> Self {
        Laurent::exact(0, vec![c])
    }

    pub fn monomial(c: C, e: i64) -> Self {
        Laurent::exact(e, vec![c])
    }

    /// `t`
    pub fn t() -> Self {
        Laurent::monomial(C::one(), 1)
    }

    fn tidy(&mut self) {
        if self.prec != EXACT {
            let keep = (self.prec - self.val).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.val += lead as i64;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.val = if self.prec == EXACT { 0 } else { self.prec };
        }
    }

    pub fn is_exact(&self) -> bool {
        self.prec == EXACT
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Lowest exponent with a nonzero known coefficient (or the precision if none).
    pub fn val(&self) -> i64 {
        self.val
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest stored exponent plus one.
    pub fn end(&self) -> i64 {
        self.val + self.coeffs.len() as i64
    }

    pub fn coeff(&self, e: i64) -> Result<C> {
        if e >= self.prec {
            return Err(Error::Truncation(format!(
                "coefficient t^{e} requested but series known only below t^{}",
                self.prec
            )));
        }
        Ok(self.coeff_unchecked(e))
    }

    fn coeff_unchecked(&self, e: i64) -> C {
        if e < self.val || e >= self.end() {
            C::zero()
        } else {
            self.coeffs[(e - self.val) as usize].clone()
        }
    }

    /// Known `(exponent, coefficient)` pairs with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(k, c)| (self.val + k as i64, c))
    }

    pub fn with_prec(&self, p: i64) -> Self {
        Laurent::new(self.val, self.coeffs.clone(), p.min(self.prec))
    }

    pub fn residue(&self) -> Result<C> {
        self.coeff(-1)
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> Laurent<D> {
        Laurent::new(self.val, self.coeffs.iter().map(f).collect(), self.prec)
    }

    pub fn try_map<D: Ring>(&self, f: impl Fn(&C) -> Result<D>) -> Result<Laurent<D>> {
        let cs = self.coeffs.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Laurent::new(self.val, cs, self.prec))
    }

    pub fn add(&self, o: &Self) -> Self {
        let prec = self.prec.min(o.prec);
        if self.is_zero() {
            return o.with_prec(prec);
        }
        if o.is_zero() {
            return self.with_prec(prec);
        }
        let lo = self.val.min(o.val);
        let hi = self.end().max(o.end()).min(prec);
        let cs = (lo..hi)
            .map(|e| self.coeff_unchecked(e).plus(&o.coeff_unchecked(e)))
            .collect();
        Laurent::new(lo, cs, prec)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(C::negate)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        self.map(|c| c.scaled(s))
    }

    pub fn mul_c(&self, c: &C) -> Self {
        self.map(|x| x.times(c))
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        let p = if self.prec == EXACT { EXACT } else { self.prec + k };
        Laurent::new(self.val + k, self.coeffs.clone(), p)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_exact() && self.is_zero() || o.is_exact() && o.is_zero() {
            return Laurent::zero();
        }
        let prec = match (self.is_exact(), o.is_exact()) {
            (true, true) => EXACT,
            (true, false) => o.prec + self.val,
            (false, true) => self.prec + o.val,
            (false, false) => (self.prec + o.val).min(o.prec + self.val),
        };
        if self.is_zero() || o.is_zero() {
            return Laurent::big_o(prec);
        }
        let val = self.val + o.val;
        let full = self.coeffs.len() + o.coeffs.len() - 1;
        let n = if prec == EXACT {
            full
        } else {
            ((prec - val).max(0) as usize).min(full)
        };
        let mut cs = vec![C::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= n || a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                cs[i + j] = cs[i + j].plus(&a.times(b));
            }
        }
        Laurent::new(val, cs, prec)
    }

    /// Reciprocal; an exact input must first be given a finite precision.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(if self.is_exact() {
                Error::DivisionByZero
            } else {
                Error::Truncation("inverse of a series with no known nonzero coefficient".into())
            });
        }
        if self.is_exact() && self.coeffs.len() > 1 {
            return Err(Error::Truncation("inverse of an exact series needs a precision".into()));
        }
        let a0inv = self.coeffs[0].try_inv()?;
        if self.coeffs.len() == 1 && self.is_exact() {
            return Ok(Laurent::exact(-self.val, vec![a0inv]));
        }
        let rel = (self.prec - self.val) as usize;
        let mut b: Vec<C> = Vec::with_capacity(rel);
        b.push(a0inv.clone());
        for k in 1..rel {
            let mut acc = C::zero();
            for j in 1..=k.min(self.coeffs.len() - 1) {
                let aj = &self.coeffs[j];
                if aj.is_zero() {
                    continue;
                }
                acc = acc.plus(&aj.times(&b[k - j]));
            }
            b.push(acc.times(&a0inv).negate());
        }
        Ok(Laurent::new(-self.val, b, self.prec - 2 * self.val))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Laurent::constant(C::one());
        let mut b = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    pub fn deriv(&self) -> Self {
        let cs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.scaled(&q(self.val + k as i64)))
            .collect();
        let p = if self.is_exact() { EXACT } else { self.prec - 1 };
        Laurent::new(self.val - 1, cs, p)
    }

    /// `f(s(t))` for `s` of positive valuation.
    pub fn compose(&self, s: &Laurent<C>) -> Result<Self> {
        if s.is_zero() {
            return Err(Error::Truncation("composition with an unknown series".into()));
        }
        if s.val() < 1 {
            return Err(Error::Domain("composition needs an inner series without constant term".into()));
        }
        if !self.is_exact() && self.prec < 0 {
            return Err(Error::Truncation("outer series known only in its polar part".into()));
        }
        let sv = s.val();
        let mut out = if self.is_exact() {
            Laurent::zero()
        } else {
            Laurent::big_o(self.prec.saturating_mul(sv))
        };
        if self.is_zero() {
            return Ok(out);
        }
        let bound = out.prec;
        let sinv = if self.val < 0 {
            let inner = if s.is_exact() && s.coeffs.len() > 1 {
                if bound == EXACT {
                    return Err(Error::Truncation("exact composition with an infinite inverse".into()));
                }
                s.with_prec(bound + (1 - self.val) * sv)
            } else {
                s.clone()
            };
            Some(inner.inv()?)
        } else {
            None
        };
        let mut pow_pos = Laurent::constant(C::one());
        let mut pos_e = 0;
        for (e, c) in self.terms() {
            let pw = if e >= 0 {
                while pos_e < e {
                    pow_pos = pow_pos.mul(s);
                    pos_e += 1;
                }
                pow_pos.clone()
            } else {
                sinv.as_ref().unwrap().pow(-e)?
            };
            if pw.val() >= bound {
                continue;
            }
            out = out.add(&pw.mul_c(c));
        }
        Ok(out)
    }

    /// `exp(s)` for `s` without constant or polar part.
    pub fn exp(&self) -> Result<Self> {
        if self.val < 1 && !self.is_zero() {
            return Err(Error::Domain("exp of a series with nonzero constant term".into()));
        }
        if self.is_exact() && !self.is_zero() {
            return Err(Error::Truncation("exp of an exact series needs a precision".into()));
        }
        let n = if self.is_exact() { 1 } else { self.prec.max(0) as usize };
        let mut e: Vec<C> = Vec::with_capacity(n);
        e.push(C::one());
        for k in 1..n {
            let mut acc = C::zero();
            for j in 1..=k {
                let sj = self.coeff_unchecked(j as i64);
                if sj.is_zero() {
                    continue;
                }
                acc = acc.plus(&sj.times(&e[k - j]).scaled(&q(j as i64)));
            }
            e.push(acc.scaled(&(q(1) / q(k as i64))));
        }
        Ok(Laurent::new(0, e, self.prec))
    }

    /// `log(s)` for `s` with constant term one.
    pub fn log(&self) -> Result<Self> {
        if self.val != 0 || self.coeff_unchecked(0) != C::one() {
            return Err(Error::Domain("log of a series whose constant term is not 1".into()));
        }
        if self.is_exact() && self.coeffs.len() > 1 {
            return Err(Error::Truncation("log of an exact series needs a precision".into()));
        }
        let n = if self.is_exact() { 1 } else { self.prec as usize };
        let mut l: Vec<C> = vec![C::zero(); n.max(1)];
        for k in 1..n {
            let mut acc = self.coeff_unchecked(k as i64);
            for j in 1..k {
                let a = self.coeff_unchecked((k - j) as i64);
                if a.is_zero() || l[j].is_zero() {
                    continue;
                }
                acc = acc.minus(&l[j].times(&a).scaled(&(q(j as i64) / q(k as i64))));
            }
            l[k] = acc;
        }
        Ok(Laurent::new(0, l, self.prec))
    }
}

impl<C: Ring> fmt::Debug for Laurent<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}*t^{e}")?;
        }
        if first {
            write!(f, "0")?;
        }
        if !self.is_exact() {
            write!(f, " + O(t^{})", self.prec)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar::qf;

    type S = Laurent<Scalar>;

    fn s(val: i64, cs: &[Scalar], prec: i64) -> S {
        Laurent::new(val, cs.to_vec(), prec)
    }

    #[test]
    fn geometric_inverse() {
        // 1/(1 - t)^2 = 1 + 2t + 3t^2 + ...
        let one_minus_t = s(0, &[q(1), q(-1)], 3);
        let f = one_minus_t.pow(-2).unwrap();
        assert_eq!(f.prec(), 3);
        assert_eq!(f.coeff(2).unwrap(), q(3));
        assert!(f.coeff(3).is_err());
    }

    #[test]
    fn residues() {
        let f = s(-2, &[q(1), q(3), q(5)], 5);
        assert_eq!(f.residue().unwrap(), q(3));
        assert_eq!(S::monomial(q(1), -1).residue().unwrap(), q(1));
        assert!(s(0, &[q(1)], 0).residue().is_ok());
        assert!(s(-3, &[q(1)], -1).residue().is_err());
    }

    #[test]
    fn exp_log_round_trip() {
        let x = s(1, &[q(1), qf(1, 2), q(-3)], 6);
        let y = x.exp().unwrap().log().unwrap();
        assert_eq!(y, x.with_prec(6));
        let l = s(0, &[q(1), q(1)], 3).log().unwrap();
        assert_eq!(l, s(1, &[q(1), qf(-1, 2)], 3));
    }

    #[test]
    fn composition() {
        // 1/w at w = 1 + t is handled by shifting: here compose w^2 with -t.
        let f = S::monomial(q(1), 2);
        let g = S::monomial(q(-1), 1);
        assert_eq!(f.compose(&g).unwrap(), S::monomial(q(1), 2));
        // 1/(1 - w) with w = t + t^2 through t^3
        let geo = s(0, &[q(1), q(1), q(1), q(1)], 4);
        let w = s(1, &[q(1), q(1)], EXACT);
        let r = geo.compose(&w).unwrap();
        assert_eq!(r.prec(), 4);
        assert_eq!(r.coeff(3).unwrap(), q(3));
    }
}
