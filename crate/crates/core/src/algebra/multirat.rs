//! Multivariate rational functions with denominators over a basis of linear factors.
//!
//! Every denominator that arises on a genus-zero curve with rational branch points is a
//! product of `z_i - r` and `z_i - z_j`. Keeping the denominator factored over these
//! irreducible, monic factors (and cancelling them against the numerator) gives a canonical
//! form without multivariate gcds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use super::poly::{var_name, Monomial, Poly, Var};
use super::scalar::{fmt_scalar, q, Scalar};
use super::upoly::UPoly;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Factor {
    /// `z_var - root`
    Lin { var: Var, root: Scalar },
    /// `z_a - z_b` with `a < b`
    Diff { a: Var, b: Var },
}

impl Factor {
    pub fn poly(&self) -> Poly {
        match self {
            Factor::Lin { var, root } => Poly::var(*var).sub(&Poly::constant(root.clone())),
            Factor::Diff { a, b } => Poly::var(*a).sub(&Poly::var(*b)),
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        match self {
            Factor::Lin { var, .. } => *var == v,
            Factor::Diff { a, b } => *a == v || *b == v,
        }
    }

    /// Derivative of the factor polynomial in `v` (a constant).
    fn deriv_sign(&self, v: Var) -> i64 {
        match self {
            Factor::Lin { var, .. } if *var == v => 1,
            Factor::Diff { a, .. } if *a == v => 1,
            Factor::Diff { b, .. } if *b == v => -1,
            _ => 0,
        }
    }

    /// Quotient if the factor divides `p` exactly.
    fn divide(&self, p: &Poly) -> Option<Poly> {
        let (quo, rem) = match self {
            Factor::Lin { var, root } => p.div_linear(*var, &Poly::constant(root.clone())),
            Factor::Diff { a, b } => p.div_linear(*a, &Poly::var(*b)),
        };
        rem.is_zero().then_some(quo)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiRat {
    num: Poly,
    den: BTreeMap<Factor, u32>,
}

impl Default for MultiRat {
    fn default() -> Self {
        MultiRat::zero()
    }
}

impl MultiRat {
    pub fn zero() -> Self {
        MultiRat { num: Poly::zero(), den: BTreeMap::new() }
    }

    pub fn one() -> Self {
        MultiRat::constant(q(1))
    }

    pub fn constant(c: Scalar) -> Self {
        MultiRat { num: Poly::constant(c), den: BTreeMap::new() }
    }

    pub fn var(v: Var) -> Self {
        MultiRat::from_poly(Poly::var(v))
    }

    pub fn from_poly(p: Poly) -> Self {
        MultiRat { num: p, den: BTreeMap::new() }
    }

    pub fn from_factor(f: Factor, e: i32) -> Self {
        if e >= 0 {
            MultiRat::from_poly(f.poly().pow(e as u32))
        } else {
            let mut den = BTreeMap::new();
            den.insert(f, (-e) as u32);
            MultiRat { num: Poly::one(), den }
        }
    }

    /// `num / prod factor^exp`, normalized.
    pub fn new(num: Poly, den: BTreeMap<Factor, u32>) -> Self {
        let mut r = MultiRat { num, den };
        r.normalize();
        r
    }

    /// A univariate rational function `p/q` in `v`; the denominator must split over the
    /// rationals.
    pub fn from_upolys(p: &UPoly, d: &UPoly, v: Var) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::Undefined("zero denominator".into()));
        }
        let n = MultiRat::from_poly(Poly::from_upoly(p, v));
        let dd = MultiRat::from_poly(Poly::from_upoly(d, v));
        n.div(&dd)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &BTreeMap<Factor, u32> {
        &self.den
    }

    pub fn den_poly(&self) -> Poly {
        self.den
            .iter()
            .fold(Poly::one(), |acc, (f, &k)| acc.mul(&f.poly().pow(k)))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = self.num.vars();
        for f in self.den.keys() {
            match f {
                Factor::Lin { var, .. } => {
                    vs.insert(*var);
                }
                Factor::Diff { a, b } => {
                    vs.insert(*a);
                    vs.insert(*b);
                }
            }
        }
        vs
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.keys().any(|f| f.contains(v))
    }

    /// Exponent of `factor` in the denominator.
    pub fn pole_order(&self, f: &Factor) -> u32 {
        self.den.get(f).copied().unwrap_or(0)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let mut den = std::mem::take(&mut self.den);
        for (f, k) in den.iter_mut() {
            while *k > 0 {
                match f.divide(&self.num) {
                    Some(quo) => {
                        self.num = quo;
                        *k -= 1;
                    }
                    None => break,
                }
            }
        }
        den.retain(|_, k| *k > 0);
        self.den = den;
    }

    pub fn neg(&self) -> Self {
        MultiRat { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return MultiRat::zero();
        }
        MultiRat { num: self.num.scale(s), den: self.den.clone() }
    }

    fn lift(&self, den: &BTreeMap<Factor, u32>) -> Poly {
        let mut p = self.num.clone();
        for (f, &k) in den {
            let have = self.pole_order(f);
            if k > have {
                p = p.mul(&f.poly().pow(k - have));
            }
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return MultiRat::new(self.num.add(&o.num), self.den.clone());
        }
        let mut den = self.den.clone();
        for (f, &k) in &o.den {
            let e = den.entry(f.clone()).or_insert(0);
            *e = (*e).max(k);
        }
        let num = self.lift(&den).add(&o.lift(&den));
        MultiRat::new(num, den)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return MultiRat::zero();
        }
        let mut den = self.den.clone();
        for (f, &k) in &o.den {
            *den.entry(f.clone()).or_insert(0) += k;
        }
        let num = self.num.mul(&o.num);
        if o.den.is_empty() && o.num.as_constant().is_some()
            || self.den.is_empty() && self.num.as_constant().is_some()
        {
            return MultiRat { num, den };
        }
        MultiRat::new(num, den)
    }

    pub fn mul_poly(&self, p: &Poly) -> Self {
        MultiRat::new(self.num.mul(p), self.den.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (c, factors) = factor_poly(&self.num)?;
        let num = self.den_poly().scale(&(q(1) / c));
        let den = factors.into_iter().collect();
        Ok(MultiRat::new(num, den))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = MultiRat::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    pub fn deriv(&self, v: Var) -> Self {
        let involved: Vec<(&Factor, u32)> = self
            .den
            .iter()
            .filter(|(f, _)| f.contains(v))
            .map(|(f, &k)| (f, k))
            .collect();
        if involved.is_empty() {
            return MultiRat::new(self.num.deriv(v), self.den.clone());
        }
        let all: Poly = involved.iter().fold(Poly::one(), |acc, (f, _)| acc.mul(&f.poly()));
        let mut num = self.num.deriv(v).mul(&all);
        for (j, (f, k)) in involved.iter().enumerate() {
            let s = f.deriv_sign(v) * (*k as i64);
            let others = involved
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(Poly::one(), |acc, (_, (g, _))| acc.mul(&g.poly()));
            num = num.sub(&self.num.mul(&others).scale(&q(s)));
        }
        let mut den = self.den.clone();
        for (f, _) in &involved {
            *den.get_mut(*f).unwrap() += 1;
        }
        MultiRat::new(num, den)
    }

    /// Renames variables; collapsing a `z_a - z_b` pole onto the diagonal is an error.
    pub fn rename(&self, f: &dyn Fn(Var) -> Var) -> Result<Self> {
        let mut num = self.num.rename(f);
        let mut den = BTreeMap::new();
        for (fac, &k) in &self.den {
            let nf = match fac {
                Factor::Lin { var, root } => Factor::Lin { var: f(*var), root: root.clone() },
                Factor::Diff { a, b } => {
                    let (na, nb) = (f(*a), f(*b));
                    if na == nb {
                        return Err(Error::DivisionByZero);
                    }
                    if na < nb {
                        Factor::Diff { a: na, b: nb }
                    } else {
                        if k % 2 == 1 {
                            num = num.neg();
                        }
                        Factor::Diff { a: nb, b: na }
                    }
                }
            };
            *den.entry(nf).or_insert(0) += k;
        }
        Ok(MultiRat::new(num, den))
    }

    /// Sets `z_v = x`.
    pub fn eval_var(&self, v: Var, x: &Scalar) -> Result<Self> {
        let mut out = MultiRat::from_poly(self.num.eval_var(v, x));
        for (fac, &k) in &self.den {
            let piece = match fac {
                Factor::Lin { var, root } if *var == v => {
                    let d = x - root;
                    if d.is_zero() {
                        return Err(Error::DivisionByZero);
                    }
                    MultiRat::constant(q(1) / d)
                }
                Factor::Diff { a, b } if *a == v => {
                    MultiRat::from_factor(Factor::Lin { var: *b, root: x.clone() }, -1).neg()
                }
                Factor::Diff { a, b } if *b == v => {
                    MultiRat::from_factor(Factor::Lin { var: *a, root: x.clone() }, -1)
                }
                other => MultiRat::from_factor(other.clone(), -1),
            };
            for _ in 0..k {
                out = out.mul(&piece);
            }
        }
        Ok(out)
    }

    pub fn eval_all(&self, vals: &dyn Fn(Var) -> Scalar) -> Result<Scalar> {
        let d = self.den_poly().eval_all(vals);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval_all(vals) / d)
    }

    /// Coefficients of this function as a polynomial in `v` (which must not occur in the
    /// denominator).
    pub fn poly_coeffs_in(&self, v: Var) -> Option<Vec<MultiRat>> {
        if self.den.keys().any(|f| f.contains(v)) {
            return None;
        }
        Some(
            self.num
                .coeffs_in(v)
                .into_iter()
                .map(|c| MultiRat::new(c, self.den.clone()))
                .collect(),
        )
    }

    /// Univariate numerator and denominator in `v`.
    pub fn to_upolys(&self, v: Var) -> Option<(UPoly, UPoly)> {
        let n = self.num.to_upoly(v)?;
        let d = self.den_poly().to_upoly(v)?;
        Some((n, d))
    }
}

/// Splits `p` into a scalar times monic linear factors; anything else is unsupported.
pub fn factor_poly(p: &Poly) -> Result<(Scalar, Vec<(Factor, u32)>)> {
    if p.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (out, rest) = split_linear(p);
    match rest.as_constant() {
        Some(c) => Ok((c, out)),
        None => Err(Error::Unsupported(format!(
            "denominator factor {rest:?} does not split into linear factors over Q"
        ))),
    }
}

/// Pulls every linear factor with rational data out of a nonzero `p`; returns the
/// sorted factors and the cofactor.
pub fn split_linear(p: &Poly) -> (Vec<(Factor, u32)>, Poly) {
    let mut rest = p.clone();
    let mut out: Vec<(Factor, u32)> = Vec::new();
    let vars: Vec<Var> = p.vars().into_iter().collect();
    let push = |f: Factor, out: &mut Vec<(Factor, u32)>| match out.iter_mut().find(|(g, _)| *g == f) {
        Some(e) => e.1 += 1,
        None => out.push((f, 1)),
    };
    for (i, &a) in vars.iter().enumerate() {
        for &b in &vars[i + 1..] {
            let f = Factor::Diff { a, b };
            while let Some(quo) = f.divide(&rest) {
                rest = quo;
                push(f.clone(), &mut out);
            }
        }
    }
    for &v in &vars {
        if !rest.contains_var(v) {
            continue;
        }
        let mut u: Option<UPoly> = None;
        for attempt in 0..3u64 {
            let s = rest.eval_all_but(v, attempt);
            if s.is_zero() {
                continue;
            }
            u = Some(match u {
                None => s,
                Some(g) => g.gcd(&s),
            });
            if u.as_ref().is_some_and(|g| g.degree() == Some(0)) {
                break;
            }
        }
        let Some(u) = u else { continue };
        for r in u.monic().rational_roots() {
            let f = Factor::Lin { var: v, root: r };
            while let Some(quo) = f.divide(&rest) {
                rest = quo;
                push(f.clone(), &mut out);
            }
        }
    }
    out.sort();
    (out, rest)
}

impl Poly {
    /// Specializes all variables except `v` to fixed integers, giving a univariate polynomial.
    fn eval_all_but(&self, v: Var, attempt: u64) -> UPoly {
        let mut c = vec![Scalar::zero(); self.degree_in(v) as usize + 1];
        for (m, s) in self.terms() {
            let (e, rest) = m.split(v);
            let mut t = s.clone();
            for &(w, k) in &rest.0 {
                let val = q(1009 + 7919 * attempt as i64 + 13 * w as i64);
                t *= num_traits::pow(val, k as usize);
            }
            c[e as usize] += t;
        }
        UPoly::new(c)
    }
}

fn fmt_factor(f: &Factor) -> String {
    match f {
        Factor::Lin { var, root } if root.is_zero() => var_name(*var),
        Factor::Lin { var, root } => {
            let neg = -root.clone();
            if neg > Scalar::zero() {
                format!("({}+{})", var_name(*var), fmt_scalar(&neg))
            } else {
                format!("({}-{})", var_name(*var), fmt_scalar(root))
            }
        }
        Factor::Diff { a, b } => format!("({}-{})", var_name(*a), var_name(*b)),
    }
}

impl fmt::Debug for MultiRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})", self.num)?;
        if !self.den.is_empty() {
            let parts: Vec<String> = self
                .den
                .iter()
                .map(|(fac, &k)| {
                    if k == 1 {
                        fmt_factor(fac)
                    } else {
                        format!("{}^{}", fmt_factor(fac), k)
                    }
                })
                .collect();
            write!(f, "/({})", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Monomial helper used by callers assembling polynomials.
pub fn mono(pairs: &[(Var, u32)]) -> Monomial {
    let mut v: Vec<(Var, u32)> = pairs.iter().copied().filter(|&(_, e)| e > 0).collect();
    v.sort_unstable();
    Monomial(v)
}

impl MultiRat {
    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.as_constant().is_some_and(|c| c.is_one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar::qf;

    fn z(i: Var) -> MultiRat {
        MultiRat::var(i)
    }

    fn c(x: i64) -> MultiRat {
        MultiRat::constant(q(x))
    }

    #[test]
    fn canonical_cancellation() {
        // (z1^2 - z2^2) / (z1 - z2) = z1 + z2
        let n = z(0).mul(&z(0)).sub(&z(1).mul(&z(1)));
        let d = z(0).sub(&z(1));
        assert_eq!(n.div(&d).unwrap(), z(0).add(&z(1)));
        // 1/(z-1) - 1/z = 1/(z(z-1))
        let a = z(0).sub(&c(1)).inv().unwrap();
        let b = z(0).inv().unwrap();
        let expect = z(0).mul(&z(0).sub(&c(1))).inv().unwrap();
        assert_eq!(a.sub(&b), expect);
    }

    #[test]
    fn derivative_of_quotient() {
        // d/dz 1/(z-1)^2 = -2/(z-1)^3
        let f = z(0).sub(&c(1)).pow(-2).unwrap();
        assert_eq!(f.deriv(0), z(0).sub(&c(1)).pow(-3).unwrap().scale(&q(-2)));
        // d/dz1 1/(z1 - z2) = -1/(z1-z2)^2, d/dz2 = +1/(z1-z2)^2
        let g = z(0).sub(&z(1)).inv().unwrap();
        let g2 = g.mul(&g);
        assert_eq!(g.deriv(0), g2.neg());
        assert_eq!(g.deriv(1), g2);
    }

    #[test]
    fn rename_orients_differences() {
        let g = z(0).sub(&z(2)).inv().unwrap();
        let r = g.rename(&|v| if v == 0 { 3 } else { v }).unwrap();
        assert_eq!(r, z(3).sub(&z(2)).inv().unwrap());
        assert!(g.rename(&|_| 0).is_err());
    }

    #[test]
    fn factorization_and_eval() {
        let p = z(0).scale(&q(2)).sub(&c(1)).mul(&z(0).sub(&z(1)));
        let inv = p.inv().unwrap();
        assert_eq!(inv.mul(&p), MultiRat::one());
        let v = inv.eval_all(&|w| if w == 0 { q(3) } else { q(1) }).unwrap();
        assert_eq!(v, qf(1, 10));
        let bad = z(0).mul(&z(0)).add(&c(1));
        assert!(bad.inv().is_err());
        let e = inv.eval_var(1, &q(0)).unwrap();
        assert_eq!(e, z(0).mul(&z(0).scale(&q(2)).sub(&c(1))).inv().unwrap());
    }
}
