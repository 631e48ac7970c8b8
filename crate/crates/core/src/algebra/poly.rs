//! Sparse multivariate polynomials over the rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::scalar::{q, Scalar};
use super::upoly::UPoly;

pub type Var = u16;

/// Sorted list of `(variable, exponent)` with positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(pub Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exp(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0, |&(_, e)| e)
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &o.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Splits off the power of `v`.
    pub fn split(&self, v: Var) -> (u32, Monomial) {
        let mut rest = Vec::with_capacity(self.0.len());
        let mut e = 0;
        for &(w, k) in &self.0 {
            if w == v {
                e = k;
            } else {
                rest.push((w, k));
            }
        }
        (e, Monomial(rest))
    }

    fn from_unsorted(mut pairs: Vec<(Var, u32)>) -> Monomial {
        pairs.sort_unstable();
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(q(1))
    }

    pub fn constant(c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        Poly::monomial(Monomial::var(v, 1), q(1))
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    /// Univariate polynomial in `v`.
    pub fn from_upoly(u: &UPoly, v: Var) -> Self {
        let mut p = Poly::zero();
        for (k, c) in u.coeffs().iter().enumerate() {
            p.add_term(Monomial::var(v, k as u32), c.clone());
        }
        p
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Scalar {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|&(v, _)| v))
            .collect()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Leading term under graded lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms
            .iter()
            .max_by(|a, b| a.0.degree().cmp(&b.0.degree()).then_with(|| b.0.cmp(a.0)))
    }

    pub fn neg(&self) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Scalar) -> Self {
        Poly::from_terms(self.terms.iter().map(|(k, v)| (k.mul(m), v * c)))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn deriv(&self, v: Var) -> Self {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            if e == 0 {
                continue;
            }
            out.add_term(rest.mul(&Monomial::var(v, e - 1)), c * q(e as i64));
        }
        out
    }

    /// Coefficients as a polynomial in `v`: `out[k]` multiplies `v^k`.
    pub fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.degree_in(v) as usize + 1];
        if self.is_zero() {
            return Vec::new();
        }
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    pub fn from_coeffs_in(cs: &[Poly], v: Var) -> Self {
        let mut out = Poly::zero();
        for (k, c) in cs.iter().enumerate() {
            let m = Monomial::var(v, k as u32);
            for (mm, cc) in &c.terms {
                out.add_term(mm.mul(&m), cc.clone());
            }
        }
        out
    }

    /// Substitutes the polynomial `val` for `v`.
    pub fn subst(&self, v: Var, val: &Poly) -> Self {
        let cs = self.coeffs_in(v);
        let mut acc = Poly::zero();
        for c in cs.iter().rev() {
            acc = acc.mul(val);
            acc.add_assign(c);
        }
        acc
    }

    pub fn eval_var(&self, v: Var, x: &Scalar) -> Self {
        self.subst(v, &Poly::constant(x.clone()))
    }

    /// Evaluates every variable; missing variables are an error of the caller.
    pub fn eval_all(&self, vals: &dyn Fn(Var) -> Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                t *= num_traits::pow(vals(v), e as usize);
            }
            acc += t;
        }
        acc
    }

    pub fn rename(&self, f: &dyn Fn(Var) -> Var) -> Self {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            (
                Monomial::from_unsorted(m.0.iter().map(|&(v, e)| (f(v), e)).collect()),
                c.clone(),
            )
        }))
    }

    /// Division by the monic linear polynomial `v - root` (`root` free of `v`);
    /// returns quotient and remainder.
    pub fn div_linear(&self, v: Var, root: &Poly) -> (Poly, Poly) {
        let cs = self.coeffs_in(v);
        if cs.is_empty() {
            return (Poly::zero(), Poly::zero());
        }
        let d = cs.len() - 1;
        if d == 0 {
            return (Poly::zero(), cs[0].clone());
        }
        let mut quo = vec![Poly::zero(); d];
        let mut carry = Poly::zero();
        for k in (1..=d).rev() {
            carry = cs[k].add(&carry.mul(root));
            quo[k - 1] = carry.clone();
        }
        let rem = cs[0].add(&carry.mul(root));
        (Poly::from_coeffs_in(&quo, v), rem)
    }

    /// The polynomial as a univariate one in `v` when no other variables occur.
    pub fn to_upoly(&self, v: Var) -> Option<UPoly> {
        let mut c = vec![Scalar::zero(); self.degree_in(v) as usize + 1];
        for (m, s) in &self.terms {
            let (e, rest) = m.split(v);
            if !rest.0.is_empty() {
                return None;
            }
            c[e as usize] = s.clone();
        }
        Some(UPoly::new(c))
    }
}

pub fn var_name(v: Var) -> String {
    match v {
        0..=63 => format!("z{}", v + 1),
        64..=127 => format!("u{}", v - 63),
        _ => format!("w{v}"),
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let a = c.abs();
            let unit = a.is_one() && !m.0.is_empty();
            if !unit {
                write!(f, "{a}")?;
            }
            for (j, &(v, e)) in m.0.iter().enumerate() {
                if j > 0 || !unit {
                    write!(f, "*")?;
                }
                write!(f, "{}", var_name(v))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}
