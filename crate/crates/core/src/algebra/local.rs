//! Local expansions of rational functions and rational primitives.

use std::collections::BTreeMap;

use super::laurent::{Laurent, EXACT};
use super::multirat::{Factor, MultiRat};
use super::poly::{Monomial, Poly, Var};
use super::scalar::{q, Scalar};
use crate::error::{Error, Result};

type Series = Laurent<MultiRat>;

/// Substitutes series in a local parameter `t` for some variables of `f`; the remaining
/// variables stay in the coefficients. The result is requested through `O(t^target)`;
/// the returned series reports the precision actually reached.
pub fn expand(f: &MultiRat, subs: &[(Var, Series)], target: i64) -> Result<Series> {
    if f.is_zero() {
        return Ok(Laurent::zero());
    }
    let sub_of = |v: Var| subs.iter().find(|(w, _)| *w == v).map(|(_, s)| s);
    let const_factor = |fac: &Factor| -> Result<Option<Series>> {
        let piece = |v: Var| sub_of(v).cloned();
        Ok(match fac {
            Factor::Lin { var, root } => piece(*var)
                .map(|s| s.sub(&Laurent::constant(MultiRat::constant(root.clone())))),
            Factor::Diff { a, b } => match (piece(*a), piece(*b)) {
                (None, None) => None,
                (pa, pb) => {
                    let sa = pa.unwrap_or_else(|| Laurent::constant(MultiRat::var(*a)));
                    let sb = pb.unwrap_or_else(|| Laurent::constant(MultiRat::var(*b)));
                    Some(sa.sub(&sb))
                }
            },
        })
    };

    // Factor series and the pole budget they imply.
    let mut spectator = BTreeMap::new();
    let mut local: Vec<(Series, u32)> = Vec::new();
    let mut budget = 0i64;
    for (fac, &k) in f.den() {
        match const_factor(fac)? {
            None => {
                spectator.insert(fac.clone(), k);
            }
            Some(s) => {
                if s.is_zero() && s.is_exact() {
                    return Err(Error::DivisionByZero);
                }
                budget += s.val() * k as i64;
                local.push((s, k));
            }
        }
    }
    let rel = target.saturating_add(budget);

    // Numerator: group terms by the substituted part of each monomial.
    let mut groups: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
    for (m, c) in f.num().terms() {
        let mut key = vec![0u32; subs.len()];
        let mut rest = Vec::new();
        for &(v, e) in &m.0 {
            match subs.iter().position(|(w, _)| *w == v) {
                Some(i) => key[i] = e,
                None => rest.push((v, e)),
            }
        }
        groups
            .entry(key)
            .or_default()
            .add_term(Monomial(rest), c.clone());
    }
    let mut powers: Vec<Vec<Series>> = subs
        .iter()
        .map(|(_, s)| vec![Laurent::constant(MultiRat::one()), cap(s, rel)])
        .collect();
    let mut num = Laurent::zero();
    for (key, coeff) in groups {
        let mut term = Laurent::constant(MultiRat::new(coeff, spectator.clone()));
        for (i, &e) in key.iter().enumerate() {
            while powers[i].len() <= e as usize {
                let next = powers[i].last().unwrap().mul(&powers[i][1]);
                powers[i].push(next);
            }
            term = term.mul(&powers[i][e as usize]);
        }
        num = num.add(&term);
    }
    if num.is_zero() && num.is_exact() {
        return Ok(Laurent::zero());
    }
    let mut out = num;
    for (s, k) in local {
        let inv = cap(&s, s.val() + rel).inv()?;
        for _ in 0..k {
            out = out.mul(&inv);
        }
    }
    Ok(out)
}

fn cap(s: &Series, p: i64) -> Series {
    if s.is_exact() && s.end() - s.val() > 1 {
        s.with_prec(p)
    } else {
        s.clone()
    }
}

/// `point + t` as a coefficient series.
pub fn shifted_t(point: &Scalar) -> Series {
    Laurent::exact(
        0,
        vec![MultiRat::constant(point.clone()), MultiRat::one()],
    )
}

/// Laurent expansion of a univariate function of `v` at `point`, exact through `t^order`.
pub fn series_expand(f: &MultiRat, v: Var, point: &Scalar, order: i64) -> Result<Laurent<Scalar>> {
    if f.vars().iter().any(|&w| w != v) {
        return Err(Error::Domain("series_expand needs a function of one variable".into()));
    }
    let s = expand(f, &[(v, shifted_t(point))], order + 1)?;
    let s = s.with_prec(order + 1);
    if s.prec() <= order && s.prec() != EXACT {
        return Err(Error::Truncation(format!("expansion reached only O(t^{})", s.prec())));
    }
    s.try_map(|c| {
        c.as_constant()
            .ok_or_else(|| Error::Domain("non-constant coefficient".into()))
    })
}

/// Rational primitive in `v` (other variables are parameters); zero constant of
/// integration. Fails when a residue in `v` is nonzero.
pub fn antiderivative(f: &MultiRat, v: Var) -> Result<MultiRat> {
    let mut principal = MultiRat::zero();
    let mut prim = MultiRat::zero();
    for (fac, &k) in f.den() {
        let root = match fac {
            Factor::Lin { var, root } if *var == v => root.clone(),
            Factor::Diff { a, b } if *a == v || *b == v => {
                return Err(Error::Unsupported(
                    "primitive across a diagonal pole".into(),
                ))
            }
            _ => continue,
        };
        let s = expand(f, &[(v, shifted_t(&root))], 0)?;
        let lin = MultiRat::from_factor(fac.clone(), 1);
        for j in 1..=k as i64 {
            let c = s.coeff(-j)?;
            if c.is_zero() {
                continue;
            }
            if j == 1 {
                return Err(Error::NonvanishingResidue(format!(
                    "residue {c:?} at z = {root}"
                )));
            }
            let lp = lin.pow(-(j as i32))?;
            principal = principal.add(&lp.mul(&c));
            prim = prim.add(&lin.pow(1 - j as i32)?.mul(&c).scale(&(q(1) / q(1 - j))));
        }
    }
    let poly_part = f.sub(&principal);
    let coeffs = poly_part
        .poly_coeffs_in(v)
        .ok_or_else(|| Error::Domain("partial fraction split left a pole".into()))?;
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mono = MultiRat::from_poly(Poly::monomial(Monomial::var(v, k as u32 + 1), q(1)));
        prim = prim.add(&mono.mul(c).scale(&(q(1) / q(k as i64 + 1))));
    }
    Ok(prim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> MultiRat {
        MultiRat::var(0)
    }

    fn c(x: i64) -> MultiRat {
        MultiRat::constant(q(x))
    }

    #[test]
    fn expansions_of_simple_functions() {
        let f = z().sub(&c(1)).pow(-2).unwrap();
        let s = series_expand(&f, 0, &q(0), 2).unwrap();
        assert_eq!(s, Laurent::new(0, vec![q(1), q(2), q(3)], 3));
        let g = z().inv().unwrap();
        let s = series_expand(&g, 0, &q(0), 0).unwrap();
        assert_eq!(s, Laurent::new(-1, vec![q(1)], 1));
        let h = c(1).sub(&z()).div(&z()).unwrap();
        let s = series_expand(&h, 0, &q(0), 1).unwrap();
        assert_eq!(s.coeff(-1).unwrap(), q(1));
        assert_eq!(s.coeff(0).unwrap(), q(-1));
        assert_eq!(s.coeff(1).unwrap(), q(0));
    }

    #[test]
    fn spectator_coefficients() {
        // 1/(z1 - z2) at z2 = t: sum t^k / z1^(k+1)
        let f = MultiRat::var(0).sub(&MultiRat::var(1)).inv().unwrap();
        let s = expand(&f, &[(1, Laurent::t())], 3).unwrap();
        assert!(s.prec() >= 3);
        assert_eq!(s.coeff(2).unwrap(), MultiRat::var(0).pow(-3).unwrap());
    }

    #[test]
    fn primitives() {
        assert_eq!(antiderivative(&z().scale(&q(2)), 0).unwrap(), z().mul(&z()));
        assert!(matches!(
            antiderivative(&z().inv().unwrap(), 0),
            Err(Error::NonvanishingResidue(_))
        ));
        let f = z().mul(&z()).add(&z().sub(&c(1)).pow(-3).unwrap());
        let p = antiderivative(&f, 0).unwrap();
        assert_eq!(p.deriv(0), f);
    }
}
