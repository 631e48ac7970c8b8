//! Topological recursion: correlators, primitives and free energies.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;
use parking_lot::RwLock;

use crate::algebra::local::{antiderivative, expand, shifted_t};
use crate::algebra::{q, qf, Factor, Laurent, MultiRat, Scalar, Var};
use crate::curve::{SpectralCurve, Z};
use crate::error::{Error, Result};

type Series = Laurent<MultiRat>;

const QV: Var = 1000;
const SV: Var = 1001;

/// `omega_{g,n} = density * dz_1 ... dz_n`, variable `z_i` being `Var(i-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlator {
    pub g: u32,
    pub n: usize,
    pub density: MultiRat,
    pub curve: String,
}

impl Correlator {
    /// The density with respect to `dx(z_1) ... dx(z_n)`.
    pub fn w(&self, c: &SpectralCurve) -> Result<MultiRat> {
        per_dx(&self.density, c, self.n)
    }
}

/// Divides a `dz`-density by `x'(z_1) ... x'(z_n)`.
pub fn per_dx(density: &MultiRat, c: &SpectralCurve, n: usize) -> Result<MultiRat> {
    let mut out = density.clone();
    for i in 0..n {
        out = out.div(&dx_at(c, i as Var)?)?;
    }
    Ok(out)
}

/// `x'(z)` in the variable `v`.
pub fn dx_at(c: &SpectralCurve, v: Var) -> Result<MultiRat> {
    c.dx().rename(&|_| v)
}

/// The Bergman kernel density `1/(z_a - z_b)^2`.
pub fn bergman(a: Var, b: Var) -> MultiRat {
    MultiRat::var(a).sub(&MultiRat::var(b)).pow(-2).unwrap()
}

pub struct TrEngine {
    curve: Arc<SpectralCurve>,
    memo: RwLock<HashMap<(u32, usize), MultiRat>>,
    margin: i64,
}

impl TrEngine {
    pub fn new(curve: SpectralCurve) -> Self {
        Self::from_arc(Arc::new(curve))
    }

    pub fn from_arc(curve: Arc<SpectralCurve>) -> Self {
        TrEngine {
            curve,
            memo: RwLock::new(HashMap::new()),
            margin: 4,
        }
    }

    /// Extra series order used at each residue before adaptive doubling.
    pub fn with_margin(mut self, margin: i64) -> Self {
        self.margin = margin.max(1);
        self
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.curve
    }

    pub fn curve_arc(&self) -> Arc<SpectralCurve> {
        self.curve.clone()
    }

    /// Stable densities computed so far.
    pub fn cached(&self) -> Vec<((u32, usize), MultiRat)> {
        let mut v: Vec<_> = self.memo.read().iter().map(|(k, d)| (*k, d.clone())).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn preload(&self, g: u32, n: usize, density: MultiRat) {
        self.memo.write().insert((g, n), density);
    }

    pub fn omega(&self, g: u32, n: usize) -> Result<Correlator> {
        Ok(Correlator {
            g,
            n,
            density: self.density(g, n)?,
            curve: self.curve.name.clone(),
        })
    }

    pub fn density(&self, g: u32, n: usize) -> Result<MultiRat> {
        if n == 0 {
            return Err(Error::Domain("correlators need n >= 1; use free_energy".into()));
        }
        match (g, n) {
            (0, 1) => {
                if !self.curve.y.is_rational() {
                    return Err(Error::Unsupported("omega_{0,1} = y dx with a logarithmic y".into()));
                }
                Ok(self.curve.y.rat.mul(&self.curve.dx()))
            }
            (0, 2) => Ok(bergman(0, 1)),
            _ => {
                if let Some(d) = self.memo.read().get(&(g, n)) {
                    return Ok(d.clone());
                }
                let d = if self.curve.is_ramified() {
                    self.recurse(g, n)?
                } else {
                    MultiRat::zero()
                };
                self.memo.write().insert((g, n), d.clone());
                Ok(d)
            }
        }
    }

    fn recurse(&self, g: u32, n: usize) -> Result<MultiRat> {
        for g1 in 0..=g {
            for k in 0..n {
                let m = 1 + k;
                if (g1, m) != (g, n) && 2 * g1 as i64 + m as i64 - 2 > 0 {
                    self.density(g1, m)?;
                }
            }
        }
        if g >= 1 {
            self.density(g - 1, n + 1)?;
        }
        let mut total = MultiRat::zero();
        for beta in self.curve.ramification_points() {
            let mut slack = self.margin;
            let r = loop {
                match self.residue_at(beta, g, n, slack) {
                    Err(Error::Truncation(_)) if slack < 4096 => slack *= 2,
                    other => break other?,
                }
            };
            total = total.add(&r);
        }
        Ok(total)
    }

    fn pole_at(&self, g: u32, n: usize, beta: &Scalar) -> Result<i64> {
        if (g, n) == (0, 2) {
            return Ok(0);
        }
        let d = self.density(g, n)?;
        Ok(d.pole_order(&Factor::Lin { var: 0, root: beta.clone() }) as i64)
    }

    fn residue_at(&self, beta: &Scalar, g: u32, n: usize, slack: i64) -> Result<MultiRat> {
        let c = &*self.curve;
        let mut pmax = 0;
        for g1 in 0..=g {
            for m in 1..=n {
                if (g1, m) != (g, n) && !(g1 == 0 && m == 1) {
                    pmax = pmax.max(self.pole_at(g1, m, beta)?);
                }
            }
        }
        let pdiag = match g {
            0 => 0,
            1 if n == 1 => 2,
            _ => 2 * self.pole_at(g - 1, n + 1, beta)?,
        };
        let order = (2 * pmax).max(pdiag) + 2 + slack;
        let s = c.local_involution(beta, order)?;
        let tq = shifted_t(beta);
        let sq = s
            .map(|x| MultiRat::constant(x.clone()))
            .add(&Laurent::constant(MultiRat::constant(beta.clone())));
        let ds = s.deriv().map(|x| MultiRat::constant(x.clone()));

        let mut bracket: Series = Laurent::zero();
        if g >= 1 {
            let w = self.density(g - 1, n + 1)?.rename(&|v| match v {
                0 => QV,
                1 => SV,
                v => v - 1,
            })?;
            bracket = bracket.add(&expand(&w, &[(QV, tq.clone()), (SV, sq.clone())], 1)?);
        }
        let js = n - 1;
        let mut side_q: HashMap<(u32, u32), Series> = HashMap::new();
        let mut side_s: HashMap<(u32, u32), Series> = HashMap::new();
        let mut piece = |g1: u32, mask: u32, at_q: bool| -> Result<Series> {
            let memo = if at_q { &mut side_q } else { &mut side_s };
            if let Some(e) = memo.get(&(g1, mask)) {
                return Ok(e.clone());
            }
            let slots: Vec<Var> = (0..js as u32).filter(|i| mask >> i & 1 == 1).map(|i| i as Var + 1).collect();
            let dens = self.density(g1, 1 + slots.len())?;
            let head = if at_q { QV } else { SV };
            let w = dens.rename(&|v| if v == 0 { head } else { slots[v as usize - 1] })?;
            let sub = if at_q { tq.clone() } else { sq.clone() };
            let e = expand(&w, &[(head, sub)], 1 + pmax)?;
            memo.insert((g1, mask), e.clone());
            Ok(e)
        };
        let full = (1u32 << js) - 1;
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0..=full {
                let rest = full & !mask;
                if (g1 == 0 && mask == 0) || (g2 == 0 && rest == 0) {
                    continue;
                }
                let a = piece(g1, mask, true)?;
                let b = piece(g2, rest, false)?;
                bracket = bracket.add(&a.mul(&b));
            }
        }
        if bracket.is_zero() && bracket.is_exact() {
            return Ok(MultiRat::zero());
        }
        let f = bracket.mul(&ds);

        let yo = c.y.offset_series(beta, order + 1)?;
        let ydiff = yo.sub(&yo.compose(&s)?);
        if ydiff.coeff(1)?.is_zero() {
            return Err(Error::Domain(format!(
                "y does not separate the sheets at the branch point {beta}"
            )));
        }
        let dxs = expand(&c.dx(), &[(Z, shifted_t(beta))], order + 1)?
            .with_prec(order + 1)
            .try_map(|x| x.as_constant().ok_or(Error::DivisionByZero))?;
        let dinv = ydiff.mul(&dxs).inv()?.map(|x| MultiRat::constant(x.clone()));
        let z = MultiRat::var(0);
        let half = qf(1, 2);
        let kn = z
            .sub(&MultiRat::var(QV))
            .inv()?
            .sub(&z.sub(&MultiRat::var(SV)).inv()?)
            .scale(&half);
        let need = -1 - f.val();
        let num = expand(&kn, &[(QV, tq), (SV, sq)], need + 3)?;
        let kernel = num.mul(&dinv);

        let mut acc = MultiRat::zero();
        for i in kernel.val()..=need {
            let ki = kernel.coeff(i)?;
            if ki.is_zero() {
                continue;
            }
            let fi = f.coeff(-1 - i)?;
            if fi.is_zero() {
                continue;
            }
            acc = acc.add(&ki.mul(&fi));
        }
        Ok(acc)
    }

    /// Iterated primitive in every variable with zero integration constants.
    pub fn primitive(&self, g: u32, n: usize) -> Result<MultiRat> {
        if 2 * g as i64 + n as i64 - 2 <= 0 {
            return Err(Error::Domain("primitives need 2g+n-2 > 0".into()));
        }
        let mut p = self.density(g, n)?;
        for v in 0..n {
            p = antiderivative(&p, v as Var)?;
        }
        Ok(p)
    }

    /// `F^(g)` for `g >= 2` through the dilaton residue formula.
    pub fn free_energy(&self, g: u32) -> Result<Scalar> {
        if g < 2 {
            return Err(Error::Unsupported("free energies of genus 0 and 1".into()));
        }
        let c = &*self.curve;
        let w = self.density(g, 1)?;
        let mut total = Scalar::zero();
        for beta in c.ramification_points() {
            if !c.y.log.is_zero() && *beta != q(1) {
                return Err(Error::Unsupported("log(y) at a branch point other than 1".into()));
            }
            let local = expand(&w, &[(Z, shifted_t(beta))], 0)?;
            let pole = -local.val();
            if pole < 1 {
                continue;
            }
            let prec = pole + 1;
            let ybeta = c.y.rat.eval_var(Z, beta)?.as_constant().ok_or(Error::DivisionByZero)?;
            let y = c.y.offset_series(beta, prec)?.add(&Laurent::constant(ybeta));
            let dxs = expand(&c.dx(), &[(Z, shifted_t(beta))], prec)?
                .with_prec(prec)
                .try_map(|x| x.as_constant().ok_or(Error::DivisionByZero))?;
            let ydx = y.mul(&dxs);
            let mut cs = vec![Scalar::zero()];
            for e in 0..prec {
                cs.push(ydx.coeff(e)? / q(e + 1));
            }
            let phi = Laurent::new(0, cs, prec + 1);
            let wl = local.try_map(|x| x.as_constant().ok_or(Error::DivisionByZero))?;
            total += phi.mul(&wl).residue()?;
        }
        Ok(total / q(2 - 2 * g as i64))
    }

    /// `sum_g hbar^(2g+n-2) W_{g,n}` through `hbar^order`.
    pub fn genus_sum_w(&self, n: usize, order: i64) -> Result<Series> {
        self.genus_sum(n, order, false)
    }

    /// As `genus_sum_w`, leaving out `W_{0,1}`.
    pub fn genus_sum_w_stable(&self, n: usize, order: i64) -> Result<Series> {
        self.genus_sum(n, order, true)
    }

    fn genus_sum(&self, n: usize, order: i64, skip_01: bool) -> Result<Series> {
        if order < n as i64 - 2 {
            return Err(Error::Domain("order below the leading hbar power".into()));
        }
        let mut terms = Vec::new();
        let mut g = 0u32;
        loop {
            let e = 2 * g as i64 + n as i64 - 2;
            if e > order {
                break;
            }
            let w = match (g, n) {
                (0, 1) if skip_01 => MultiRat::zero(),
                (0, 1) => {
                    if !self.curve.y.is_rational() {
                        return Err(Error::Unsupported("W_{0,1} = y is not rational".into()));
                    }
                    self.curve.y.rat.clone()
                }
                _ => self.omega(g, n)?.w(&self.curve)?,
            };
            terms.push((e, w));
            g += 1;
        }
        let lo = n as i64 - 2;
        let mut cs = vec![MultiRat::zero(); (order + 1 - lo) as usize];
        for (e, w) in terms {
            cs[(e - lo) as usize] = w;
        }
        Ok(Laurent::new(lo, cs, order + 1))
    }
}

/// `rat + rat_log*log(z) + log2*log(z)^2` in the variable `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPrimitive {
    pub rat: MultiRat,
    pub rat_log: MultiRat,
    pub log2: Scalar,
}

impl LogPrimitive {
    /// The derivative `rat' + rat_log'*log + (rat_log + 2*log2)/z`, split as
    /// (rational part, coefficient of log z).
    pub fn deriv(&self) -> (MultiRat, MultiRat) {
        let zinv = MultiRat::var(Z).inv().unwrap();
        let rat = self
            .rat
            .deriv(Z)
            .add(&self.rat_log.mul(&zinv))
            .add(&zinv.scale(&(q(2) * &self.log2)));
        (rat, self.rat_log.deriv(Z))
    }
}

/// Primitives of the dual curve's unstable correlators: `Phi1 = int x dy`, and
/// `Phi2 = log(z1 - z2)` (fixed by the Bergman kernel).
#[derive(Clone, Debug, PartialEq)]
pub struct DualPrimitives {
    pub phi1: LogPrimitive,
    pub phi2: &'static str,
}

pub fn curve_specific_primitive_01_02(c: &SpectralCurve) -> Result<DualPrimitives> {
    let dy = c.dy();
    let phi1 = log_antiderivative(&c.x.rat.mul(&dy), &dy.scale(&c.x.log))?;
    Ok(DualPrimitives { phi1, phi2: "log(z1-z2)" })
}

/// Primitive of `a(z) + b(z) log(z)` for Laurent polynomials `a`, `b`.
fn log_antiderivative(a: &MultiRat, b: &MultiRat) -> Result<LogPrimitive> {
    let outside = || Error::Unsupported("primitive outside the rational + log grammar".into());
    let laurent_terms = |f: &MultiRat| -> Result<Vec<(i64, Scalar)>> {
        if f.is_zero() {
            return Ok(vec![]);
        }
        let pole = f.pole_order(&crate::algebra::Factor::Lin { var: Z, root: q(0) }) as i64;
        if f.den().len() > usize::from(pole > 0) {
            return Err(outside());
        }
        let shifted = f.mul(&MultiRat::var(Z).pow(pole as i32)?);
        let coeffs = shifted.poly_coeffs_in(Z).ok_or_else(outside)?;
        let mut out = Vec::new();
        for (k, cf) in coeffs.iter().enumerate() {
            let cf = cf.as_constant().ok_or_else(outside)?;
            if !cf.is_zero() {
                out.push((k as i64 - pole, cf));
            }
        }
        Ok(out)
    };
    let z = MultiRat::var(Z);
    let zpow = |e: i64| z.pow(e as i32).unwrap();
    let mut rat = MultiRat::zero();
    let mut rat_log = MultiRat::zero();
    let mut log2 = Scalar::zero();
    for (e, cf) in laurent_terms(a)? {
        if e == -1 {
            rat_log = rat_log.add(&MultiRat::constant(cf));
        } else {
            rat = rat.add(&zpow(e + 1).scale(&(cf / q(e + 1))));
        }
    }
    for (e, cf) in laurent_terms(b)? {
        if e == -1 {
            log2 += cf / q(2);
        } else {
            let k = q(e + 1);
            rat_log = rat_log.add(&zpow(e + 1).scale(&(cf.clone() / &k)));
            rat = rat.sub(&zpow(e + 1).scale(&(cf / (&k * &k))));
        }
    }
    Ok(LogPrimitive { rat, rat_log, log2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{airy, lambert, lambert_bad};

    fn z(i: Var) -> MultiRat {
        MultiRat::var(i)
    }

    #[test]
    fn airy_low_correlators() {
        let tr = TrEngine::new(airy());
        let w11 = tr.density(1, 1).unwrap();
        let expect = z(0).pow(-4).unwrap().scale(&qf(-1, 8));
        assert_eq!(w11, expect);
        let w03 = tr.density(0, 3).unwrap();
        let expect = z(0).mul(&z(1)).mul(&z(2)).pow(-2).unwrap().neg();
        assert_eq!(w03, expect);
    }

    #[test]
    fn lambert_w11() {
        let c = lambert();
        let tr = TrEngine::new(c.clone());
        let w = tr.omega(1, 1).unwrap().w(&c).unwrap();
        let zz = z(0);
        let expect = zz
            .mul(&zz)
            .mul(&zz.sub(&MultiRat::constant(q(4))))
            .div(&zz.sub(&MultiRat::one()).pow(5).unwrap())
            .unwrap()
            .scale(&qf(1, 24));
        assert_eq!(w, expect);
    }

    #[test]
    fn unramified_gives_zero() {
        let tr = TrEngine::new(lambert().dual().unwrap());
        assert!(tr.density(1, 1).unwrap().is_zero());
        assert!(tr.density(0, 3).unwrap().is_zero());
        assert!(tr.free_energy(2).unwrap().is_zero());
    }

    #[test]
    fn symmetric_and_residue_free() {
        let tr = TrEngine::new(lambert());
        let w = tr.density(1, 2).unwrap();
        assert_eq!(w.rename(&|v| 1 - v).unwrap(), w);
        let p = tr.primitive(1, 2).unwrap();
        assert_eq!(p.deriv(0).deriv(1), w);
    }

    #[test]
    fn margin_doubling_is_stable() {
        let a = TrEngine::new(lambert());
        let b = TrEngine::new(lambert()).with_margin(16);
        assert_eq!(a.density(0, 4).unwrap(), b.density(0, 4).unwrap());
        assert_eq!(a.density(2, 1).unwrap(), b.density(2, 1).unwrap());
    }

    #[test]
    fn free_energy_contract() {
        let tr = TrEngine::new(airy());
        assert!(matches!(tr.free_energy(1), Err(Error::Unsupported(_))));
        assert!(tr.free_energy(2).unwrap().is_zero());
    }

    #[test]
    fn dual_primitives() {
        let p = curve_specific_primitive_01_02(&airy()).unwrap();
        assert_eq!(p.phi1.rat, z(0).pow(3).unwrap().scale(&qf(1, 6)));
        let p = curve_specific_primitive_01_02(&lambert()).unwrap();
        assert_eq!(p.phi1.rat, z(0).neg());
        assert!(p.phi1.rat_log.is_zero());
        assert_eq!(p.phi1.log2, qf(1, 2));
        let c = lambert_bad();
        let p = curve_specific_primitive_01_02(&c).unwrap();
        let (r, l) = p.phi1.deriv();
        assert_eq!(r, c.x.rat.mul(&c.dy()));
        assert_eq!(l, c.dy().scale(&c.x.log));
    }

    #[test]
    fn genus_sum_shape() {
        let tr = TrEngine::new(airy());
        let s = tr.genus_sum_w(1, 1).unwrap();
        assert_eq!(s.val(), -1);
        assert_eq!(s.prec(), 2);
        assert_eq!(s.coeff(-1).unwrap(), z(0));
    }
}
