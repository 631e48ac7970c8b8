//! Genus-zero spectral curves `x(z)`, `y(z)` with at most one `c*log(z)` term each.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use parking_lot::RwLock;

use crate::algebra::local::{expand, shifted_t};
use crate::algebra::{Laurent, MultiRat, Scalar, q};
use crate::error::{Error, Result};

/// Variable of a single-variable curve function.
pub const Z: u16 = 0;

/// `rat(z) + log_coeff * log(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveFn {
    pub rat: MultiRat,
    pub log: Scalar,
}

impl CurveFn {
    pub fn new(rat: MultiRat, log: Scalar) -> Self {
        CurveFn { rat, log }
    }

    pub fn rational(rat: MultiRat) -> Self {
        CurveFn { rat, log: Scalar::zero() }
    }

    pub fn is_rational(&self) -> bool {
        self.log.is_zero()
    }

    /// `d/dz`, always rational.
    pub fn deriv(&self) -> MultiRat {
        let d = self.rat.deriv(Z);
        if self.log.is_zero() {
            d
        } else {
            d.add(&MultiRat::var(Z).inv().unwrap().scale(&self.log))
        }
    }

    /// `f(beta + tau) - f(beta)` as a series in `tau`, known through `O(tau^prec)`.
    pub fn offset_series(&self, beta: &Scalar, prec: i64) -> Result<Laurent<Scalar>> {
        let r = expand(&self.rat, &[(Z, shifted_t(beta))], prec)?.with_prec(prec);
        let mut s = r.try_map(|c| {
            c.as_constant()
                .ok_or_else(|| Error::Domain("curve function with parameters".into()))
        })?;
        if s.val() < 0 {
            return Err(Error::Domain(format!("curve function has a pole at {beta}")));
        }
        s = s.sub(&Laurent::constant(s.coeff(0)?));
        if !self.log.is_zero() {
            if beta.is_zero() {
                return Err(Error::Domain("log(z) expanded at z = 0".into()));
            }
            s = s.add(&log1p_over(beta, prec).scale(&self.log));
        }
        Ok(s)
    }
}

/// `log(1 + tau/beta)` through `O(tau^prec)`.
pub fn log1p_over(beta: &Scalar, prec: i64) -> Laurent<Scalar> {
    let mut cs = vec![Scalar::zero()];
    let binv = q(1) / beta;
    let mut p = binv.clone();
    for k in 1..prec.max(1) {
        let sign = if k % 2 == 1 { q(1) } else { q(-1) };
        cs.push(sign * &p / q(k));
        p *= &binv;
    }
    Laurent::new(0, cs, prec.max(1))
}

#[derive(Debug)]
pub struct SpectralCurve {
    pub name: String,
    pub x: CurveFn,
    pub y: CurveFn,
    ramification: Vec<Scalar>,
    exact_involutions: BTreeMap<Scalar, MultiRat>,
    involutions: RwLock<BTreeMap<Scalar, Arc<Laurent<Scalar>>>>,
}

impl Clone for SpectralCurve {
    fn clone(&self) -> Self {
        SpectralCurve {
            name: self.name.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
            ramification: self.ramification.clone(),
            exact_involutions: self.exact_involutions.clone(),
            involutions: RwLock::new(self.involutions.read().clone()),
        }
    }
}

impl SpectralCurve {
    /// Builds and validates a curve. Without a declaration the branch points are the
    /// rational zeros of `dx/dz`.
    pub fn new(name: &str, x: CurveFn, y: CurveFn, declared: Option<Vec<Scalar>>) -> Result<Self> {
        for f in [&x, &y] {
            if f.rat.vars().iter().any(|&v| v != Z) {
                return Err(Error::Domain("curve functions must depend on z only".into()));
            }
        }
        let ramification = match declared {
            Some(pts) => {
                let dx = x.deriv();
                for b in &pts {
                    if !dx.eval_var(Z, b)?.is_zero() {
                        return Err(Error::Domain(format!("dx does not vanish at declared point {b}")));
                    }
                }
                let mut pts = pts;
                pts.sort();
                pts.dedup();
                pts
            }
            None => branch_points(&x)?,
        };
        let d2 = x.deriv().deriv(Z);
        for b in &ramification {
            if d2.eval_var(Z, b)?.is_zero() {
                return Err(Error::NonSimpleRamification(b.to_string()));
            }
        }
        Ok(SpectralCurve {
            name: name.to_string(),
            x,
            y,
            ramification,
            exact_involutions: BTreeMap::new(),
            involutions: RwLock::new(BTreeMap::new()),
        })
    }

    /// Registers a global involution `sigma(z)` around `beta`.
    pub fn with_involution(mut self, beta: Scalar, sigma: MultiRat) -> Result<Self> {
        if !self.ramification.contains(&beta) {
            return Err(Error::Domain(format!("{beta} is not a branch point")));
        }
        let comp = compose_rational(&self.x.rat, &sigma)?;
        if !comp.sub(&self.x.rat).is_zero() || !self.x.is_rational() {
            return Err(Error::Domain("registered involution does not preserve x".into()));
        }
        self.exact_involutions.insert(beta, sigma);
        Ok(self)
    }

    pub fn ramification_points(&self) -> &[Scalar] {
        &self.ramification
    }

    pub fn is_ramified(&self) -> bool {
        !self.ramification.is_empty()
    }

    pub fn dx(&self) -> MultiRat {
        self.x.deriv()
    }

    pub fn dy(&self) -> MultiRat {
        self.y.deriv()
    }

    /// The curve with `x` and `y` exchanged.
    pub fn dual(&self) -> Result<SpectralCurve> {
        SpectralCurve::new(&format!("{}-dual", self.name), self.y.clone(), self.x.clone(), None)
    }

    /// `sigma(beta + t) - beta`, known through `O(t^(order+1))`.
    pub fn local_involution(&self, beta: &Scalar, order: i64) -> Result<Laurent<Scalar>> {
        if !self.ramification.contains(beta) {
            return Err(Error::Domain(format!("{beta} is not a branch point")));
        }
        let prec = order + 1;
        if let Some(s) = self.involutions.read().get(beta) {
            if s.prec() >= prec {
                return Ok(s.with_prec(prec));
            }
        }
        let s = match self.exact_involutions.get(beta) {
            Some(sigma) => expand(sigma, &[(Z, shifted_t(beta))], prec)?
                .with_prec(prec)
                .try_map(|c| c.as_constant().ok_or(Error::DivisionByZero))?
                .sub(&Laurent::constant(beta.clone())),
            None => solve_involution(&self.x, beta, prec)?,
        };
        self.involutions.write().insert(beta.clone(), Arc::new(s.clone()));
        Ok(s)
    }
}

fn compose_rational(f: &MultiRat, g: &MultiRat) -> Result<MultiRat> {
    let (n, d) = f
        .to_upolys(Z)
        .ok_or_else(|| Error::Domain("not univariate".into()))?;
    let horner = |p: &crate::algebra::UPoly| {
        p.coeffs()
            .iter()
            .rev()
            .fold(MultiRat::zero(), |acc, c| acc.mul(g).add(&MultiRat::constant(c.clone())))
    };
    horner(&n).div(&horner(&d))
}

fn branch_points(x: &CurveFn) -> Result<Vec<Scalar>> {
    let dx = x.deriv();
    let (num, _) = dx
        .to_upolys(Z)
        .ok_or_else(|| Error::Domain("x must be univariate".into()))?;
    if num.is_zero() {
        return Err(Error::Domain("x is constant".into()));
    }
    let roots = num.rational_roots();
    let rational_degree: usize = roots.iter().map(|r| num.root_multiplicity(r) as usize).sum();
    if rational_degree < num.degree().unwrap_or(0) {
        return Err(Error::Unsupported(
            "dx has irrational zeros; declare the branch points explicitly".into(),
        ));
    }
    for r in &roots {
        if num.root_multiplicity(r) > 1 {
            return Err(Error::NonSimpleRamification(r.to_string()));
        }
    }
    Ok(roots)
}

/// Solves `x(beta + s) = x(beta + t)` with `s = -t + ...`: writing the offset of `x` as
/// `c2 * phi(t)^2` with `phi = t*sqrt(...)`, `s = phi^{-1}(-phi(t))`.
fn solve_involution(x: &CurveFn, beta: &Scalar, prec: i64) -> Result<Laurent<Scalar>> {
    let g = x.offset_series(beta, prec + 2)?;
    let c2 = g.coeff(2)?;
    if c2.is_zero() {
        return Err(Error::NonSimpleRamification(beta.to_string()));
    }
    let u = g.shift(-2).scale(&(q(1) / &c2)).with_prec(prec);
    let log_r = u.log()?.scale(&crate::algebra::qf(1, 2));
    let phi = log_r.exp()?.shift(1);
    // Lagrange inversion: [w^k] phi^{-1} = [t^(k-1)] r^(-k) / k.
    let mut inv = vec![q(1)];
    for k in 2..=prec {
        let rk = log_r.scale(&q(-k)).with_prec(k).exp()?;
        inv.push(rk.coeff(k - 1)? / q(k));
    }
    let psi = Laurent::new(1, inv, prec + 1);
    let s = psi.compose(&phi.neg())?.with_prec(prec);
    let check = g.with_prec(prec + 1).compose(&s)?.sub(&g);
    for e in 0..=prec {
        if let Ok(c) = check.coeff(e) {
            if !c.is_zero() {
                return Err(Error::NonSimpleRamification(beta.to_string()));
            }
        }
    }
    Ok(s)
}

pub fn airy() -> SpectralCurve {
    let z = MultiRat::var(Z);
    let x = CurveFn::rational(z.mul(&z).scale(&crate::algebra::qf(1, 2)));
    let y = CurveFn::rational(z.clone());
    SpectralCurve::new("airy", x, y, None)
        .and_then(|c| c.with_involution(Scalar::zero(), z.neg()))
        .expect("airy curve")
}

pub fn lambert() -> SpectralCurve {
    let z = MultiRat::var(Z);
    let x = CurveFn::new(z.neg(), Scalar::one());
    let y = CurveFn::new(MultiRat::zero(), Scalar::one());
    SpectralCurve::new("lambert", x, y, None).expect("lambert curve")
}

pub fn lambert_bad() -> SpectralCurve {
    let z = MultiRat::var(Z);
    let x = CurveFn::new(z.neg(), Scalar::one());
    let y = CurveFn::rational(z);
    SpectralCurve::new("lambert-bad", x, y, None).expect("lambert-bad curve")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::qf;

    #[test]
    fn branch_points_of_builtins() {
        assert_eq!(airy().ramification_points(), &[q(0)]);
        assert_eq!(lambert().ramification_points(), &[q(1)]);
        assert!(airy().dual().unwrap().ramification_points().is_empty());
        assert!(lambert().dual().unwrap().ramification_points().is_empty());
    }

    #[test]
    fn lambert_involution() {
        let c = lambert();
        let s = c.local_involution(&q(1), 6).unwrap();
        assert_eq!(s.coeff(1).unwrap(), q(-1));
        assert_eq!(s.coeff(2).unwrap(), qf(2, 3));
        let g = c.x.offset_series(&q(1), 8).unwrap();
        let diff = g.compose(&s).unwrap().sub(&g);
        for e in 0..diff.prec() {
            assert!(diff.coeff(e).unwrap().is_zero());
        }
        // sigma(sigma(t)) = t
        let ss = s.compose(&s).unwrap();
        for e in 0..ss.prec() {
            let expect = if e == 1 { q(1) } else { q(0) };
            assert_eq!(ss.coeff(e).unwrap(), expect);
        }
    }

    #[test]
    fn airy_exact_involution_matches_solver() {
        let c = airy();
        let exact = c.local_involution(&q(0), 8).unwrap();
        let solved = solve_involution(&c.x, &q(0), 9).unwrap();
        assert_eq!(exact, solved);
    }

    #[test]
    fn degenerate_curves_rejected() {
        let z = MultiRat::var(Z);
        let x = CurveFn::rational(z.mul(&z));
        let y = CurveFn::rational(z.mul(&z).mul(&z));
        let c = SpectralCurve::new("c", x, y, None).unwrap();
        assert!(matches!(c.dual(), Err(Error::NonSimpleRamification(_))));
        let x3 = CurveFn::rational(z.mul(&z).mul(&z));
        assert!(SpectralCurve::new("d", x3, CurveFn::rational(z.clone()), None).is_err());
        let irr = CurveFn::rational(z.mul(&z).mul(&z).sub(&z.scale(&q(3)).scale(&q(2))));
        assert!(SpectralCurve::new("e", irr, CurveFn::rational(z), None).is_err());
    }
}
