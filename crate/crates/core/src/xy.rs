//! The x-y symplectic transformation as a graph sum over dual-curve weights.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use parking_lot::RwLock;
use rayon::prelude::*;

use crate::algebra::scalar::qfact as factorial;
use crate::algebra::{q, Laurent, MultiRat, Scalar, Var};
use crate::curve::{CurveFn, SpectralCurve, Z};
use crate::error::{Error, Result};
use crate::tr::{bergman, TrEngine};

/// Series in hbar with coefficients rational in the `z_i` and polynomial in the `u_i`.
pub type HSeries = Laurent<MultiRat>;

pub fn zvar(i: usize) -> Var {
    i as Var
}

pub fn uvar(i: usize) -> Var {
    64 + i as Var
}

/// A multiset of bullets, each a sorted multiset of vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BipartiteGraph {
    pub n: usize,
    pub bullets: Vec<Vec<usize>>,
    pub aut_order: u64,
}

impl BipartiteGraph {
    pub fn valence(&self, i: usize) -> usize {
        self.bullets.iter().flatten().filter(|&&v| v == i).count()
    }
}

pub fn aut_order(bullets: &[Vec<usize>]) -> u64 {
    let fact = |k: usize| (1..=k as u64).product::<u64>();
    let mut types: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    let mut out = 1u64;
    for b in bullets {
        *types.entry(b).or_default() += 1;
        let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in b {
            *mult.entry(v).or_default() += 1;
        }
        out *= mult.values().map(|&k| fact(k)).product::<u64>();
    }
    out * types.values().map(|&k| fact(k)).product::<u64>()
}

fn connected(n: usize, edges: impl Iterator<Item = Vec<usize>>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for e in edges {
        for w in e.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

/// Sorted multisets of size `k` over `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Connected graphs with at most `max_bullets` bullets and total valence at most
/// `max_total_valence`.
pub fn enumerate_graphs(n: usize, max_bullets: usize, max_total_valence: usize) -> Vec<BipartiteGraph> {
    enumerate_weighted(n, max_bullets, max_total_valence, &|_| 0, usize::MAX)
}

/// As [`enumerate_graphs`], also bounding the sum of `cost` over bullets.
pub fn enumerate_weighted(
    n: usize,
    max_bullets: usize,
    max_total_valence: usize,
    cost: &dyn Fn(&[usize]) -> usize,
    max_cost: usize,
) -> Vec<BipartiteGraph> {
    let mut types = Vec::new();
    for k in 2..=max_total_valence {
        types.extend(multisets(n, k));
    }
    let mut out = Vec::new();
    let mut cur: Vec<Vec<usize>> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        types: &[Vec<usize>],
        start: usize,
        cur: &mut Vec<Vec<usize>>,
        valence: usize,
        spent: usize,
        limits: (usize, usize, usize),
        cost: &dyn Fn(&[usize]) -> usize,
        n: usize,
        out: &mut Vec<BipartiteGraph>,
    ) {
        if connected(n, cur.iter().cloned()) {
            out.push(BipartiteGraph { n, bullets: cur.clone(), aut_order: aut_order(cur) });
        }
        if cur.len() == limits.0 {
            return;
        }
        for (i, t) in types.iter().enumerate().skip(start) {
            let c = cost(t);
            if valence + t.len() > limits.1 || spent.saturating_add(c) > limits.2 {
                continue;
            }
            cur.push(t.clone());
            rec(types, i, cur, valence + t.len(), spent + c, limits, cost, n, out);
            cur.pop();
        }
    }
    rec(
        &types,
        0,
        &mut cur,
        0,
        0,
        (max_bullets, max_total_valence, max_cost),
        cost,
        n,
        &mut out,
    );
    out
}

/// Connected simple graphs on the labelled vertices `0..n`.
pub fn connected_labeled_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, p)| *p)
                .collect::<Vec<_>>()
        })
        .filter(|es| connected(n, es.iter().map(|&(a, b)| vec![a, b])))
        .collect()
}

/// `Phi-hat_1 = rational + u_log * u * log(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiHat1 {
    pub rational: HSeries,
    pub u_log: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairRoute {
    /// `exp` of the signed sum of shifted primitives.
    Series,
    /// The closed four-factor ratio of shifted coordinates.
    CrossRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    /// Sum over all bipartite graphs with the operator `O`.
    General,
    /// Connected labelled graphs with `exp(Phi2) - 1` edges and the operator `O^2`.
    Exponentiated,
}

fn rename_series(s: &HSeries, f: &dyn Fn(Var) -> Var) -> Result<HSeries> {
    s.try_map(|c| c.rename(f))
}

fn slot_map(slots: &[usize]) -> impl Fn(Var) -> Var + '_ {
    move |v| {
        if v >= 64 {
            uvar(slots[(v - 64) as usize])
        } else {
            zvar(slots[v as usize])
        }
    }
}

/// Drops every coefficient beyond `hbar^top`.
fn trunc(s: &HSeries, top: i64) -> HSeries {
    if s.prec() > top + 1 {
        s.with_prec(top + 1)
    } else {
        s.clone()
    }
}

pub struct XyTransform {
    curve: Arc<SpectralCurve>,
    dual: TrEngine,
    weights: RwLock<HashMap<(Vec<usize>, i64), HSeries>>,
}

impl XyTransform {
    pub fn new(curve: SpectralCurve) -> Result<Self> {
        let dual = curve.dual()?;
        Ok(XyTransform {
            curve: Arc::new(curve),
            dual: TrEngine::new(dual),
            weights: RwLock::new(HashMap::new()),
        })
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.curve
    }

    pub fn dual_engine(&self) -> &TrEngine {
        &self.dual
    }

    fn dy(&self, v: Var) -> MultiRat {
        self.curve.dy().rename(&|_| v).unwrap()
    }

    fn dxv(&self, v: Var) -> MultiRat {
        self.curve.dx().rename(&|_| v).unwrap()
    }

    /// `d/dy` in the chart `z_v`.
    fn d_y(&self, f: &MultiRat, v: Var) -> Result<MultiRat> {
        f.deriv(v).div(&self.dy(v))
    }

    /// `d/dx` in the chart `z_v`.
    fn d_x(&self, f: &MultiRat, v: Var) -> Result<MultiRat> {
        f.deriv(v).div(&self.dxv(v))
    }

    /// `W^dual_{g,k}` per `dy` in `z_0..z_{k-1}`.
    fn dual_w(&self, g: u32, k: usize) -> Result<MultiRat> {
        if (g, k) == (0, 2) {
            let mut b = bergman(0, 1);
            for i in 0..2 {
                b = b.div(&self.dy(i))?;
            }
            return Ok(b);
        }
        self.dual.omega(g, k)?.w(self.dual.curve())
    }

    /// `prod_i 2 sum_{a odd} h_i^a / a! D_i^{a-1}` applied to `f`, with `h_i = hbar u_i / 2`,
    /// through `hbar^top`.
    fn odd_shift(&self, f: &MultiRat, slots: &[(Var, Var)], lead: i64, top: i64) -> Result<HSeries> {
        let mut terms: Vec<(i64, MultiRat)> = vec![(lead, f.clone())];
        for (idx, &(z, u)) in slots.iter().enumerate() {
            let remaining = (slots.len() - idx - 1) as i64;
            let mut next = Vec::new();
            for (e, g) in terms {
                let mut d = g;
                let mut a = 1i64;
                while e + a + remaining <= top {
                    let coef = q(2) / (factorial(a as u64) * pow2(a));
                    let um = MultiRat::var(u).pow(a as i32)?;
                    next.push((e + a, d.mul(&um).scale(&coef)));
                    d = self.d_y(&self.d_y(&d, z)?, z)?;
                    a += 2;
                }
            }
            terms = next;
        }
        Ok(collect(terms, top))
    }

    /// `Phi-hat_1(y_i; hbar, u_i)` through `hbar^top`.
    pub fn phi_hat_1(&self, i: usize, top: i64) -> Result<PhiHat1> {
        let z = zvar(i);
        let u = uvar(i);
        let x = &self.curve.x;
        // Phi^dual_{0,1} contributes hbar^{-1} * 2 sum_{k odd} h^k/k! D^{k-1} x.
        let mut terms = vec![(0i64, x.rat.rename(&|_| z)?.mul(&MultiRat::var(u)))];
        let dx = CurveFn::new(x.rat.rename(&|_| z)?, x.log.clone()).deriv_in(z);
        let mut d = self.d_y(&dx.div(&self.dy(z))?, z)?;
        let mut k = 3i64;
        while k - 1 <= top {
            let coef = q(2) / (factorial(k as u64) * pow2(k));
            terms.push((k - 1, d.mul(&MultiRat::var(u).pow(k as i32)?).scale(&coef)));
            d = self.d_y(&self.d_y(&d, z)?, z)?;
            k += 2;
        }
        let mut g = 1u32;
        while 2 * g as i64 <= top {
            let w = self.dual_w(g, 1)?;
            if !w.is_zero() {
                let w = w.rename(&|_| z)?;
                let s = self.odd_shift(&w, &[(z, u)], 2 * g as i64 - 1, top)?;
                terms.extend(s.terms().map(|(e, c)| (e, c.clone())));
            }
            g += 1;
        }
        Ok(PhiHat1 { rational: collect(terms, top), u_log: x.log.clone() })
    }

    /// `Phi-hat_1 - x u`, all of whose terms have positive hbar order.
    pub fn phi_hat_1_reduced(&self, i: usize, top: i64) -> Result<HSeries> {
        let p = self.phi_hat_1(i, top)?;
        let xu = self.curve.x.rat.rename(&|_| zvar(i))?.mul(&MultiRat::var(uvar(i)));
        Ok(p.rational.sub(&Laurent::constant(xu)).with_prec(top + 1))
    }

    /// `Phi-hat_k` on a multiset of vertices, through `hbar^top`.
    pub fn phi_hat(&self, slots: &[usize], top: i64) -> Result<HSeries> {
        let mut sorted = slots.to_vec();
        sorted.sort_unstable();
        if sorted.len() == 1 {
            return self.phi_hat_1_reduced(sorted[0], top);
        }
        let key: Vec<usize> = {
            let mut seen: Vec<usize> = Vec::new();
            sorted
                .iter()
                .map(|v| match seen.iter().position(|w| w == v) {
                    Some(p) => p,
                    None => {
                        seen.push(*v);
                        seen.len() - 1
                    }
                })
                .collect()
        };
        let canonical = self.phi_hat_canonical(&key, top)?;
        let mut distinct: Vec<usize> = sorted.clone();
        distinct.dedup();
        let map = slot_map(&distinct);
        rename_series(&canonical, &map)
    }

    fn phi_hat_canonical(&self, key: &[usize], top: i64) -> Result<HSeries> {
        if let Some(s) = self.weights.read().get(&(key.to_vec(), top)) {
            return Ok(s.clone());
        }
        let k = key.len();
        let arity_distinct = key.iter().max().unwrap() + 1;
        let s = if arity_distinct == k {
            self.phi_hat_distinct(k, top)?
        } else if k == 2 {
            self.phi_hat_diagonal(top)?
        } else {
            let full = self.phi_hat_distinct(k, top)?;
            let map = |v: Var| {
                if v >= 64 {
                    uvar(key[(v - 64) as usize])
                } else {
                    zvar(key[v as usize])
                }
            };
            rename_series(&full, &map).map_err(|_| {
                Error::Unsupported("diagonal weight of a bullet with more than two legs".into())
            })?
        };
        self.weights.write().insert((key.to_vec(), top), s.clone());
        Ok(s)
    }

    fn phi_hat_distinct(&self, k: usize, top: i64) -> Result<HSeries> {
        let slots: Vec<(Var, Var)> = (0..k).map(|i| (zvar(i), uvar(i))).collect();
        let mut out: HSeries = Laurent::big_o(top + 1);
        let mut g = 0u32;
        while 2 * g as i64 + 2 * k as i64 - 2 <= top {
            let lead = 2 * g as i64 + k as i64 - 2;
            let w = self.dual_w(g, k)?;
            if !w.is_zero() {
                out = out.add(&self.odd_shift(&w, &slots, lead, top)?);
            }
            g += 1;
        }
        Ok(out)
    }

    /// Taylor shift `f(z(y + h))` with `h = sign * hbar u / 2`, through `hbar^top`.
    fn taylor(&self, f: &MultiRat, z: Var, u: Var, sign: i64, top: i64) -> Result<HSeries> {
        let mut cs = Vec::new();
        let mut d = f.clone();
        let half_u = MultiRat::var(u).scale(&(q(sign) / q(2)));
        let mut hp = MultiRat::one();
        for k in 0..=top {
            cs.push(d.mul(&hp).scale(&(q(1) / factorial(k as u64))));
            d = self.d_y(&d, z)?;
            hp = hp.mul(&half_u);
        }
        Ok(Laurent::new(0, cs, top + 1))
    }

    /// The diagonal weight with the logarithm of the shifted `y` difference removed.
    fn phi_hat_diagonal(&self, top: i64) -> Result<HSeries> {
        let z = zvar(0);
        let u = uvar(0);
        let yp = self.dy(z);
        let mut out: HSeries = Laurent::big_o(top + 1);
        for sign in [1, -1] {
            let t = self.taylor(&yp, z, u, sign, top)?;
            let ratio = t.mul(&Laurent::constant(yp.inv()?));
            out = out.sub(&ratio.log()?);
        }
        // (z+ - z-)/(2h) = sum_{k odd} h^{k-1}/k! D^{k-1}(1/y')
        let mut cs = Vec::new();
        let mut d = yp.inv()?;
        for e in 0..=top {
            if e % 2 == 0 {
                let k = e + 1;
                let coef = q(1) / (factorial(k as u64) * pow2(e));
                cs.push(d.mul(&MultiRat::var(u).pow(e as i32)?).scale(&coef));
                d = self.d_y(&self.d_y(&d, z)?, z)?;
            } else {
                cs.push(MultiRat::zero());
            }
        }
        let quot = Laurent::new(0, cs, top + 1).mul(&Laurent::constant(yp.clone()));
        out = out.sub(&quot.log()?.scale(&q(2)));
        let mut g = 1u32;
        while 2 * g as i64 + 2 <= top {
            let w = self.dual_w(g, 2)?;
            if !w.is_zero() {
                let slots = [(zvar(0), uvar(0)), (zvar(1), uvar(1))];
                let s = self.odd_shift(&w, &slots, 2 * g as i64, top)?;
                let diag = |v: Var| if v >= 64 { uvar(0) } else { zvar(0) };
                out = out.add(&rename_series(&s, &diag)?);
            }
            g += 1;
        }
        Ok(out.with_prec(top + 1))
    }

    /// The regularized diagonal `W^dual_{0,2}` in `z`: a quarter of the `h^2` coefficient
    /// of the diagonal weight.
    pub fn regularized_diagonal(&self) -> Result<MultiRat> {
        let s = self.phi_hat_diagonal(2)?;
        let c = s.coeff(2)?;
        c.div(&MultiRat::var(uvar(0)).pow(2)?)?.rename(&|_| Z)
    }

    /// `exp(Phi-hat_2(y_i, y_j)) - 1` for `i != j`, through `hbar^top`.
    pub fn exp_phi_hat_pair(&self, i: usize, j: usize, top: i64, route: PairRoute) -> Result<HSeries> {
        if i == j {
            return Err(Error::Domain("pair weight needs distinct slots".into()));
        }
        let canonical = match route {
            PairRoute::Series => self.phi_hat_canonical(&[0, 1], top)?.exp()?,
            PairRoute::CrossRatio => {
                let zp: Vec<HSeries> = (0..2)
                    .map(|s| self.taylor(&MultiRat::var(zvar(s)), zvar(s), uvar(s), 1, top))
                    .collect::<Result<_>>()?;
                let zm: Vec<HSeries> = (0..2)
                    .map(|s| self.taylor(&MultiRat::var(zvar(s)), zvar(s), uvar(s), -1, top))
                    .collect::<Result<_>>()?;
                let d = MultiRat::var(zvar(0)).sub(&MultiRat::var(zvar(1))).inv()?;
                let norm = |a: &HSeries, b: &HSeries| a.sub(b).mul(&Laurent::constant(d.clone()));
                let num = norm(&zp[0], &zp[1]).mul(&norm(&zm[0], &zm[1]));
                let den = norm(&zm[0], &zp[1]).mul(&norm(&zp[0], &zm[1]));
                let mut r = num.mul(&den.inv()?);
                let g_top = self.higher_genus_pair(top)?;
                if !g_top.is_zero() {
                    r = r.mul(&g_top.exp()?);
                }
                r
            }
        };
        let e = canonical.sub(&Laurent::constant(MultiRat::one())).with_prec(top + 1);
        let map = |v: Var| match v {
            0 => zvar(i),
            1 => zvar(j),
            64 => uvar(i),
            65 => uvar(j),
            v => v,
        };
        rename_series(&e, &map)
    }

    fn higher_genus_pair(&self, top: i64) -> Result<HSeries> {
        let slots = [(zvar(0), uvar(0)), (zvar(1), uvar(1))];
        let mut out: HSeries = Laurent::big_o(top + 1);
        let mut g = 1u32;
        while 2 * g as i64 + 2 <= top {
            let w = self.dual_w(g, 2)?;
            if !w.is_zero() {
                out = out.add(&self.odd_shift(&w, &slots, 2 * g as i64, top)?);
            }
            g += 1;
        }
        Ok(out)
    }

    /// `exp(Phi-hat_1 - x u [+ Phi-hat_diag / 2])` at vertex `i`.
    fn vertex_exp(&self, i: usize, top: i64, with_diag: bool) -> Result<HSeries> {
        let mut arg = self.phi_hat_1_reduced(i, top)?;
        if with_diag {
            arg = arg.add(&self.phi_hat(&[i, i], top)?.scale(&crate::algebra::qf(1, 2)));
        }
        arg.with_prec(top + 1).exp()
    }

    /// `exp(Phi-hat_1 - x u + Phi-hat_diag / 2)` at vertex `i`, through `hbar^top`.
    pub fn vertex_factor(&self, i: usize, top: i64) -> Result<HSeries> {
        self.vertex_exp(i, top, true)
    }

    /// Applies the operator at vertex `i` to a payload known through `hbar^top`.
    pub fn o_operator_apply(&self, i: usize, payload: &HSeries, top: i64, with_diag: bool) -> Result<HSeries> {
        self.op(i, payload, top, with_diag, false)
    }

    fn op(&self, i: usize, payload: &HSeries, top: i64, with_diag: bool, drop_u0: bool) -> Result<HSeries> {
        let z = zvar(i);
        let u = uvar(i);
        let e = self.vertex_exp(i, top + (-payload.val()).max(0), with_diag)?;
        let full = trunc(&e.mul(payload), top);
        let lead = self.dy(z).div(&self.dxv(z))?.neg();
        let y = &self.curve.y;
        let mut cs: BTreeMap<i64, MultiRat> = BTreeMap::new();
        for (a, c) in full.terms() {
            let parts = c
                .poly_coeffs_in(u)
                .ok_or_else(|| Error::Domain("u in a denominator".into()))?;
            let mut acc = MultiRat::zero();
            for (p, cp) in parts.iter().enumerate() {
                if cp.is_zero() {
                    continue;
                }
                if p == 0 {
                    if drop_u0 {
                        continue;
                    }
                    if !y.is_rational() {
                        return Err(Error::Unsupported(
                            "u^0 payload term needs the primitive of a logarithmic y".into(),
                        ));
                    }
                    acc = acc.add(&y.rat.rename(&|_| z)?.mul(cp));
                    continue;
                }
                let mut t = lead.mul(cp);
                for _ in 0..p - 1 {
                    t = self.d_x(&t, z)?.neg();
                }
                acc = acc.add(&t);
            }
            if !acc.is_zero() {
                cs.insert(a - 1, acc);
            }
        }
        let prec = full.prec() - 1;
        Ok(from_map(cs, prec))
    }

    fn apply_all(&self, n: usize, payload: HSeries, top: i64, with_diag: bool) -> Result<HSeries> {
        self.apply_all_with(n, payload, top, with_diag, false)
    }

    fn apply_all_with(&self, n: usize, payload: HSeries, top: i64, with_diag: bool, drop_u0: bool) -> Result<HSeries> {
        let mut cur = payload;
        for i in 0..n {
            cur = self.op(i, &cur, top - i as i64, with_diag, drop_u0)?;
        }
        Ok(cur)
    }

    /// `W_n` of the curve through `hbar^order` by the functional relation.
    pub fn wn_via_xy(&self, n: usize, order: i64, path: Path) -> Result<HSeries> {
        if n == 0 {
            return Err(Error::Domain("n >= 1".into()));
        }
        let top = order + n as i64;
        let payload = match path {
            Path::General => self.general_payload(n, top)?,
            Path::Exponentiated => self.exponentiated_payload(n, top)?,
        };
        let with_diag = path == Path::Exponentiated;
        if n == 1 && !self.curve.y.is_rational() {
            // W_{0,1} = y is logarithmic here and is left out.
            return self.op(0, &payload, top, with_diag, true);
        }
        self.apply_all(n, payload, top, with_diag)
    }

    fn bullet_cost(&self, b: &[usize]) -> usize {
        if b.len() == 2 {
            2
        } else {
            2 * b.len() - 2
        }
    }

    pub fn general_graphs(&self, n: usize, top: i64) -> Vec<BipartiteGraph> {
        let budget = top.max(0) as usize;
        let max_arity = if self.dual.curve().is_ramified() { budget / 2 + 1 } else { 2 };
        let valence = (budget / 2) * max_arity.max(2);
        enumerate_weighted(n, budget / 2, valence.max(2), &|b| {
            if b.len() > max_arity {
                usize::MAX / 4
            } else {
                self.bullet_cost(b)
            }
        }, budget)
    }

    fn general_payload(&self, n: usize, top: i64) -> Result<HSeries> {
        let graphs = self.general_graphs(n, top);
        for g in &graphs {
            for b in &g.bullets {
                self.phi_hat(b, top)?;
            }
        }
        let parts: Vec<HSeries> = graphs
            .par_iter()
            .map(|g| -> Result<HSeries> {
                let mut p: HSeries = Laurent::constant(MultiRat::one()).with_prec(top + 1);
                for b in &g.bullets {
                    p = trunc(&p.mul(&self.phi_hat(b, top)?), top);
                }
                Ok(p.scale(&(q(1) / q(g.aut_order as i64))))
            })
            .collect::<Result<_>>()?;
        Ok(sum(parts, top))
    }

    fn pair_table(&self, n: usize, top: i64) -> Result<HashMap<(usize, usize), HSeries>> {
        let mut m = HashMap::new();
        for i in 0..n {
            for j in i + 1..n {
                m.insert((i, j), self.exp_phi_hat_pair(i, j, top, PairRoute::CrossRatio)?);
            }
        }
        Ok(m)
    }

    fn exponentiated_payload(&self, n: usize, top: i64) -> Result<HSeries> {
        let pairs = self.pair_table(n, top)?;
        let graphs = connected_labeled_graphs(n);
        let parts: Vec<HSeries> = graphs
            .par_iter()
            .filter(|es| 2 * es.len() as i64 <= top)
            .map(|es| {
                let mut p: HSeries = Laurent::constant(MultiRat::one()).with_prec(top + 1);
                for e in es {
                    p = trunc(&p.mul(&pairs[e]), top);
                }
                p
            })
            .collect();
        Ok(sum(parts, top))
    }

    /// Not-necessarily-connected `W_n` through `hbar^order` from the exponential formula.
    pub fn wn_disconnected(&self, n: usize, order: i64) -> Result<HSeries> {
        self.disconnected(n, order, false)
    }

    /// As `wn_disconnected` with every `W_{0,1}` block removed; defined for logarithmic `y`.
    pub fn wn_disconnected_stable(&self, n: usize, order: i64) -> Result<HSeries> {
        self.disconnected(n, order, true)
    }

    fn disconnected(&self, n: usize, order: i64, drop_u0: bool) -> Result<HSeries> {
        let top = order + n as i64;
        let pairs = self.pair_table(n, top)?;
        let mut p: HSeries = Laurent::constant(MultiRat::one()).with_prec(top + 1);
        for i in 0..n {
            for j in i + 1..n {
                let e = pairs[&(i, j)].add(&Laurent::constant(MultiRat::one()));
                p = trunc(&p.mul(&e), top);
            }
        }
        let r = self.apply_all_with(n, p, top, true, drop_u0)?;
        Ok(trunc(&r, order))
    }
}

/// Not-necessarily-connected `W_n` through `hbar^order` from connected correlators.
pub fn wn_disconnected_from_tr(tr: &TrEngine, n: usize, order: i64) -> Result<HSeries> {
    disconnected_from_tr(tr, n, order, false)
}

/// As `wn_disconnected_from_tr` without `W_{0,1}` blocks.
pub fn wn_disconnected_stable_from_tr(tr: &TrEngine, n: usize, order: i64) -> Result<HSeries> {
    disconnected_from_tr(tr, n, order, true)
}

fn disconnected_from_tr(tr: &TrEngine, n: usize, order: i64, stable: bool) -> Result<HSeries> {
    let parts = set_partitions(n);
    let mut total: HSeries = Laurent::big_o(order + 1);
    for blocks in parts {
        let mut prod: HSeries = Laurent::constant(MultiRat::one());
        let lo: i64 = blocks.iter().map(|b| b.len() as i64 - 2).sum();
        for b in &blocks {
            let own = b.len() as i64 - 2;
            let need = order - (lo - own);
            if need < own {
                prod = Laurent::big_o(order + 1);
                break;
            }
            let w = if stable { tr.genus_sum_w_stable(b.len(), need)? } else { tr.genus_sum_w(b.len(), need)? };
            let slots = b.clone();
            let w = rename_series(&w, &move |v: Var| zvar(slots[v as usize]))?;
            prod = prod.mul(&w);
        }
        total = total.add(&prod);
    }
    Ok(trunc(&total, order))
}

/// Set partitions of `0..n` as lists of sorted blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![vec![]];
    for v in 0..n {
        let mut next = Vec::new();
        for p in out {
            for k in 0..p.len() {
                let mut b: Vec<Vec<usize>> = p.clone();
                b[k].push(v);
                next.push(b);
            }
            let mut b = p.clone();
            b.push(vec![v]);
            next.push(b);
        }
        out = next;
    }
    out
}

fn pow2(e: i64) -> Scalar {
    Scalar::from_integer(num_bigint::BigInt::one() << e as usize)
}

fn collect(terms: Vec<(i64, MultiRat)>, top: i64) -> HSeries {
    let mut m: BTreeMap<i64, MultiRat> = BTreeMap::new();
    for (e, c) in terms {
        if e > top {
            continue;
        }
        let slot = m.entry(e).or_insert_with(MultiRat::zero);
        *slot = slot.add(&c);
    }
    from_map(m, top + 1)
}

fn from_map(m: BTreeMap<i64, MultiRat>, prec: i64) -> HSeries {
    let Some(&lo) = m.keys().next() else {
        return Laurent::big_o(prec);
    };
    let lo = lo.min(prec);
    let mut cs = vec![MultiRat::zero(); (prec - lo).max(0) as usize];
    for (e, c) in m {
        if e < prec {
            cs[(e - lo) as usize] = c;
        }
    }
    Laurent::new(lo, cs, prec)
}

fn sum(parts: Vec<HSeries>, top: i64) -> HSeries {
    parts
        .into_iter()
        .fold(Laurent::big_o(top + 1), |acc, p| acc.add(&p))
}

impl CurveFn {
    /// `d/dz_v` of the function placed in the variable `v`.
    pub fn deriv_in(&self, v: Var) -> MultiRat {
        let d = self.rat.deriv(v);
        if self.log.is_zero() {
            d
        } else {
            d.add(&MultiRat::var(v).inv().unwrap().scale(&self.log))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::qf;
    use crate::curve::{airy, lambert, lambert_bad};

    fn z(i: usize) -> MultiRat {
        MultiRat::var(zvar(i))
    }

    fn u(i: usize) -> MultiRat {
        MultiRat::var(uvar(i))
    }

    #[test]
    fn graph_counts() {
        let one: Vec<_> = enumerate_graphs(1, 1, 2).into_iter().filter(|g| g.bullets.len() == 1).collect();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].aut_order, 2);
        let counts: Vec<usize> = (1..=5).map(|n| connected_labeled_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 38, 728]);
        for k in 1..5usize {
            let bullets = vec![vec![0, 1]; k];
            assert_eq!(aut_order(&bullets), (1..=k as u64).product::<u64>());
        }
        assert_eq!(aut_order(&[vec![0, 0, 1], vec![0, 0, 1]]), 8);
        for g in enumerate_graphs(3, 3, 6) {
            assert!(connected(3, g.bullets.iter().cloned()));
        }
    }

    #[test]
    fn airy_weights() {
        let xy = XyTransform::new(airy()).unwrap();
        let p = xy.phi_hat_1(0, 6).unwrap();
        assert_eq!(p.rational.coeff(0).unwrap(), z(0).mul(&z(0)).mul(&u(0)).scale(&qf(1, 2)));
        assert_eq!(p.rational.coeff(2).unwrap(), u(0).pow(3).unwrap().scale(&qf(1, 24)));
        for e in [1, 3, 4, 5, 6] {
            assert!(p.rational.coeff(e).unwrap().is_zero());
        }
        let d = xy.phi_hat(&[0, 0], 6).unwrap();
        assert!(d.terms().all(|(_, c)| c.is_zero()));
        let pair = xy.exp_phi_hat_pair(0, 1, 3, PairRoute::CrossRatio).unwrap();
        let lead = u(0).mul(&u(1)).mul(&z(0).sub(&z(1)).pow(-2).unwrap());
        assert_eq!(pair.coeff(2).unwrap(), lead);
        assert!(pair.coeff(0).unwrap().is_zero() && pair.coeff(1).unwrap().is_zero());
    }

    #[test]
    fn lambert_weights() {
        let xy = XyTransform::new(lambert()).unwrap();
        let p = xy.phi_hat_1(0, 4).unwrap();
        assert_eq!(p.u_log, q(1));
        // -z u S(hbar u) = -z u (1 + (hbar u)^2/24 + (hbar u)^4/1920 + ...)
        assert_eq!(p.rational.coeff(0).unwrap(), z(0).mul(&u(0)).neg());
        assert_eq!(p.rational.coeff(2).unwrap(), z(0).mul(&u(0).pow(3).unwrap()).scale(&qf(-1, 24)));
        assert_eq!(p.rational.coeff(4).unwrap(), z(0).mul(&u(0).pow(5).unwrap()).scale(&qf(-1, 1920)));
        // -2 log S(hbar u) = -(hbar u)^2/12 + (hbar u)^4/1440 + ...
        let d = xy.phi_hat(&[0, 0], 4).unwrap();
        assert_eq!(d.coeff(2).unwrap(), u(0).pow(2).unwrap().scale(&qf(-1, 12)));
        assert_eq!(d.coeff(4).unwrap(), u(0).pow(4).unwrap().scale(&qf(1, 1440)));
        assert_eq!(xy.regularized_diagonal().unwrap(), MultiRat::constant(qf(-1, 12)));
    }

    #[test]
    fn pair_routes_agree() {
        for c in [airy(), lambert(), lambert_bad()] {
            let xy = XyTransform::new(c).unwrap();
            let a = xy.exp_phi_hat_pair(0, 1, 5, PairRoute::Series).unwrap();
            let b = xy.exp_phi_hat_pair(0, 1, 5, PairRoute::CrossRatio).unwrap();
            assert_eq!(a, b);
            let swapped = xy.exp_phi_hat_pair(1, 0, 5, PairRoute::Series).unwrap();
            assert_eq!(swapped, a);
            for (_, c) in a.terms() {
                assert!(c.eval_var(uvar(0), &q(0)).unwrap().is_zero());
            }
        }
    }

    fn three_term(c: &SpectralCurve, reg: &MultiRat) -> MultiRat {
        let dx = c.dx();
        let ddx = |f: &MultiRat| f.deriv(Z).div(&dx).unwrap();
        let slope = c.dy().div(&dx).unwrap();
        let a = ddx(&slope.mul(reg)).scale(&qf(1, 2));
        let b = ddx(&ddx(&ddx(&slope.inv().unwrap()))).scale(&qf(-1, 24));
        a.add(&b)
    }

    #[test]
    fn one_one_matches_three_term_formula() {
        for c in [lambert(), lambert_bad(), airy()] {
            let xy = XyTransform::new(c.clone()).unwrap();
            let reg = xy.regularized_diagonal().unwrap();
            let w = xy.wn_via_xy(1, 1, Path::General).unwrap();
            assert_eq!(w.coeff(1).unwrap(), three_term(&c, &reg), "{}", c.name);
        }
        let xy = XyTransform::new(lambert_bad()).unwrap();
        let w = xy.wn_via_xy(1, 1, Path::General).unwrap().coeff(1).unwrap();
        let zz = MultiRat::var(Z);
        let num = zz.mul(&zz).scale(&q(-6)).add(&zz.scale(&q(4))).sub(&MultiRat::one());
        let den = zz.mul(&zz.sub(&MultiRat::one()).pow(5).unwrap()).scale(&q(24));
        assert_eq!(w, num.div(&den).unwrap());
    }

    #[test]
    fn paths_agree_and_bounds_are_saturated() {
        let xy = XyTransform::new(lambert()).unwrap();
        let a = xy.wn_via_xy(2, 2, Path::General).unwrap();
        let b = xy.wn_via_xy(2, 2, Path::Exponentiated).unwrap();
        assert_eq!(a, b);
        let c = xy.wn_via_xy(2, 4, Path::General).unwrap();
        for e in 0..=2 {
            assert_eq!(a.coeff(e).unwrap(), c.coeff(e).unwrap());
        }
    }

    #[test]
    fn disconnected_routes() {
        let c = airy();
        let tr = TrEngine::new(c.clone());
        let xy = XyTransform::new(c).unwrap();
        for n in 1..=2 {
            assert_eq!(xy.wn_disconnected(n, 2).unwrap(), wn_disconnected_from_tr(&tr, n, 2).unwrap());
        }
        for n in 1..=3 {
            let a = xy.wn_disconnected_stable(n, 2).unwrap();
            assert_eq!(a, wn_disconnected_stable_from_tr(&tr, n, 2).unwrap());
            assert_ne!(a, xy.wn_disconnected(n, 2).unwrap());
        }
        let w1 = xy.wn_disconnected(1, 2).unwrap();
        assert_eq!(w1, xy.wn_via_xy(1, 2, Path::General).unwrap());
        assert_eq!(set_partitions(4).len(), 15);
    }

    #[test]
    fn degenerate_dual_rejected() {
        let zz = MultiRat::var(Z);
        let c = SpectralCurve::new(
            "c",
            CurveFn::rational(zz.mul(&zz)),
            CurveFn::rational(zz.mul(&zz).mul(&zz)),
            None,
        )
        .unwrap();
        assert!(matches!(XyTransform::new(c), Err(Error::NonSimpleRamification(_))));
    }
}
