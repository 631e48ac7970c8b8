//! Laplace transforms of correlator generating series: psi and Hodge intersection
//! numbers, simple Hurwitz numbers.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::local::expand;
use crate::algebra::scalar::{binomial, double_factorial, fmt_scalar, qfact};
use crate::algebra::{q, Factor, Laurent, MultiRat, Scalar};
use crate::curve::{airy, lambert};
use crate::error::{Error, Result};
use crate::tr::TrEngine;
use crate::xy::{connected_labeled_graphs, set_partitions, uvar, zvar, PairRoute, XyTransform};

/// Polynomial in `mu_i^{1/2}`: keys are doubled exponents.
pub type MuPoly = BTreeMap<Vec<i32>, Scalar>;
/// hbar order to coefficient.
pub type MuSeries = BTreeMap<i32, MuPoly>;

/// `(1/sqrt(2 pi)) * int exp(-mu z^2/2) z^e dz` along a line avoiding the origin, as
/// `(coefficient, doubled exponent of mu)`. Zero for odd `e`.
pub fn gaussian_functional(e: i32) -> Result<Option<(Scalar, i32)>> {
    if e % 2 != 0 {
        return Ok(None);
    }
    Ok(Some((double_factorial(e as i64 - 1)?, -(e + 1))))
}

/// `mu^{k+1/2}/(2k+1)!!`, the value normally quoted for `z^{-(2k+2)}`.
pub fn gaussian_table_value(k: u32) -> (Scalar, i32) {
    (q(1) / double_factorial(2 * k as i64 + 1).unwrap(), 2 * k as i32 + 1)
}

/// `Res_{z=0} e^{kz} z^{e-k} dz/z`.
pub fn lambert_residue(k: u64, e: i32) -> Scalar {
    let j = k as i64 - e as i64;
    if j < 0 {
        return Scalar::zero();
    }
    pow_u(&q(k as i64), j as u64) / qfact(j as u64)
}

/// The Gaussian functional applied to a univariate Laurent series in `z`.
pub fn gaussian_functional_series(s: &Laurent<Scalar>) -> Result<MuPoly> {
    if !s.is_exact() {
        return Err(Error::Truncation("gaussian functional needs a finite series".into()));
    }
    let mut out = MuPoly::new();
    for (e, c) in s.terms() {
        if let Some((g, m)) = gaussian_functional(e as i32)? {
            *out.entry(vec![m]).or_insert_with(Scalar::zero) += c * g;
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

/// `Res_{z=0} e^{-k x(z)} f(z) dy(z)` on the Lambert curve, for a Laurent series `f`.
pub fn lambert_residue_extract(f: &Laurent<Scalar>, k: u64) -> Result<Scalar> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if f.prec() <= k as i64 {
        return Err(Error::Truncation(format!("series known only through O(z^{})", f.prec())));
    }
    Ok(f.terms().map(|(e, c)| c * lambert_residue(k, e as i32)).sum())
}

fn pow_u(b: &Scalar, e: u64) -> Scalar {
    crate::algebra::scalar::pow_scalar(b, e)
}

/// How each `z_i` is integrated against `exp(-mu_i x(z_i)) dy(z_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measure {
    /// Gaussian integral with formal `mu_i`.
    Gaussian,
    /// Residue at the origin with integer `mu_i = k_i`.
    Residue(Vec<u64>),
}

#[derive(Clone, Debug)]
struct VTerm {
    h: i32,
    z: i32,
    u: u32,
    c: Scalar,
}

#[derive(Clone, Debug)]
struct ETerm {
    h: i32,
    z: [i32; 2],
    u: [u32; 2],
    p: u32,
    c: Scalar,
}

type Key = (i32, Vec<i32>, Vec<i32>);
type Expr = HashMap<Key, Scalar>;

fn add_to(e: &mut Expr, k: Key, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match e.entry(k) {
        std::collections::hash_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
        std::collections::hash_map::Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

/// Integrand pieces of a Laplace-transformed xy relation on one curve.
pub struct LaplaceEngine {
    xy: XyTransform,
}

struct Pieces {
    vertex: Vec<VTerm>,
    edge: Vec<ETerm>,
    // smallest hbar order of a pair weight term
    hmin: i32,
    // max over pair weight terms of (u exponent - hbar order)
    slack: i64,
}

impl LaplaceEngine {
    pub fn new(xy: XyTransform) -> Self {
        LaplaceEngine { xy }
    }

    pub fn airy() -> Self {
        LaplaceEngine::new(XyTransform::new(airy()).expect("airy dual"))
    }

    pub fn lambert() -> Self {
        LaplaceEngine::new(XyTransform::new(lambert()).expect("lambert dual"))
    }

    pub fn xy(&self) -> &XyTransform {
        &self.xy
    }

    fn pieces(&self, top: i64) -> Result<Pieces> {
        let v = self.xy_vertex(top)?;
        let mut vertex = Vec::new();
        for (h, c) in v.terms() {
            if !c.den().is_empty() {
                return Err(Error::Unsupported("vertex factor is not polynomial in z".into()));
            }
            for (m, s) in c.num().terms() {
                vertex.push(VTerm {
                    h: h as i32,
                    z: m.exp(zvar(0)) as i32,
                    u: m.exp(uvar(0)),
                    c: s.clone(),
                });
            }
        }
        let e = self.xy.exp_phi_hat_pair(0, 1, top, PairRoute::CrossRatio)?;
        let mut edge = Vec::new();
        let mut hmin = i32::MAX;
        let mut slack = i64::MIN;
        for (h, c) in e.terms() {
            let mut p = 0;
            for (f, &k) in c.den() {
                match f {
                    Factor::Diff { a: 0, b: 1 } => p = k,
                    _ => return Err(Error::Unsupported("pair weight has a pole off the diagonal".into())),
                }
            }
            for (m, s) in c.num().terms() {
                let t = ETerm {
                    h: h as i32,
                    z: [m.exp(zvar(0)) as i32, m.exp(zvar(1)) as i32],
                    u: [m.exp(uvar(0)), m.exp(uvar(1))],
                    p,
                    c: s.clone(),
                };
                if h <= 0 {
                    return Err(Error::Unsupported("pair weight has a non-positive hbar order".into()));
                }
                hmin = hmin.min(h as i32);
                slack = slack.max(t.u[0].max(t.u[1]) as i64 - h);
                edge.push(t);
            }
        }
        Ok(Pieces { vertex, edge, hmin, slack })
    }

    fn xy_vertex(&self, top: i64) -> Result<crate::xy::HSeries> {
        self.xy.vertex_factor(0, top)
    }

    /// `prod_i int exp(-mu_i x_i) dy_i / (hbar mu_i) exp(...)` times the sum over `graphs`
    /// of products of pair weights, through `hbar^top`. Integration runs over nested
    /// regions with `order[0]` outermost. With the Gaussian measure, monomials whose
    /// doubled `mu_i` exponent falls below `floor` are dropped as soon as it is final.
    pub fn evaluate(
        &self,
        n: usize,
        graphs: &[Vec<(usize, usize)>],
        order: &[usize],
        top: i32,
        measure: &Measure,
        floor: i32,
    ) -> Result<MuSeries> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(Error::Domain("integration order must permute the slots".into()));
        }
        if let Measure::Residue(k) = measure {
            if k.len() != n || k.iter().any(|&x| x == 0) {
                return Err(Error::Domain("residue measure needs n positive parts".into()));
            }
        }
        let pieces = self.pieces(top as i64 + n as i64)?;
        let parts: Vec<Result<Expr>> = graphs
            .par_iter()
            .filter(|g| 2 * g.len() as i32 - n as i32 <= top)
            .map(|g| self.one_graph(n, g, order, top, measure, floor, &pieces))
            .collect();
        let mut total = Expr::new();
        for p in parts {
            for (k, c) in p? {
                add_to(&mut total, k, c);
            }
        }
        let mut out = MuSeries::new();
        for ((h, _, m), c) in total {
            let m = if matches!(measure, Measure::Residue(_)) { Vec::new() } else { m };
            let slot = out.entry(h).or_default();
            let e = slot.entry(m).or_insert_with(Scalar::zero);
            *e += c;
        }
        for poly in out.values_mut() {
            poly.retain(|_, c| !c.is_zero());
        }
        out.retain(|_, p| !p.is_empty());
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn one_graph(
        &self,
        n: usize,
        edges: &[(usize, usize)],
        order: &[usize],
        top: i32,
        measure: &Measure,
        floor: i32,
        pieces: &Pieces,
    ) -> Result<Expr> {
        let pos: Vec<usize> = {
            let mut p = vec![0; n];
            for (i, &v) in order.iter().enumerate() {
                p[v] = i;
            }
            p
        };
        let gauss = matches!(measure, Measure::Gaussian);
        let ks: Vec<u64> = match measure {
            Measure::Residue(k) => k.clone(),
            Measure::Gaussian => vec![0; n],
        };
        let mut state = Expr::new();
        state.insert((0, vec![0; n], vec![0; n]), Scalar::one());
        // edges are multiplied at the step of their inner endpoint
        let inner = |&(i, j): &(usize, usize)| if pos[i] > pos[j] { i } else { j };
        let mut later_edges = edges.len() as i32;
        for (step, &b) in order.iter().rev().enumerate() {
            let remaining = (n - step - 1) as i32;
            let here: Vec<(usize, usize)> = edges.iter().filter(|e| inner(e) == b).copied().collect();
            let limit = top + remaining - pieces.hmin * later_edges;
            later_edges -= here.len() as i32;
            // vertex factor with 1/(hbar mu_b)
            let mut next = Expr::new();
            for ((h, z, m), c) in &state {
                for t in &pieces.vertex {
                    let nh = h + t.h - 1;
                    if nh > limit {
                        continue;
                    }
                    let mut z = z.clone();
                    let mut m = m.clone();
                    z[b] += t.z;
                    let mut cc = c * &t.c;
                    if gauss {
                        m[b] += 2 * t.u as i32 - 2;
                        if t.u % 2 == 1 {
                            cc = -cc;
                        }
                    } else {
                        let k = q(ks[b] as i64);
                        cc = cc * pow_u(&-k.clone(), t.u as u64) / k;
                    }
                    add_to(&mut next, (nh, z, m), cc);
                }
            }
            state = next;
            // pair weights towards outer vertices
            for (idx, &(i, j)) in here.iter().enumerate() {
                let (a, flip) = if j == b { (i, false) } else { (j, true) };
                let after_here = (here.len() - idx - 1) as i32;
                let limit = top + remaining - pieces.hmin * (later_edges + after_here);
                let mut next = Expr::new();
                for ((h, z, m), c) in &state {
                    for t in &pieces.edge {
                        let nh = h + t.h;
                        if nh > limit {
                            continue;
                        }
                        // slot 0 of the canonical weight sits at min(i, j)
                        let (sa, sb) = if flip { (1, 0) } else { (0, 1) };
                        let mut cc = c * &t.c;
                        let mut m2 = m.clone();
                        if gauss {
                            m2[a] += 2 * t.u[sa] as i32;
                            m2[b] += 2 * t.u[sb] as i32;
                            if (t.u[0] + t.u[1]) % 2 == 1 {
                                cc = -cc;
                            }
                        } else {
                            cc *= pow_u(&q(-(ks[a] as i64)), t.u[sa] as u64);
                            cc *= pow_u(&q(-(ks[b] as i64)), t.u[sb] as u64);
                        }
                        // (z_min - z_max)^{-p}, expanded with z_b the inner variable
                        if flip && t.p % 2 == 1 {
                            cc = -cc;
                        }
                        let sb_now = z[b] + t.z[sb];
                        let lmax: i64 = if gauss {
                            let spare = (limit - nh + pieces.hmin * after_here) as i64;
                            let gain = if after_here == 0 {
                                0
                            } else {
                                2 * (spare + pieces.slack * after_here as i64).max(0)
                            };
                            m2[b] as i64 + gain - 1 - floor as i64 - sb_now as i64
                        } else {
                            ks[b] as i64 - sb_now as i64
                        };
                        if lmax < 0 {
                            continue;
                        }
                        for l in 0..=lmax {
                            let coef = if t.p == 0 {
                                if l > 0 {
                                    break;
                                }
                                Scalar::one()
                            } else {
                                Scalar::from_integer(binomial(t.p as u64 + l as u64 - 1, l as u64))
                            };
                            let mut z2 = z.clone();
                            z2[b] = sb_now + l as i32;
                            z2[a] += t.z[sa] - t.p as i32 - l as i32;
                            add_to(&mut next, (nh, z2, m2.clone()), &cc * coef);
                        }
                    }
                }
                state = next;
            }
            // integrate z_b
            let mut next = Expr::new();
            for ((h, mut z, mut m), c) in state {
                let e = z[b];
                z[b] = 0;
                if gauss {
                    let Some((g, dm)) = gaussian_functional(e)? else { continue };
                    m[b] += dm;
                    if m[b] < floor {
                        continue;
                    }
                    add_to(&mut next, (h, z, m), c * g);
                } else {
                    let r = lambert_residue(ks[b], e);
                    add_to(&mut next, (h, z, m), c * r);
                }
            }
            state = next;
        }
        Ok(state)
    }
}

/// `(g, indices)` to intersection number; indices are sorted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntersectionTable {
    pub kind: String,
    pub entries: BTreeMap<(u32, Vec<u32>), Scalar>,
}

#[derive(Serialize)]
struct Row {
    g: u32,
    indices: Vec<u32>,
    value: String,
}

impl IntersectionTable {
    pub fn new(kind: &str) -> Self {
        IntersectionTable { kind: kind.into(), entries: BTreeMap::new() }
    }

    pub fn get(&self, g: u32, idx: &[u32]) -> Option<&Scalar> {
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.entries.get(&(g, k))
    }

    /// Stored value, zero when absent.
    pub fn value(&self, g: u32, idx: &[u32]) -> Scalar {
        self.get(g, idx).cloned().unwrap_or_default()
    }

    pub fn insert(&mut self, g: u32, idx: &[u32], v: Scalar) {
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.entries.insert((g, k), v);
    }

    pub fn extend(&mut self, o: &IntersectionTable) {
        for (k, v) in &o.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("g,n,indices,value\n");
        for ((g, idx), v) in &self.entries {
            let idx: Vec<String> = idx.iter().map(|d| d.to_string()).collect();
            s.push_str(&format!("{g},{},{},{}\n", idx.len(), idx.join(" "), fmt_scalar(v)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Row> = self
            .entries
            .iter()
            .map(|((g, idx), v)| Row { g: *g, indices: idx.clone(), value: fmt_scalar(v) })
            .collect();
        serde_json::json!({ "kind": self.kind, "entries": rows }).to_string()
    }
}

fn sign(e: u32) -> Scalar {
    if e % 2 == 0 {
        q(1)
    } else {
        q(-1)
    }
}

pub fn identity_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// psi intersection numbers with `n` points and `2g+n-2 <= max_chi`, from the Laplace
/// transform of the Airy xy relation.
pub fn psi_intersections(lap: &LaplaceEngine, n: usize, max_chi: i32, order: &[usize]) -> Result<IntersectionTable> {
    if n == 0 {
        return Err(Error::Domain("need at least one point".into()));
    }
    let graphs = connected_labeled_graphs(n);
    let rhs = lap.evaluate(n, &graphs, order, max_chi, &Measure::Gaussian, 1)?;
    let mut table = IntersectionTable::new("psi");
    for (h, poly) in rhs {
        let twice_g = h - n as i32 + 2;
        if twice_g < 0 || twice_g % 2 != 0 {
            return Err(Error::Domain(format!("unexpected hbar order {h}")));
        }
        let g = (twice_g / 2) as u32;
        if 2 * g as i32 - 2 + (n as i32) <= 0 {
            continue;
        }
        let s = sign(g + n as u32 + 1);
        for (m, c) in poly {
            if m.iter().any(|&e| e < 1 || e % 2 == 0) {
                return Err(Error::Domain(format!("monomial {m:?} is not of the form prod mu^(d+1/2)")));
            }
            let d: Vec<u32> = m.iter().map(|&e| ((e - 1) / 2) as u32).collect();
            if d.iter().sum::<u32>() != 3 * g + n as u32 - 3 {
                return Err(Error::Domain(format!("degree mismatch at genus {g}: {d:?}")));
            }
            table.insert(g, &d, &c * &s);
        }
    }
    Ok(table)
}

/// All psi intersections with `2g+n-2 <= max_chi`.
pub fn psi_table(lap: &LaplaceEngine, max_chi: i32) -> Result<IntersectionTable> {
    let mut t = IntersectionTable::new("psi");
    for n in 1..=(max_chi + 2) as usize {
        t.extend(&psi_intersections(lap, n, max_chi, &identity_order(n))?);
    }
    Ok(t)
}

/// psi intersections read off the Airy correlators `(g, n)`.
pub fn psi_from_tr(tr: &TrEngine, g: u32, n: usize) -> Result<IntersectionTable> {
    let rho = tr.density(g, n)?;
    let mut pole = vec![0i32; n];
    for (f, &k) in rho.den() {
        match f {
            Factor::Lin { var, root } if root.is_zero() && (*var as usize) < n => pole[*var as usize] = k as i32,
            _ => return Err(Error::Domain("density is not a Laurent polynomial in the z_i".into())),
        }
    }
    let s = sign(n as u32);
    let mut table = IntersectionTable::new("psi");
    for (mono, c) in rho.num().terms() {
        let mut d = Vec::with_capacity(n);
        let mut w = c * &s;
        for (i, p) in pole.iter().enumerate() {
            let e = mono.exp(zvar(i)) as i32 - p;
            if e > -2 || e % 2 != 0 {
                return Err(Error::Domain(format!("unexpected power z^{e}")));
            }
            let k = ((-e - 2) / 2) as u32;
            w /= double_factorial(2 * k as i64 + 1)?;
            d.push(k);
        }
        table.insert(g, &d, w);
    }
    Ok(table)
}

/// Base cases `(0,1)` and `(0,2)` from the Laplace side. The `(0,2)` series only
/// covers monomials whose doubled exponents are all at least `-2 window`.
pub fn airy_base_cases(lap: &LaplaceEngine, window: i32) -> Result<(MuPoly, MuPoly)> {
    let one = lap.evaluate(1, &[vec![]], &[0], -1, &Measure::Gaussian, -2 * window)?;
    let two = lap.evaluate(2, &connected_labeled_graphs(2), &[0, 1], 0, &Measure::Gaussian, -2 * window)?;
    let one = one.get(&-1).cloned().unwrap_or_default();
    // (-1)^{g+n+1} = -1 for (0,2)
    let two = two
        .get(&0)
        .cloned()
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| (k, -v))
        .collect();
    Ok((one, two))
}

/// `sqrt(mu_a mu_b)/(mu_a + mu_b)` expanded in `mu_a/mu_b`, restricted to a window.
pub fn two_point_expansion(window: i32) -> MuPoly {
    let mut out = MuPoly::new();
    let mut m = 0;
    while -(2 * m + 1) >= -2 * window {
        out.insert(vec![2 * m + 1, -(2 * m + 1)], sign(m as u32));
        m += 1;
    }
    out
}

fn mul_disjoint(a: &MuPoly, sa: &[usize], b: &MuPoly, sb: &[usize], n: usize) -> MuPoly {
    let mut out = MuPoly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let mut k = vec![0; n];
            for (i, &s) in sa.iter().enumerate() {
                k[s] += ka[i];
            }
            for (i, &s) in sb.iter().enumerate() {
                k[s] += kb[i];
            }
            *out.entry(k).or_insert_with(Scalar::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn connected_block(table: &IntersectionTable, g: u32, n: usize, window: i32) -> Result<MuPoly> {
    let mut out = MuPoly::new();
    if g == 0 && n == 1 {
        out.insert(vec![-3], q(1));
        return Ok(out);
    }
    if g == 0 && n == 2 {
        return Ok(two_point_expansion(window).into_iter().map(|(k, v)| (k, -v)).collect());
    }
    let s = sign(g + n as u32 + 1);
    for ((gg, idx), v) in &table.entries {
        if *gg != g || idx.len() != n {
            continue;
        }
        for p in distinct_permutations(idx) {
            let k: Vec<i32> = p.iter().map(|&d| 2 * d as i32 + 1).collect();
            out.insert(k, v * &s);
        }
    }
    if out.is_empty() {
        return Err(Error::Domain(format!("table has no entries for genus {g} with {n} points")));
    }
    Ok(out)
}

fn distinct_permutations(v: &[u32]) -> Vec<Vec<u32>> {
    let mut cur = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

/// Both sides of the disconnected Airy relation at `n` points through `hbar^top`:
/// the partition sum of signed connected series over `table`, and the integrated
/// product of `1 + pair weight` over all pairs. Monomials are kept when every doubled
/// exponent is at least `-2 window`.
pub fn psi_disconnected(
    lap: &LaplaceEngine,
    table: &IntersectionTable,
    n: usize,
    top: i32,
    window: i32,
) -> Result<(MuSeries, MuSeries)> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let graphs: Vec<Vec<(usize, usize)>> = (0u64..1 << pairs.len())
        .map(|mask| pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| *p).collect())
        .collect();
    let rhs = lap.evaluate(n, &graphs, &identity_order(n), top, &Measure::Gaussian, -2 * window)?;
    let mut lhs = MuSeries::new();
    for part in set_partitions(n) {
        // each block carries hbar^{2g+|B|-2}; enumerate genus assignments
        let mut acc: Vec<(i32, MuPoly, Vec<usize>)> = vec![(0, [(vec![], q(1))].into_iter().collect(), vec![])];
        for (bi, block) in part.iter().enumerate() {
            let rest: i32 = part[bi + 1..].iter().map(|b| b.len() as i32 - 2).sum();
            let mut next = Vec::new();
            for (h, poly, slots) in &acc {
                let mut g = 0u32;
                loop {
                    let hb = 2 * g as i32 + block.len() as i32 - 2;
                    if h + hb + rest > top {
                        break;
                    }
                    let b = connected_block(table, g, block.len(), window)?;
                    let mut s2 = slots.clone();
                    s2.extend(block.iter().copied());
                    let joined = mul_disjoint(poly, slots, &b, block, n);
                    next.push((h + hb, project(&joined, &s2), s2));
                    g += 1;
                }
            }
            acc = next;
        }
        for (h, poly, slots) in acc {
            if h > top {
                continue;
            }
            let full = mul_disjoint(&poly, &slots, &[(vec![], q(1))].into_iter().collect(), &[], n);
            let e = lhs.entry(h).or_default();
            for (k, v) in full {
                *e.entry(k).or_insert_with(Scalar::zero) += v;
            }
        }
    }
    for p in lhs.values_mut() {
        p.retain(|k, c| !c.is_zero() && k.iter().all(|&e| e >= -2 * window));
    }
    lhs.retain(|_, p| !p.is_empty());
    Ok((lhs, rhs))
}

fn project(p: &MuPoly, slots: &[usize]) -> MuPoly {
    p.iter().map(|(k, v)| (slots.iter().map(|&s| k[s]).collect(), v.clone())).collect()
}

/// Hodge integrals `<Lambda(1) / prod (1 - k_i psi_i)>_{g,n}` for all `g <= max_g`, from the
/// residue form of the Lambert relation.
pub fn hodge_integrals(lap: &LaplaceEngine, ks: &[u64], max_g: u32, order: &[usize]) -> Result<Vec<Scalar>> {
    let n = ks.len();
    let top = 2 * max_g as i32 + n as i32 - 2;
    let rhs = lap.evaluate(n, &connected_labeled_graphs(n), order, top, &Measure::Residue(ks.to_vec()), 0)?;
    let norm = lambert_norm(ks);
    Ok((0..=max_g)
        .map(|g| {
            let h = 2 * g as i32 + n as i32 - 2;
            rhs.get(&h).and_then(|p| p.get(&vec![])).cloned().unwrap_or_default() / &norm
        })
        .collect())
}

/// `prod k^{k+1}/k!`.
pub fn lambert_norm(ks: &[u64]) -> Scalar {
    ks.iter().map(|&k| pow_u(&q(k as i64), k + 1) / qfact(k)).product()
}

/// Hodge integral with the unstable conventions `1/k^2` and `1/(k_1+k_2)`.
pub fn hodge_value(lap: &LaplaceEngine, g: u32, ks: &[u64]) -> Result<Scalar> {
    match (g, ks.len()) {
        (_, 0) => Err(Error::Domain("need at least one point".into())),
        (0, 1) => Ok(q(1) / q((ks[0] * ks[0]) as i64)),
        (0, 2) => Ok(q(1) / q((ks[0] + ks[1]) as i64)),
        _ => Ok(hodge_integrals(lap, ks, g, &identity_order(ks.len()))?.pop().unwrap()),
    }
}

fn partitions_of(d: u64, max: u64) -> Vec<Vec<u64>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=d.min(max)).rev() {
        for mut rest in partitions_of(d - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All partitions of `d` with at most `max_parts` parts, largest part first.
pub fn partitions(d: u64, max_parts: usize) -> Vec<Vec<u64>> {
    partitions_of(d, d).into_iter().filter(|p| p.len() <= max_parts).collect()
}

/// Hodge integrals for every partition with `|k| <= max_degree`, `n <= max_n`, `g <= max_g`.
pub fn hodge_table(lap: &LaplaceEngine, max_g: u32, max_degree: u64, max_n: usize) -> Result<IntersectionTable> {
    let jobs: Vec<Vec<u64>> = (1..=max_degree).flat_map(|d| partitions(d, max_n)).collect();
    let rows: Vec<Result<Vec<(u32, Vec<u64>, Scalar)>>> = jobs
        .par_iter()
        .map(|ks| (0..=max_g).map(|g| Ok((g, ks.clone(), hodge_value(lap, g, ks)?))).collect())
        .collect();
    let mut t = IntersectionTable::new("hodge");
    for r in rows {
        for (g, ks, v) in r? {
            let idx: Vec<u32> = ks.iter().map(|&k| k as u32).collect();
            t.insert(g, &idx, v);
        }
    }
    Ok(t)
}

/// Hurwitz numbers over the same range as `hodge_table`.
pub fn hurwitz_table(lap: &LaplaceEngine, max_g: u32, max_degree: u64, max_n: usize) -> Result<IntersectionTable> {
    let jobs: Vec<Vec<u64>> = (1..=max_degree).flat_map(|d| partitions(d, max_n)).collect();
    let mut t = IntersectionTable::new("hurwitz");
    for ks in jobs {
        let idx: Vec<u32> = ks.iter().map(|&k| k as u32).collect();
        for g in 0..=max_g {
            t.insert(g, &idx, hurwitz_number(lap, g, &ks)?);
        }
    }
    Ok(t)
}

/// Hodge integrals from residues of the Lambert correlators against `exp(-k x)`.
pub fn hodge_from_tr(tr: &TrEngine, g: u32, ks: &[u64]) -> Result<Scalar> {
    let n = ks.len();
    let mut f = tr.density(g, n)?;
    for (i, &k) in ks.iter().enumerate().rev() {
        let s = expand(&f, &[(zvar(i), Laurent::t())], k as i64)?;
        let mut acc = MultiRat::zero();
        for j in 0..k as i64 {
            let c = s.coeff(j)?;
            if c.is_zero() {
                continue;
            }
            let r = (k as i64 - 1 - j) as u64;
            acc = acc.add(&c.scale(&(pow_u(&q(k as i64), r) / qfact(r))));
        }
        f = acc;
    }
    let v = f
        .as_constant()
        .ok_or_else(|| Error::Domain("residue left free variables".into()))?;
    Ok(v / lambert_norm(ks))
}

fn aut_order(ks: &[u64]) -> Scalar {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &k in ks {
        *counts.entry(k).or_default() += 1;
    }
    counts.values().map(|&c| qfact(c)).product()
}

/// Number of simple branch points for genus `g` covers of degree `|mu|`.
pub fn branch_points(g: u32, ks: &[u64]) -> Result<u64> {
    let b = 2 * g as i64 - 2 + ks.len() as i64 + ks.iter().sum::<u64>() as i64;
    if b < 0 {
        return Err(Error::Domain("negative number of branch points".into()));
    }
    Ok(b as u64)
}

/// Simple Hurwitz number from the ELSV formula.
pub fn hurwitz_number(lap: &LaplaceEngine, g: u32, ks: &[u64]) -> Result<Scalar> {
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::Domain("partition parts must be positive".into()));
    }
    let b = branch_points(g, ks)?;
    let pre: Scalar = ks.iter().map(|&k| pow_u(&q(k as i64), k) / qfact(k)).product();
    Ok(qfact(b) / aut_order(ks) * pre * hodge_value(lap, g, ks)?)
}

/// `1/d!` times the number of transitive tuples `(sigma, tau_1..tau_b)` with `sigma` of
/// cycle type `mu`, transpositions `tau_i` and `tau_b ... tau_1 sigma = 1`.
pub fn brute_force_hurwitz(g: u32, ks: &[u64]) -> Result<Scalar> {
    let d: usize = ks.iter().sum::<u64>() as usize;
    if d == 0 || d > 8 || ks.iter().any(|&k| k == 0) {
        return Err(Error::Domain("degree must be between 1 and 8".into()));
    }
    let b = branch_points(g, ks)?;
    let mut target: Vec<u64> = ks.to_vec();
    target.sort_unstable();
    type State = (Vec<u8>, Vec<u8>);
    let mut states: HashMap<State, u64> = HashMap::new();
    for p in permutations(d) {
        let (ty, blocks) = cycles(&p);
        if ty == target {
            *states.entry((p, blocks)).or_default() += 1;
        }
    }
    let transpositions: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    for _ in 0..b {
        let mut next: HashMap<State, u64> = HashMap::new();
        for ((p, blocks), c) in &states {
            for &(i, j) in &transpositions {
                let np: Vec<u8> = p
                    .iter()
                    .map(|&v| match v as usize {
                        v if v == i => j as u8,
                        v if v == j => i as u8,
                        _ => v,
                    })
                    .collect();
                let (bi, bj) = (blocks[i], blocks[j]);
                let merged: Vec<u8> = blocks.iter().map(|&x| if x == bj { bi } else { x }).collect();
                *next.entry((np, relabel(&merged))).or_default() += c;
            }
        }
        states = next;
    }
    let id: Vec<u8> = (0..d as u8).collect();
    let one_block = vec![0u8; d];
    let count = states.get(&(id, one_block)).copied().unwrap_or(0);
    Ok(Scalar::from_integer(count.into()) / qfact(d as u64))
}

fn permutations(d: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..d as u8).collect();
    out.push(cur.clone());
    loop {
        let Some(i) = (0..d.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..d).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

fn cycles(p: &[u8]) -> (Vec<u64>, Vec<u8>) {
    let mut seen = vec![false; p.len()];
    let mut blocks = vec![0u8; p.len()];
    let mut ty = Vec::new();
    let mut label = 0u8;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            blocks[x] = label;
            x = p[x] as usize;
            len += 1;
        }
        ty.push(len);
        label += 1;
    }
    ty.sort_unstable();
    (ty, blocks)
}

fn relabel(b: &[u8]) -> Vec<u8> {
    let mut map = [u8::MAX; 16];
    let mut next = 0u8;
    b.iter()
        .map(|&x| {
            if map[x as usize] == u8::MAX {
                map[x as usize] = next;
                next += 1;
            }
            map[x as usize]
        })
        .collect()
}

/// Both sides of the disconnected Lambert relation through `hbar^top`, keyed by hbar
/// order: `prod k^{k+1}/k!` times the partition sum of connected Hodge series, and the
/// residues of the product of full cross-ratios.
pub fn hodge_disconnected(lap: &LaplaceEngine, ks: &[u64], top: i32) -> Result<(BTreeMap<i32, Scalar>, BTreeMap<i32, Scalar>)> {
    let n = ks.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let graphs: Vec<Vec<(usize, usize)>> = (0u64..1 << pairs.len())
        .map(|mask| pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| *p).collect())
        .collect();
    let rhs: BTreeMap<i32, Scalar> = lap
        .evaluate(n, &graphs, &identity_order(n), top, &Measure::Residue(ks.to_vec()), 0)?
        .into_iter()
        .map(|(h, p)| (h, p.get(&vec![]).cloned().unwrap_or_default()))
        .collect();
    let norm = lambert_norm(ks);
    let mut memo: HashMap<(u32, Vec<u64>), Scalar> = HashMap::new();
    let mut lhs: BTreeMap<i32, Scalar> = BTreeMap::new();
    for part in set_partitions(n) {
        let mut acc: Vec<(i32, Scalar)> = vec![(0, q(1))];
        for (bi, block) in part.iter().enumerate() {
            let rest: i32 = part[bi + 1..].iter().map(|b| b.len() as i32 - 2).sum();
            let bk: Vec<u64> = block.iter().map(|&i| ks[i]).collect();
            let mut next = Vec::new();
            for (h, v) in &acc {
                let mut g = 0u32;
                loop {
                    let hb = 2 * g as i32 + block.len() as i32 - 2;
                    if h + hb + rest > top {
                        break;
                    }
                    let key = (g, bk.clone());
                    let val = match memo.get(&key) {
                        Some(x) => x.clone(),
                        None => {
                            let x = hodge_value(lap, g, &bk)?;
                            memo.insert(key, x.clone());
                            x
                        }
                    };
                    next.push((h + hb, v * &val));
                    g += 1;
                }
            }
            acc = next;
        }
        for (h, v) in acc {
            if h <= top {
                *lhs.entry(h).or_insert_with(Scalar::zero) += v * &norm;
            }
        }
    }
    lhs.retain(|_, v| !v.is_zero());
    Ok((lhs, rhs))
}

/// String and dilaton equations over every applicable entry of a psi table; returns the
/// number of entries checked or the first violation.
pub fn string_dilaton_check(table: &IntersectionTable) -> Result<usize> {
    let mut checked = 0;
    for ((g, idx), v) in &table.entries {
        let g = *g;
        let n = idx.len();
        if idx.first() != Some(&0) && !idx.contains(&1) {
            continue;
        }
        let reduced_stable = 2 * g as i64 - 2 + n as i64 - 1 > 0;
        if !reduced_stable {
            continue;
        }
        if idx[0] == 0 {
            let rest = &idx[1..];
            let mut expect = Scalar::zero();
            let mut complete = true;
            for j in 0..rest.len() {
                if rest[j] == 0 {
                    continue;
                }
                let mut r = rest.to_vec();
                r[j] -= 1;
                match table.get(g, &r) {
                    Some(x) => expect += x,
                    None => complete = false,
                }
            }
            if complete {
                if &expect != v {
                    return Err(Error::Domain(format!("string equation fails at genus {g}, {idx:?}")));
                }
                checked += 1;
            }
        }
        if let Some(p) = idx.iter().position(|&d| d == 1) {
            let mut r = idx.to_vec();
            r.remove(p);
            if let Some(x) = table.get(g, &r) {
                let expect = x * q(2 * g as i64 - 2 + n as i64 - 1);
                if &expect != v {
                    return Err(Error::Domain(format!("dilaton equation fails at genus {g}, {idx:?}")));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Largest absolute numerator in a table, a cheap size summary.
pub fn max_height(t: &IntersectionTable) -> Scalar {
    t.entries.values().map(|v| v.abs()).fold(Scalar::zero(), |a, b| if b > a { b } else { a })
}
