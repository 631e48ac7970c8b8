use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::Zero;
use xytr_core::algebra::scalar::double_factorial;
use xytr_core::algebra::{q, qf, Factor, MultiRat, Scalar};
use xytr_core::io::{format_multirat as fm, parse_multirat, resolve_curve};
use xytr_core::laplace::{
    airy_base_cases, brute_force_hurwitz, hodge_disconnected, hodge_integrals, hurwitz_number, partitions,
    psi_disconnected, psi_from_tr, psi_intersections, psi_table, string_dilaton_check, LaplaceEngine, MuPoly,
};
use xytr_core::tr::{per_dx, TrEngine};
use xytr_core::xy::{uvar, wn_disconnected_from_tr, wn_disconnected_stable_from_tr, Path, XyTransform};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn tr_w(tr: &TrEngine, g: u32, n: usize) -> Result<MultiRat, String> {
    per_dx(&tr.density(g, n).map_err(e2s)?, tr.curve(), n).map_err(e2s)
}

fn xy_w(xy: &XyTransform, g: u32, n: usize) -> Result<MultiRat, String> {
    let order = 2 * g as i64 + n as i64 - 2;
    xy.wn_via_xy(n, order, Path::General).map_err(e2s)?.coeff(order).map_err(e2s)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut v = p.clone();
            v.insert(i, n - 1);
            out.push(v);
        }
    }
    out
}

/// Witten-Kontsevich numbers from the DVV (Virasoro) recursion, independent of the curve machinery.
struct Dvv(HashMap<(u32, Vec<u32>), Scalar>);

impl Dvv {
    fn df(k: i64) -> Scalar {
        double_factorial(k).unwrap()
    }

    fn get(&mut self, g: u32, ks: &[u32]) -> Scalar {
        let n = ks.len() as i64;
        if 2 * g as i64 - 2 + n <= 0 {
            return Scalar::zero();
        }
        if ks.iter().map(|&k| k as i64).sum::<i64>() != 3 * g as i64 - 3 + n {
            return Scalar::zero();
        }
        let mut key = ks.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if (g, key.as_slice()) == (0, &[0, 0, 0][..]) {
            return q(1);
        }
        if (g, key.as_slice()) == (1, &[1][..]) {
            return qf(1, 24);
        }
        if let Some(v) = self.0.get(&(g, key.clone())) {
            return v.clone();
        }
        let k = key[0] as i64;
        let rest = &key[1..];
        let mut acc = Scalar::zero();
        for j in 0..rest.len() {
            let kj = rest[j] as i64;
            if k + kj - 1 < 0 {
                continue;
            }
            let mut s: Vec<u32> = rest.to_vec();
            s[j] = (k + kj - 1) as u32;
            acc += Self::df(2 * k + 2 * kj - 1) / Self::df(2 * kj - 1) * self.get(g, &s);
        }
        for a in 0..=k - 2 {
            let b = k - 2 - a;
            if b < 0 {
                continue;
            }
            let w = Self::df(2 * a + 1) * Self::df(2 * b + 1) / q(2);
            if g > 0 {
                let mut s = vec![a as u32, b as u32];
                s.extend_from_slice(rest);
                acc += &w * self.get(g - 1, &s);
            }
            let m = rest.len();
            for mask in 0u32..1 << m {
                let (mut i, mut jj) = (vec![a as u32], vec![b as u32]);
                for (t, &r) in rest.iter().enumerate() {
                    if mask >> t & 1 == 1 {
                        i.push(r)
                    } else {
                        jj.push(r)
                    }
                }
                for g1 in 0..=g {
                    acc += &w * self.get(g1, &i) * self.get(g - g1, &jj);
                }
            }
        }
        let v = acc / Self::df(2 * k + 1);
        self.0.insert((g, key), v.clone());
        v
    }
}

fn c1() -> Check {
    let tr = TrEngine::new(resolve_curve("lambert").map_err(e2s)?);
    let w = tr_w(&tr, 1, 1)?;
    let want = parse_multirat("z^2*(z-4)/(24*(z-1)^5)").map_err(e2s)?;
    ensure(w == want, || format!("got {}", fm(&w)))?;
    Ok("W_{1,1}(lambert) exact".into())
}

fn c2() -> Check {
    let c = resolve_curve("lambert-bad").map_err(e2s)?;
    let xy = XyTransform::new(c.clone()).map_err(e2s)?;
    let via = xy_w(&xy, 1, 1)?;
    let want = parse_multirat("(-6*z^2+4*z-1)/(24*z*(z-1)^5)").map_err(e2s)?;
    ensure(via == want, || format!("x-y gives {}", fm(&via)))?;
    let tr = tr_w(&TrEngine::new(c), 1, 1)?;
    ensure(via != tr, || "x-y agrees with the recursion on lambert-bad".into())?;
    Ok("x-y value exact and differs from the recursion".into())
}

fn c3() -> Check {
    let cases = [(0u32, 3usize), (1, 1), (0, 4), (1, 2), (2, 1)];
    let mut done = 0;
    for name in ["airy", "lambert"] {
        let c = resolve_curve(name).map_err(e2s)?;
        let tr = TrEngine::new(c.clone());
        let xy = XyTransform::new(c).map_err(e2s)?;
        for (g, n) in cases {
            let a = tr_w(&tr, g, n)?;
            let b = xy_w(&xy, g, n)?;
            ensure(a == b, || format!("{name} ({g},{n}): tr {} vs xy {}", fm(&a), fm(&b)))?;
            done += 1;
        }
    }
    Ok(format!("{done} (curve, g, n) cases exactly equal"))
}

fn c4() -> Check {
    let xy = XyTransform::new(resolve_curve("lambert").map_err(e2s)?).map_err(e2s)?;
    let r = xy.regularized_diagonal().map_err(e2s)?;
    ensure(r == MultiRat::constant(qf(-1, 12)), || format!("got {}", fm(&r)))?;
    Ok("regularized diagonal = -1/12".into())
}

fn c5() -> Check {
    let lap = LaplaceEngine::airy();
    let window = 5;
    let (one, two) = airy_base_cases(&lap, window).map_err(e2s)?;
    // sqrt(mu) / mu^2 in doubled exponents
    let want_one: MuPoly = [(vec![-3], q(1))].into_iter().collect();
    ensure(one == want_one, || format!("(0,1): {one:?}"))?;
    // sqrt(mu1 mu2) / (mu1 + mu2) = sqrt(mu1/mu2) sum_m (-mu1/mu2)^m, truncated to the window
    let mut want_two = MuPoly::new();
    let mut c = q(1);
    for m in 0.. {
        let e = 2 * m + 1;
        if e > 2 * window {
            break;
        }
        want_two.insert(vec![e, -e], c.clone());
        c = -c;
    }
    ensure(two == want_two, || format!("(0,2): {two:?}"))?;

    let table = psi_table(&lap, 4).map_err(e2s)?;
    let mut dvv = Dvv(HashMap::new());
    for ((g, idx), v) in &table.entries {
        let o = dvv.get(*g, idx);
        ensure(*v == o, || format!("<{idx:?}>_{g} = {v}, DVV gives {o}"))?;
    }
    let tr = TrEngine::new(resolve_curve("airy").map_err(e2s)?);
    let mut from_tr = 0;
    for g in 0..=3u32 {
        for n in 1..=6usize {
            let chi = 2 * g as i64 + n as i64 - 2;
            if chi < 1 || chi > 4 {
                continue;
            }
            for (k, v) in psi_from_tr(&tr, g, n).map_err(e2s)?.entries {
                ensure(table.entries.get(&k) == Some(&v), || format!("TR read-off {k:?} = {v} not in table"))?;
                from_tr += 1;
            }
        }
    }
    let checks = string_dilaton_check(&table).map_err(e2s)?;
    Ok(format!(
        "base cases exact; {} entries = DVV; {from_tr} TR read-offs match; {checks} string/dilaton checks",
        table.entries.len()
    ))
}

fn c6() -> Check {
    let lap = LaplaceEngine::lambert();
    let mut count = 0;
    for g in 0..=1u32 {
        for d in 1..=4u64 {
            for mu in partitions(d, d as usize) {
                let a = hurwitz_number(&lap, g, &mu).map_err(e2s)?;
                let b = brute_force_hurwitz(g, &mu).map_err(e2s)?;
                ensure(a == b, || format!("g={g} mu={mu:?}: ELSV {a} vs count {b}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} Hurwitz numbers equal to direct counts"))
}

fn c7() -> Check {
    for name in ["airy", "lambert"] {
        let c = resolve_curve(name).map_err(e2s)?;
        let tr = TrEngine::new(c.clone());
        let xy = XyTransform::new(c.clone()).map_err(e2s)?;
        for n in 1..=3 {
            if c.y.is_rational() {
                let a = xy.wn_disconnected(n, 2).map_err(e2s)?;
                let b = wn_disconnected_from_tr(&tr, n, 2).map_err(e2s)?;
                ensure(a == b, || format!("{name} n={n}: disconnected routes differ"))?;
            }
            let a = xy.wn_disconnected_stable(n, 2).map_err(e2s)?;
            let b = wn_disconnected_stable_from_tr(&tr, n, 2).map_err(e2s)?;
            ensure(a == b, || format!("{name} n={n}: disconnected routes without W_(0,1) differ"))?;
        }
        let p = xy.phi_hat_1(0, 2).map_err(e2s)?;
        let lead = p.rational.coeff(0).map_err(e2s)?;
        ensure(lead == c.x.rat.mul(&MultiRat::var(uvar(0))) && p.u_log == c.x.log, || {
            format!("{name}: hbar^0 part of the 1-point weight is not u x")
        })?;
    }
    let lap = LaplaceEngine::airy();
    let table = psi_table(&lap, 3).map_err(e2s)?;
    for n in 1..=3 {
        let (l, r) = psi_disconnected(&lap, &table, n, 2, 4).map_err(e2s)?;
        ensure(l == r, || format!("Airy disconnected n={n} differs"))?;
        let lead: MuPoly = [(vec![-3; n], q(1))].into_iter().collect();
        ensure(r.get(&-(n as i32)) == Some(&lead), || format!("Airy leading order n={n}"))?;
        ensure(r.keys().all(|&h| h >= -(n as i32)), || format!("Airy n={n} below hbar^-n"))?;
    }
    let ll = LaplaceEngine::lambert();
    for ks in [vec![1u64], vec![2, 1], vec![1, 2, 2], vec![3, 1, 1]] {
        let (l, r) = hodge_disconnected(&ll, &ks, 2).map_err(e2s)?;
        ensure(l == r, || format!("Lambert disconnected {ks:?} differs"))?;
        // prod (1/k) res z^{-k-1} e^{k z} dz
        let mut lead = q(1);
        for &k in &ks {
            let mut coeff = q(1);
            for j in 1..=k {
                coeff = coeff * q(k as i64) / q(j as i64);
            }
            lead *= coeff / q(k as i64);
        }
        let n = ks.len() as i32;
        ensure(r.get(&-n) == Some(&lead), || format!("Lambert leading order {ks:?}: {:?} vs {lead}", r.get(&-n)))?;
    }
    Ok("xy vs TR disconnected (n<=3, both curves), Airy and Lambert corollaries, leading orders".into())
}

fn c8() -> Check {
    let lap = LaplaceEngine::airy();
    for n in 2..=3 {
        let base = psi_intersections(&lap, n, 3, &permutations(n)[0]).map_err(e2s)?;
        for p in permutations(n) {
            let t = psi_intersections(&lap, n, 3, &p).map_err(e2s)?;
            ensure(t == base, || format!("psi table changes under order {p:?}"))?;
        }
    }
    let ll = LaplaceEngine::lambert();
    for ks in [vec![2u64, 1], vec![2, 1, 3]] {
        let n = ks.len();
        let base = hodge_integrals(&ll, &ks, 1, &permutations(n)[0]).map_err(e2s)?;
        for p in permutations(n) {
            let v = hodge_integrals(&ll, &ks, 1, &p).map_err(e2s)?;
            ensure(v == base, || format!("Hodge {ks:?} changes under order {p:?}"))?;
        }
    }
    Ok("all orders for n = 2, 3 give identical entries".into())
}

fn c9() -> Check {
    let mut checked = 0;
    for name in ["airy", "lambert", "lambert-bad"] {
        let xy = XyTransform::new(resolve_curve(name).map_err(e2s)?).map_err(e2s)?;
        let s = xy.wn_via_xy(2, 4, Path::General).map_err(e2s)?;
        for order in 1..=4 {
            let w = s.coeff(order).map_err(e2s)?;
            let diag = w.den().iter().find(|(f, _)| matches!(f, Factor::Diff { .. }));
            ensure(diag.is_none(), || format!("{name} hbar^{order}: pole on the diagonal {diag:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} coefficients free of (z1-z2) poles"))
}

fn c10() -> Check {
    Ok("NOTE: results on general higher-genus curves and Theta-function regularization are not desk-checkable and are excluded".into())
}

/// Bypasses libtest capture so the verdicts show in plain `cargo test` output.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

#[test]
fn acceptance() {
    let small = Duration::from_secs(5);
    let ten = Duration::from_secs(600);
    let criteria: Vec<(u32, &str, Duration, fn() -> Check)> = vec![
        (1, "golden W_{1,1} on lambert", small, c1),
        (2, "negative control on lambert-bad", small, c2),
        (3, "x-y equivalence suite", ten, c3),
        (4, "diagonal regularization constant", ten, c4),
        (5, "psi intersection numbers", ten, c5),
        (6, "Hurwitz numbers vs direct count", Duration::from_secs(900), c6),
        (7, "disconnected identities", ten, c7),
        (8, "integration order independence", ten, c8),
        (9, "diagonal pole cancellation", ten, c9),
        (10, "scope note", ten, c10),
    ];
    let mut failed = BTreeMap::new();
    report(String::new());
    for (id, title, limit, f) in criteria {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let dt = t.elapsed();
        let r = r.and_then(|m| if dt > limit { Err(format!("{m}; too slow")) } else { Ok(m) });
        let timing = format!("{:.2}s, limit {}s, tolerance exact", dt.as_secs_f64(), limit.as_secs());
        match r {
            Ok(m) => report(format!("PASS {id:>2} {title}: {m} ({timing})")),
            Err(m) => {
                report(format!("FAIL {id:>2} {title}: {m} ({timing})"));
                failed.insert(id, m);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed.keys().collect::<Vec<_>>());
}
