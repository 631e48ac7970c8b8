use std::sync::OnceLock;

use num_traits::Zero;
use proptest::prelude::*;
use xytr_core::algebra::{q, qf, Laurent, MultiRat, Scalar};
use xytr_core::io::{format_multirat, parse_multirat, Cache};
use xytr_core::laplace::{brute_force_hurwitz, hodge_value, hurwitz_number, LaplaceEngine};

fn lambert() -> &'static LaplaceEngine {
    static L: OnceLock<LaplaceEngine> = OnceLock::new();
    L.get_or_init(LaplaceEngine::lambert)
}

fn scalar() -> impl Strategy<Value = Scalar> {
    (-9i64..=9, 1i64..=6).prop_map(|(a, b)| qf(a, b))
}

/// Small rational functions in up to three variables with poles at 0, 1, -2 and on diagonals.
fn multirat() -> impl Strategy<Value = MultiRat> {
    let term = (scalar(), 0u16..3, 0i32..3, 0u16..3, 0i32..2);
    let den = prop::collection::vec((0u16..3, 0usize..5, 1i32..3), 0..3);
    (prop::collection::vec(term, 1..4), den).prop_map(|(terms, den)| {
        let mut num = MultiRat::zero();
        for (c, v, e, w, f) in terms {
            let t = MultiRat::var(v).pow(e).unwrap().mul(&MultiRat::var(w).pow(f).unwrap()).scale(&c);
            num = num.add(&t);
        }
        let mut d = MultiRat::one();
        for (v, kind, k) in den {
            let zv = MultiRat::var(v);
            let f = match kind {
                0 => zv,
                1 => zv.sub(&MultiRat::one()),
                2 => zv.add(&MultiRat::constant(q(2))),
                _ => zv.sub(&MultiRat::var((v + 1) % 3)),
            };
            if !f.is_zero() {
                d = d.mul(&f.pow(k).unwrap());
            }
        }
        num.div(&d).unwrap()
    })
}

fn linear_product() -> impl Strategy<Value = MultiRat> {
    (scalar(), prop::collection::vec((0u16..3, -3i64..=3, any::<bool>()), 0..4)).prop_map(|(c, fs)| {
        let mut p = MultiRat::constant(if c.is_zero() { q(1) } else { c });
        for (v, r, diag) in fs {
            let f = if diag && v > 0 {
                MultiRat::var(v).sub(&MultiRat::var(v - 1))
            } else {
                MultiRat::var(v).sub(&MultiRat::constant(q(r)))
            };
            p = p.mul(&f);
        }
        p
    })
}

fn series() -> impl Strategy<Value = Laurent<Scalar>> {
    prop::collection::vec(scalar(), 1..6).prop_map(|cs| Laurent::new(1, cs, 7))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_then_parse_is_identity(f in multirat()) {
        let text = format_multirat(&f);
        prop_assert_eq!(parse_multirat(&text).unwrap(), f);
    }

    #[test]
    fn field_identities(a in multirat(), b in multirat(), l in linear_product()) {
        prop_assert_eq!(a.add(&b).sub(&b), a.clone());
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&l).div(&l).unwrap(), a.clone());
        prop_assert_eq!(a.div(&l).unwrap().mul(&l), a.clone());
        prop_assert_eq!(a.add(&b).mul(&l), a.mul(&l).add(&b.mul(&l)));
    }

    #[test]
    fn log_inverts_exp(s in series()) {
        let e = s.exp().unwrap();
        prop_assert_eq!(e.log().unwrap(), s.clone());
        let one = Laurent::constant(q(1)).with_prec(7);
        prop_assert_eq!(e.mul(&s.neg().exp().unwrap()), one);
    }

    #[test]
    fn inverse_and_composition(s in series(), c in scalar()) {
        prop_assume!(!c.is_zero());
        let u = s.add(&Laurent::constant(c.clone()));
        let prod = u.mul(&u.inv().unwrap());
        prop_assert_eq!(prod, Laurent::constant(q(1)).with_prec(7));
        // t + s composed into its own series reversion gives t
        let lin = Laurent::t().scale(&c).add(&s.shift(1));
        let mut r = Laurent::t().scale(&(q(1) / c.clone())).with_prec(7);
        for _ in 0..7 {
            let err = lin.compose(&r).unwrap().sub(&Laurent::t());
            r = r.sub(&err.scale(&(q(1) / c.clone())));
        }
        prop_assert_eq!(lin.compose(&r).unwrap(), Laurent::t().with_prec(7));
    }

    #[test]
    fn cache_round_trip(f in multirat(), g in 0u32..3, n in 3usize..5) {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        c.store("prop", g, n, &f).unwrap();
        prop_assert_eq!(c.load("prop", g, n).unwrap(), Some(f));
        prop_assert_eq!(c.load("prop", g, n + 1).unwrap(), None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hodge_symmetric_in_points(ks in prop::collection::vec(1u64..4, 1..4), g in 0u32..2, rot in 0usize..3) {
        prop_assume!(!(g == 0 && ks.len() < 3));
        let mut p = ks.clone();
        p.rotate_left(rot % ks.len());
        let last = p.len() - 1;
        p.swap(0, last);
        prop_assert_eq!(hodge_value(lambert(), g, &ks).unwrap(), hodge_value(lambert(), g, &p).unwrap());
    }

    #[test]
    fn hurwitz_symmetric_and_matches_count(mu in prop::collection::vec(1u64..3, 1..4), g in 0u32..2) {
        let mut r = mu.clone();
        r.reverse();
        let a = hurwitz_number(lambert(), g, &mu).unwrap();
        prop_assert_eq!(&a, &hurwitz_number(lambert(), g, &r).unwrap());
        prop_assert_eq!(a, brute_force_hurwitz(g, &mu).unwrap());
    }
}
