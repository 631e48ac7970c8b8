//! Curve expressions, canonical printing and the on-disk correlator cache.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::algebra::multirat::split_linear;
use crate::algebra::poly::var_name;
use crate::algebra::scalar::{fmt_scalar, parse_scalar};
use crate::algebra::{Factor, Monomial, MultiRat, Poly, Scalar, Var};
use crate::curve::{CurveFn, SpectralCurve, Z};
use crate::error::{Error, Result};
use crate::tr::TrEngine;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigInt),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Log(Box<Expr>, usize),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn perr<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos, msg: msg.into() })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let digits = self.digits();
        if digits.is_empty() {
            return perr(at, "exponent must be an integer literal");
        }
        if paren && !self.eat(b')') {
            return perr(self.pos, "expected ')'");
        }
        let e: i32 = digits.parse().map_err(|_| Error::Parse { pos: at, msg: "exponent too large".into() })?;
        Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(Expr::Num(self.digits().parse().unwrap())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return perr(self.pos, "expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    if name != "log" {
                        return perr(start, format!("unsupported function {name:?}"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return perr(self.pos, "expected ')'");
                    }
                    return Ok(Expr::Log(Box::new(arg), start));
                }
                if name == "z" {
                    return Ok(Expr::Var(Z));
                }
                if let Some(k) = name.strip_prefix('z').and_then(|d| d.parse::<u16>().ok()) {
                    if (1..=64).contains(&k) {
                        return Ok(Expr::Var(k - 1));
                    }
                }
                perr(start, format!("unknown identifier {name:?}"))
            }
            Some(c) => perr(at, format!("unexpected character {:?}", c as char)),
            None => perr(at, "unexpected end of input"),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return perr(p.pos, "trailing input");
    }
    Ok(e)
}

/// Evaluates an expression as `rational + c*log(z)`.
pub fn eval_curve_fn(e: &Expr) -> Result<CurveFn> {
    let const_of = |f: &CurveFn| -> Option<Scalar> {
        if f.is_rational() {
            f.rat.as_constant()
        } else {
            None
        }
    };
    Ok(match e {
        Expr::Num(n) => CurveFn::rational(MultiRat::constant(Scalar::from_integer(n.clone()))),
        Expr::Var(v) => CurveFn::rational(MultiRat::var(*v)),
        Expr::Neg(a) => {
            let a = eval_curve_fn(a)?;
            CurveFn::new(a.rat.neg(), -a.log)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let a = eval_curve_fn(a)?;
            let mut b = eval_curve_fn(b)?;
            if matches!(e, Expr::Sub(..)) {
                b = CurveFn::new(b.rat.neg(), -b.log);
            }
            CurveFn::new(a.rat.add(&b.rat), a.log + b.log)
        }
        Expr::Mul(a, b) => {
            let a = eval_curve_fn(a)?;
            let b = eval_curve_fn(b)?;
            if a.is_rational() && b.is_rational() {
                CurveFn::rational(a.rat.mul(&b.rat))
            } else if let Some(c) = const_of(&a) {
                CurveFn::new(b.rat.scale(&c), b.log * c)
            } else if let Some(c) = const_of(&b) {
                CurveFn::new(a.rat.scale(&c), a.log * c)
            } else {
                return Err(Error::Unsupported("log(z) may only be scaled by a constant".into()));
            }
        }
        Expr::Div(a, b) => {
            let a = eval_curve_fn(a)?;
            let b = eval_curve_fn(b)?;
            if !b.is_rational() {
                return Err(Error::Unsupported("division by log(z)".into()));
            }
            if a.is_rational() {
                CurveFn::rational(a.rat.div(&b.rat)?)
            } else {
                let c = b
                    .rat
                    .as_constant()
                    .ok_or_else(|| Error::Unsupported("log(z) may only be scaled by a constant".into()))?;
                if c.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                CurveFn::new(a.rat.scale(&c.recip()), a.log / c)
            }
        }
        Expr::Pow(a, k) => {
            let a = eval_curve_fn(a)?;
            if !a.is_rational() {
                return Err(Error::Unsupported("powers of log(z)".into()));
            }
            CurveFn::rational(a.rat.pow(*k)?)
        }
        Expr::Log(arg, pos) => {
            let a = eval_curve_fn(arg)?;
            if !(a.is_rational() && a.rat == MultiRat::var(Z)) {
                return perr(*pos, "unsupported log argument; only log(z) is allowed");
            }
            CurveFn::new(MultiRat::zero(), Scalar::one())
        }
    })
}

pub fn parse_multirat(text: &str) -> Result<MultiRat> {
    let f = eval_curve_fn(&parse_expression(text)?)?;
    if !f.is_rational() {
        return Err(Error::Unsupported("expected a rational function".into()));
    }
    Ok(f.rat)
}

pub fn parse_curve_fn(text: &str) -> Result<CurveFn> {
    let f = eval_curve_fn(&parse_expression(text)?)?;
    if f.rat.vars().iter().any(|&v| v != Z) {
        return Err(Error::Domain("curve functions depend on z only".into()));
    }
    Ok(f)
}

fn name_of(v: Var, uni: bool) -> String {
    if uni {
        "z".into()
    } else {
        var_name(v)
    }
}

fn fmt_factor(f: &Factor, k: u32, uni: bool) -> String {
    let base = match f {
        Factor::Lin { var, root } if root.is_zero() => name_of(*var, uni),
        Factor::Lin { var, root } if root.is_negative() => {
            format!("({}+{})", name_of(*var, uni), fmt_scalar(&-root.clone()))
        }
        Factor::Lin { var, root } => format!("({}-{})", name_of(*var, uni), fmt_scalar(root)),
        Factor::Diff { a, b } => format!("({}-{})", name_of(*a, uni), name_of(*b, uni)),
    };
    if k == 1 {
        base
    } else {
        format!("{base}^{k}")
    }
}

fn fmt_monomial(m: &Monomial, uni: bool) -> String {
    m.0.iter()
        .map(|&(v, e)| if e == 1 { name_of(v, uni) } else { format!("{}^{e}", name_of(v, uni)) })
        .collect::<Vec<_>>()
        .join("*")
}

fn fmt_poly(p: &Poly, uni: bool) -> String {
    let mut terms: Vec<(&Monomial, &Scalar)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
    let mut s = String::new();
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        let body = if m.0.is_empty() {
            fmt_scalar(&a)
        } else if a.is_one() {
            fmt_monomial(m, uni)
        } else {
            format!("{}*{}", fmt_scalar(&a), fmt_monomial(m, uni))
        };
        match (i, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push('-'),
            (_, false) => s.push('+'),
        }
        s.push_str(&body);
    }
    s
}

/// Positive rational `c` with `p / c` an integer polynomial with coprime coefficients.
fn content(p: &Poly) -> Scalar {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (_, c) in p.terms() {
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    Scalar::new(num, den)
}

/// Canonical text of a rational function; `z` for univariate input in `z`, `z1, z2, ...`
/// otherwise.
pub fn format_multirat(f: &MultiRat) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let uni = f.vars().iter().all(|&v| v == Z);
    let (lin, rest) = split_linear(f.num());
    let c = content(&rest);
    let mut rest = rest.scale(&c.recip());
    let mut sign = false;
    if let Some(k) = rest.as_constant() {
        sign = k.is_negative();
        rest = Poly::one();
    }
    let mut items: Vec<String> = lin.iter().map(|(fac, k)| fmt_factor(fac, *k, uni)).collect();
    let has_den = !f.den().is_empty() || !c.denom().is_one();
    if !rest.is_one_poly() {
        let text = fmt_poly(&rest, uni);
        let multi = rest.len() > 1;
        if multi && (!items.is_empty() || !c.numer().is_one() || has_den) {
            items.push(format!("({text})"));
        } else {
            items.push(text);
        }
    }
    let a = Scalar::from_integer(c.numer().clone());
    let mut num = match (items.is_empty(), a.is_one()) {
        (true, _) => fmt_scalar(&a),
        (false, true) => items.join("*"),
        (false, false) => format!("{}*{}", fmt_scalar(&a), items.join("*")),
    };
    if sign {
        num = format!("-{num}");
    }
    let mut den: Vec<String> = Vec::new();
    if !c.denom().is_one() {
        den.push(c.denom().to_string());
    }
    for (fac, &k) in f.den() {
        den.push(fmt_factor(fac, k, uni));
    }
    match den.len() {
        0 => num,
        1 => format!("{num}/{}", den[0]),
        _ => format!("{num}/({})", den.join("*")),
    }
}

pub fn format_curve_fn(f: &CurveFn) -> String {
    let mut s = if f.rat.is_zero() && !f.log.is_zero() { String::new() } else { format_multirat(&f.rat) };
    if !f.log.is_zero() {
        let a = f.log.abs();
        let body = if a.is_one() { "log(z)".to_string() } else { format!("{}*log(z)", fmt_scalar(&a)) };
        match (s.is_empty(), f.log.is_negative()) {
            (true, true) => s = format!("-{body}"),
            (true, false) => s = body,
            (false, true) => s = format!("{s}-{body}"),
            (false, false) => s = format!("{s}+{body}"),
        }
    }
    s
}

trait OnePoly {
    fn is_one_poly(&self) -> bool;
}

impl OnePoly for Poly {
    fn is_one_poly(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub name: String,
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramification: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub involution: Option<String>,
}

impl CurveSpec {
    pub fn build(&self) -> Result<SpectralCurve> {
        let x = parse_curve_fn(&self.x)?;
        let y = parse_curve_fn(&self.y)?;
        let declared = match &self.ramification {
            Some(pts) => Some(pts.iter().map(|p| parse_scalar(p)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let c = SpectralCurve::new(&self.name, x, y, declared)?;
        match &self.involution {
            None => Ok(c),
            Some(text) => {
                let sigma = parse_multirat(text)?;
                let pts = c.ramification_points().to_vec();
                if pts.len() != 1 {
                    return Err(Error::Domain("an explicit involution needs exactly one branch point".into()));
                }
                c.with_involution(pts[0].clone(), sigma)
            }
        }
    }
}

pub const BUILTINS: [&str; 3] = ["airy", "lambert", "lambert-bad"];

pub fn builtin_spec(name: &str) -> Option<CurveSpec> {
    let (x, y, inv) = match name {
        "airy" => ("z^2/2", "z", Some("-z")),
        "lambert" => ("-z+log(z)", "log(z)", None),
        "lambert-bad" => ("-z+log(z)", "z", None),
        _ => return None,
    };
    Some(CurveSpec {
        name: name.into(),
        x: x.into(),
        y: y.into(),
        ramification: None,
        involution: inv.map(Into::into),
    })
}

/// A builtin name, or a path to a JSON `CurveSpec`.
pub fn resolve_curve(name_or_path: &str) -> Result<SpectralCurve> {
    if let Some(s) = builtin_spec(name_or_path) {
        return s.build();
    }
    let text = std::fs::read_to_string(name_or_path)
        .map_err(|e| Error::Io(format!("{name_or_path}: not a builtin curve and not readable ({e})")))?;
    let spec: CurveSpec = serde_json::from_str(&text).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })?;
    spec.build()
}

pub const SCHEMA: u64 = 1;

pub fn density_json(f: &MultiRat, n: usize) -> Result<Value> {
    let mut num = Vec::new();
    for (m, c) in f.num().terms() {
        let mut ev = vec![0u32; n];
        for &(v, e) in &m.0 {
            if v as usize >= n {
                return Err(Error::Cache(format!("variable {} outside the {n} slots", var_name(v))));
            }
            ev[v as usize] = e;
        }
        num.push(json!([ev, fmt_scalar(c)]));
    }
    let den: Vec<Value> = f
        .den()
        .iter()
        .map(|(fac, &k)| match fac {
            Factor::Lin { var, root } => json!({"lin": [var, fmt_scalar(root)], "pow": k}),
            Factor::Diff { a, b } => json!({"diff": [a, b], "pow": k}),
        })
        .collect();
    Ok(json!({"num": num, "den": den}))
}

fn density_from_json(v: &Value) -> Result<MultiRat> {
    let bad = || Error::Cache("malformed density record".into());
    let mut terms = Vec::new();
    for t in v["num"].as_array().ok_or_else(bad)? {
        let ev = t[0].as_array().ok_or_else(bad)?;
        let mut m = Vec::new();
        for (i, e) in ev.iter().enumerate() {
            let e = e.as_u64().ok_or_else(bad)? as u32;
            if e > 0 {
                m.push((i as Var, e));
            }
        }
        let c = parse_scalar(t[1].as_str().ok_or_else(bad)?).map_err(|_| bad())?;
        terms.push((Monomial(m), c));
    }
    let mut den = BTreeMap::new();
    for d in v["den"].as_array().ok_or_else(bad)? {
        let k = d["pow"].as_u64().ok_or_else(bad)? as u32;
        let fac = if let Some(l) = d.get("lin") {
            let var = l[0].as_u64().ok_or_else(bad)? as Var;
            let root = parse_scalar(l[1].as_str().ok_or_else(bad)?).map_err(|_| bad())?;
            Factor::Lin { var, root }
        } else if let Some(p) = d.get("diff") {
            let a = p[0].as_u64().ok_or_else(bad)? as Var;
            let b = p[1].as_u64().ok_or_else(bad)? as Var;
            if a >= b {
                return Err(bad());
            }
            Factor::Diff { a, b }
        } else {
            return Err(bad());
        };
        den.insert(fac, k);
    }
    Ok(MultiRat::new(Poly::from_terms(terms), den))
}

fn checksum(payload: &Value) -> String {
    hex::encode(Sha256::digest(payload.to_string().as_bytes()))
}

/// Correlator densities on disk, one checksummed JSON file per `(curve, g, n)`.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

pub const CACHE_ENV: &str = "XYTR_CACHE_DIR";

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$XYTR_CACHE_DIR`, else `fallback`.
    pub fn from_env(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Cache::new(PathBuf::from(d)),
            _ => Cache::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn curve_dir(&self, curve: &str) -> Result<PathBuf> {
        if curve.is_empty() || !curve.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::Cache(format!("curve id {curve:?} is not a plain name")));
        }
        Ok(self.dir.join(curve))
    }

    pub fn path(&self, curve: &str, g: u32, n: usize) -> Result<PathBuf> {
        Ok(self.curve_dir(curve)?.join(format!("g{g}_n{n}.json")))
    }

    pub fn store(&self, curve: &str, g: u32, n: usize, density: &MultiRat) -> Result<PathBuf> {
        let dir = self.curve_dir(curve)?;
        std::fs::create_dir_all(&dir)?;
        let payload = json!({
            "curve": curve,
            "g": g,
            "n": n,
            "density": density_json(density, n)?,
            "schema": SCHEMA,
        });
        let mut record = payload.clone();
        record["sha256"] = Value::String(checksum(&payload));
        let path = self.path(curve, g, n)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(serde_json::to_string_pretty(&record)?.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(path)
    }

    /// `None` when absent; an error when present but unreadable, of another schema
    /// version, or failing its checksum.
    pub fn load(&self, curve: &str, g: u32, n: usize) -> Result<Option<MultiRat>> {
        let path = self.path(curve, g, n)?;
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut record: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
        let schema = record["schema"].as_u64();
        if schema != Some(SCHEMA) {
            return Err(Error::Cache(format!(
                "{}: schema version {:?}, expected {SCHEMA}",
                path.display(),
                record["schema"]
            )));
        }
        let stored = record
            .as_object_mut()
            .and_then(|o| o.remove("sha256"))
            .and_then(|v| v.as_str().map(String::from))
            .ok_or_else(|| Error::Cache(format!("{}: missing checksum", path.display())))?;
        if checksum(&record) != stored {
            return Err(Error::Cache(format!("{}: checksum mismatch", path.display())));
        }
        if record["curve"] != curve || record["g"] != g || record["n"] != n {
            return Err(Error::Cache(format!("{}: record does not match its key", path.display())));
        }
        Ok(Some(density_from_json(&record["density"])?))
    }

    /// Every stored `(g, n)` of a curve, sorted.
    pub fn entries(&self, curve: &str) -> Result<Vec<(u32, usize)>> {
        let dir = self.curve_dir(curve)?;
        let mut out = Vec::new();
        let rd = match std::fs::read_dir(&dir) {
            Ok(r) => r,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        for ent in rd {
            let name = ent?.file_name().to_string_lossy().into_owned();
            let Some(stem) = name.strip_suffix(".json") else { continue };
            let Some((g, n)) = stem.strip_prefix('g').and_then(|s| s.split_once("_n")) else { continue };
            if let (Ok(g), Ok(n)) = (g.parse(), n.parse()) {
                out.push((g, n));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn clear(&self, curve: &str) -> Result<usize> {
        let entries = self.entries(curve)?;
        for &(g, n) in &entries {
            std::fs::remove_file(self.path(curve, g, n)?)?;
        }
        Ok(entries.len())
    }

    /// Loads every stored density of the engine's curve into its memo.
    pub fn warm(&self, tr: &TrEngine) -> Result<usize> {
        let name = tr.curve().name.clone();
        let mut k = 0;
        for (g, n) in self.entries(&name)? {
            if let Some(d) = self.load(&name, g, n)? {
                tr.preload(g, n, d);
                k += 1;
            }
        }
        Ok(k)
    }

    /// Stores every memoized density of the engine not yet on disk.
    pub fn persist(&self, tr: &TrEngine) -> Result<usize> {
        let name = tr.curve().name.clone();
        let have = self.entries(&name)?;
        let mut k = 0;
        for ((g, n), d) in tr.cached() {
            if !have.contains(&(g, n)) {
                self.store(&name, g, n, &d)?;
                k += 1;
            }
        }
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::q;
    use crate::curve::{airy, lambert};

    #[test]
    fn parse_and_print() {
        let x = parse_curve_fn("-z + log(z)").unwrap();
        assert_eq!(x, lambert().x);
        assert_eq!(parse_curve_fn("z^2/2").unwrap(), airy().x);
        assert!(matches!(parse_expression("log(z+1)").map(|e| eval_curve_fn(&e)), Ok(Err(Error::Parse { pos: 0, .. }))));
        assert!(matches!(parse_expression("sin(z)"), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(parse_expression("z +* 2"), Err(Error::Parse { pos: 3, .. })));
        assert_eq!(parse_multirat("-z^2").unwrap(), MultiRat::var(0).pow(2).unwrap().neg());
        assert_eq!(parse_multirat("2^-1").unwrap(), MultiRat::constant(crate::algebra::qf(1, 2)));
        assert_eq!(parse_multirat("8/4/2").unwrap(), MultiRat::constant(q(1)));
        assert_eq!(parse_multirat("1-2-3").unwrap(), MultiRat::constant(q(-4)));
        let w = parse_multirat("z^2*(z-4)/(24*(z-1)^5)").unwrap();
        assert_eq!(format_multirat(&w), "z^2*(z-4)/(24*(z-1)^5)");
        let b = parse_multirat("(-6*z^2+4*z-1)/(24*z*(z-1)^5)").unwrap();
        assert_eq!(format_multirat(&b), "(-6*z^2+4*z-1)/(24*z*(z-1)^5)");
        assert_eq!(format_multirat(&parse_multirat("-1/(8*z^4)").unwrap()), "-1/(8*z^4)");
        assert_eq!(format_curve_fn(&lambert().x), "-z+log(z)");
        assert_eq!(format_curve_fn(&lambert().y), "log(z)");
        for t in ["z1^2*z2/(z1-z2)^2", "3/2*z+1/3", "-z/(z+1/2)", "(z1+z2)/(z1*z2)", "0", "7"] {
            let f = parse_multirat(t).unwrap();
            let s = format_multirat(&f);
            assert_eq!(parse_multirat(&s).unwrap(), f, "{t} -> {s}");
            assert_eq!(format_multirat(&parse_multirat(&s).unwrap()), s);
        }
    }

    #[test]
    fn builtins_build() {
        for name in BUILTINS {
            let c = resolve_curve(name).unwrap();
            assert_eq!(c.name, name);
        }
        assert_eq!(resolve_curve("airy").unwrap().x, airy().x);
        let spec = builtin_spec("airy").unwrap();
        let back: CurveSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(resolve_curve("/nonexistent/curve.json").is_err());
    }

    #[test]
    fn cache_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let tr = TrEngine::new(lambert());
        let w = tr.density(1, 1).unwrap();
        let b = tr.density(0, 3).unwrap();
        cache.store("lambert", 1, 1, &w).unwrap();
        cache.store("lambert", 1, 1, &w).unwrap();
        cache.store("lambert", 0, 3, &b).unwrap();
        assert_eq!(cache.load("lambert", 1, 1).unwrap(), Some(w.clone()));
        assert_eq!(cache.load("lambert", 0, 3).unwrap(), Some(b));
        assert_eq!(cache.load("lambert", 2, 1).unwrap(), None);
        assert_eq!(cache.entries("lambert").unwrap(), vec![(0, 3), (1, 1)]);

        let path = cache.path("lambert", 1, 1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"schema\": 1", "\"schema\": 2")).unwrap();
        assert!(matches!(cache.load("lambert", 1, 1), Err(Error::Cache(m)) if m.contains("schema")));
        std::fs::write(&path, text.replacen("\"-", "\"-1", 1)).unwrap();
        assert!(matches!(cache.load("lambert", 1, 1), Err(Error::Cache(m)) if m.contains("checksum")));
        assert!(cache.store("../x", 0, 3, &w).is_err());

        let fresh = TrEngine::new(lambert());
        std::fs::write(&path, &text).unwrap();
        assert_eq!(cache.warm(&fresh).unwrap(), 2);
        assert_eq!(fresh.density(1, 1).unwrap(), w);
    }
}
