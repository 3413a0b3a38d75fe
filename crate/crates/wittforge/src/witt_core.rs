//! Universal p-typical Witt polynomials and truncated Witt vectors.
//!
//! The sum and product polynomials are produced by the ghost recursion
//!
//! ```text
//! phi_i = (Phi(W_i(X), W_i(Y)) - sum_{k<i} p^k phi_k^{p^{i-k}}) / p^i
//! ```
//!
//! with exact integer division, and kept in a process-wide cache that can be
//! backed by a directory of text files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::{is_prime, Error, Result};

/// Largest supported index (exponent vectors are packed into fixed arrays).
pub const MAX_INDEX: usize = 7;
const SLOTS: usize = 2 * (MAX_INDEX + 1);
pub const DEFAULT_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WittKind {
    Sum,
    Product,
    Negation,
}

impl WittKind {
    pub fn name(self) -> &'static str {
        match self {
            WittKind::Sum => "sum",
            WittKind::Product => "product",
            WittKind::Negation => "negation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(WittKind::Sum),
            "product" => Some(WittKind::Product),
            "negation" => Some(WittKind::Negation),
            _ => None,
        }
    }
}

/// A universal polynomial in `X_0..X_i` (and `Y_0..Y_i` for sums and products).
///
/// Variables are numbered `X_0..X_i` then `Y_0..Y_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivWittPoly {
    pub p: u64,
    pub index: usize,
    pub kind: WittKind,
    /// Monomials in canonical (lexicographic) order.
    pub terms: Vec<(Vec<u32>, BigInt)>,
}

impl UnivWittPoly {
    pub fn nvars(&self) -> usize {
        match self.kind {
            WittKind::Negation => self.index + 1,
            _ => 2 * (self.index + 1),
        }
    }

    pub fn var_name(&self, v: usize) -> String {
        let n = self.index + 1;
        if v < n {
            format!("X{v}")
        } else {
            format!("Y{}", v - n)
        }
    }

    /// `(weight in X, weight in Y)` with `weight(X_j) = weight(Y_j) = p^j`.
    pub fn weights(&self, exps: &[u32]) -> (u64, u64) {
        let n = self.index + 1;
        let mut w = (0u64, 0u64);
        for (v, e) in exps.iter().enumerate() {
            let pw = self.p.pow((v % n) as u32) * *e as u64;
            if v < n {
                w.0 += pw;
            } else {
                w.1 += pw;
            }
        }
        w
    }

    /// Weighted homogeneity: every monomial of a sum polynomial has total
    /// weight `p^i`; products are bihomogeneous of weight `(p^i, p^i)`;
    /// negations have weight `p^i`.
    pub fn is_weighted_homogeneous(&self) -> bool {
        let target = self.p.pow(self.index as u32);
        self.terms.iter().all(|(e, _)| {
            let (wx, wy) = self.weights(e);
            match self.kind {
                WittKind::Sum => wx + wy == target,
                WittKind::Product => wx == target && wy == target,
                WittKind::Negation => wx == target && wy == 0,
            }
        })
    }

    /// Evaluates at integer arguments.
    pub fn eval_int(&self, args: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, k) in e.iter().enumerate() {
                if *k > 0 {
                    t *= args[v].pow(*k);
                }
            }
            acc += t;
        }
        acc
    }

    /// Cache-file body (header plus monomials).
    pub fn serialize(&self) -> String {
        let mut s = format!(
            "wittforge-cache v1 p={} kind={} i={}\n",
            self.p,
            self.kind.name(),
            self.index
        );
        for (e, c) in &self.terms {
            s.push_str(&c.to_string());
            for (v, k) in e.iter().enumerate() {
                let _ = write!(s, " {}^{}", self.var_name(v), k);
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let rest = header
            .strip_prefix("wittforge-cache v1 ")
            .ok_or("bad header")?;
        let mut p = None;
        let mut kind = None;
        let mut index = None;
        for field in rest.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or("bad header field")?;
            match k {
                "p" => p = v.parse::<u64>().ok(),
                "kind" => kind = WittKind::parse(v),
                "i" => index = v.parse::<usize>().ok(),
                _ => return Err(format!("unknown header field {k}")),
            }
        }
        let (p, kind, index) = (
            p.ok_or("missing p")?,
            kind.ok_or("missing kind")?,
            index.ok_or("missing i")?,
        );
        let mut poly = UnivWittPoly {
            p,
            index,
            kind,
            terms: Vec::new(),
        };
        let nv = poly.nvars();
        for line in lines {
            let mut it = line.split_whitespace();
            let c: BigInt = it
                .next()
                .ok_or("empty line")?
                .parse()
                .map_err(|_| "bad coefficient")?;
            let mut e = Vec::with_capacity(nv);
            for (v, tok) in it.enumerate() {
                let (name, k) = tok.split_once('^').ok_or("bad monomial")?;
                if v >= nv || name != poly.var_name(v) {
                    return Err(format!("unexpected variable {name}"));
                }
                e.push(k.parse::<u32>().map_err(|_| "bad exponent")?);
            }
            if e.len() != nv {
                return Err("wrong number of variables".into());
            }
            poly.terms.push((e, c));
        }
        let mut sorted = poly.terms.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        if sorted != poly.terms || poly.terms.iter().any(|(_, c)| c.is_zero()) {
            return Err("monomials not in canonical order".into());
        }
        Ok(poly)
    }
}

type Key = [u16; SLOTS];

/// Scratch multivariate integer polynomial used by the recursion.
#[derive(Clone, Default)]
struct MPoly {
    terms: HashMap<Key, BigInt>,
}

impl MPoly {
    fn mono(key: Key, c: BigInt) -> Self {
        let mut terms = HashMap::new();
        if !c.is_zero() {
            terms.insert(key, c);
        }
        MPoly { terms }
    }

    fn add_assign_scaled(&mut self, o: &MPoly, c: &BigInt) {
        for (k, v) in &o.terms {
            let e = self.terms.entry(*k).or_insert_with(BigInt::zero);
            *e += v * c;
            if e.is_zero() {
                self.terms.remove(k);
            }
        }
    }

    fn mul(&self, o: &MPoly, cap: usize) -> Result<MPoly> {
        let mut out: HashMap<Key, BigInt> =
            HashMap::with_capacity(self.terms.len().max(o.terms.len()) * 2);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                let mut k = *k1;
                for i in 0..SLOTS {
                    k[i] += k2[i];
                }
                *out.entry(k).or_insert_with(BigInt::zero) += c1 * c2;
            }
            if out.len() > cap {
                return Err(Error::Resource(format!(
                    "intermediate polynomial exceeds {cap} monomials"
                )));
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(MPoly { terms: out })
    }

    fn pow(&self, mut e: u64, cap: usize) -> Result<MPoly> {
        let mut r = MPoly::mono([0; SLOTS], BigInt::one());
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b, cap)?;
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b, cap)?;
            }
        }
        Ok(r)
    }
}

fn var_key(slot: usize, e: u16) -> Key {
    let mut k = [0u16; SLOTS];
    k[slot] = e;
    k
}

fn ghost_poly(p: u64, i: usize, y: bool) -> MPoly {
    let off = if y { MAX_INDEX + 1 } else { 0 };
    let mut w = MPoly::default();
    for k in 0..=i {
        let e = p.pow((i - k) as u32) as u16;
        w.add_assign_scaled(
            &MPoly::mono(var_key(off + k, e), BigInt::one()),
            &BigInt::from(p).pow(k as u32),
        );
    }
    w
}

fn to_univ(p: u64, i: usize, kind: WittKind, m: &MPoly) -> UnivWittPoly {
    let n = i + 1;
    let mut terms: Vec<(Vec<u32>, BigInt)> = m
        .terms
        .iter()
        .map(|(k, c)| {
            let mut e: Vec<u32> = (0..n).map(|v| k[v] as u32).collect();
            if kind != WittKind::Negation {
                e.extend((0..n).map(|v| k[MAX_INDEX + 1 + v] as u32));
            }
            (e, c.clone())
        })
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    UnivWittPoly {
        p,
        index: i,
        kind,
        terms,
    }
}

/// Runs the ghost recursion from scratch and returns the polynomials of
/// indices `0..=i`.
pub fn compute_chain(p: u64, i: usize, kind: WittKind, cap: usize) -> Result<Vec<UnivWittPoly>> {
    if !is_prime(p) {
        return Err(Error::Config(format!("{p} is not prime")));
    }
    if i > MAX_INDEX {
        return Err(Error::Resource(format!(
            "index {i} beyond supported range {MAX_INDEX}"
        )));
    }
    if kind == WittKind::Negation {
        return negation_chain(p, i, cap);
    }
    let pb = BigInt::from(p);
    let mut out = Vec::with_capacity(i + 1);
    let mut powers: Vec<MPoly> = Vec::new();
    for lvl in 0..=i {
        for pw in powers.iter_mut() {
            *pw = pw.pow(p, cap)?;
        }
        let (wx, wy) = (ghost_poly(p, lvl, false), ghost_poly(p, lvl, true));
        let mut num = match kind {
            WittKind::Sum => {
                let mut s = wx.clone();
                s.add_assign_scaled(&wy, &BigInt::one());
                s
            }
            _ => wx.mul(&wy, cap)?,
        };
        for (k, pw) in powers.iter().enumerate() {
            num.add_assign_scaled(pw, &-pb.pow(k as u32));
        }
        let d = pb.pow(lvl as u32);
        for (k, c) in num.terms.iter_mut() {
            let (qq, r) = c.div_rem(&d);
            if !r.is_zero() {
                return Err(Error::Internal(format!(
                    "ghost recursion not exact at index {lvl}, monomial {k:?}"
                )));
            }
            *c = qq;
        }
        if num.terms.len() > cap {
            return Err(Error::Resource(format!(
                "index {lvl} exceeds {cap} monomials"
            )));
        }
        out.push(to_univ(p, lvl, kind, &num));
        powers.push(num);
    }
    Ok(out)
}

fn from_univ(poly: &UnivWittPoly) -> MPoly {
    let n = poly.index + 1;
    let mut m = MPoly::default();
    for (e, c) in &poly.terms {
        let mut k = [0u16; SLOTS];
        for (v, x) in e.iter().enumerate() {
            let slot = if v < n { v } else { MAX_INDEX + 1 + v - n };
            k[slot] = *x as u16;
        }
        m.add_assign_scaled(&MPoly::mono(k, BigInt::one()), c);
    }
    m
}

/// Symbolic check of the ghost identity for a chain `F_0..F_i` of sum or
/// product polynomials: `W_i(F_0, .., F_i) = W_i(X) + W_i(Y)` (resp. `*`).
pub fn ghost_identity_holds(chain: &[Arc<UnivWittPoly>], cap: usize) -> Result<bool> {
    let Some(last) = chain.last() else {
        return Ok(true);
    };
    let (p, i, kind) = (last.p, last.index, last.kind);
    if kind == WittKind::Negation
        || chain
            .iter()
            .enumerate()
            .any(|(k, f)| f.index != k || f.kind != kind)
    {
        return Err(Error::Config(
            "ghost check needs a full sum or product chain".into(),
        ));
    }
    let pb = BigInt::from(p);
    let mut lhs = MPoly::default();
    for (k, f) in chain.iter().enumerate() {
        let pw = from_univ(f).pow(p.pow((i - k) as u32), cap)?;
        lhs.add_assign_scaled(&pw, &pb.pow(k as u32));
    }
    let (wx, wy) = (ghost_poly(p, i, false), ghost_poly(p, i, true));
    let rhs = match kind {
        WittKind::Sum => {
            let mut s = wx;
            s.add_assign_scaled(&wy, &BigInt::one());
            s
        }
        _ => wx.mul(&wy, cap)?,
    };
    lhs.add_assign_scaled(&rhs, &BigInt::from(-1));
    Ok(lhs.terms.is_empty())
}

/// Coordinates of -1 in the Witt vectors of a torsion-free ring.
pub fn minus_one_integer(p: u64, len: usize) -> Vec<BigInt> {
    if p == 2 {
        vec![BigInt::from(-1); len]
    } else {
        let mut v = vec![BigInt::zero(); len];
        if len > 0 {
            v[0] = BigInt::from(-1);
        }
        v
    }
}

fn negation_chain(p: u64, i: usize, cap: usize) -> Result<Vec<UnivWittPoly>> {
    let prods = compute_chain(p, i, WittKind::Product, cap)?;
    let m1 = minus_one_integer(p, i + 1);
    Ok(prods
        .iter()
        .map(|pp| {
            let n = pp.index + 1;
            let mut acc: HashMap<Vec<u32>, BigInt> = HashMap::new();
            for (e, c) in &pp.terms {
                let mut c = c.clone();
                for v in 0..n {
                    let k = e[n + v];
                    if k > 0 {
                        c *= m1[v].pow(k);
                    }
                }
                if c.is_zero() {
                    continue;
                }
                *acc.entry(e[..n].to_vec()).or_insert_with(BigInt::zero) += c;
            }
            let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            terms.sort_by(|a, b| a.0.cmp(&b.0));
            UnivWittPoly {
                p,
                index: pp.index,
                kind: WittKind::Negation,
                terms,
            }
        })
        .collect())
}

/// Memory cache optionally backed by a directory.
pub struct PolyCache {
    dir: Mutex<Option<PathBuf>>,
    cap: AtomicUsize,
    mem: Mutex<HashMap<(u64, usize, WittKind), Arc<UnivWittPoly>>>,
    build: Mutex<()>,
}

static GLOBAL: OnceLock<PolyCache> = OnceLock::new();

/// The process-wide polynomial cache.
pub fn cache() -> &'static PolyCache {
    GLOBAL.get_or_init(PolyCache::new)
}

/// Shorthand for `cache().get(p, i, kind)`.
pub fn witt_poly(p: u64, i: usize, kind: WittKind) -> Result<Arc<UnivWittPoly>> {
    cache().get(p, i, kind)
}

pub fn cache_file_name(p: u64, kind: WittKind, i: usize) -> String {
    format!("witt-p{p}-{}-{i}.txt", kind.name())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    Ok,
    Corrupt(String),
}

impl Default for PolyCache {
    fn default() -> Self {
        Self::new()
    }
}

impl PolyCache {
    pub fn new() -> Self {
        PolyCache {
            dir: Mutex::new(None),
            cap: AtomicUsize::new(DEFAULT_CAP),
            mem: Mutex::new(HashMap::new()),
            build: Mutex::new(()),
        }
    }

    pub fn set_dir(&self, dir: Option<PathBuf>) {
        *self.dir.lock().unwrap() = dir;
    }

    pub fn dir(&self) -> Option<PathBuf> {
        self.dir.lock().unwrap().clone()
    }

    pub fn set_cap(&self, cap: usize) {
        self.cap.store(cap, Ordering::SeqCst);
    }

    pub fn cap(&self) -> usize {
        self.cap.load(Ordering::SeqCst)
    }

    /// Drops the in-memory layer (disk files are kept).
    pub fn clear_memory(&self) {
        self.mem.lock().unwrap().clear();
    }

    pub fn get(&self, p: u64, i: usize, kind: WittKind) -> Result<Arc<UnivWittPoly>> {
        if let Some(hit) = self.mem.lock().unwrap().get(&(p, i, kind)) {
            return Ok(hit.clone());
        }
        let _guard = self.build.lock().unwrap();
        if let Some(hit) = self.mem.lock().unwrap().get(&(p, i, kind)) {
            return Ok(hit.clone());
        }
        if let Some(dir) = self.dir() {
            let path = dir.join(cache_file_name(p, kind, i));
            if path.exists() {
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
                let poly = UnivWittPoly::parse(&text)
                    .map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
                if poly.p != p || poly.index != i || poly.kind != kind {
                    return Err(Error::CacheCorrupt(format!(
                        "{}: header does not match file name",
                        path.display()
                    )));
                }
                drop(_guard);
                let lower = (0..i)
                    .map(|k| self.get(p, k, kind))
                    .collect::<Result<Vec<_>>>()?;
                if !spot_check(&lower, &poly) {
                    return Err(Error::CacheCorrupt(format!(
                        "{}: ghost identity fails at a test point",
                        path.display()
                    )));
                }
                let poly = Arc::new(poly);
                self.mem.lock().unwrap().insert((p, i, kind), poly.clone());
                return Ok(poly);
            }
        }
        let chain = compute_chain(p, i, kind, self.cap())?;
        let mut mem = self.mem.lock().unwrap();
        for poly in chain {
            let key = (p, poly.index, kind);
            if let Some(dir) = self.dir() {
                let path = dir.join(cache_file_name(p, kind, poly.index));
                if !path.exists() {
                    write_atomic(&path, &poly.serialize())?;
                }
            }
            mem.entry(key).or_insert_with(|| Arc::new(poly));
        }
        Ok(mem[&(p, i, kind)].clone())
    }

    /// Computes (or loads) sums and products up to `max_index` and publishes
    /// them to the cache directory. Returns the files written or found.
    pub fn build(&self, p: u64, max_index: usize) -> Result<Vec<PathBuf>> {
        let dir = self
            .dir()
            .ok_or_else(|| Error::Config("no cache directory configured".into()))?;
        fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        let mut files = Vec::new();
        for kind in [WittKind::Sum, WittKind::Product] {
            self.get(p, max_index, kind)?;
            for i in 0..=max_index {
                let path = dir.join(cache_file_name(p, kind, i));
                if !path.exists() {
                    let poly = self.get(p, i, kind)?;
                    write_atomic(&path, &poly.serialize())?;
                }
                files.push(path);
            }
        }
        Ok(files)
    }

    /// Lists cache files in the configured directory.
    pub fn list(&self) -> Result<Vec<PathBuf>> {
        let dir = self
            .dir()
            .ok_or_else(|| Error::Config("no cache directory configured".into()))?;
        let mut out: Vec<PathBuf> = match fs::read_dir(&dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .map(|n| n.starts_with("witt-p") && n.ends_with(".txt"))
                        .unwrap_or(false)
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        out.sort();
        Ok(out)
    }

    /// Recomputes every cached polynomial and compares the files bit-exactly.
    pub fn validate(&self) -> Result<Vec<(PathBuf, CacheStatus)>> {
        let mut out = Vec::new();
        for path in self.list()? {
            out.push((path.clone(), validate_file(&path, self.cap())));
        }
        Ok(out)
    }
}

/// Checks the ghost identity for `top` (given the verified lower indices)
/// at a few fixed integer points, so that a damaged file is not trusted.
fn spot_check(lower: &[Arc<UnivWittPoly>], top: &UnivWittPoly) -> bool {
    let (p, i) = (top.p, top.index);
    let ghost = |z: &[BigInt]| -> BigInt {
        z.iter()
            .enumerate()
            .map(|(k, zk)| BigInt::from(p).pow(k as u32) * zk.pow((p as u32).pow((i - k) as u32)))
            .sum()
    };
    [(2i64, 3i64), (-5, 7), (11, -4)].iter().all(|&(a, b)| {
        let x: Vec<BigInt> = (0..=i as i64).map(|j| BigInt::from(a + 3 * j)).collect();
        let y: Vec<BigInt> = (0..=i as i64).map(|j| BigInt::from(b - 2 * j)).collect();
        let args: Vec<BigInt> = match top.kind {
            WittKind::Negation => x.clone(),
            _ => x.iter().chain(&y).cloned().collect(),
        };
        let at = |poly: &UnivWittPoly| {
            let n = poly.index + 1;
            let sub: Vec<BigInt> = match poly.kind {
                WittKind::Negation => x[..n].to_vec(),
                _ => x[..n].iter().chain(&y[..n]).cloned().collect(),
            };
            poly.eval_int(&sub)
        };
        let mut z: Vec<BigInt> = lower.iter().map(|q| at(q)).collect();
        z.push(top.eval_int(&args));
        let (gx, gy) = (ghost(&x), ghost(&y));
        let want = match top.kind {
            WittKind::Sum => gx + gy,
            WittKind::Product => gx * gy,
            WittKind::Negation => -gx,
        };
        ghost(&z) == want
    })
}

fn validate_file(path: &Path, cap: usize) -> CacheStatus {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return CacheStatus::Corrupt(e.to_string()),
    };
    let poly = match UnivWittPoly::parse(&text) {
        Ok(p) => p,
        Err(e) => return CacheStatus::Corrupt(e),
    };
    let expected_name = cache_file_name(poly.p, poly.kind, poly.index);
    if path.file_name().and_then(|n| n.to_str()) != Some(expected_name.as_str()) {
        return CacheStatus::Corrupt("header does not match file name".into());
    }
    match compute_chain(poly.p, poly.index, poly.kind, cap) {
        Ok(chain) => {
            if chain[poly.index].serialize() == text {
                CacheStatus::Ok
            } else {
                CacheStatus::Corrupt("content differs from recomputation".into())
            }
        }
        Err(e) => CacheStatus::Corrupt(e.to_string()),
    }
}

pub(crate) fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    let mut f =
        fs::File::create(&tmp).map_err(|e| Error::Config(format!("{}: {e}", tmp.display())))?;
    f.write_all(body.as_bytes())
        .map_err(|e| Error::Config(e.to_string()))?;
    f.sync_all().ok();
    fs::rename(&tmp, path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Coefficient rings for Witt vectors.
///
/// `w_eval` evaluates a universal polynomial; the default is monomial by
/// monomial with cached powers, and rings that track precision override it.
pub trait WittCoeff: Clone + Send + Sync + Sized {
    fn w_zero(&self) -> Self;
    fn w_one(&self) -> Self;
    fn w_add(&self, o: &Self) -> Self;
    fn w_mul(&self, o: &Self) -> Self;
    fn w_scale(&self, c: &BigInt) -> Self;
    fn w_is_zero(&self) -> bool;
    /// Whether the ring has characteristic `p` (so Frobenius is available and
    /// `-1` has the characteristic-`p` coordinates).
    fn w_char_p(&self) -> bool;

    fn w_pow(&self, mut e: u64) -> Self {
        let mut r = self.w_one();
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.w_mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.w_mul(&b);
            }
        }
        r
    }

    /// The ring element lifting the Teichmüller representative of the
    /// residue `d`. Rings with bounded precision override this with the
    /// exact lift; the default is the integer `d` itself.
    fn w_teich(&self, _p: u64, d: u64) -> Self {
        self.w_one().w_scale(&BigInt::from(d))
    }

    fn w_eval(poly: &UnivWittPoly, inputs: &[Self]) -> Self {
        default_eval(poly, inputs)
    }
}

pub fn default_eval<C: WittCoeff>(poly: &UnivWittPoly, inputs: &[C]) -> C {
    let mut pows: HashMap<(usize, u32), C> = HashMap::new();
    let mut acc = inputs[0].w_zero();
    for (e, c) in &poly.terms {
        let mut t: Option<C> = None;
        for (v, k) in e.iter().enumerate() {
            if *k == 0 {
                continue;
            }
            if inputs[v].w_is_zero() {
                t = Some(inputs[v].clone());
                break;
            }
            let pw = pows
                .entry((v, *k))
                .or_insert_with(|| inputs[v].w_pow(*k as u64))
                .clone();
            t = Some(match t {
                None => pw,
                Some(t) => t.w_mul(&pw),
            });
        }
        let t = t.unwrap_or_else(|| acc.w_one());
        if t.w_is_zero() {
            continue;
        }
        acc = acc.w_add(&t.w_scale(c));
    }
    acc
}

impl WittCoeff for BigInt {
    fn w_zero(&self) -> Self {
        BigInt::zero()
    }
    fn w_one(&self) -> Self {
        BigInt::one()
    }
    fn w_add(&self, o: &Self) -> Self {
        self + o
    }
    fn w_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn w_scale(&self, c: &BigInt) -> Self {
        self * c
    }
    fn w_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn w_char_p(&self) -> bool {
        false
    }
}

impl WittCoeff for crate::tower_rings::RingElement {
    fn w_zero(&self) -> Self {
        self.constant_like(0)
    }
    fn w_one(&self) -> Self {
        self.constant_like(1)
    }
    fn w_add(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn w_mul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn w_scale(&self, c: &BigInt) -> Self {
        self.scale(c)
    }
    fn w_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn w_char_p(&self) -> bool {
        self.repr() == crate::tower_rings::Repr::Residue
    }
    fn w_teich(&self, p: u64, d: u64) -> Self {
        let k = match self.repr() {
            crate::tower_rings::Repr::Residue => 1,
            _ => self.modulus().unwrap_or(1) + 1,
        };
        let k = if self.repr() == crate::tower_rings::Repr::XAdic {
            (self.cut().max(0) / self.spec().q()) as u32 + 2
        } else {
            k
        };
        self.constant_like(teich_int(p, d, k))
    }
}

/// A truncated Witt vector of fixed length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WittVector<C> {
    pub p: u64,
    pub coords: Vec<C>,
}

impl<C: WittCoeff> WittVector<C> {
    pub fn new(p: u64, coords: Vec<C>) -> Self {
        WittVector { p, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn like(&self) -> &C {
        &self.coords[0]
    }

    pub fn zero(p: u64, len: usize, like: &C) -> Self {
        WittVector {
            p,
            coords: vec![like.w_zero(); len],
        }
    }

    /// Teichmüller representative `(a, 0, ..., 0)`.
    pub fn teichmuller(p: u64, len: usize, a: C) -> Self {
        let z = a.w_zero();
        let mut coords = vec![z; len];
        coords[0] = a;
        WittVector { p, coords }
    }

    pub fn one(p: u64, len: usize, like: &C) -> Self {
        Self::teichmuller(p, len, like.w_one())
    }

    /// The vector of `-1`: `[-1]` for odd `p`; for `p = 2`, `(1, 1, 1, ...)` in
    /// characteristic 2 and `(-1, -1, ...)` over torsion-free rings.
    pub fn minus_one(p: u64, len: usize, like: &C) -> Self {
        let one = like.w_one();
        let m1 = one.w_scale(&BigInt::from(-1));
        if p == 2 {
            let c = if like.w_char_p() { one } else { m1 };
            WittVector {
                p,
                coords: vec![c; len],
            }
        } else {
            Self::teichmuller(p, len, m1)
        }
    }

    /// `p = V(F(1)) = (0, 1, 0, ...)`, valid in characteristic `p`.
    pub fn p_element(p: u64, len: usize, like: &C) -> Self {
        let mut v = Self::zero(p, len, like);
        if len > 1 {
            v.coords[1] = like.w_one();
        }
        v
    }

    fn binary(&self, o: &Self, kind: WittKind) -> Result<Self> {
        if self.p != o.p || self.len() != o.len() {
            return Err(Error::Mismatch("Witt vectors of different shape".into()));
        }
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let poly = witt_poly(self.p, k, kind)?;
            let mut args: Vec<C> = self.coords[..=k].to_vec();
            args.extend_from_slice(&o.coords[..=k]);
            out.push(C::w_eval(&poly, &args));
        }
        Ok(WittVector {
            p: self.p,
            coords: out,
        })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.binary(o, WittKind::Sum)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.binary(o, WittKind::Product)
    }

    /// Negation as multiplication by the vector of `-1`.
    pub fn neg(&self) -> Result<Self> {
        let m1 = Self::minus_one(self.p, self.len(), self.like());
        self.mul(&m1)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg()?)
    }

    pub fn verschiebung(&self) -> Self {
        let mut coords = vec![self.like().w_zero()];
        coords.extend_from_slice(&self.coords[..self.len() - 1]);
        WittVector { p: self.p, coords }
    }

    pub fn frobenius(&self) -> Result<Self> {
        if !self.like().w_char_p() {
            return Err(Error::Config(
                "Frobenius needs characteristic-p coefficients".into(),
            ));
        }
        Ok(WittVector {
            p: self.p,
            coords: self.coords.iter().map(|c| c.w_pow(self.p)).collect(),
        })
    }

    /// Ghost components `W_0..W_{n-1}` (meaningful over torsion-free rings).
    pub fn ghost(&self) -> Result<Vec<C>> {
        if self.like().w_char_p() {
            return Err(Error::Config(
                "ghost components need a torsion-free coefficient ring".into(),
            ));
        }
        let pb = BigInt::from(self.p);
        Ok((0..self.len())
            .map(|n| {
                let mut acc = self.like().w_zero();
                for k in 0..=n {
                    let t = self.coords[k]
                        .w_pow(self.p.pow((n - k) as u32))
                        .w_scale(&pb.pow(k as u32));
                    acc = acc.w_add(&t);
                }
                acc
            })
            .collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.w_is_zero())
    }
}

/// Teichmüller digits `c_k` (as integers in `0..p`) with `n = sum [c_k] p^k`
/// in `W(F_p)`, up to `len` digits.
pub fn teichmuller_digits(p: u64, n: &BigInt, len: usize) -> Vec<u64> {
    let pb = BigInt::from(p);
    let md = pb.pow(len as u32 + 1);
    let mut rest = n.mod_floor(&md);
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let c = (&rest % &pb)
            .to_u64_digits()
            .1
            .first()
            .copied()
            .unwrap_or(0);
        out.push(c);
        // Teichmüller lift of c, mod p^{len+1}
        let mut w = BigInt::from(c);
        for _ in 0..=len {
            w = w.modpow(&pb, &md);
        }
        rest = (&rest - &w).mod_floor(&md);
        debug_assert!(rest.is_multiple_of(&pb));
        rest /= &pb;
        let _ = k;
    }
    out
}

/// Teichmüller lift of the residue `d` modulo `p^k`.
pub fn teich_int(p: u64, d: u64, k: u32) -> BigInt {
    let pb = BigInt::from(p);
    let md = pb.pow(k.max(1));
    let mut w = BigInt::from(d % p);
    for _ in 0..k {
        w = w.modpow(&pb, &md);
    }
    w
}

/// Integer `n` as a Witt vector over a characteristic-`p` coefficient ring,
/// with Teichmüller digits as coordinates.
pub fn witt_from_int<C: WittCoeff>(p: u64, len: usize, n: &BigInt, like: &C) -> WittVector<C> {
    let digits = teichmuller_digits(p, n, len);
    let coords = digits.iter().map(|d| like.w_teich(p, *d)).collect();
    WittVector { p, coords }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn small_polynomials() {
        let s1 = compute_chain(2, 1, WittKind::Sum, DEFAULT_CAP).unwrap();
        // X1 + Y1 - X0 Y0 (variables X0 X1 Y0 Y1)
        let mut expect = vec![
            (vec![0, 0, 0, 1], b(1)),
            (vec![0, 1, 0, 0], b(1)),
            (vec![1, 0, 1, 0], b(-1)),
        ];
        expect.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(s1[1].terms, expect);
        let p1 = compute_chain(3, 1, WittKind::Product, DEFAULT_CAP).unwrap();
        let mut expect = vec![
            (vec![3, 0, 0, 1], b(1)),
            (vec![0, 1, 3, 0], b(1)),
            (vec![0, 1, 0, 1], b(3)),
        ];
        expect.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(p1[1].terms, expect);
    }

    #[test]
    fn serialization_round_trip() {
        let s = compute_chain(3, 2, WittKind::Sum, DEFAULT_CAP).unwrap();
        let text = s[2].serialize();
        assert!(text.starts_with("wittforge-cache v1 p=3 kind=sum i=2\n"));
        assert_eq!(UnivWittPoly::parse(&text).unwrap(), s[2]);
    }

    #[test]
    fn teichmuller_digits_of_small_integers() {
        assert_eq!(teichmuller_digits(2, &b(-1), 4), vec![1, 1, 1, 1]);
        assert_eq!(teichmuller_digits(3, &b(-1), 3), vec![2, 0, 0]);
        assert_eq!(teichmuller_digits(5, &b(3), 2)[0], 3);
    }

    #[test]
    fn resource_cap() {
        assert!(matches!(
            compute_chain(3, 3, WittKind::Product, 100),
            Err(Error::Resource(_))
        ));
    }
}
