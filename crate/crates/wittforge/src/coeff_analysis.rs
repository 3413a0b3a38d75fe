//! Analysis of computed coefficients: goodness, types of tilt elements, the
//! bracket expansion of `(p♭)^{p^n} A_n`, multinomial valuations, orders in
//! the cyclotomic scenario, and exact congruence tests against closed forms.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::tilt::{vp_int, TiltElement};
use crate::tower_rings::{Divisor, Lattice, Mono, Repr, RingElement, TowerSpec};
use crate::witt_core::{witt_poly, WittKind};
use crate::{Error, Result, Q};

/// `(m, k, N₀)`: `a^{♯_n} ≡ f_n / p^{m/p^n} (mod p)` with
/// `f_n ∈ R_{n+k}[p^{1/p^{n+k-1}}]` for `n >= N₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TypeTag {
    pub m: u64,
    pub k: u32,
    pub n0: u32,
}

impl TypeTag {
    pub fn new(m: u64, k: u32, n0: u32) -> Self {
        TypeTag { m, k, n0 }
    }
}

fn root_name(name: &str, p: u64, e: i64) -> String {
    match e.cmp(&0) {
        std::cmp::Ordering::Less => format!("{name}^{}", p.pow((-e) as u32)),
        std::cmp::Ordering::Equal => name.to_string(),
        std::cmp::Ordering::Greater => format!("{name}^(1/{})", p.pow(e as u32)),
    }
}

fn pow_i64(p: u64, e: u32) -> i64 {
    (p as i64).pow(e)
}

#[derive(Clone, Debug)]
pub struct GoodnessReport {
    pub level: u32,
    pub verdict: bool,
    pub coefficient: RingElement,
    pub witness: Option<Mono>,
    pub lattice: Lattice,
    pub lattice_desc: String,
}

impl GoodnessReport {
    /// Generator names of the lattice, e.g. `["p^(1/2)", "T^(1/4)", "S^(1/4)"]`
    /// (`["p", "pi", "1"]` in the cyclotomic tower).
    pub fn lattice_generators(&self) -> [String; 3] {
        let p = self.coefficient.spec().p;
        let n = self.level as i64;
        if self.coefficient.spec().is_cyclotomic() {
            return [root_name("p", p, n - 1), "pi".into(), "1".into()];
        }
        [
            root_name("p", p, n - 1),
            root_name("T", p, n),
            root_name("S", p, n),
        ]
    }

    /// The coefficient with exponents written in the lattice generators
    /// (only when good): `(exponents, coefficient)`.
    pub fn lattice_form(&self) -> Option<Vec<([i64; 3], BigInt)>> {
        if !self.verdict {
            return None;
        }
        let l = &self.lattice;
        Some(
            self.coefficient
                .terms()
                .iter()
                .map(|(m, c)| {
                    (
                        [
                            m.x / l.x_div,
                            (m.a / l.a_div) as i64,
                            (m.b / l.b_div) as i64,
                        ],
                        c.clone(),
                    )
                })
                .collect(),
        )
    }
}

/// The lattice `Z[p^{1/p^{n-1}}, T^{1/p^n}, S^{1/p^n}]` at the height of `spec`.
pub fn goodness_lattice(spec: &TowerSpec, n: u32) -> Result<Lattice> {
    if n == 0 || n > spec.height {
        return Err(Error::Config(format!(
            "level {n} outside 1..={}",
            spec.height
        )));
    }
    let p = spec.p;
    let h = spec.height;
    let ts = if spec.is_cyclotomic() {
        1
    } else {
        p.pow(h - n) as u32
    };
    Ok(Lattice {
        x_div: pow_i64(p, h + 1 - n),
        a_div: ts,
        b_div: ts,
    })
}

pub fn goodness_check(c: &RingElement, n: u32) -> Result<GoodnessReport> {
    let lattice = goodness_lattice(c.spec(), n)?;
    let witness = c.lattice_membership(&lattice);
    let p = c.spec().p;
    let ni = n as i64;
    let lattice_desc = if c.spec().is_cyclotomic() {
        format!("Z[{}, pi]", root_name("p", p, ni - 1))
    } else {
        format!(
            "Z[{}, {}, {}]",
            root_name("p", p, ni - 1),
            root_name("T", p, ni),
            root_name("S", p, ni)
        )
    };
    Ok(GoodnessReport {
        level: n,
        verdict: witness.is_none(),
        coefficient: c.clone(),
        witness,
        lattice,
        lattice_desc,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeVerdict {
    Holds,
    /// The reduced representative has a monomial outside the lattice.
    Violated(Mono),
    /// The index cannot be tested at the available depth or height.
    Insufficient(String),
}

#[derive(Clone, Debug)]
pub struct TypeReport {
    pub tag: TypeTag,
    pub indices: Vec<(u32, TypeVerdict)>,
}

impl TypeReport {
    /// Indices at which the type was verified.
    pub fn verified(&self) -> Vec<u32> {
        self.indices
            .iter()
            .filter(|(_, v)| *v == TypeVerdict::Holds)
            .map(|(j, _)| *j)
            .collect()
    }

    pub fn violated(&self) -> Vec<u32> {
        self.indices
            .iter()
            .filter(|(_, v)| matches!(v, TypeVerdict::Violated(_)))
            .map(|(j, _)| *j)
            .collect()
    }

    /// True when at least one index was tested and none failed.
    pub fn passed(&self) -> bool {
        !self.verified().is_empty() && self.violated().is_empty()
    }

    pub fn summary(&self) -> String {
        let v = self.verified();
        let bad = self.violated();
        let t = self.tag;
        if !bad.is_empty() {
            format!(
                "type ({},{},{}) violated at indices {bad:?}",
                t.m, t.k, t.n0
            )
        } else if v.is_empty() {
            format!("type ({},{},{}) untestable at this depth", t.m, t.k, t.n0)
        } else {
            let list = v
                .iter()
                .map(|j| j.to_string())
                .collect::<Vec<_>>()
                .join(",");
            format!(
                "type ({},{},{}) verified for indices [{list}]",
                t.m, t.k, t.n0
            )
        }
    }
}

/// Tests `p^{m/p^j} a^{♯_j} mod p ∈ R_{j+k}[p^{1/p^{j+k-1}}]` at every index
/// `j >= N₀` the element exposes.
pub fn type_check(a: &TiltElement, tag: TypeTag) -> Result<TypeReport> {
    let spec = a.spec().clone();
    let (p, h, q) = (spec.p, spec.height, spec.q());
    let mut indices = Vec::new();
    for j in tag.n0..=a.depth() {
        let verdict = type_at(a, tag, j, p, h, q);
        indices.push((j, verdict));
    }
    if indices
        .iter()
        .all(|(_, v)| matches!(v, TypeVerdict::Insufficient(_)))
    {
        return Err(Error::InsufficientDepth(format!(
            "no index >= {} is testable",
            tag.n0
        )));
    }
    Ok(TypeReport { tag, indices })
}

fn type_at(a: &TiltElement, tag: TypeTag, j: u32, p: u64, h: u32, q: i64) -> TypeVerdict {
    let jk = j + tag.k;
    if j > h || jk > h {
        return TypeVerdict::Insufficient(format!("index {j} beyond height {h}"));
    }
    let v = match a.sharp(j, 1) {
        Ok(v) => v,
        Err(e) => return TypeVerdict::Insufficient(e.to_string()),
    };
    let shift = tag.m as i128 * q as i128 / p.pow(j) as i128;
    let f = v.shift_x(shift as i64).truncate_x(q);
    if let Some(m) = f.terms().keys().find(|m| m.x < 0) {
        return TypeVerdict::Violated(*m);
    }
    let x_div = if jk == 0 {
        pow_i64(p, h + 1)
    } else {
        pow_i64(p, h + 1 - jk)
    };
    let ts = p.pow(h - jk) as u32;
    let lat = Lattice {
        x_div,
        a_div: ts,
        b_div: ts,
    };
    match f.lattice_membership(&lat) {
        None => TypeVerdict::Holds,
        Some(m) => TypeVerdict::Violated(m),
    }
}

/// `S_n(B_0..B_n; 0, C_1..C_n)` with variables ordered `B_0..B_n, C_1..C_n`.
#[derive(Clone, Debug)]
pub struct BracketExpansion {
    pub p: u64,
    pub n: usize,
    pub terms: Vec<(Vec<u32>, BigInt)>,
}

impl BracketExpansion {
    pub fn var_name(&self, v: usize) -> String {
        if v <= self.n {
            format!("B{v}")
        } else {
            format!("C{}", v - self.n)
        }
    }

    fn weight(&self, e: &[u32]) -> u64 {
        e.iter()
            .enumerate()
            .map(|(v, k)| {
                let j = if v <= self.n { v } else { v - self.n };
                self.p.pow(j as u32) * *k as u64
            })
            .sum()
    }

    /// Every monomial has `Σ p^j (u_j + v_j) = p^n`.
    pub fn is_homogeneous(&self) -> bool {
        let target = self.p.pow(self.n as u32);
        self.terms.iter().all(|(e, _)| self.weight(e) == target)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut s = c.to_string();
                for (v, k) in e.iter().enumerate() {
                    match k {
                        0 => {}
                        1 => s.push_str(&format!("*{}", self.var_name(v))),
                        _ => s.push_str(&format!("*{}^{k}", self.var_name(v))),
                    }
                }
                s
            })
            .collect()
    }
}

pub fn expand_an_bracket(n: usize, p: u64) -> Result<BracketExpansion> {
    let poly = witt_poly(p, n, WittKind::Sum)?;
    let len = n + 1;
    let mut terms = Vec::new();
    for (e, c) in &poly.terms {
        if e[len] > 0 {
            continue;
        }
        let mut v: Vec<u32> = e[..len].to_vec();
        v.extend_from_slice(&e[len + 1..]);
        terms.push((v, c.clone()));
    }
    Ok(BracketExpansion { p, n, terms })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultinomialReport {
    pub coefficient: BigInt,
    pub valuation: u64,
    /// `v_p` of each part (`None` for a zero part).
    pub part_valuations: Vec<Option<u64>>,
    /// `v_p(coefficient) + v_p(part) >= m` for every part.
    pub bound_holds: bool,
}

/// Legendre: `v_p(a!) = Σ floor(a / p^i)`.
pub fn vp_factorial(p: u64, a: u64) -> u64 {
    let mut s = 0;
    let mut d = p;
    while d <= a {
        s += a / d;
        d = match d.checked_mul(p) {
            Some(d) => d,
            None => break,
        };
    }
    s
}

fn factorial(a: u64) -> BigInt {
    (1..=a).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn vp_multinomial(p: u64, m: u32, parts: &[u64]) -> Result<MultinomialReport> {
    let total = p.pow(m);
    if parts.iter().sum::<u64>() != total {
        return Err(Error::Config(format!(
            "parts {parts:?} do not sum to {p}^{m}"
        )));
    }
    let valuation = vp_factorial(p, total) - parts.iter().map(|a| vp_factorial(p, *a)).sum::<u64>();
    let mut coefficient = factorial(total);
    for a in parts {
        coefficient /= factorial(*a);
    }
    if vp_int(&coefficient, p) as u64 != valuation {
        return Err(Error::Internal(
            "Legendre valuation disagrees with the coefficient".into(),
        ));
    }
    let part_valuations: Vec<Option<u64>> = parts
        .iter()
        .map(|a| {
            if *a == 0 {
                None
            } else {
                Some(vp_int(&BigInt::from(*a), p) as u64)
            }
        })
        .collect();
    let bound_holds = part_valuations
        .iter()
        .all(|v| v.is_none_or(|v| valuation + v >= m as u64));
    Ok(MultinomialReport {
        coefficient,
        valuation,
        part_valuations,
        bound_holds,
    })
}

/// Checks the multinomial bound on every partition of `p^m` (the coefficient
/// is symmetric in the parts, so partitions cover all compositions).
/// Returns the number of partitions checked and the first failure.
pub fn multinomial_bound_exhaustive(p: u64, m: u32) -> Result<(usize, Option<Vec<u64>>)> {
    fn rec(rem: u64, max: u64, cur: &mut Vec<u64>, out: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if rem == 0 {
            return out(cur);
        }
        for k in (1..=rem.min(max)).rev() {
            cur.push(k);
            let stop = rec(rem - k, k, cur, out);
            cur.pop();
            if stop {
                return true;
            }
        }
        false
    }
    let total = p.pow(m);
    let mut count = 0;
    let mut fail = None;
    let mut err = None;
    rec(total, total, &mut Vec::new(), &mut |parts| {
        count += 1;
        match vp_multinomial(p, m, parts) {
            Ok(r) if r.bound_holds => false,
            Ok(_) => {
                fail = Some(parts.to_vec());
                true
            }
            Err(e) => {
                err = Some(e);
                true
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok((count, fail)),
    }
}

/// Order of `c mod p` in the cyclotomic scenario, normalized so that
/// `v(p) = 1`; `None` when `c ≡ 0` at the working truncation.
pub fn cyclotomic_order(c: &RingElement) -> Result<Option<Q>> {
    let spec = c.spec();
    if !spec.is_cyclotomic() {
        return Err(Error::Mismatch(
            "cyclotomic order needs the cyclotomic scenario".into(),
        ));
    }
    let p = BigInt::from(spec.p);
    let q = spec.q();
    Ok(c.terms()
        .iter()
        .filter(|(m, v)| !(c.repr() == Repr::XAdic && m.x >= q) && !v.mod_floor(&p).is_zero())
        .map(|(m, _)| spec.mono_valuation(m))
        .min())
}

/// Reduction of a char-0 element mod `p^k`.
pub fn reduce_mod(c: &RingElement, k: u32) -> RingElement {
    RingElement::from_terms(
        c.spec(),
        Repr::Char0,
        Some(k),
        c.terms().iter().map(|(m, v)| (*m, v.clone())),
    )
}

fn exact_char0(c: &RingElement) -> RingElement {
    RingElement::from_terms(
        c.spec(),
        Repr::Char0,
        None,
        c.terms().iter().map(|(m, v)| (*m, v.clone())),
    )
}

/// An element `num / x^xden` of the tower ring tensored with `Q`, with
/// `x = p^{1/p^N}` and `num` exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XFraction {
    pub num: RingElement,
    pub xden: i64,
}

impl XFraction {
    pub fn new(num: &RingElement, xden: i64) -> Self {
        let num = exact_char0(num);
        if xden < 0 {
            let xm = num.monomial_like(Mono::new(-xden, 0, 0), 1);
            return XFraction {
                num: num.mul(&xm),
                xden: 0,
            };
        }
        XFraction { num, xden }
    }

    pub fn int(spec: &Arc<TowerSpec>, c: i64) -> Self {
        XFraction::new(&RingElement::from_int(spec, Repr::Char0, None, c), 0)
    }

    fn lift(&self, e: i64) -> RingElement {
        if e == self.xden {
            return self.num.clone();
        }
        self.num
            .mul(&self.num.monomial_like(Mono::new(e - self.xden, 0, 0), 1))
    }

    pub fn add(&self, o: &Self) -> Self {
        let e = self.xden.max(o.xden);
        XFraction {
            num: self.lift(e).add(&o.lift(e)),
            xden: e,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    pub fn mul(&self, o: &Self) -> Self {
        XFraction {
            num: self.num.mul(&o.num),
            xden: self.xden + o.xden,
        }
    }

    pub fn scale(&self, c: i64) -> Self {
        XFraction {
            num: self.num.scale(&BigInt::from(c)),
            xden: self.xden,
        }
    }

    /// Multiplication by `x^k`.
    pub fn mul_x(&self, k: i64) -> Self {
        XFraction::new(&self.num, self.xden - k)
    }

    pub fn pow(&self, e: u64) -> Self {
        XFraction {
            num: self.num.pow(e),
            xden: self.xden * e as i64,
        }
    }

    /// The element itself when it lies in the polynomial presentation.
    pub fn to_element(&self) -> Result<RingElement> {
        self.num.exact_divide(Divisor::XPow(self.xden))
    }
}

/// `α_{p^n} = (S^{1/p^n} + T^{1/p^n} - 1) / p^{1/p^n}` at the height of `spec`.
pub fn alpha(spec: &Arc<TowerSpec>, n: u32) -> Result<XFraction> {
    if spec.is_cyclotomic() || n == 0 || n > spec.height {
        return Err(Error::Config(format!(
            "alpha_(p^{n}) needs a T,S tower of height >= {n}"
        )));
    }
    let r = pow_i64(spec.p, spec.height - n);
    let z = RingElement::zero(spec, Repr::Char0, None);
    let num = z
        .monomial_like(Mono::new(0, 0, r as u32), 1)
        .add(&z.monomial_like(Mono::new(0, r as u32, 0), 1))
        .sub(&z.constant_like(1));
    Ok(XFraction::new(&num, r))
}

/// `α_p^p`, the level-1 coefficient.
pub fn level_one_form(spec: &Arc<TowerSpec>) -> Result<XFraction> {
    Ok(alpha(spec, 1)?.pow(spec.p))
}

/// `β_p = Σ_{i+j+k=p; i,j,k<p} (p-1)!/(i!j!k!) (-1)^i T^{j/p^2} S^{k/p^2} + δ_{2,p} + α_{p^2}^p`.
pub fn beta(spec: &Arc<TowerSpec>) -> Result<XFraction> {
    beta_with_sign(spec, 1)
}

/// `β_p` with the sum over `i + j + k = p` multiplied by `sign`. For odd `p`
/// the computed coefficient agrees with `sign = -1`: the second Witt
/// coordinate of `[S♭] + [T♭] + [-1]` is `-Σ (p-1)!/(i!j!k!) (-1)^i (T♭)^j (S♭)^k`.
pub fn beta_with_sign(spec: &Arc<TowerSpec>, sign: i64) -> Result<XFraction> {
    let p = spec.p;
    if spec.height < 2 {
        return Err(Error::Config("beta needs height >= 2".into()));
    }
    let r = p.pow(spec.height - 2) as u32;
    let z = RingElement::zero(spec, Repr::Char0, None);
    let mut acc = z.clone();
    let fp = factorial(p - 1);
    for i in 0..p {
        for j in 0..p {
            if i + j > p || p - i - j >= p {
                continue;
            }
            let k = p - i - j;
            let mut c = fp.clone() / (factorial(i) * factorial(j) * factorial(k));
            if i % 2 == 1 {
                c = -c;
            }
            c *= sign;
            acc = acc.add(&z.monomial_like(Mono::new(0, j as u32 * r, k as u32 * r), c));
        }
    }
    if p == 2 {
        acc = acc.add(&z.constant_like(1));
    }
    Ok(XFraction::new(&acc, 0).add(&alpha(spec, 2)?.pow(p)))
}

/// `α_{p^2}^{p^2} + β_p^p`, the level-2 coefficient.
pub fn level_two_form(spec: &Arc<TowerSpec>) -> Result<XFraction> {
    level_two_form_with_sign(spec, 1)
}

/// `α_{p^2}^{p^2} + β_p^p` with [`beta_with_sign`].
pub fn level_two_form_with_sign(spec: &Arc<TowerSpec>, sign: i64) -> Result<XFraction> {
    let p = spec.p;
    Ok(alpha(spec, 2)?
        .pow(p * p)
        .add(&beta_with_sign(spec, sign)?.pow(p)))
}

/// `2α_2^2 + 2α_2 B + (2√2 + 1) B^2` with `B = T^{1/4}S^{1/4} - T^{1/4} - S^{1/4} + 1` (`p = 2`).
pub fn level_two_mod4_form(spec: &Arc<TowerSpec>) -> Result<XFraction> {
    if spec.p != 2 || spec.height < 2 {
        return Err(Error::Config(
            "the mod-4 form needs p = 2 and height >= 2".into(),
        ));
    }
    let r = 1u32 << (spec.height - 2);
    let z = RingElement::zero(spec, Repr::Char0, None);
    let b = z
        .monomial_like(Mono::new(0, r, r), 1)
        .sub(&z.monomial_like(Mono::new(0, r, 0), 1))
        .sub(&z.monomial_like(Mono::new(0, 0, r), 1))
        .add(&z.constant_like(1));
    let b = XFraction::new(&b, 0);
    let a2 = alpha(spec, 1)?;
    let sqrt2 = spec.q() / 2;
    let b2 = b.mul(&b);
    Ok(a2
        .mul(&a2)
        .scale(2)
        .add(&a2.mul(&b).scale(2))
        .add(&b2.mul_x(sqrt2).scale(2))
        .add(&b2))
}

/// `ξ_{p^k} = w^{p^{M-k}}` in the uniformizer basis, computed mod `p^prec`.
pub fn root_of_unity(spec: &Arc<TowerSpec>, k: u32, prec: u32) -> Result<RingElement> {
    if !spec.is_cyclotomic() || k > spec.root_level {
        return Err(Error::Config(format!(
            "no primitive p^{k}-th root of unity in this tower"
        )));
    }
    let z = RingElement::zero(spec, Repr::Char0, Some(prec));
    let w = z
        .constant_like(1)
        .add(&z.monomial_like(Mono::new(0, 1, 0), 1));
    Ok(w.pow(spec.p.pow(spec.root_level - k)))
}

/// `(ξ_p - 1)^p / p` for odd `p`, or `(ξ_4 + 1)^2 / 2` for `p = 2`, mod `p`.
pub fn cyclotomic_form(spec: &Arc<TowerSpec>) -> Result<RingElement> {
    let p = spec.p;
    let (k, shift) = if p == 2 { (2, 1) } else { (1, -1) };
    let xi = root_of_unity(spec, k, 2)?;
    let base = xi.add(&xi.constant_like(shift));
    base.pow(p).exact_divide(Divisor::P)
}

/// Normal-form congruence `a ≡ b mod p^n` (sufficient for congruence in the
/// integral closure).
pub fn congruent_normal_form(a: &RingElement, b: &RingElement, n: u32) -> bool {
    reduce_mod(&exact_char0(a).sub(&exact_char0(b)), n).is_zero()
}

/// Decides `a ≡ b mod p^n` in the integral closure of the tower ring.
pub fn congruent_mod_pn(a: &RingElement, b: &XFraction, n: u32) -> Result<bool> {
    let spec = a.spec().clone();
    if !spec.same_ring(b.num.spec()) {
        return Err(Error::Mismatch("congruence across different towers".into()));
    }
    let xd = RingElement::monomial(&spec, Repr::Char0, None, Mono::new(b.xden, 0, 0), 1);
    let d = exact_char0(a).mul(&xd).sub(&b.num);
    let d = exact_char0(&d);
    let den = b.xden + n as i64 * spec.q();
    if spec.is_cyclotomic() {
        if b.xden != 0 {
            return Err(Error::NonRepresentable(
                "fractional closed form in the cyclotomic tower".into(),
            ));
        }
        if reduce_mod(&d, n).is_zero() {
            return Ok(true);
        }
        if d.terms().keys().any(|m| m.x != 0) {
            return Err(Error::NonRepresentable(
                "cyclotomic congruence with p-power roots is undecided".into(),
            ));
        }
        return Ok(false);
    }
    is_integral_quotient(&d, den)
}

fn descend_minimal(d: &RingElement, den: i64) -> (RingElement, i64) {
    let spec = d.spec();
    for h in 0..spec.height {
        let r = pow_i64(spec.p, spec.height - h);
        if den % r != 0 {
            continue;
        }
        let Ok(t) = spec.with_height(h.max(1), 0) else {
            continue;
        };
        if h == 0 {
            continue;
        }
        if let Some(e) = d.descend_height(&t) {
            return (e, den / r);
        }
    }
    (d.clone(), den)
}

/// Polynomials in `t` and `s` with rational coefficients `num / den`
/// (a single common denominator), subject to `s^q = σ t^q + τ`.
#[derive(Clone, Debug, PartialEq)]
struct QPoly {
    num: BTreeMap<(u32, u32), BigInt>,
    den: BigInt,
}

impl QPoly {
    fn zero() -> Self {
        QPoly {
            num: BTreeMap::new(),
            den: BigInt::one(),
        }
    }

    fn one() -> Self {
        let mut z = Self::zero();
        z.num.insert((0, 0), BigInt::one());
        z
    }

    /// Cancels the content against the denominator.
    fn reduced(mut self) -> Self {
        self.num.retain(|_, v| !v.is_zero());
        if self.num.is_empty() {
            return Self::zero();
        }
        let mut g = self.den.clone();
        for v in self.num.values() {
            if g.is_one() {
                break;
            }
            g = g.gcd(v);
        }
        if self.den.is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for v in self.num.values_mut() {
                *v /= &g;
            }
            self.den /= &g;
        }
        self
    }

    /// All coefficients have non-negative `p`-adic valuation.
    fn p_integral(&self, p: u64) -> bool {
        let vd = vp_int(&self.den, p);
        vd == 0 || self.num.values().all(|v| vp_int(v, p) >= vd)
    }
}

struct QRing {
    q: u32,
    sigma: BigInt,
    tau: BigInt,
}

impl QRing {
    fn add(&self, a: &QPoly, b: &QPoly, sign: i64) -> QPoly {
        let den = &a.den * &b.den;
        let mut num: BTreeMap<(u32, u32), BigInt> =
            a.num.iter().map(|(k, v)| (*k, v * &b.den)).collect();
        let f = &a.den * sign;
        for (k, v) in &b.num {
            *num.entry(*k).or_insert_with(BigInt::zero) += v * &f;
        }
        QPoly { num, den }.reduced()
    }

    fn div_int(&self, a: &QPoly, c: u64) -> QPoly {
        QPoly {
            num: a.num.clone(),
            den: &a.den * c,
        }
        .reduced()
    }

    fn mul(&self, a: &QPoly, b: &QPoly) -> QPoly {
        let mut num: BTreeMap<(u32, u32), BigInt> = BTreeMap::new();
        for ((ta, sa), va) in &a.num {
            for ((tb, sb), vb) in &b.num {
                let (t, s, v) = (ta + tb, sa + sb, va * vb);
                if s >= self.q {
                    if !self.sigma.is_zero() {
                        *num.entry((t + self.q, s - self.q))
                            .or_insert_with(BigInt::zero) += &v * &self.sigma;
                    }
                    if !self.tau.is_zero() {
                        *num.entry((t, s - self.q)).or_insert_with(BigInt::zero) += &v * &self.tau;
                    }
                } else {
                    *num.entry((t, s)).or_insert_with(BigInt::zero) += v;
                }
            }
        }
        QPoly {
            num,
            den: &a.den * &b.den,
        }
        .reduced()
    }

    /// Trace over `Q(t)` of the `s`-layer: `q` times the `s^0` part.
    fn trace_s(&self, a: &QPoly) -> QPoly {
        let num = a
            .num
            .iter()
            .filter(|((_, s), _)| *s == 0)
            .map(|(k, v)| (*k, v * self.q))
            .collect();
        QPoly {
            num,
            den: a.den.clone(),
        }
        .reduced()
    }

    /// Elementary symmetric functions from power sums (Newton).
    fn newton(&self, sums: &[QPoly]) -> Vec<QPoly> {
        let mut es = vec![QPoly::one()];
        for k in 1..=sums.len() {
            let mut acc = QPoly::zero();
            for i in 1..=k {
                let term = self.mul(&es[k - i], &sums[i - 1]);
                acc = self.add(&acc, &term, if i % 2 == 1 { 1 } else { -1 });
            }
            es.push(self.div_int(&acc, k as u64));
        }
        es
    }
}

/// Decides whether an element of `Q(t)[s]` (with `t^q = T`, `s^q = S`) is
/// integral over the Gauss valuation ring of `Q(T)`. The valuation extends
/// uniquely to `Q(t)` as the Gauss valuation in `t`, so integrality in the
/// `s`-layer is read off the characteristic polynomial over `Q(t)`.
fn integral_in_ts(ring: &QRing, f: &QPoly, p: u64) -> bool {
    if f.p_integral(p) {
        return true;
    }
    let mut sums = Vec::with_capacity(ring.q as usize);
    let mut pw = f.clone();
    for k in 1..=ring.q {
        if k > 1 {
            pw = ring.mul(&pw, f);
        }
        sums.push(ring.trace_s(&pw));
    }
    ring.newton(&sums).iter().all(|e| e.p_integral(p))
}

/// Decides whether `d / x^den` is integral over `Z_p⟨T⟩` (equivalently lies
/// in the integral closure of the tower ring), via the characteristic
/// polynomial over the `x`-layer followed by the `s`-layer.
pub fn is_integral_quotient(d: &RingElement, den: i64) -> Result<bool> {
    let spec = d.spec();
    if spec.is_cyclotomic() || d.repr() != Repr::Char0 {
        return Err(Error::Mismatch(
            "integrality test needs a char-0 T,S tower element".into(),
        ));
    }
    let d = exact_char0(d);
    let q0 = spec.q();
    if d.is_zero() {
        return Ok(true);
    }
    let p = spec.p;
    let visible = d
        .terms()
        .iter()
        .all(|(m, c)| vp_int(c, p) as i128 * q0 as i128 + m.x as i128 >= den as i128);
    if visible {
        return Ok(true);
    }
    let (d, den) = descend_minimal(&d, den);
    let spec = d.spec().clone();
    let q = spec.q();
    let (sg, tu) = spec.tag.affine_params();
    let ring = QRing {
        q: q as u32,
        sigma: BigInt::from(sg),
        tau: BigInt::from(tu),
    };
    let pb = BigInt::from(p);
    let mut sums = Vec::with_capacity(q as usize);
    let mut dk = d.constant_like(1);
    for k in 1..=q {
        dk = dk.mul(&d);
        let e = k * den;
        let m = (-e).rem_euclid(q);
        let pw = (e + m) / q;
        let z = dk.mul(&d.monomial_like(Mono::new(m, 0, 0), 1));
        let (numf, denom) = if pw >= 0 {
            (BigInt::one(), pb.pow(pw as u32))
        } else {
            (pb.pow((-pw) as u32), BigInt::one())
        };
        let num = z
            .terms()
            .iter()
            .filter(|(mm, _)| mm.x == 0)
            .map(|(mm, c)| ((mm.a, mm.b), c * q * &numf))
            .collect();
        sums.push(QPoly { num, den: denom }.reduced());
    }
    let es = ring.newton(&sums);
    Ok(es.iter().skip(1).all(|e| integral_in_ts(&ring, e, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower_rings::ScenarioTag;

    #[test]
    fn multinomial_examples() {
        let r = vp_multinomial(2, 2, &[2, 2]).unwrap();
        assert_eq!(
            (r.coefficient.clone(), r.valuation, r.bound_holds),
            (BigInt::from(6), 1, true)
        );
        let r = vp_multinomial(2, 2, &[4, 0]).unwrap();
        assert_eq!((r.coefficient.clone(), r.valuation), (BigInt::from(1), 0));
        let r = vp_multinomial(2, 2, &[1, 3]).unwrap();
        assert_eq!(
            (r.coefficient.clone(), r.valuation, r.bound_holds),
            (BigInt::from(4), 2, true)
        );
        assert!(vp_multinomial(2, 2, &[1, 1]).is_err());
    }

    #[test]
    fn bracket_level_one() {
        for p in [2, 3] {
            let b = expand_an_bracket(1, p).unwrap();
            assert_eq!(b.to_strings(), vec!["1*C1", "1*B1"]);
            assert!(b.is_homogeneous());
        }
    }

    #[test]
    fn integrality_basics() {
        let spec = TowerSpec::new(2, 2, ScenarioTag::SPlusT).unwrap();
        let a = alpha(&spec, 2).unwrap();
        assert!(is_integral_quotient(&a.num, a.xden).unwrap());
        assert!(!is_integral_quotient(&a.num, a.xden + 1).unwrap());
        let one = RingElement::from_int(&spec, Repr::Char0, None, 1);
        assert!(!is_integral_quotient(&one, 1).unwrap());
        assert!(is_integral_quotient(&one.scale(&BigInt::from(2)), 4).unwrap());
    }
}
