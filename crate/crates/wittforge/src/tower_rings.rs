//! Normal-form arithmetic in the finite tower rings.
//!
//! A tower ring of height `N` adjoins `x = p^{1/p^N}` together with either
//! `t = T^{1/p^N}`, `s = S^{1/p^N}` (the `s-plus-t` and affine scenarios) or a
//! primitive `p^M`-th root of unity carried in the uniformizer basis
//! `pi = w - 1` (the cyclotomic scenario). Elements are sparse maps from
//! exponent vectors to integers in one of three representations:
//!
//! * `Char0`: exact integer coefficients, `x`- and `s`-exponents below `p^N`
//!   (`pi`-exponents below `phi(p^M)`), optionally reduced mod `p^m`;
//! * `XAdic`: coefficients are base-`p` digits pushed into powers of
//!   `x^{p^N} = p`, `x`-exponents may be negative (Laurent representatives)
//!   and everything at or above a cutoff is dropped;
//! * `Residue`: the ring mod `p`, written with `u = s - sigma t - tau` so that
//!   `x` and `u` (or `pi`) are nilpotent of known degree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::{is_prime, Error, Result, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioTag {
    /// `S = 1 - T`.
    SPlusT,
    /// `S = s T + t` for integer parameters.
    Affine { s: i64, t: i64 },
    /// Roots of unity only (no `T`).
    Cyclotomic,
}

impl ScenarioTag {
    pub fn name(&self) -> String {
        match self {
            ScenarioTag::SPlusT => "s-plus-t".to_string(),
            ScenarioTag::Affine { s, t } => format!("affine({s},{t})"),
            ScenarioTag::Cyclotomic => "cyclotomic".to_string(),
        }
    }

    /// `(sigma, tau)` with `S = sigma T + tau`.
    pub fn affine_params(&self) -> (i64, i64) {
        match self {
            ScenarioTag::SPlusT => (-1, 1),
            ScenarioTag::Affine { s, t } => (*s, *t),
            ScenarioTag::Cyclotomic => (0, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Repr {
    Char0,
    XAdic,
    Residue,
}

/// Exponent vector. `a`/`b` are the exponents of `t`/`s` (or `t`/`u` in the
/// residue representation); in the cyclotomic scenario `a` is the exponent of
/// `pi` and `b` is unused. Ordering is lexicographic in `(x, a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub x: i64,
    pub a: u32,
    pub b: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { x: 0, a: 0, b: 0 };

    pub fn new(x: i64, a: u32, b: u32) -> Self {
        Mono { x, a, b }
    }

    fn mul(self, o: Mono) -> Mono {
        Mono {
            x: self.x + o.x,
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

#[derive(Debug)]
pub struct TowerSpec {
    pub p: u64,
    pub height: u32,
    pub tag: ScenarioTag,
    /// `M` for the cyclotomic generator (a primitive `p^M`-th root of unity).
    pub root_level: u32,
    q: i64,
    phi: u32,
    /// `pi^phi = sum_k pi_tail[k] pi^k` (all entries divisible by `p`).
    pi_tail: Vec<BigInt>,
}

const MAX_Q: i64 = 1 << 40;

impl TowerSpec {
    /// Tower for the `s-plus-t` or affine scenarios.
    pub fn new(p: u64, height: u32, tag: ScenarioTag) -> Result<Arc<Self>> {
        if tag == ScenarioTag::Cyclotomic {
            return Err(Error::Config(
                "use TowerSpec::cyclotomic for roots of unity".into(),
            ));
        }
        let q = Self::check(p, height)?;
        Ok(Arc::new(TowerSpec {
            p,
            height,
            tag,
            root_level: 0,
            q,
            phi: 0,
            pi_tail: Vec::new(),
        }))
    }

    pub fn cyclotomic(p: u64, height: u32, root_level: u32) -> Result<Arc<Self>> {
        let q = Self::check(p, height)?;
        if root_level < 1 {
            return Err(Error::Config("root level must be at least 1".into()));
        }
        let top = (p as i64)
            .checked_pow(root_level - 1)
            .filter(|v| *v * (p as i64 - 1) <= 1 << 16)
            .ok_or_else(|| Error::Resource(format!("root of unity of order {p}^{root_level}")))?;
        let phi = (top * (p as i64 - 1)) as u32;
        // Phi_{p^M}(1 + pi) = sum_{i<p} (1 + pi)^{i p^{M-1}}
        let mut poly = vec![BigInt::zero(); phi as usize + 1];
        for i in 0..p as i64 {
            let e = (i * top) as usize;
            let mut c = BigInt::one();
            for k in 0..=e {
                poly[k] += &c;
                c = c * BigInt::from(e - k) / BigInt::from(k + 1);
            }
        }
        debug_assert!(poly[phi as usize].is_one());
        let pi_tail = poly[..phi as usize].iter().map(|c| -c).collect();
        Ok(Arc::new(TowerSpec {
            p,
            height,
            tag: ScenarioTag::Cyclotomic,
            root_level,
            q,
            phi,
            pi_tail,
        }))
    }

    fn check(p: u64, height: u32) -> Result<i64> {
        if !is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if height < 1 {
            return Err(Error::Config("tower height must be at least 1".into()));
        }
        (p as i64)
            .checked_pow(height)
            .filter(|q| *q <= MAX_Q)
            .ok_or_else(|| Error::Resource(format!("tower height {height} too large for p={p}")))
    }

    /// Same scenario at another height (and root level).
    pub fn with_height(&self, height: u32, root_level: u32) -> Result<Arc<Self>> {
        if self.is_cyclotomic() {
            TowerSpec::cyclotomic(self.p, height, root_level)
        } else {
            TowerSpec::new(self.p, height, self.tag.clone())
        }
    }

    /// `p^N`, the degree of `x`.
    pub fn q(&self) -> i64 {
        self.q
    }

    /// Degree of the uniformizer `pi` (0 outside the cyclotomic scenario).
    pub fn phi(&self) -> u32 {
        self.phi
    }

    pub fn is_cyclotomic(&self) -> bool {
        self.tag == ScenarioTag::Cyclotomic
    }

    pub fn same_ring(&self, o: &TowerSpec) -> bool {
        self.p == o.p
            && self.height == o.height
            && self.tag == o.tag
            && self.root_level == o.root_level
    }

    pub fn generator_names(&self, repr: Repr) -> [&'static str; 3] {
        match (self.is_cyclotomic(), repr) {
            (true, _) => ["x", "pi", "_"],
            (false, Repr::Residue) => ["x", "t", "u"],
            (false, _) => ["x", "t", "s"],
        }
    }

    /// Human-readable defining relations.
    pub fn relations(&self) -> Vec<String> {
        let q = self.q;
        let mut out = vec![format!("x^{q} = {}", self.p)];
        match &self.tag {
            ScenarioTag::Cyclotomic => out.push(format!(
                "Phi_{}^{}(1 + pi) = 0 (pi = w - 1, degree {})",
                self.p, self.root_level, self.phi
            )),
            tag => {
                let (sg, tu) = tag.affine_params();
                out.push("t free".to_string());
                out.push(format!("s^{q} = {sg}*t^{q} + {tu}"));
            }
        }
        out
    }

    /// Valuation of a monomial, normalized so that `v(p) = 1`.
    pub fn mono_valuation(&self, m: &Mono) -> Q {
        let mut v = Q::new(m.x, self.q);
        if self.is_cyclotomic() {
            v += Q::new(m.a as i64, self.phi as i64);
        }
        v
    }

    fn sigma_tau(&self) -> (i64, i64) {
        self.tag.affine_params()
    }
}

/// The supported divisors for [`RingElement::exact_divide`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divisor {
    XPow(i64),
    P,
}

/// Exponent-divisibility constraints describing a sublattice such as
/// `Z[p^{1/p^{n-1}}, T^{1/p^n}, S^{1/p^n}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub x_div: i64,
    pub a_div: u32,
    pub b_div: u32,
}

impl Lattice {
    pub fn contains(&self, m: &Mono) -> bool {
        m.x >= 0
            && m.x % self.x_div == 0
            && m.a.is_multiple_of(self.a_div)
            && m.b.is_multiple_of(self.b_div)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone)]
pub struct RingElement {
    spec: Arc<TowerSpec>,
    repr: Repr,
    /// `Char0` only: coefficients reduced mod `p^m`.
    modulus: Option<u32>,
    /// `XAdic` only: exponents of `x` are strictly below `cut`.
    cut: i64,
    terms: BTreeMap<Mono, BigInt>,
}

impl PartialEq for RingElement {
    fn eq(&self, o: &Self) -> bool {
        self.spec.same_ring(&o.spec) && self.repr == o.repr && self.terms == o.terms
    }
}
impl Eq for RingElement {}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.repr, self)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let lines = self.to_lines();
        write!(f, "{}", lines.join(" + "))
    }
}

impl RingElement {
    pub fn zero(spec: &Arc<TowerSpec>, repr: Repr, prec: Option<u32>) -> Self {
        let (modulus, cut) = match repr {
            Repr::Char0 => (prec, 0),
            Repr::XAdic => (
                None,
                prec.expect("x-adic elements need a modulus") as i64 * spec.q,
            ),
            Repr::Residue => (None, 0),
        };
        RingElement {
            spec: spec.clone(),
            repr,
            modulus,
            cut,
            terms: BTreeMap::new(),
        }
    }

    /// Zero with an explicit x-adic cutoff (in units of `x`).
    pub fn zero_cut(spec: &Arc<TowerSpec>, cut: i64) -> Self {
        RingElement {
            spec: spec.clone(),
            repr: Repr::XAdic,
            modulus: None,
            cut,
            terms: BTreeMap::new(),
        }
    }

    fn empty_like(&self) -> Self {
        RingElement {
            spec: self.spec.clone(),
            repr: self.repr,
            modulus: self.modulus,
            cut: self.cut,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a normalized element from raw terms in the variables of `repr`.
    pub fn from_terms<I>(spec: &Arc<TowerSpec>, repr: Repr, prec: Option<u32>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Mono, BigInt)>,
    {
        let z = Self::zero(spec, repr, prec);
        z.with_raw(terms)
    }

    /// Like [`from_terms`](Self::from_terms) for the x-adic representation with an explicit cutoff.
    pub fn from_terms_cut<I>(spec: &Arc<TowerSpec>, cut: i64, terms: I) -> Self
    where
        I: IntoIterator<Item = (Mono, BigInt)>,
    {
        Self::zero_cut(spec, cut).with_raw(terms)
    }

    /// Normalizes raw terms into an element shaped like `self`.
    pub fn with_raw<I>(&self, terms: I) -> Self
    where
        I: IntoIterator<Item = (Mono, BigInt)>,
    {
        let mut out = self.empty_like();
        out.terms = match self.repr {
            Repr::Char0 => norm_char0(&self.spec, terms, self.modulus),
            Repr::Residue => norm_residue(&self.spec, terms),
            Repr::XAdic => {
                let mut acc: HashMap<Mono, i128> = HashMap::new();
                for (m, c) in terms {
                    push_digits(&mut acc, self.spec.p, self.spec.q, m, &c, self.cut);
                }
                norm_xadic(&self.spec, acc, self.cut)
            }
        };
        out
    }

    pub fn from_int(
        spec: &Arc<TowerSpec>,
        repr: Repr,
        prec: Option<u32>,
        n: impl Into<BigInt>,
    ) -> Self {
        Self::from_terms(spec, repr, prec, [(Mono::ONE, n.into())])
    }

    pub fn monomial(
        spec: &Arc<TowerSpec>,
        repr: Repr,
        prec: Option<u32>,
        m: Mono,
        c: impl Into<BigInt>,
    ) -> Self {
        Self::from_terms(spec, repr, prec, [(m, c.into())])
    }

    /// A constant shaped like `self` (same ring, representation and precision).
    pub fn constant_like(&self, n: impl Into<BigInt>) -> Self {
        self.with_raw([(Mono::ONE, n.into())])
    }

    /// A monomial shaped like `self`.
    pub fn monomial_like(&self, m: Mono, c: impl Into<BigInt>) -> Self {
        self.with_raw([(m, c.into())])
    }

    /// The element `s` written in the variables of `repr` (`u + sigma t + tau` in the residue ring).
    pub fn s_gen(spec: &Arc<TowerSpec>, repr: Repr, prec: Option<u32>) -> Self {
        match repr {
            Repr::Residue => {
                let (sg, tu) = spec.sigma_tau();
                Self::from_terms(
                    spec,
                    repr,
                    prec,
                    [
                        (Mono::new(0, 0, 1), BigInt::one()),
                        (Mono::new(0, 1, 0), BigInt::from(sg)),
                        (Mono::ONE, BigInt::from(tu)),
                    ],
                )
            }
            _ => Self::monomial(spec, repr, prec, Mono::new(0, 0, 1), 1),
        }
    }

    pub fn spec(&self) -> &Arc<TowerSpec> {
        &self.spec
    }
    pub fn repr(&self) -> Repr {
        self.repr
    }
    pub fn modulus(&self) -> Option<u32> {
        match self.repr {
            Repr::Char0 => self.modulus,
            Repr::XAdic => (self.cut % self.spec.q == 0).then(|| (self.cut / self.spec.q) as u32),
            Repr::Residue => Some(1),
        }
    }
    /// Exclusive bound on x-exponents (x-adic representation).
    pub fn cut(&self) -> i64 {
        self.cut
    }
    pub fn terms(&self) -> &BTreeMap<Mono, BigInt> {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Recomputes the normal form; a no-op on normalized elements.
    pub fn normalize(&self) -> Self {
        self.with_raw(self.terms.clone())
    }

    fn check_compat(&self, o: &Self) -> Result<()> {
        if !self.spec.same_ring(&o.spec) {
            return Err(Error::Mismatch("elements of different tower rings".into()));
        }
        if self.repr != o.repr {
            return Err(Error::Mismatch(format!(
                "{:?} vs {:?} representation",
                self.repr, o.repr
            )));
        }
        Ok(())
    }

    fn joined(&self, o: &Self) -> Self {
        let mut e = self.empty_like();
        e.cut = self.cut.min(o.cut);
        e.modulus = match (self.modulus, o.modulus) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        e
    }

    pub fn arith(&self, o: &Self, op: ArithOp) -> Result<Self> {
        self.check_compat(o)?;
        Ok(match op {
            ArithOp::Add => self.add_signed(o, false),
            ArithOp::Sub => self.add_signed(o, true),
            ArithOp::Mul => self.mul_cut(o, self.cut.min(o.cut)),
        })
    }

    fn add_signed(&self, o: &Self, neg: bool) -> Self {
        let base = self.joined(o);
        let iter = self.terms.iter().map(|(m, c)| (*m, c.clone())).chain(
            o.terms
                .iter()
                .map(|(m, c)| (*m, if neg { -c } else { c.clone() })),
        );
        if self.repr == Repr::XAdic {
            // digits are small: stay in machine integers
            let mut acc: HashMap<Mono, i128> =
                HashMap::with_capacity(self.terms.len() + o.terms.len());
            for (m, c) in iter {
                if m.x < base.cut {
                    *acc.entry(m).or_insert(0) += c.to_i128().expect("digit");
                }
            }
            let mut out = base.empty_like();
            out.terms = norm_xadic(&self.spec, acc, base.cut);
            out
        } else {
            base.with_raw(iter)
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.arith(o, ArithOp::Add).expect("incompatible operands")
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.arith(o, ArithOp::Sub).expect("incompatible operands")
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.arith(o, ArithOp::Mul).expect("incompatible operands")
    }
    pub fn neg(&self) -> Self {
        self.with_raw(self.terms.iter().map(|(m, c)| (*m, -c)))
    }
    pub fn scale(&self, c: &BigInt) -> Self {
        self.with_raw(self.terms.iter().map(|(m, v)| (*m, v * c)))
    }

    /// Product truncated at an explicit x-cutoff (x-adic only; other
    /// representations ignore `cut`).
    pub fn mul_cut(&self, o: &Self, cut: i64) -> Self {
        let mut base = self.joined(o);
        if self.repr != Repr::XAdic {
            let mut raw: HashMap<Mono, BigInt> = HashMap::new();
            for (m1, c1) in &self.terms {
                for (m2, c2) in &o.terms {
                    *raw.entry(m1.mul(*m2)).or_insert_with(BigInt::zero) += c1 * c2;
                }
            }
            return base.with_raw(raw);
        }
        base.cut = cut;
        let a: Vec<(Mono, i64)> = self
            .terms
            .iter()
            .map(|(m, c)| (*m, c.to_i64().unwrap()))
            .collect();
        let mut b: Vec<(Mono, i64)> = o
            .terms
            .iter()
            .map(|(m, c)| (*m, c.to_i64().unwrap()))
            .collect();
        b.sort_by_key(|(m, _)| m.x);
        let mut acc: HashMap<Mono, i64> = HashMap::with_capacity(a.len() * 4);
        for (m1, c1) in &a {
            for (m2, c2) in &b {
                if m1.x + m2.x >= cut {
                    break;
                }
                *acc.entry(m1.mul(*m2)).or_insert(0) += c1 * c2;
            }
        }
        let acc = acc
            .into_iter()
            .filter(|(_, v)| *v != 0)
            .map(|(m, v)| (m, v as i128))
            .collect();
        base.terms = norm_xadic(&self.spec, acc, cut);
        base
    }

    pub fn pow(&self, e: u64) -> Self {
        self.pow_cut(e, self.cut)
    }

    pub fn pow_cut(&self, mut e: u64, cut: i64) -> Self {
        let mut r = self.constant_like(1);
        r.cut = cut;
        r = r.with_raw([(Mono::ONE, BigInt::one())]);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul_cut(&b, cut);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul_cut(&b, cut);
            }
        }
        r
    }

    /// Multiplies by `x^k`; `k` may be negative (Laurent shift). x-adic only.
    pub fn shift_x(&self, k: i64) -> Self {
        assert_eq!(
            self.repr,
            Repr::XAdic,
            "shift_x needs the x-adic representation"
        );
        let mut out = self.empty_like();
        out.terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.x + k < self.cut)
            .map(|(m, c)| (Mono { x: m.x + k, ..*m }, c.clone()))
            .collect();
        out
    }

    /// Drops every monomial with x-exponent at or above `cut`.
    pub fn truncate_x(&self, cut: i64) -> Self {
        let mut out = self.empty_like();
        out.cut = self.cut.min(cut);
        out.terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.x < out.cut)
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        out
    }

    /// Re-expresses an x-adic element with a different cutoff.
    pub fn with_cut(&self, cut: i64) -> Self {
        assert_eq!(self.repr, Repr::XAdic);
        let mut z = Self::zero_cut(&self.spec, cut);
        z = z.with_raw(self.terms.iter().map(|(m, c)| (*m, c.clone())));
        z
    }

    /// Converts a char-0 element mod `p^m` to the x-adic representation.
    pub fn to_x_adic(&self, m: u32) -> Result<Self> {
        match self.repr {
            Repr::XAdic => Ok(self.with_cut(m as i64 * self.spec.q)),
            Repr::Char0 => Ok(Self::from_terms(
                &self.spec,
                Repr::XAdic,
                Some(m),
                self.terms.iter().map(|(k, c)| (*k, c.clone())),
            )),
            Repr::Residue => Err(Error::Mismatch(
                "residue elements have no x-adic form".into(),
            )),
        }
    }

    /// Converts an x-adic element back to char-0 normal form mod `p^m`.
    pub fn from_x_adic(&self) -> Result<Self> {
        if self.repr != Repr::XAdic {
            return Err(Error::Mismatch(
                "from_x_adic needs an x-adic element".into(),
            ));
        }
        if let Some((m, _)) = self.terms.iter().find(|(m, _)| m.x < 0) {
            return Err(Error::NonRepresentable(format!(
                "negative x-exponent {}",
                m.x
            )));
        }
        let m = (self.cut + self.spec.q - 1) / self.spec.q;
        Ok(Self::from_terms(
            &self.spec,
            Repr::Char0,
            Some(m as u32),
            self.terms.iter().map(|(k, c)| (*k, c.clone())),
        ))
    }

    /// Reduction mod `p` into the residue representation (variables x, t, u).
    pub fn to_residue(&self) -> Result<Self> {
        match self.repr {
            Repr::Residue => return Ok(self.clone()),
            Repr::XAdic => {
                if self.terms.keys().any(|m| m.x < 0) {
                    return Err(Error::NonRepresentable(
                        "negative x-exponent has no residue".into(),
                    ));
                }
            }
            Repr::Char0 => {}
        }
        let z = Self::zero(&self.spec, Repr::Residue, None);
        if self.spec.is_cyclotomic() {
            return Ok(z.with_raw(self.terms.iter().map(|(m, c)| (*m, c.clone()))));
        }
        let s = Self::s_gen(&self.spec, Repr::Residue, None);
        let mut s_pows = vec![z.constant_like(1)];
        let mut acc = z.clone();
        for (m, c) in &self.terms {
            while s_pows.len() <= m.b as usize {
                let next = s_pows.last().unwrap().mul(&s);
                s_pows.push(next);
            }
            let mono = z.monomial_like(Mono::new(m.x, m.a, 0), c.clone());
            acc = acc.add(&mono.mul(&s_pows[m.b as usize]));
        }
        Ok(acc)
    }

    /// Divides by `x^k` (or by `p`) inside the polynomial presentation.
    pub fn exact_divide(&self, d: Divisor) -> Result<Self> {
        let k = match d {
            Divisor::XPow(k) => k,
            Divisor::P => self.spec.q,
        };
        if k < 0 {
            return Err(Error::Config("negative divisor exponent".into()));
        }
        match self.repr {
            Repr::XAdic | Repr::Residue => {
                if let Some((m, _)) = self.terms.iter().find(|(m, _)| m.x < k) {
                    return Err(Error::NotDivisible(format!(
                        "monomial {} has x-exponent below {k}",
                        self.mono_string(m)
                    )));
                }
                let mut out = self.empty_like();
                out.terms = self
                    .terms
                    .iter()
                    .map(|(m, c)| (Mono { x: m.x - k, ..*m }, c.clone()))
                    .collect();
                Ok(out)
            }
            Repr::Char0 => {
                let q = self.spec.q;
                let p = BigInt::from(self.spec.p);
                let mut raw = Vec::with_capacity(self.terms.len());
                for (m, c) in &self.terms {
                    let mut x = m.x;
                    let mut c = c.clone();
                    while x < k {
                        if c.is_multiple_of(&p) {
                            c /= &p;
                            x += q;
                        } else {
                            return Err(Error::NotDivisible(format!(
                                "monomial {} is not divisible by x^{k}",
                                self.mono_string(m)
                            )));
                        }
                    }
                    raw.push((Mono { x: x - k, ..*m }, c));
                }
                let mut out = self.empty_like();
                if let Some(mm) = out.modulus {
                    out.modulus = Some(mm.saturating_sub(((k + q - 1) / q) as u32));
                }
                Ok(out.with_raw(raw))
            }
        }
    }

    /// Image under the embedding of height `N` into the height of `target`
    /// (each generator `g` goes to `g'^{p^{N'-N}}`; roots of unity are
    /// re-expanded in the finer uniformizer).
    pub fn reindex(&self, target: &Arc<TowerSpec>) -> Result<Self> {
        let (s, t) = (&self.spec, target);
        if s.p != t.p || s.tag != t.tag {
            return Err(Error::Mismatch("reindex across different scenarios".into()));
        }
        if t.height < s.height || t.root_level < s.root_level {
            return Err(Error::Config(format!(
                "cannot reindex height {} to {}",
                s.height, t.height
            )));
        }
        let r = t.q / s.q;
        let prec = match self.repr {
            Repr::Char0 => self.modulus,
            Repr::XAdic => None,
            Repr::Residue => None,
        };
        let mut z = Self::zero(
            target,
            self.repr,
            if self.repr == Repr::XAdic {
                Some(1)
            } else {
                prec
            },
        );
        if self.repr == Repr::XAdic {
            z = Self::zero_cut(target, self.cut * r);
        }
        if !s.is_cyclotomic() {
            let r32 = r as u32;
            return Ok(z.with_raw(
                self.terms
                    .iter()
                    .map(|(m, c)| (Mono::new(m.x * r, m.a * r32, m.b * r32), c.clone())),
            ));
        }
        // pi = (1 + pi')^{p^{dM}} - 1
        let dm = t.root_level - s.root_level;
        let one = z.constant_like(1);
        let pi1 = one.add(&z.monomial_like(Mono::new(0, 1, 0), 1));
        let img = pi1.pow(s.p.pow(dm)).sub(&one);
        let mut pows = vec![one.clone()];
        let mut acc = z.clone();
        for (m, c) in &self.terms {
            while pows.len() <= m.a as usize {
                let nx = pows.last().unwrap().mul(&img);
                pows.push(nx);
            }
            acc = acc.add(
                &z.monomial_like(Mono::new(m.x * r, 0, 0), c.clone())
                    .mul(&pows[m.a as usize]),
            );
        }
        Ok(acc)
    }

    /// Inverse of [`reindex`](Self::reindex) when all exponents allow it.
    pub fn descend_height(&self, target: &Arc<TowerSpec>) -> Option<Self> {
        let (s, t) = (&self.spec, target);
        if s.p != t.p || s.tag != t.tag || t.height > s.height || s.is_cyclotomic() {
            return None;
        }
        let r = s.q / t.q;
        let r32 = r as u32;
        if self
            .terms
            .keys()
            .any(|m| m.x % r != 0 || m.a % r32 != 0 || m.b % r32 != 0)
        {
            return None;
        }
        let z = match self.repr {
            Repr::XAdic => {
                if self.cut % r != 0 {
                    return None;
                }
                Self::zero_cut(target, self.cut / r)
            }
            repr => Self::zero(target, repr, self.modulus),
        };
        Some(
            z.with_raw(
                self.terms
                    .iter()
                    .map(|(m, c)| (Mono::new(m.x / r, m.a / r32, m.b / r32), c.clone())),
            ),
        )
    }

    /// First monomial violating the lattice constraints, if any.
    pub fn lattice_membership(&self, lat: &Lattice) -> Option<Mono> {
        self.terms.keys().find(|m| !lat.contains(m)).copied()
    }

    /// Smallest monomial valuation (a lower bound for the true valuation).
    pub fn min_valuation(&self) -> Option<Q> {
        self.terms.keys().map(|m| self.spec.mono_valuation(m)).min()
    }

    pub fn mono_string(&self, m: &Mono) -> String {
        let names = self.spec.generator_names(self.repr);
        let mut s = String::new();
        for (name, e) in [
            (names[0], m.x),
            (names[1], m.a as i64),
            (names[2], m.b as i64),
        ] {
            if e != 0 {
                if !s.is_empty() {
                    s.push_str(" * ");
                }
                s.push_str(&format!("{name}^{e}"));
            }
        }
        if s.is_empty() {
            "1".into()
        } else {
            s
        }
    }

    /// Canonical serialization, one monomial per entry: `coeff * g1^e1 * g2^e2 ...`.
    pub fn to_lines(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let ms = self.mono_string(m);
                if ms == "1" {
                    c.to_string()
                } else {
                    format!("{c} * {ms}")
                }
            })
            .collect()
    }

    /// Serialization with rational exponents of `p`, `T`, `S` (e.g. `p^(1/2)`).
    pub fn to_rational_lines(&self) -> Vec<String> {
        let q = self.spec.q;
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut parts = vec![c.to_string()];
                let mut push = |name: &str, e: i64, d: i64| {
                    if e != 0 {
                        let r = Q::new(e, d);
                        if r.is_integer() {
                            parts.push(format!("{name}^{}", r.numer()));
                        } else {
                            parts.push(format!("{name}^({}/{})", r.numer(), r.denom()));
                        }
                    }
                };
                push("p", m.x, q);
                if self.spec.is_cyclotomic() {
                    push("pi", m.a as i64, 1);
                } else if self.repr == Repr::Residue {
                    push("T", m.a as i64, q);
                    push("u", m.b as i64, 1);
                } else {
                    push("T", m.a as i64, q);
                    push("S", m.b as i64, q);
                }
                parts.join(" * ")
            })
            .collect()
    }
}

/// Adds `c * m` to `acc`, expanding `c` into base-`p` digits on powers of `x^q`.
fn push_digits(acc: &mut HashMap<Mono, i128>, p: u64, q: i64, m: Mono, c: &BigInt, cut: i64) {
    if let Some(v) = c.to_i128() {
        if v.abs() < (1i128 << 100) {
            if m.x < cut && v != 0 {
                *acc.entry(m).or_insert(0) += v;
            }
            return;
        }
    }
    let pb = BigInt::from(p);
    let mut c = c.clone();
    let mut x = m.x;
    while !c.is_zero() && x < cut {
        let (qq, r) = c.div_mod_floor(&pb);
        if !r.is_zero() {
            *acc.entry(Mono { x, ..m }).or_insert(0) += r.to_i128().unwrap();
        }
        c = qq;
        x += q;
    }
}

fn norm_xadic(spec: &TowerSpec, mut acc: HashMap<Mono, i128>, cut: i64) -> BTreeMap<Mono, BigInt> {
    let q = spec.q;
    let p = spec.p as i128;
    // defining relations first
    if spec.is_cyclotomic() {
        let phi = spec.phi;
        if acc.keys().any(|m| m.a >= phi) {
            let min_x = acc.keys().map(|m| m.x).min().unwrap_or(0);
            let digits_needed = ((cut - min_x).max(0) / q + 2) as usize;
            let tail: Vec<Vec<(i64, i128)>> = spec
                .pi_tail
                .iter()
                .map(|c| {
                    let mut out = Vec::new();
                    let pb = BigInt::from(spec.p);
                    let mut c = c.clone();
                    for i in 0..digits_needed {
                        if c.is_zero() {
                            break;
                        }
                        let (qq, r) = c.div_mod_floor(&pb);
                        if !r.is_zero() {
                            out.push((i as i64 * q, r.to_i128().unwrap()));
                        }
                        c = qq;
                    }
                    out
                })
                .collect();
            loop {
                let top = acc
                    .iter()
                    .filter(|(m, v)| m.a >= phi && **v != 0)
                    .map(|(m, _)| m.a)
                    .max();
                let Some(top) = top else { break };
                let hits: Vec<(Mono, i128)> = acc
                    .iter()
                    .filter(|(m, _)| m.a == top)
                    .map(|(m, v)| (*m, *v))
                    .collect();
                for (m, v) in hits {
                    acc.remove(&m);
                    if v == 0 {
                        continue;
                    }
                    for (k, digits) in tail.iter().enumerate() {
                        for (dx, d) in digits {
                            let nm = Mono {
                                x: m.x + dx,
                                a: m.a - phi + k as u32,
                                b: 0,
                            };
                            if nm.x < cut {
                                *acc.entry(nm).or_insert(0) += v * d;
                            }
                        }
                    }
                }
            }
        }
    } else {
        let (sg, tu) = spec.sigma_tau();
        let qq = q as u32;
        loop {
            let hits: Vec<(Mono, i128)> = acc
                .iter()
                .filter(|(m, _)| m.b >= qq)
                .map(|(m, v)| (*m, *v))
                .collect();
            if hits.is_empty() {
                break;
            }
            for (m, v) in hits {
                acc.remove(&m);
                if v == 0 {
                    continue;
                }
                let base = Mono { b: m.b - qq, ..m };
                if tu != 0 {
                    *acc.entry(base).or_insert(0) += v * tu as i128;
                }
                if sg != 0 {
                    *acc.entry(Mono {
                        a: base.a + qq,
                        ..base
                    })
                    .or_insert(0) += v * sg as i128;
                }
            }
        }
    }
    // base-p digits, carrying into x^{q}
    let mut groups: HashMap<(u32, u32), BTreeMap<i64, i128>> = HashMap::new();
    for (m, v) in acc {
        if v != 0 && m.x < cut {
            *groups
                .entry((m.a, m.b))
                .or_default()
                .entry(m.x)
                .or_insert(0) += v;
        }
    }
    let mut out = BTreeMap::new();
    for ((a, b), mut ser) in groups {
        while let Some((x, v)) = ser.pop_first() {
            if x >= cut {
                break;
            }
            let d = v.rem_euclid(p);
            let carry = (v - d) / p;
            if d != 0 {
                out.insert(Mono { x, a, b }, BigInt::from(d));
            }
            if carry != 0 && x + q < cut {
                *ser.entry(x + q).or_insert(0) += carry;
            }
        }
    }
    out
}

fn norm_char0<I>(spec: &TowerSpec, terms: I, modulus: Option<u32>) -> BTreeMap<Mono, BigInt>
where
    I: IntoIterator<Item = (Mono, BigInt)>,
{
    let q = spec.q;
    let p = BigInt::from(spec.p);
    let mut acc: HashMap<Mono, BigInt> = HashMap::new();
    let mut work: Vec<(Mono, BigInt)> = terms.into_iter().collect();
    let (sg, tu) = spec.sigma_tau();
    while let Some((m, c)) = work.pop() {
        if c.is_zero() {
            continue;
        }
        assert!(
            m.x >= 0,
            "char-0 elements cannot carry negative x-exponents"
        );
        if m.x >= q {
            let k = (m.x / q) as u32;
            work.push((Mono { x: m.x % q, ..m }, c * p.pow(k)));
            continue;
        }
        if spec.is_cyclotomic() {
            if m.a >= spec.phi {
                for (k, tk) in spec.pi_tail.iter().enumerate() {
                    if !tk.is_zero() {
                        work.push((
                            Mono {
                                a: m.a - spec.phi + k as u32,
                                ..m
                            },
                            &c * tk,
                        ));
                    }
                }
                continue;
            }
        } else if m.b >= q as u32 {
            let base = Mono {
                b: m.b - q as u32,
                ..m
            };
            if tu != 0 {
                work.push((base, &c * tu));
            }
            if sg != 0 {
                work.push((
                    Mono {
                        a: base.a + q as u32,
                        ..base
                    },
                    &c * sg,
                ));
            }
            continue;
        }
        *acc.entry(m).or_insert_with(BigInt::zero) += c;
    }
    let md = modulus.map(|m| p.pow(m));
    acc.into_iter()
        .filter_map(|(m, c)| {
            let c = match &md {
                Some(md) => c.mod_floor(md),
                None => c,
            };
            (!c.is_zero()).then_some((m, c))
        })
        .collect()
}

fn norm_residue<I>(spec: &TowerSpec, terms: I) -> BTreeMap<Mono, BigInt>
where
    I: IntoIterator<Item = (Mono, BigInt)>,
{
    let q = spec.q;
    let p = BigInt::from(spec.p);
    let mut acc: BTreeMap<Mono, BigInt> = BTreeMap::new();
    for (m, c) in terms {
        assert!(
            m.x >= 0,
            "residue elements cannot carry negative x-exponents"
        );
        let dead = m.x >= q
            || if spec.is_cyclotomic() {
                m.a >= spec.phi
            } else {
                m.b as i64 >= q
            };
        if dead {
            continue;
        }
        *acc.entry(m).or_insert_with(BigInt::zero) += c;
    }
    acc.into_iter()
        .filter_map(|(m, c)| {
            let c = c.mod_floor(&p);
            (!c.is_zero()).then_some((m, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spt(p: u64, n: u32) -> Arc<TowerSpec> {
        TowerSpec::new(p, n, ScenarioTag::SPlusT).unwrap()
    }

    #[test]
    fn defining_relations() {
        let sp = spt(2, 2);
        let x = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(1, 0, 0), 1);
        let x3 = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(3, 0, 0), 1);
        assert_eq!(x3.mul(&x), RingElement::from_int(&sp, Repr::Char0, None, 2));
        let s = RingElement::s_gen(&sp, Repr::Char0, None);
        let s3 = s.pow(3);
        let expect = RingElement::from_terms(
            &sp,
            Repr::Char0,
            None,
            [
                (Mono::ONE, BigInt::one()),
                (Mono::new(0, 4, 0), BigInt::from(-1)),
            ],
        );
        assert_eq!(s3.mul(&s), expect);
    }

    #[test]
    fn residue_nilpotency() {
        let sp = spt(3, 1);
        let u = RingElement::monomial(&sp, Repr::Residue, None, Mono::new(0, 0, 1), 1);
        assert!(!u.pow(2).is_zero());
        assert!(u.pow(3).is_zero());
        // u really is t + s - 1
        let t = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(0, 1, 0), 1);
        let s = RingElement::s_gen(&sp, Repr::Char0, None);
        let one = RingElement::from_int(&sp, Repr::Char0, None, 1);
        assert_eq!(t.add(&s).sub(&one).to_residue().unwrap(), u);
    }

    #[test]
    fn x_adic_digits() {
        let sp = spt(2, 1);
        let el = |n: i64| {
            RingElement::from_int(&sp, Repr::Char0, Some(2), n)
                .to_x_adic(2)
                .unwrap()
        };
        let x2 = RingElement::monomial(&sp, Repr::XAdic, Some(2), Mono::new(2, 0, 0), 1);
        assert_eq!(el(2), x2);
        assert!(el(4).is_zero());
        assert_eq!(el(3), x2.constant_like(1).add(&x2));
        // -1 = 1 + 2 mod 4
        assert_eq!(el(-1), el(3));
    }

    #[test]
    fn divide() {
        let sp = spt(2, 2);
        let x3 = RingElement::monomial(&sp, Repr::XAdic, Some(2), Mono::new(3, 0, 0), 1);
        let x2 = RingElement::monomial(&sp, Repr::XAdic, Some(2), Mono::new(2, 0, 0), 1);
        assert_eq!(x3.exact_divide(Divisor::XPow(1)).unwrap(), x2);
        let p = RingElement::from_int(&sp, Repr::Char0, None, 2);
        let x = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(1, 0, 0), 1);
        assert_eq!(p.exact_divide(Divisor::XPow(1)).unwrap(), x.pow(3));
        let t = RingElement::monomial(&sp, Repr::XAdic, Some(2), Mono::new(0, 1, 0), 1);
        assert!(matches!(
            t.exact_divide(Divisor::XPow(1)),
            Err(Error::NotDivisible(_))
        ));
    }

    #[test]
    fn cyclotomic_relation() {
        let sp = TowerSpec::cyclotomic(3, 1, 1).unwrap();
        // pi^2 + 3 pi + 3 = 0 for w a primitive cube root of unity
        let pi = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(0, 1, 0), 1);
        let lhs = pi
            .pow(2)
            .add(&pi.scale(&BigInt::from(3)))
            .add(&pi.constant_like(3));
        assert!(lhs.is_zero());
        let w = pi.add(&pi.constant_like(1));
        assert_eq!(w.pow(3), pi.constant_like(1));
    }

    #[test]
    fn lattice() {
        let sp = spt(2, 2);
        let x2 = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(2, 0, 0), 1);
        let lat = Lattice {
            x_div: 2,
            a_div: 2,
            b_div: 2,
        };
        assert_eq!(x2.lattice_membership(&lat), None);
        let t = RingElement::monomial(&sp, Repr::Char0, None, Mono::new(0, 1, 0), 1);
        assert_eq!(t.lattice_membership(&lat), Some(Mono::new(0, 1, 0)));
    }
}
