//! Finite-depth model of the tilt `lim_{x -> x^p} O/p`.
//!
//! A [`TiltElement`] stores coordinates `c_0..c_D` as x-adic Laurent
//! representatives in the tower ring of height `N >= D`. Each coordinate
//! carries a rational error bound `err <= 1`: the representative agrees with
//! some lift of the true coordinate modulo elements of valuation `>= err`.
//! Coordinates may be left unmaterialized; operations act on the indices
//! present in all operands.
//!
//! Division by `(p♭)^{p^k}` is a formal x-exponent shift at every coordinate
//! (the bound drops by `p^k / p^j` at index `j`); a coordinate whose bound
//! would turn negative is rebuilt by Frobenius descent from the one above.
//! The integer `reliable_top` follows the usual depth ledger (creation `D`,
//! arithmetic `min`, division `-1`) and is enforced as a precondition.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::tower_rings::{ArithOp, Mono, RingElement, TowerSpec};
use crate::witt_core::{teich_int, UnivWittPoly, WittCoeff};
use crate::{Error, Result, Q};

/// p-adic valuation of a nonzero integer.
pub fn vp_int(c: &BigInt, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let mut c = c.abs();
    let mut v = 0;
    while !c.is_zero() && c.is_multiple_of(&pb) {
        c /= &pb;
        v += 1;
    }
    v
}

fn q1() -> Q {
    Q::one()
}

/// Error bound after a `p`-th power: `x = y mod p^e` with `x` integral gives
/// `x^p = y^p mod p^{min(1 + e, p e)}`.
pub fn frob_err(p: u64, e: Q) -> Q {
    (Q::one() + e).min(e * Q::from(p as i64))
}

/// One tilt coordinate: representative plus error bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coord {
    pub val: RingElement,
    pub err: Q,
}

impl Coord {
    pub fn exact(val: RingElement) -> Self {
        Coord { val, err: q1() }
    }

    /// Smallest monomial valuation of the representative (`None` for zero).
    pub fn vmin(&self) -> Option<Q> {
        self.val.min_valuation()
    }

    /// Lower bound for the valuation of the true coordinate.
    pub fn nu(&self) -> Q {
        let m = match self.vmin() {
            Some(v) => v.min(self.err),
            None => self.err,
        };
        m.max(Q::zero())
    }

    /// Lower bound valid for both the representative and the true value.
    /// With a nonnegative bound the representative is within `err` of an
    /// integral element, so its true valuation is at least `nu` as well.
    pub fn lo(&self) -> Q {
        if self.err >= Q::zero() {
            return self.nu();
        }
        match self.vmin() {
            Some(v) => v.min(self.nu()),
            None => self.nu(),
        }
    }

    /// Number of x-units by which the representative dips below zero.
    fn neg_x(&self) -> i64 {
        self.val
            .terms()
            .keys()
            .map(|m| m.x)
            .min()
            .unwrap_or(0)
            .min(0)
            .abs()
    }

    fn capped(mut self) -> Self {
        self.err = self.err.min(q1());
        self
    }

    /// `c^p` with the improved error bound (capped at 1).
    pub fn frob(&self, p: u64, cut: i64) -> Coord {
        let (val, err) = self.pow_p_chain(p, 1, cut);
        Coord { val, err }.capped()
    }

    /// `c^{p^r}` truncated at `cut`, with the uncapped error bound of the
    /// congruence `x = y mod p^e => x^p = y^p mod p^{min(1+e, pe)}`.
    pub fn pow_p_chain(&self, p: u64, r: u32, cut: i64) -> (RingElement, Q) {
        let mut val = self.val.clone();
        let mut err = self.err;
        for _ in 0..r {
            let neg = val
                .terms()
                .keys()
                .map(|m| m.x)
                .min()
                .unwrap_or(0)
                .min(0)
                .abs();
            let work = cut + (p as i64 - 1) * neg;
            val = val
                .with_cut(work.max(val.cut()))
                .pow_cut(p, work)
                .truncate_x(cut)
                .with_cut(cut);
            err = frob_err(p, err);
        }
        let q = val.spec().q();
        (val, err.min(Q::new(cut, q)))
    }

    fn add(&self, o: &Coord, sub: bool) -> Coord {
        let op = if sub { ArithOp::Sub } else { ArithOp::Add };
        Coord {
            val: self.val.arith(&o.val, op).expect("compatible coordinates"),
            err: self.err.min(o.err),
        }
    }

    fn mul(&self, o: &Coord, cut: i64) -> Coord {
        let work = cut + self.neg_x() + o.neg_x();
        let val = self
            .val
            .with_cut(work)
            .mul_cut(&o.val.with_cut(work), work)
            .truncate_x(cut)
            .with_cut(cut);
        let err = (self.err + o.lo()).min(o.err + self.lo());
        Coord { val, err }.capped()
    }

    fn scale(&self, c: &BigInt, p: u64) -> Coord {
        if c.is_zero() {
            return Coord::exact(self.val.constant_like(0));
        }
        Coord {
            val: self.val.scale(c),
            err: self.err + Q::from(vp_int(c, p)),
        }
        .capped()
    }

    /// Evaluates a universal polynomial on coordinates, tracking the error
    /// bound monomial by monomial.
    pub fn eval(poly: &UnivWittPoly, inputs: &[&Coord], cut: i64) -> Coord {
        let p = poly.p;
        let lo: Vec<Q> = inputs.iter().map(|c| c.lo()).collect();
        let negx: Vec<i64> = inputs.iter().map(|c| c.neg_x()).collect();
        let mut err = q1();
        let mut work_extra = 0i64;
        for (e, c) in &poly.terms {
            let mut w = Q::zero();
            let mut gap: Option<Q> = None;
            let mut ex = 0i64;
            for (v, k) in e.iter().enumerate() {
                if *k == 0 {
                    continue;
                }
                w += lo[v] * Q::from(*k as i64);
                ex += negx[v] * *k as i64;
                // a factor y^{p^r m} is (y^{p^r})^m, and y^{p^r} has the
                // improved bound of r Frobenius steps
                let mut r = *k;
                let mut e = inputs[v].err;
                let mut pr = 1i64;
                while r % p as u32 == 0 {
                    r /= p as u32;
                    e = frob_err(p, e);
                    pr *= p as i64;
                }
                let g = e - lo[v] * Q::from(pr);
                gap = Some(gap.map_or(g, |x: Q| x.min(g)));
            }
            work_extra = work_extra.max(ex);
            if let Some(g) = gap {
                err = err.min(Q::from(vp_int(c, p)) + w + g);
            }
        }
        let work = cut + work_extra;
        let base = inputs[0].val.with_cut(work);
        let vals: Vec<RingElement> = inputs.iter().map(|c| c.val.with_cut(work)).collect();
        let mut pows: HashMap<(usize, u32), RingElement> = HashMap::new();
        let mut raw: HashMap<Mono, BigInt> = HashMap::new();
        for (e, c) in &poly.terms {
            let mut t: Option<RingElement> = None;
            let mut zero = false;
            for (v, k) in e.iter().enumerate() {
                if *k == 0 {
                    continue;
                }
                if vals[v].is_zero() {
                    zero = true;
                    break;
                }
                let pw = pows
                    .entry((v, *k))
                    .or_insert_with(|| vals[v].pow_cut(*k as u64, work))
                    .clone();
                t = Some(match t {
                    None => pw,
                    Some(t) => t.mul_cut(&pw, work),
                });
            }
            if zero {
                continue;
            }
            let t = t.unwrap_or_else(|| base.constant_like(1));
            for (m, d) in t.terms() {
                *raw.entry(*m).or_insert_with(BigInt::zero) += d * c;
            }
        }
        let val = base.with_raw(raw).truncate_x(cut).with_cut(cut);
        Coord { val, err }.capped()
    }
}

/// Seeds accepted by [`make_tilt`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Seed {
    /// `p♭ = (p, p^{1/p}, ...)`.
    PFlat,
    TFlat,
    SFlat,
    /// `(1, xi_p, xi_{p^2}, ...)` for odd `p`.
    OneFlat,
    /// `(-1, xi_4, xi_8, ...)` for `p = 2`.
    MinusOneFlat,
    /// The image of an integer under `Z -> F_p -> tilt`.
    Const(i64),
}

#[derive(Clone, Debug)]
pub struct TiltElement {
    spec: Arc<TowerSpec>,
    depth: u32,
    cut: i64,
    coords: Vec<Option<Coord>>,
    reliable_top: u32,
}

impl PartialEq for TiltElement {
    fn eq(&self, o: &Self) -> bool {
        self.spec.same_ring(&o.spec)
            && self.depth == o.depth
            && self.cut == o.cut
            && self.reliable_top == o.reliable_top
            && self.coords == o.coords
    }
}
impl Eq for TiltElement {}

/// Verdict of a Frobenius-compatibility check between adjacent coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Compat {
    /// `c_{j+1}^p - c_j` is visibly within the error bound.
    Verified,
    /// Not visible at index `j`; consistent after descent to index 0.
    Undetermined,
    /// Descent to index 0 exposes a difference below the bound.
    Violated,
}

/// Builds a seed element with all coordinates `0..=depth` materialized.
///
/// `cut` is the x-adic cutoff used for the representatives.
pub fn make_tilt(spec: &Arc<TowerSpec>, depth: u32, cut: i64, seed: &Seed) -> Result<TiltElement> {
    if depth > spec.height {
        return Err(Error::Config(format!(
            "depth {depth} exceeds tower height {}",
            spec.height
        )));
    }
    if cut < spec.q() {
        return Err(Error::Config("x-adic cutoff must be at least p^N".into()));
    }
    let p = spec.p;
    let z = RingElement::zero_cut(spec, cut);
    let n = spec.height;
    let step = |j: u32| (p as i64).pow(n - j);
    let cyc_root = |e: u64| -> RingElement {
        let w = z.with_raw([
            (Mono::ONE, BigInt::one()),
            (Mono::new(0, 1, 0), BigInt::one()),
        ]);
        w.pow_cut(e, cut)
    };
    let coords: Vec<RingElement> = match seed {
        Seed::PFlat => (0..=depth)
            .map(|j| z.monomial_like(Mono::new(step(j), 0, 0), 1))
            .collect(),
        Seed::TFlat | Seed::SFlat => {
            if spec.is_cyclotomic() {
                return Err(Error::Config(
                    "T♭ and S♭ need the s-plus-t or affine scenario".into(),
                ));
            }
            (0..=depth)
                .map(|j| {
                    let e = step(j) as u32;
                    let m = if *seed == Seed::TFlat {
                        Mono::new(0, e, 0)
                    } else {
                        Mono::new(0, 0, e)
                    };
                    z.monomial_like(m, 1)
                })
                .collect()
        }
        Seed::OneFlat => {
            if !spec.is_cyclotomic() || p == 2 {
                return Err(Error::Config(
                    "1♭ needs the cyclotomic scenario with p odd (use (-1)♭ for p = 2)".into(),
                ));
            }
            if spec.root_level < depth {
                return Err(Error::Config("root of unity level below tilt depth".into()));
            }
            (0..=depth)
                .map(|j| cyc_root(p.pow(spec.root_level - j)))
                .collect()
        }
        Seed::MinusOneFlat => {
            if !spec.is_cyclotomic() || p != 2 {
                return Err(Error::Config(
                    "(-1)♭ needs the cyclotomic scenario with p = 2".into(),
                ));
            }
            if spec.root_level < depth + 1 {
                return Err(Error::Config(
                    "root of unity level below tilt depth + 1".into(),
                ));
            }
            (0..=depth)
                .map(|j| cyc_root(2u64.pow(spec.root_level - j - 1)))
                .collect()
        }
        Seed::Const(c) => {
            let d = (*c).rem_euclid(p as i64) as u64;
            let k = (cut / spec.q()) as u32 + 2;
            let v = z.constant_like(teich_int(p, d, k));
            vec![v; depth as usize + 1]
        }
    };
    Ok(TiltElement {
        spec: spec.clone(),
        depth,
        cut,
        coords: coords.into_iter().map(|v| Some(Coord::exact(v))).collect(),
        reliable_top: depth,
    })
}

impl TiltElement {
    pub fn spec(&self) -> &Arc<TowerSpec> {
        &self.spec
    }
    pub fn depth(&self) -> u32 {
        self.depth
    }
    pub fn cut(&self) -> i64 {
        self.cut
    }
    pub fn reliable_top(&self) -> u32 {
        self.reliable_top
    }
    pub fn coord(&self, j: u32) -> Option<&Coord> {
        self.coords.get(j as usize).and_then(|c| c.as_ref())
    }
    /// Indices with a stored coordinate.
    pub fn materialized(&self) -> Vec<u32> {
        (0..=self.depth)
            .filter(|j| self.coord(*j).is_some())
            .collect()
    }

    /// Keeps only the listed coordinates.
    pub fn restrict(&self, keep: &[u32]) -> TiltElement {
        let mut out = self.clone();
        for (j, c) in out.coords.iter_mut().enumerate() {
            if !keep.contains(&(j as u32)) {
                *c = None;
            }
        }
        out
    }

    /// Same element with a lowered ledger value (used by tests and suites
    /// that need to simulate exhausted depth).
    pub fn with_reliable_top(&self, top: u32) -> TiltElement {
        let mut out = self.clone();
        out.reliable_top = top.min(self.depth);
        out
    }

    fn check_compat(&self, o: &TiltElement) -> Result<()> {
        if !self.spec.same_ring(&o.spec) {
            return Err(Error::Mismatch(
                "tilt elements over different towers".into(),
            ));
        }
        if self.depth != o.depth || self.cut != o.cut {
            return Err(Error::Mismatch(
                "tilt elements of different depth or cutoff".into(),
            ));
        }
        Ok(())
    }

    fn zip(&self, o: &TiltElement, f: impl Fn(&Coord, &Coord) -> Coord + Sync) -> TiltElement {
        let coords = self
            .coords
            .iter()
            .zip(&o.coords)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(f(a, b)),
                _ => None,
            })
            .collect();
        TiltElement {
            spec: self.spec.clone(),
            depth: self.depth,
            cut: self.cut,
            coords,
            reliable_top: self.reliable_top.min(o.reliable_top),
        }
    }

    fn map(&self, f: impl Fn(&Coord) -> Coord) -> TiltElement {
        TiltElement {
            coords: self.coords.iter().map(|c| c.as_ref().map(&f)).collect(),
            ..self.clone()
        }
    }

    /// Componentwise ring operation; the ledger takes the minimum.
    pub fn arith(&self, o: &TiltElement, op: ArithOp) -> Result<TiltElement> {
        self.check_compat(o)?;
        let cut = self.cut;
        Ok(match op {
            ArithOp::Add => self.zip(o, |a, b| a.add(b, false)),
            ArithOp::Sub => self.zip(o, |a, b| a.add(b, true)),
            ArithOp::Mul => self.zip(o, |a, b| a.mul(b, cut)),
        })
    }

    /// The `p`-th power map (Frobenius of the tilt).
    pub fn frobenius(&self) -> TiltElement {
        let (p, cut) = (self.spec.p, self.cut);
        self.map(|c| c.frob(p, cut))
    }

    /// The `p`-th root: coordinates shift down by one index.
    pub fn root(&self) -> Result<TiltElement> {
        if self.depth == 0 {
            return Err(Error::InsufficientDepth(
                "no coordinate above index 0".into(),
            ));
        }
        let mut coords: Vec<Option<Coord>> = self.coords[1..].to_vec();
        let _ = coords.pop();
        let top = self.coords[self.depth as usize].clone();
        coords.push(top);
        coords.truncate(self.depth as usize);
        Ok(TiltElement {
            spec: self.spec.clone(),
            depth: self.depth - 1,
            cut: self.cut,
            coords,
            reliable_top: self.reliable_top.saturating_sub(1),
        })
    }

    /// A coordinate with error bound 1 at index `j`: either stored, or
    /// obtained by Frobenius descent from the nearest stored index above.
    pub fn reliable_coord(&self, j: u32) -> Option<Coord> {
        if let Some(c) = self.coord(j) {
            if c.err >= q1() {
                return Some(c.clone());
            }
        }
        for top in j + 1..=self.depth {
            if let Some(c) = self.coord(top) {
                let (val, err) = c.pow_p_chain(self.spec.p, top - j, self.cut);
                if err >= q1() {
                    return Some(Coord { val, err: q1() });
                }
            }
        }
        None
    }

    /// `a^{♯_n} mod p^m`: the lift of coordinate `n + m - 1` raised to
    /// `p^{m-1}`, returned x-adically with cutoff `m p^N`. If that coordinate is
    /// not stored exactly, the nearest stored coordinate above is raised to
    /// the matching power instead, provided its bound certifies precision `m`.
    pub fn sharp(&self, n: u32, m: u32) -> Result<RingElement> {
        if m == 0 {
            return Err(Error::Config("sharp needs precision m >= 1".into()));
        }
        let need = n + m - 1;
        if need > self.reliable_top {
            return Err(Error::InsufficientDepth(format!(
                "sharp_{n} mod p^{m} needs reliable depth {need}, have {}",
                self.reliable_top
            )));
        }
        let q = self.spec.q();
        let target = m as i64 * q;
        let cut = self.cut.max(target);
        for j in need..=self.depth {
            if let Some(c) = self.coord(j) {
                let c = Coord {
                    val: c.val.with_cut(cut),
                    err: c.err,
                };
                let (val, err) = c.pow_p_chain(self.spec.p, j - n, cut);
                if err >= Q::from(m as i64) {
                    return Ok(val.truncate_x(target).with_cut(target));
                }
            }
        }
        Err(Error::InsufficientDepth(format!(
            "no stored coordinate certifies sharp_{n} mod p^{m}"
        )))
    }

    /// Divides by `(p♭)^{p^k}`.
    ///
    /// Non-divisibility is detected on coordinate 0 of the quotient (reached
    /// by Frobenius descent), where monomial valuations are exact.
    pub fn divide_by_pflat_power(&self, k: u32) -> Result<TiltElement> {
        self.divide_impl(k, true)
    }

    /// Division without the coordinate-0 divisibility test, for callers that
    /// have established divisibility by other means (for instance
    /// `theta(X) = 0` before dividing by the kernel generator).
    pub fn divide_by_pflat_power_unchecked(&self, k: u32) -> Result<TiltElement> {
        self.divide_impl(k, false)
    }

    fn divide_impl(&self, k: u32, check: bool) -> Result<TiltElement> {
        if k >= self.reliable_top {
            return Err(Error::InsufficientDepth(format!(
                "division by (p♭)^(p^{k}) needs reliable depth above {k}, have {}",
                self.reliable_top
            )));
        }
        let p = self.spec.p;
        let n = self.spec.height;
        let pk = (p as i64).pow(k);
        let mut coords: Vec<Option<Coord>> = vec![None; self.depth as usize + 1];
        for j in (0..=self.depth).rev() {
            let Some(c) = self.coord(j) else { continue };
            let shift = pk * (p as i64).pow(n - j);
            let err = c.err.min(q1()) - Q::new(pk, (p as i64).pow(j));
            if err >= Q::zero() {
                coords[j as usize] = Some(Coord {
                    val: c.val.shift_x(-shift),
                    err,
                });
            } else if let Some(up) = coords.get(j as usize + 1).and_then(|c| c.clone()) {
                let d = up.frob(p, self.cut);
                if d.err >= Q::zero() {
                    coords[j as usize] = Some(d);
                }
            }
        }
        let out = TiltElement {
            spec: self.spec.clone(),
            depth: self.depth,
            cut: self.cut,
            coords,
            reliable_top: self.reliable_top - 1,
        };
        if let Some(j) = out.materialized().first().copied() {
            if !check {
                return Ok(out);
            }
            let c = out.coord(j).unwrap();
            // only the part below valuation 0 matters, so descend with cutoff 0
            let (v0, _) = c.pow_p_chain(p, j, 0);
            let e0 = (0..j).fold(c.err, |e, _| frob_err(p, e));
            if let Some(vm) = v0.min_valuation() {
                if vm < Q::zero() && vm < e0 {
                    return Err(Error::NotDivisible(format!(
                        "quotient by (p♭)^(p^{k}) has coordinate 0 of valuation {vm}"
                    )));
                }
            }
        } else {
            return Err(Error::InsufficientDepth(
                "division left no usable coordinate".into(),
            ));
        }
        Ok(out)
    }

    /// Frobenius compatibility of adjacent stored coordinates `(j, j+1)`.
    pub fn frobenius_check(&self) -> Vec<(u32, Compat)> {
        let p = self.spec.p;
        let mut out = Vec::new();
        for j in 0..self.depth.min(self.reliable_top) {
            let (Some(lo), Some(hi)) = (self.coord(j), self.coord(j + 1)) else {
                continue;
            };
            let up = hi.frob(p, self.cut);
            let bound = lo.err.min(up.err);
            let diff = up.val.sub(&lo.val);
            let visible = diff.min_valuation().is_none_or(|v| v >= bound);
            if visible {
                out.push((j, Compat::Verified));
                continue;
            }
            // compare after descent to index 0, where monomial valuations are exact
            let (a, ea) = hi.pow_p_chain(p, j + 1, self.cut);
            let (b, eb) = lo.pow_p_chain(p, j, self.cut);
            let d0 = a.sub(&b);
            let ok = d0.min_valuation().is_none_or(|v| v >= ea.min(eb));
            out.push((
                j,
                if ok {
                    Compat::Undetermined
                } else {
                    Compat::Violated
                },
            ));
        }
        out
    }

    /// True if every stored coordinate has a zero representative.
    pub fn is_visibly_zero(&self) -> bool {
        self.coords.iter().flatten().all(|c| c.val.is_zero())
    }

    fn like_const(&self, v: &dyn Fn(&RingElement) -> RingElement) -> TiltElement {
        self.map(|c| Coord::exact(v(&c.val)))
    }
}

impl WittCoeff for TiltElement {
    fn w_zero(&self) -> Self {
        self.like_const(&|v| v.constant_like(0))
    }
    fn w_one(&self) -> Self {
        self.like_const(&|v| v.constant_like(1))
    }
    fn w_add(&self, o: &Self) -> Self {
        self.arith(o, ArithOp::Add)
            .expect("compatible tilt elements")
    }
    fn w_mul(&self, o: &Self) -> Self {
        self.arith(o, ArithOp::Mul)
            .expect("compatible tilt elements")
    }
    fn w_scale(&self, c: &BigInt) -> Self {
        let p = self.spec.p;
        self.map(|x| x.scale(c, p))
    }
    fn w_is_zero(&self) -> bool {
        self.is_visibly_zero()
    }
    fn w_char_p(&self) -> bool {
        true
    }
    fn w_teich(&self, p: u64, d: u64) -> Self {
        let k = (self.cut / self.spec.q()) as u32 + 2;
        let w = teich_int(p, d, k);
        self.like_const(&|v| v.constant_like(w.clone()))
    }
    fn w_eval(poly: &UnivWittPoly, inputs: &[Self]) -> Self {
        let first = &inputs[0];
        let cut = first.cut;
        let top = inputs.iter().map(|x| x.reliable_top).min().unwrap_or(0);
        let coords: Vec<Option<Coord>> = (0..=first.depth as usize)
            .into_par_iter()
            .map(|j| {
                let cs: Option<Vec<&Coord>> = inputs.iter().map(|x| x.coords[j].as_ref()).collect();
                cs.map(|cs| Coord::eval(poly, &cs, cut))
            })
            .collect();
        TiltElement {
            spec: first.spec.clone(),
            depth: first.depth,
            cut,
            coords,
            reliable_top: top,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower_rings::ScenarioTag;

    fn spec(p: u64, n: u32) -> Arc<TowerSpec> {
        TowerSpec::new(p, n, ScenarioTag::SPlusT).unwrap()
    }

    #[test]
    fn seeds_are_compatible() {
        let s = spec(2, 4);
        for seed in [Seed::PFlat, Seed::TFlat, Seed::SFlat, Seed::Const(-1)] {
            let a = make_tilt(&s, 4, 3 * s.q(), &seed).unwrap();
            assert!(
                a.frobenius_check()
                    .iter()
                    .all(|(_, c)| *c == Compat::Verified),
                "{seed:?}"
            );
        }
        let c = TowerSpec::cyclotomic(2, 3, 4).unwrap();
        let m = make_tilt(&c, 3, 2 * c.q(), &Seed::MinusOneFlat).unwrap();
        assert!(m
            .frobenius_check()
            .iter()
            .all(|(_, c)| *c == Compat::Verified));
        assert!(make_tilt(&c, 3, 2 * c.q(), &Seed::OneFlat).is_err());
    }

    #[test]
    fn sharp_of_seeds() {
        let s = spec(3, 3);
        let pf = make_tilt(&s, 3, 3 * s.q(), &Seed::PFlat).unwrap();
        let v = pf.sharp(0, 2).unwrap();
        assert_eq!(
            v,
            RingElement::zero_cut(&s, 2 * s.q()).monomial_like(Mono::new(s.q(), 0, 0), 1)
        );
        let tf = make_tilt(&s, 3, 3 * s.q(), &Seed::TFlat).unwrap();
        let v = tf.sharp(1, 2).unwrap();
        assert_eq!(
            v.terms().keys().copied().collect::<Vec<_>>(),
            vec![Mono::new(0, 9, 0)]
        );
        assert!(matches!(tf.sharp(2, 3), Err(Error::InsufficientDepth(_))));
    }

    #[test]
    fn division() {
        let s = spec(2, 4);
        let cut = 3 * s.q();
        let pf = make_tilt(&s, 4, cut, &Seed::PFlat).unwrap();
        let tf = make_tilt(&s, 4, cut, &Seed::TFlat).unwrap();
        let one = pf.divide_by_pflat_power(0).unwrap();
        assert_eq!(
            one.sharp(0, 1).unwrap(),
            RingElement::zero_cut(&s, s.q()).constant_like(1)
        );
        let prod = tf.arith(&pf.frobenius(), ArithOp::Mul).unwrap();
        let back = prod.divide_by_pflat_power(1).unwrap();
        assert_eq!(back.reliable_top(), 3);
        assert_eq!(back.sharp(1, 1).unwrap(), tf.sharp(1, 1).unwrap());
        assert!(matches!(
            tf.divide_by_pflat_power(0),
            Err(Error::NotDivisible(_))
        ));
    }
}
