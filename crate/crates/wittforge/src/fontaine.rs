//! Fontaine's theta at finite precision, division by the kernel generator
//! `[p♭] - p`, and construction of the scenarios `B` with `A = B / ([p♭] - p)`.

use std::sync::Arc;

use num_bigint::BigInt;

use crate::coeff_analysis::is_integral_quotient;
use crate::tilt::{make_tilt, Seed, TiltElement};
use crate::tower_rings::{Repr, RingElement, ScenarioTag, TowerSpec};
use crate::witt_core::{witt_from_int, WittVector};
use crate::{Error, Result, Q};

pub type TiltWitt = WittVector<TiltElement>;

/// Working precision: tilt depth `D`, tower height `N`, and the x-adic
/// cutoff `m'` (in units of `p`) used for coordinate representatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub depth: u32,
    pub height: u32,
    pub modulus: u32,
}

impl Precision {
    /// `D = 2n + 2`, `N = D`, `m' = n + 2`.
    pub fn policy(n: u32) -> Self {
        Precision {
            depth: 2 * n + 2,
            height: 2 * n + 2,
            modulus: n + 2,
        }
    }

    /// Applies explicit overrides and a uniform guard increment, and checks
    /// the policy bounds `D >= 2n + 2`, `N >= D`, `m' >= n + 2`.
    pub fn with_overrides(
        n: u32,
        depth: Option<u32>,
        height: Option<u32>,
        guard: u32,
    ) -> Result<Self> {
        let base = Self::policy(n);
        let depth = depth.unwrap_or(base.depth) + guard;
        let height =
            height.unwrap_or(depth.max(base.height)) + if height.is_some() { guard } else { 0 };
        let prec = Precision {
            depth,
            height,
            modulus: base.modulus + guard,
        };
        prec.validate(n)?;
        Ok(prec)
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        if self.depth < 2 * n + 2 {
            return Err(Error::Config(format!(
                "depth {} below 2n+2 = {}",
                self.depth,
                2 * n + 2
            )));
        }
        if self.height < self.depth {
            return Err(Error::Config(format!(
                "height {} below depth {}",
                self.height, self.depth
            )));
        }
        if self.modulus < n + 2 {
            return Err(Error::Config(format!(
                "modulus exponent {} below n+2",
                self.modulus
            )));
        }
        Ok(())
    }

    /// Each of `D`, `N`, `m'` raised by one.
    pub fn bumped(&self) -> Self {
        Precision {
            depth: self.depth + 1,
            height: self.height + 1,
            modulus: self.modulus + 1,
        }
    }
}

/// The element `B` being divided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BKind {
    /// `[S♭] + [T♭] - 1`.
    SPlusT,
    /// `[S♭] - (s [T♭] + t)`.
    Affine { s: i64, t: i64 },
    /// `[1♭] - 1` (odd `p`).
    OneFlat,
    /// `[(-1)♭] + 1` (`p = 2`).
    MinusOneFlat,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: Arc<TowerSpec>,
    pub level: u32,
    pub prec: Precision,
    pub kind: BKind,
    /// Tilt indices kept in the computation.
    pub coords: Vec<u32>,
    pub b: TiltWitt,
    pub pflat: TiltElement,
    /// Description of the coefficient system (canonical monomial lifts).
    pub coefficient_system: String,
}

impl Scenario {
    pub fn p(&self) -> u64 {
        self.spec.p
    }

    /// A seed element of this scenario, restricted to the working indices.
    pub fn seed(&self, seed: &Seed) -> Result<TiltElement> {
        Ok(make_tilt(&self.spec, self.prec.depth, self.cut(), seed)?.restrict(&self.coords))
    }

    /// x-adic cutoff of coordinate representatives.
    pub fn cut(&self) -> i64 {
        self.prec.modulus as i64 * self.spec.q()
    }

    pub fn len(&self) -> usize {
        self.level as usize
    }

    pub fn is_empty(&self) -> bool {
        self.level == 0
    }

    /// The kernel generator `[p♭] - p` as a Witt vector of length `n`.
    pub fn generator(&self) -> Result<TiltWitt> {
        ker_generator(&self.pflat, self.len())
    }
}

/// `[p♭] + (-1) V(F(1))`.
pub fn ker_generator(pflat: &TiltElement, len: usize) -> Result<TiltWitt> {
    let p = pflat.spec().p;
    let tp = WittVector::teichmuller(p, len, pflat.clone());
    let pv = WittVector::p_element(p, len, pflat);
    tp.add(&pv.neg()?)
}

/// Builds a scenario at level `n` with the default precision policy.
pub fn build_scenario(p: u64, n: u32, tag: &ScenarioTag) -> Result<Scenario> {
    build_scenario_with(p, n, tag, Precision::policy(n))
}

pub fn build_scenario_with(p: u64, n: u32, tag: &ScenarioTag, prec: Precision) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::Config("level n must be at least 1".into()));
    }
    prec.validate(n)?;
    let (spec, kind) = match tag {
        ScenarioTag::Cyclotomic => {
            if p == 2 {
                (
                    TowerSpec::cyclotomic(p, prec.height, prec.depth + 1)?,
                    BKind::MinusOneFlat,
                )
            } else {
                (
                    TowerSpec::cyclotomic(p, prec.height, prec.depth)?,
                    BKind::OneFlat,
                )
            }
        }
        ScenarioTag::SPlusT => (TowerSpec::new(p, prec.height, tag.clone())?, BKind::SPlusT),
        ScenarioTag::Affine { s, t } => (
            TowerSpec::new(p, prec.height, tag.clone())?,
            BKind::Affine { s: *s, t: *t },
        ),
    };
    let coords = vec![n, n + 1];
    let cut = prec.modulus as i64 * spec.q();
    let len = n as usize;
    let mk = |seed: Seed| -> Result<TiltElement> {
        Ok(make_tilt(&spec, prec.depth, cut, &seed)?.restrict(&coords))
    };
    let pflat = mk(Seed::PFlat)?;
    let teich = |seed: Seed| -> Result<TiltWitt> { Ok(WittVector::teichmuller(p, len, mk(seed)?)) };
    let m1 = WittVector::minus_one(p, len, &pflat);
    let b = match &kind {
        BKind::SPlusT => teich(Seed::SFlat)?.add(&teich(Seed::TFlat)?)?.add(&m1)?,
        BKind::Affine { s, t } => {
            let sv = witt_from_int(p, len, &BigInt::from(*s), &pflat);
            let tv = witt_from_int(p, len, &BigInt::from(*t), &pflat);
            let rhs = sv.mul(&teich(Seed::TFlat)?)?.add(&tv)?;
            teich(Seed::SFlat)?.sub(&rhs)?
        }
        BKind::OneFlat => teich(Seed::OneFlat)?.add(&m1)?,
        BKind::MinusOneFlat => teich(Seed::MinusOneFlat)?.add(&WittVector::one(p, len, &pflat))?,
    };
    let coefficient_system = match &kind {
        BKind::OneFlat | BKind::MinusOneFlat => format!("R_n = Z[xi_(p^n)], p = {p}"),
        _ => "R_n = Z[T^(1/p^n), S^(1/p^n)]".to_string(),
    };
    Ok(Scenario {
        spec,
        level: n,
        prec,
        kind,
        coords,
        b,
        pflat,
        coefficient_system,
    })
}

/// `theta(X) mod p^m = sum_{k<m} p^k X_k^{♯_k} (precision m - k)`, returned
/// x-adically with cutoff `m p^N`.
pub fn theta(x: &TiltWitt, m: u32) -> Result<RingElement> {
    if x.len() < m as usize {
        return Err(Error::InsufficientDepth(format!(
            "theta mod p^{m} needs Witt length {m}, have {}",
            x.len()
        )));
    }
    let q = x.coords[0].spec().q();
    let cut = m as i64 * q;
    let mut acc = RingElement::zero_cut(x.coords[0].spec(), cut);
    for k in 0..m {
        let s = x.coords[k as usize].sharp(k, m - k)?;
        acc = acc.add(&s.with_cut(cut).shift_x(k as i64 * q));
    }
    Ok(acc)
}

/// Inductive division by `[p♭] - p`: returns `y` of the same length with
/// `([p♭] - p) y = x` to the available precision.
pub fn divide_by_ker_generator(x: &TiltWitt, pflat: &TiltElement) -> Result<TiltWitt> {
    let p = pflat.spec().p;
    let len = x.len();
    let g = ker_generator(pflat, len)?;
    let th = theta(x, len as u32)?;
    if !th.is_zero() {
        return Err(Error::NotDivisible(format!(
            "theta of the dividend is nonzero mod p^{len}: {}",
            th.to_rational_lines().join(" + ")
        )));
    }
    let mut y = WittVector::zero(p, len, pflat);
    for m in 0..len {
        let z = if m == 0 {
            x.clone()
        } else {
            x.sub(&g.mul(&y)?)?
        };
        y.coords[m] = z.coords[m].divide_by_pflat_power_unchecked(m as u32)?;
    }
    Ok(y)
}

/// Result of comparing `([p♭] - p) A` with `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplyBack {
    /// `(Witt index, tilt index, visibly within bound)`.
    pub entries: Vec<(usize, u32, bool)>,
}

impl MultiplyBack {
    pub fn all_within(&self) -> bool {
        self.entries.iter().all(|e| e.2)
    }
}

/// `v(d) >= bound` in the integral closure. Normal forms can hide
/// divisibility (`1 + S^{1/2} + T^{1/2}` is `p^{1/2} α_4^2` mod 2), so this
/// falls back to the exact integrality test.
fn within_in_closure(d: &RingElement, bound: Q) -> Result<bool> {
    if d.spec().is_cyclotomic() {
        // Z_p[ξ] is integrally closed: normal-form valuations are exact
        return Ok(false);
    }
    let q = d.spec().q();
    let den = bound * Q::from_integer(q);
    if !den.is_integer() || *den.numer() <= 0 {
        return Ok(false);
    }
    // clear formal negative x-powers first
    let lift = d
        .terms()
        .keys()
        .map(|m| m.x)
        .min()
        .unwrap_or(0)
        .min(0)
        .abs();
    let cut = (d.cut() + lift + q - 1) / q * q;
    let d = d.with_cut(cut).shift_x(lift).from_x_adic()?;
    let d = RingElement::from_terms(
        d.spec(),
        Repr::Char0,
        None,
        d.terms().iter().map(|(m, c)| (*m, c.clone())),
    );
    is_integral_quotient(&d, *den.numer() + lift)
}

/// Multiplies back and compares coordinatewise at every stored tilt index
/// up to the ledger's reliable depth, deciding each bound in the integral
/// closure.
pub fn multiply_back(a: &TiltWitt, b: &TiltWitt, pflat: &TiltElement) -> Result<MultiplyBack> {
    let g = ker_generator(pflat, a.len())?;
    let prod = g.mul(a)?;
    let mut entries = Vec::new();
    for k in 0..a.len() {
        let (u, v) = (&prod.coords[k], &b.coords[k]);
        let top = u.reliable_top().min(v.reliable_top());
        for j in u.materialized() {
            if j > top {
                continue;
            }
            let (Some(cu), Some(cv)) = (u.coord(j), v.coord(j)) else {
                continue;
            };
            let bound = cu.err.min(cv.err);
            let diff = cu.val.sub(&cv.val);
            let visible = diff.min_valuation().is_none_or(|vm| vm >= bound);
            let ok = visible || within_in_closure(&diff, bound)?;
            entries.push((k, j, ok));
        }
    }
    Ok(MultiplyBack { entries })
}

/// The quotient `A = B / ([p♭] - p)` of a scenario.
pub fn scenario_quotient(sc: &Scenario) -> Result<TiltWitt> {
    divide_by_ker_generator(&sc.b, &sc.pflat)
}

/// `theta(A) mod p^n` in char-0 normal form at the scenario's height.
pub fn theta_of_a(sc: &Scenario) -> Result<RingElement> {
    let a = scenario_quotient(sc)?;
    theta(&a, sc.level)?.from_x_adic()
}

/// Valuation bound helper used in reports: `m / p^k` as a rational.
pub fn frac(m: i64, d: i64) -> Q {
    Q::new(m, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower_rings::Mono;

    #[test]
    fn policy() {
        let pr = Precision::policy(2);
        assert_eq!((pr.depth, pr.height, pr.modulus), (6, 6, 4));
        assert!(Precision::with_overrides(2, Some(5), None, 0).is_err());
        assert_eq!(
            Precision::with_overrides(2, None, None, 1).unwrap(),
            pr.bumped()
        );
    }

    #[test]
    fn theta_of_generators() {
        let sc = build_scenario(2, 2, &ScenarioTag::SPlusT).unwrap();
        let g = sc.generator().unwrap();
        assert!(theta(&g, 2).unwrap().is_zero());
        assert!(theta(&sc.b, 2).unwrap().is_zero());
        let tp = WittVector::teichmuller(2, 2, sc.pflat.clone());
        let th = theta(&tp, 2).unwrap();
        assert_eq!(
            th.terms().keys().copied().collect::<Vec<_>>(),
            vec![Mono::new(sc.spec.q(), 0, 0)]
        );
    }

    #[test]
    fn divide_generator_by_itself() {
        let sc = build_scenario(3, 1, &ScenarioTag::SPlusT).unwrap();
        let g = sc.generator().unwrap();
        let y = divide_by_ker_generator(&g, &sc.pflat).unwrap();
        let one = theta(&y, 1).unwrap();
        assert_eq!(one, one.constant_like(1));
    }
}
