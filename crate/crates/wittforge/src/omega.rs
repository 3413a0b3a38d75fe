//! Presented Kähler differential modules of the tower levels.
//!
//! Level `n` carries the generators `dp^{1/p^n}` (and `dT^{1/p^n}`,
//! `dS^{1/p^n}` over `O_{K_0}`) with diagonal relators
//! `p^n g^{p^n - 1} dg`. Coordinates are char-0 tower elements at a fixed
//! ambient height `N >= n`; a form is zero when every coordinate lies in the
//! annihilator of its generator, which is decided exactly by the integrality
//! test of [`crate::coeff_analysis`].

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::coeff_analysis::is_integral_quotient;
use crate::fontaine::{theta, TiltWitt};
use crate::tower_rings::{Mono, Repr, RingElement, TowerSpec};
use crate::{Error, Result, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaBase {
    /// `V_n = Z_p[p^{1/p^n}]` over `Z_p`.
    Zp,
    /// `U_n` over `O_{K_0}`: `T` and `S` are constants of the base.
    OK0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiffGen {
    P,
    T,
    S,
}

impl DiffGen {
    pub fn name(self) -> &'static str {
        match self {
            DiffGen::P => "p",
            DiffGen::T => "T",
            DiffGen::S => "S",
        }
    }

    /// `g^{1/p^N}` as a monomial in the ambient tower.
    fn mono(self, e: i64) -> Mono {
        match self {
            DiffGen::P => Mono::new(e, 0, 0),
            DiffGen::T => Mono::new(0, e as u32, 0),
            DiffGen::S => Mono::new(0, 0, e as u32),
        }
    }
}

/// The principal ideal `(p^v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Annihilator {
    pub valuation: Q,
}

impl Annihilator {
    /// The exponent of `p^{1/p^N}` generating the ideal.
    pub fn x_exponent(&self, spec: &TowerSpec) -> Result<i64> {
        let e = self.valuation * Q::from_integer(spec.q());
        if !e.is_integer() {
            return Err(Error::Config(format!(
                "p^({}) is not a power of p^(1/{})",
                self.valuation,
                spec.q()
            )));
        }
        Ok(e.to_integer())
    }
}

impl fmt::Display for Annihilator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valuation.is_zero() {
            write!(f, "(1)")
        } else if self.valuation.is_integer() {
            write!(f, "(p^{})", self.valuation)
        } else {
            write!(f, "(p^({}))", self.valuation)
        }
    }
}

#[derive(Clone, Debug)]
pub struct PresentedOmega {
    pub spec: Arc<TowerSpec>,
    pub level: u32,
    pub base: OmegaBase,
    pub generators: Vec<DiffGen>,
}

impl PresentedOmega {
    pub fn new(spec: &Arc<TowerSpec>, level: u32, base: OmegaBase) -> Result<Arc<Self>> {
        if spec.is_cyclotomic() {
            return Err(Error::Config(
                "differential presentations need a T,S tower".into(),
            ));
        }
        if level > spec.height {
            return Err(Error::Config(format!(
                "level {level} above tower height {}",
                spec.height
            )));
        }
        let generators = match base {
            OmegaBase::Zp => vec![DiffGen::P],
            OmegaBase::OK0 => vec![DiffGen::P, DiffGen::T, DiffGen::S],
        };
        Ok(Arc::new(PresentedOmega {
            spec: spec.clone(),
            level,
            base,
            generators,
        }))
    }

    pub fn index(&self, g: DiffGen) -> Option<usize> {
        self.generators.iter().position(|h| *h == g)
    }

    /// `p^{1/p^N}`-exponent of `g^{1/p^n}`.
    fn step(&self) -> i64 {
        self.spec.q() / (self.spec.p as i64).pow(self.level)
    }

    /// `p^n g^{p^n - 1} dg` for each generator, as text.
    pub fn relators(&self) -> Vec<String> {
        let n = self.level;
        let pn = self.spec.p.pow(n);
        self.generators
            .iter()
            .map(|g| {
                let gn = if n == 0 {
                    g.name().to_string()
                } else {
                    format!("{}^(1/{pn})", g.name())
                };
                format!("{pn} * ({gn})^{} * d{gn}", pn - 1)
            })
            .collect()
    }
}

pub fn annihilator(gen: DiffGen, omega: &PresentedOmega) -> Result<Annihilator> {
    if omega.index(gen).is_none() {
        return Err(Error::Config(format!(
            "d{} is not a generator of this presentation",
            gen.name()
        )));
    }
    let n = omega.level as i64;
    let pn = (omega.spec.p as i64).pow(omega.level);
    let valuation = match gen {
        DiffGen::P => Q::from_integer(n + 1) - Q::new(1, pn),
        DiffGen::T | DiffGen::S => Q::from_integer(n),
    };
    Ok(Annihilator { valuation })
}

fn exact(c: &RingElement) -> RingElement {
    RingElement::from_terms(
        c.spec(),
        Repr::Char0,
        None,
        c.terms().iter().map(|(m, v)| (*m, v.clone())),
    )
}

/// A form `Σ c_g dg^{1/p^n}`.
#[derive(Clone, Debug)]
pub struct DiffForm {
    pub omega: Arc<PresentedOmega>,
    pub coords: Vec<RingElement>,
}

impl DiffForm {
    pub fn zero(omega: &Arc<PresentedOmega>) -> Self {
        let z = RingElement::zero(&omega.spec, Repr::Char0, None);
        DiffForm {
            omega: omega.clone(),
            coords: vec![z; omega.generators.len()],
        }
    }

    /// `c dg^{1/p^n}`.
    pub fn generator(omega: &Arc<PresentedOmega>, g: DiffGen, c: &RingElement) -> Result<Self> {
        let i = omega
            .index(g)
            .ok_or_else(|| Error::Config(format!("no generator d{}", g.name())))?;
        let mut f = Self::zero(omega);
        f.coords[i] = exact(c);
        Ok(f)
    }

    /// `c g^{1 - 1/p^n} dg^{1/p^n}`.
    pub fn basis_form(omega: &Arc<PresentedOmega>, g: DiffGen, c: &RingElement) -> Result<Self> {
        let pn = omega.spec.p.pow(omega.level) as i64;
        let c = exact(c);
        let w = c.monomial_like(g.mono(omega.step() * (pn - 1)), 1);
        Self::generator(omega, g, &c.mul(&w))
    }

    fn check(&self, o: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.omega, &o.omega)
            && (self.omega.level != o.omega.level
                || self.omega.base != o.omega.base
                || !self.omega.spec.same_ring(&o.omega.spec))
        {
            return Err(Error::Mismatch(
                "forms live in different presentations".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let coords = self
            .coords
            .iter()
            .zip(&o.coords)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(DiffForm {
            omega: self.omega.clone(),
            coords,
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let coords = self
            .coords
            .iter()
            .zip(&o.coords)
            .map(|(a, b)| a.sub(b))
            .collect();
        Ok(DiffForm {
            omega: self.omega.clone(),
            coords,
        })
    }

    pub fn scale(&self, c: &RingElement) -> Self {
        let c = exact(c);
        DiffForm {
            omega: self.omega.clone(),
            coords: self.coords.iter().map(|a| a.mul(&c)).collect(),
        }
    }

    /// Every coordinate lies in the annihilator of its generator.
    pub fn is_zero(&self) -> Result<bool> {
        for (g, c) in self.omega.generators.iter().zip(&self.coords) {
            if c.is_zero() {
                continue;
            }
            let e = annihilator(*g, &self.omega)?.x_exponent(&self.omega.spec)?;
            if !is_integral_quotient(c, e)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, o: &Self) -> Result<bool> {
        self.sub(o)?.is_zero()
    }

    pub fn to_lines(&self) -> Vec<String> {
        self.omega
            .generators
            .iter()
            .zip(&self.coords)
            .map(|(g, c)| format!("d{}: {}", g.name(), c.to_rational_lines().join(" + ")))
            .collect()
    }
}

/// Transition to level `n + 1`: `dg^{1/p^n} ↦ p g^{(p-1)/p^{n+1}} dg^{1/p^{n+1}}`.
pub fn pushforward(f: &DiffForm) -> Result<DiffForm> {
    let om = &f.omega;
    let target = PresentedOmega::new(&om.spec, om.level + 1, om.base)?;
    let p = om.spec.p;
    let step = target.step();
    let coords = om
        .generators
        .iter()
        .zip(&f.coords)
        .map(|(g, c)| {
            let c = exact(c);
            c.mul(&c.monomial_like(g.mono(step * (p as i64 - 1)), p))
        })
        .collect();
    Ok(DiffForm {
        omega: target,
        coords,
    })
}

/// `d(c x^i t^j s^k)` at level `n`, for a single monomial.
fn d_monomial(omega: &Arc<PresentedOmega>, m: &Mono, c: &BigInt) -> Result<DiffForm> {
    let step = omega.step();
    let mut f = DiffForm::zero(omega);
    let exps = [
        (DiffGen::P, m.x),
        (DiffGen::T, m.a as i64),
        (DiffGen::S, m.b as i64),
    ];
    let z = RingElement::zero(&omega.spec, Repr::Char0, None);
    for (g, e) in exps {
        if e == 0 {
            continue;
        }
        if e % step != 0 {
            return Err(Error::NonRepresentable(format!(
                "{}-exponent {e}/{} is not a level-{} exponent",
                g.name(),
                omega.spec.q(),
                omega.level
            )));
        }
        let Some(i) = omega.index(g) else {
            // constants of the base
            continue;
        };
        let mut rest = *m;
        match g {
            DiffGen::P => rest.x -= step,
            DiffGen::T => rest.a -= step as u32,
            DiffGen::S => rest.b -= step as u32,
        }
        f.coords[i] = f.coords[i].add(&z.monomial_like(rest, c * (e / step)));
    }
    Ok(f)
}

/// `d` of a tower element whose monomials are all level-`n` monomials.
pub fn d_element(omega: &Arc<PresentedOmega>, v: &RingElement) -> Result<DiffForm> {
    let mut f = DiffForm::zero(omega);
    for (m, c) in v.terms() {
        f = f.add(&d_monomial(omega, m, c)?)?;
    }
    Ok(f)
}

fn sharp_monomial(x: &TiltWitt, k: usize, j: u32, prec: u32) -> Result<RingElement> {
    let v = x.coords[k].sharp(j, prec)?.from_x_adic()?;
    let v = exact(&v);
    if v.len() > 1 {
        return Err(Error::NonRepresentable(format!(
            "sharp_{j} of coordinate {k} is not a monomial: {}",
            v.to_rational_lines().join(" + ")
        )));
    }
    Ok(v)
}

/// `d_{θ,n}(X) = Σ_{k<n} (x_k^{♯_{n-k}})^{p^{n-k}-1} d x_k^{♯_{n-k}} + dθ((x_n^{1/p^n}, …))`.
///
/// Coordinates of `X` beyond its length are zero. The trailing term is
/// `Σ_i p^i d(x_{n+i}^{♯_{n+i}})`.
pub fn dtheta_n(x: &TiltWitt, n: u32, omega: &Arc<PresentedOmega>) -> Result<DiffForm> {
    if omega.level != n {
        return Err(Error::Config(format!(
            "presentation is at level {}, not {n}",
            omega.level
        )));
    }
    let p = omega.spec.p;
    let prec = n + 1;
    let mut f = DiffForm::zero(omega);
    for k in 0..(n as usize).min(x.len()) {
        let j = n - k as u32;
        let g = sharp_monomial(x, k, j, prec)?;
        if g.is_zero() {
            continue;
        }
        let dg = d_element(omega, &g)?;
        f = f.add(&dg.scale(&g.pow(p.pow(j) - 1)))?;
    }
    for i in (n as usize)..x.len() {
        let g = sharp_monomial(x, i, i as u32, prec)?;
        let dg = d_element(omega, &g)?;
        f = f.add(&dg.scale(&g.constant_like(BigInt::from(p).pow((i - n as usize) as u32))))?;
    }
    Ok(f)
}

/// `θ(X)` as an exact char-0 element, for derivation checks.
pub fn theta_exact(x: &TiltWitt, m: u32) -> Result<RingElement> {
    Ok(exact(&theta(x, m)?.from_x_adic()?))
}

/// Torsion bases `(ω_p, ω_T)` and `(ω_p, ω_S)` with `ω_g = g^{1-1/p^n} dg^{1/p^n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormBasis {
    PT,
    PS,
}

/// The relation `ω_S = a_n ω_p + b ω_T` (`b = -1` when `S = 1 - T`,
/// `b = s` when `S = sT + t`).
#[derive(Clone, Debug)]
pub struct FormRelation {
    pub a_n: RingElement,
    pub b: BigInt,
    pub level: u32,
}

impl FormRelation {
    pub fn s_plus_t(a_n: &RingElement, level: u32) -> Self {
        FormRelation {
            a_n: exact(a_n),
            b: BigInt::from(-1),
            level,
        }
    }
}

/// Rewrites `c_0 ω_p + c_1 ω_{T or S}` in the other basis. Going from
/// `(ω_p, ω_T)` to `(ω_p, ω_S)` inverts `b`, which must be a `p`-adic unit.
pub fn basis_transform(
    coords: &[RingElement; 2],
    from: FormBasis,
    to: FormBasis,
    rel: &FormRelation,
) -> Result<[RingElement; 2]> {
    let [c0, c1] = coords;
    let (c0, c1) = (exact(c0), exact(c1));
    let a = exact(&rel.a_n);
    match (from, to) {
        (f, t) if f == t => Ok([c0, c1]),
        (FormBasis::PS, FormBasis::PT) => Ok([c0.add(&c1.mul(&a)), c1.scale(&rel.b)]),
        _ => {
            let spec = c0.spec();
            let p = BigInt::from(spec.p);
            if rel.b.mod_floor(&p).is_zero() {
                return Err(Error::Config(format!(
                    "coefficient {} of the T-form is not a unit: (p-form, S-form) is not a basis",
                    rel.b
                )));
            }
            let m = p.pow(rel.level + 2);
            let inv = mod_inverse(&rel.b, &m);
            let t = c1.scale(&inv);
            Ok([c0.sub(&t.mul(&a)), t])
        }
    }
}

fn mod_inverse(b: &BigInt, m: &BigInt) -> BigInt {
    let e = b.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// The form `c_0 ω_p + c_1 ω_g` in a presentation over `O_{K_0}`.
pub fn form_in_basis(
    omega: &Arc<PresentedOmega>,
    basis: FormBasis,
    coords: &[RingElement; 2],
) -> Result<DiffForm> {
    let g = match basis {
        FormBasis::PT => DiffGen::T,
        FormBasis::PS => DiffGen::S,
    };
    DiffForm::basis_form(omega, DiffGen::P, &coords[0])?
        .add(&DiffForm::basis_form(omega, g, &coords[1])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower_rings::ScenarioTag;

    #[test]
    fn annihilators() {
        let spec = TowerSpec::new(2, 3, ScenarioTag::SPlusT).unwrap();
        let om = PresentedOmega::new(&spec, 2, OmegaBase::OK0).unwrap();
        assert_eq!(
            annihilator(DiffGen::P, &om).unwrap().valuation,
            Q::new(11, 4)
        );
        assert_eq!(
            annihilator(DiffGen::T, &om).unwrap().valuation,
            Q::from_integer(2)
        );
        let base = PresentedOmega::new(&spec, 0, OmegaBase::Zp).unwrap();
        assert_eq!(annihilator(DiffGen::P, &base).unwrap().to_string(), "(1)");
    }

    #[test]
    fn torsion_witnesses() {
        let spec = TowerSpec::new(3, 2, ScenarioTag::SPlusT).unwrap();
        let om = PresentedOmega::new(&spec, 1, OmegaBase::Zp).unwrap();
        let one = RingElement::from_int(&spec, Repr::Char0, None, 1);
        // p^{2 - 1/3} dp^{1/3} = 0, p^{1 - 1/3} dp^{1/3} != 0
        let killed = one.monomial_like(Mono::new(2 * 9 - 3, 0, 0), 1);
        let alive = one.monomial_like(Mono::new(9 - 3, 0, 0), 1);
        assert!(DiffForm::generator(&om, DiffGen::P, &killed)
            .unwrap()
            .is_zero()
            .unwrap());
        assert!(!DiffForm::generator(&om, DiffGen::P, &alive)
            .unwrap()
            .is_zero()
            .unwrap());
    }
}
