//! Verification suites. Every item is independent and runs on the worker
//! pool; results come back in declaration order.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wittforge::coeff_analysis::{
    congruent_mod_pn, congruent_normal_form, cyclotomic_form, cyclotomic_order, goodness_check,
    level_one_form, level_two_form, level_two_form_with_sign, level_two_mod4_form,
    multinomial_bound_exhaustive, root_of_unity, type_check, TypeTag,
};
use wittforge::fontaine::{
    build_scenario_with, divide_by_ker_generator, ker_generator, multiply_back, scenario_quotient,
    theta, theta_of_a, Precision, Scenario, TiltWitt,
};
use wittforge::omega::{
    annihilator, basis_transform, dtheta_n, form_in_basis, pushforward, theta_exact, DiffForm,
    DiffGen, FormBasis, FormRelation, OmegaBase, PresentedOmega,
};
use wittforge::tilt::{make_tilt, Seed, TiltElement};
use wittforge::tower_rings::{ArithOp, Divisor, Mono, Repr, RingElement, ScenarioTag, TowerSpec};
use wittforge::witt_core::{cache, ghost_identity_holds, witt_poly, WittKind, WittVector};
use wittforge::{Error, Result, Q};

use crate::config::Suite;
use crate::report::Check;

pub const ORACLE_MAX_INDEX: usize = 3;
pub const ORACLE_SAMPLES: usize = 100;
pub const RING_SAMPLES: usize = 100;
pub const THETA_SAMPLES: usize = 50;
const SEED: u64 = 0x5769_7474;

/// Prime, level and precision overrides shared by all suites.
#[derive(Clone, Copy, Debug, Default)]
pub struct SuiteParams {
    pub prime: Option<u64>,
    pub level: Option<u32>,
    pub depth: Option<u32>,
    pub height: Option<u32>,
    pub guard: u32,
}

impl SuiteParams {
    pub fn precision(&self, n: u32) -> Result<Precision> {
        Precision::with_overrides(n, self.depth, self.height, self.guard)
    }

    fn primes(&self, default: &[u64]) -> Vec<u64> {
        match self.prime {
            Some(p) => vec![p],
            None => default.to_vec(),
        }
    }

    /// Levels `1..=top`; `top` defaults to 3 for `p = 2`, 2 for `p = 3`, else 1.
    fn levels(&self, p: u64) -> Vec<u32> {
        let top = self.level.unwrap_or(match p {
            2 => 3,
            3 => 2,
            _ => 1,
        });
        (1..=top).collect()
    }

    pub fn scenario(&self, p: u64, n: u32, tag: &ScenarioTag) -> Result<Scenario> {
        build_scenario_with(p, n, tag, self.precision(n)?)
    }
}

type Job = Box<dyn FnOnce() -> Result<(bool, String)> + Send>;

struct Items(Vec<(String, Job)>);

impl Items {
    fn new() -> Self {
        Items(Vec::new())
    }

    fn add(&mut self, name: String, f: impl FnOnce() -> Result<(bool, String)> + Send + 'static) {
        self.0.push((name, Box::new(f)));
    }

    fn run(self) -> Vec<Check> {
        self.0
            .into_par_iter()
            .map(|(name, f)| Check::run(name, f))
            .collect()
    }
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> Vec<Check> {
    match suite {
        Suite::WittOracle => witt_oracle(params),
        Suite::RingAxioms => ring_axioms(params),
        Suite::ThetaHom => theta_hom(params),
        Suite::Division => division(params),
        Suite::Examples => examples(params),
        Suite::Goodness => goodness(params),
        Suite::Types => types(params),
        Suite::Omega => omega(params),
        Suite::All => Suite::EACH
            .iter()
            .flat_map(|s| run_suite(*s, params))
            .collect(),
    }
}

fn chain(
    p: u64,
    top: usize,
    kind: WittKind,
) -> Result<Vec<Arc<wittforge::witt_core::UnivWittPoly>>> {
    (0..=top).map(|k| witt_poly(p, k, kind)).collect()
}

fn ghost(p: u64, xs: &[BigInt]) -> Vec<BigInt> {
    let pb = BigInt::from(p);
    (0..xs.len())
        .map(|i| {
            (0..=i)
                .map(|k| pb.pow(k as u32) * xs[k].pow(p.pow((i - k) as u32) as u32))
                .sum()
        })
        .collect()
}

/// Evaluates the universal polynomials on random integer vectors and compares
/// the ghost components with the ghost-side sum or product.
pub fn random_ghost_check(p: u64, kind: WittKind, samples: usize) -> Result<(bool, String)> {
    let len = ORACLE_MAX_INDEX + 1;
    let polys = chain(p, ORACLE_MAX_INDEX, kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (p << 8) ^ kind as u64);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<BigInt> {
        (0..len)
            .map(|_| BigInt::from(rng.gen_range(-1000i64..=1000)))
            .collect()
    };
    for s in 0..samples {
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let f: Vec<BigInt> = polys
            .iter()
            .enumerate()
            .map(|(k, poly)| {
                let mut args = x[..=k].to_vec();
                args.extend_from_slice(&y[..=k]);
                poly.eval_int(&args)
            })
            .collect();
        let (gx, gy, gf) = (ghost(p, &x), ghost(p, &y), ghost(p, &f));
        for i in 0..len {
            let want = match kind {
                WittKind::Sum => &gx[i] + &gy[i],
                _ => &gx[i] * &gy[i],
            };
            if gf[i] != want {
                return Ok((
                    false,
                    format!("sample {s}: ghost component {i} differs at x = {x:?}, y = {y:?}"),
                ));
            }
        }
    }
    Ok((
        true,
        format!(
            "{samples} random integer pairs agree on ghost components 0..={}",
            len - 1
        ),
    ))
}

pub fn witt_oracle(pr: &SuiteParams) -> Vec<Check> {
    let mut items = Items::new();
    for p in pr.primes(&[2, 3]) {
        for kind in [WittKind::Sum, WittKind::Product] {
            for i in 0..=ORACLE_MAX_INDEX {
                items.add(
                    format!("witt-oracle/p={p}/{}/i={i}/ghost-identity", kind.name()),
                    move || {
                        let ok = ghost_identity_holds(&chain(p, i, kind)?, cache().cap())?;
                        Ok((
                            ok,
                            format!("W_{i} of the chain equals the ghost {}", kind.name()),
                        ))
                    },
                );
            }
            items.add(
                format!("witt-oracle/p={p}/{}/random-eval", kind.name()),
                move || random_ghost_check(p, kind, ORACLE_SAMPLES),
            );
        }
    }
    items.run()
}

fn random_residue(spec: &Arc<TowerSpec>, rng: &mut ChaCha8Rng) -> RingElement {
    let q = spec.q();
    let p = spec.p as i64;
    let terms: Vec<(Mono, BigInt)> = (0..3)
        .map(|_| {
            let m = Mono::new(
                rng.gen_range(0..q),
                rng.gen_range(0..3),
                rng.gen_range(0..q as u32),
            );
            (m, BigInt::from(rng.gen_range(1..p)))
        })
        .collect();
    RingElement::from_terms(spec, Repr::Residue, None, terms)
}

type Wv = WittVector<RingElement>;

/// Ring axioms of length-3 Witt vectors over the residue ring of the
/// `s-plus-t` tower at height 4.
pub fn ring_axioms(pr: &SuiteParams) -> Vec<Check> {
    let p = pr.prime.unwrap_or(2);
    let samples = match TowerSpec::new(p, 4, ScenarioTag::SPlusT) {
        Ok(spec) => {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ p);
            let wv = |rng: &mut ChaCha8Rng| {
                WittVector::new(p, (0..3).map(|_| random_residue(&spec, rng)).collect())
            };
            Arc::new(
                (0..RING_SAMPLES)
                    .map(|_| (wv(&mut rng), wv(&mut rng), wv(&mut rng)))
                    .collect::<Vec<_>>(),
            )
        }
        Err(e) => return vec![Check::errored(format!("ring-axioms/p={p}"), &e)],
    };
    type Law = fn(&Wv, &Wv, &Wv) -> Result<bool>;
    let laws: [(&str, Law); 6] = [
        ("add-associative", |a, b, c| {
            Ok(a.add(b)?.add(c)? == a.add(&b.add(c)?)?)
        }),
        ("add-commutative", |a, b, _| Ok(a.add(b)? == b.add(a)?)),
        ("mul-associative", |a, b, c| {
            Ok(a.mul(b)?.mul(c)? == a.mul(&b.mul(c)?)?)
        }),
        ("mul-commutative", |a, b, _| Ok(a.mul(b)? == b.mul(a)?)),
        ("distributive", |a, b, c| {
            Ok(a.mul(&b.add(c)?)? == a.mul(b)?.add(&a.mul(c)?)?)
        }),
        ("additive-inverse", |a, _, _| {
            Ok(a.add(&a.neg()?)?.is_zero())
        }),
    ];
    let mut items = Items::new();
    for (name, law) in laws {
        let samples = samples.clone();
        items.add(format!("ring-axioms/p={p}/N=4/len=3/{name}"), move || {
            for (i, (a, b, c)) in samples.iter().enumerate() {
                if !law(a, b, c)? {
                    return Ok((false, format!("fails on random triple {i}")));
                }
            }
            Ok((true, format!("{} random triples", samples.len())))
        });
    }
    items.run()
}

fn tilt_pow(x: &TiltElement, e: u32) -> Result<TiltElement> {
    let mut r = make_tilt(x.spec(), x.depth(), x.cut(), &Seed::Const(1))?;
    for _ in 0..e {
        r = r.arith(x, ArithOp::Mul)?;
    }
    Ok(r)
}

/// Additivity and multiplicativity of theta mod `p^m` on random Witt vectors
/// whose coordinates are monomials in `p♭`, `T♭`, `S♭` (or zero).
pub fn theta_hom(pr: &SuiteParams) -> Vec<Check> {
    let p = pr.prime.unwrap_or(2);
    let m = 3u32;
    let name = format!("theta-hom/p={p}/mod-p^{m}");
    let setup = || -> Result<(Vec<(TiltWitt, TiltWitt)>, u32)> {
        let depth = 2 * m;
        let spec = TowerSpec::new(p, depth, ScenarioTag::SPlusT)?;
        let cut = (m as i64 + 2) * spec.q();
        let seeds: Vec<TiltElement> = [Seed::PFlat, Seed::TFlat, Seed::SFlat]
            .iter()
            .map(|s| make_tilt(&spec, depth, cut, s))
            .collect::<Result<_>>()?;
        let zero = make_tilt(&spec, depth, cut, &Seed::Const(0))?;
        let mut pow_table = Vec::new();
        for s in &seeds {
            pow_table.push((0..3).map(|e| tilt_pow(s, e)).collect::<Result<Vec<_>>>()?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7e7a ^ p);
        let draw = |rng: &mut ChaCha8Rng| -> Result<TiltWitt> {
            let coords = (0..m)
                .map(|_| {
                    if rng.gen_range(0..4) == 0 {
                        return Ok(zero.clone());
                    }
                    let mut r = pow_table[0][rng.gen_range(0..3)].clone();
                    r = r.arith(&pow_table[1][rng.gen_range(0..3)], ArithOp::Mul)?;
                    r.arith(&pow_table[2][rng.gen_range(0..3)], ArithOp::Mul)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WittVector::new(p, coords))
        };
        let pairs = (0..THETA_SAMPLES)
            .map(|_| Ok((draw(&mut rng)?, draw(&mut rng)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((pairs, m))
    };
    let (pairs, m) = match setup() {
        Ok(s) => s,
        Err(e) => return vec![Check::errored(name, &e)],
    };
    let pairs = Arc::new(pairs);
    let mut items = Items::new();
    for op in ["additive", "multiplicative"] {
        let pairs = pairs.clone();
        items.add(format!("{name}/{op}"), move || {
            for (i, (x, y)) in pairs.iter().enumerate() {
                let (tx, ty) = (theta(x, m)?.from_x_adic()?, theta(y, m)?.from_x_adic()?);
                let (lhs, rhs) = if op == "additive" {
                    (theta(&x.add(y)?, m)?.from_x_adic()?, tx.add(&ty))
                } else {
                    (theta(&x.mul(y)?, m)?.from_x_adic()?, tx.mul(&ty))
                };
                if !congruent_normal_form(&lhs, &rhs, m) {
                    return Ok((false, format!("random pair {i} breaks the congruence")));
                }
            }
            Ok((
                true,
                format!("{} random pairs, exact congruence mod p^{m}", pairs.len()),
            ))
        });
    }
    items.run()
}

fn levels_of(pr: &SuiteParams, primes: &[u64]) -> Vec<(u64, u32)> {
    pr.primes(primes)
        .into_iter()
        .flat_map(|p| pr.levels(p).into_iter().map(move |n| (p, n)))
        .collect()
}

/// Kernel division: multiply-back at every reliable coordinate, theta of the
/// dividend and of the generator, and rejection of non-divisible input.
pub fn division(pr: &SuiteParams) -> Vec<Check> {
    let mut items = Items::new();
    for (p, n) in levels_of(pr, &[2, 3]) {
        let pr = *pr;
        items.add(format!("division/p={p}/n={n}/multiply-back"), move || {
            let sc = pr.scenario(p, n, &ScenarioTag::SPlusT)?;
            let a = scenario_quotient(&sc)?;
            let mb = multiply_back(&a, &sc.b, &sc.pflat)?;
            let bad: Vec<_> = mb.entries.iter().filter(|e| !e.2).map(|e| (e.0, e.1)).collect();
            let ok = !mb.entries.is_empty() && bad.is_empty();
            let tops: Vec<u32> = a.coords.iter().map(|c| c.reliable_top()).collect();
            Ok((
                ok,
                format!(
                    "{} coordinate comparisons, reliable depth per coordinate {tops:?}, failures {bad:?}",
                    mb.entries.len()
                ),
            ))
        });
        items.add(format!("division/p={p}/n={n}/theta-vanishes"), move || {
            let sc = pr.scenario(p, n, &ScenarioTag::SPlusT)?;
            let tb = theta(&sc.b, n)?;
            let tg = theta(&sc.generator()?, n)?;
            Ok((
                tb.is_zero() && tg.is_zero(),
                format!("theta(B) and theta([p♭]-p) vanish mod p^{n}"),
            ))
        });
    }
    for p in pr.primes(&[2, 3]) {
        let pr = *pr;
        items.add(format!("division/p={p}/rejects-nonzero-theta"), move || {
            let sc = pr.scenario(p, 1, &ScenarioTag::SPlusT)?;
            let one = WittVector::one(p, sc.len(), &sc.pflat);
            let r1 = divide_by_ker_generator(&sc.b.add(&one)?, &sc.pflat);
            let r2 = sc.seed(&Seed::TFlat)?.divide_by_pflat_power(0);
            let ok = matches!(r1, Err(Error::NotDivisible(_)))
                && matches!(r2, Err(Error::NotDivisible(_)));
            Ok((ok, "B + 1 and T♭ / p♭ raise NotDivisible".into()))
        });
    }
    items.run()
}

fn theta_at(pr: &SuiteParams, p: u64, n: u32, tag: &ScenarioTag) -> Result<RingElement> {
    theta_of_a(&pr.scenario(p, n, tag)?)
}

/// `(1 - ξ_p)^p / p` mod `p`.
fn literal_cyclotomic_form(spec: &Arc<TowerSpec>) -> Result<RingElement> {
    let xi = root_of_unity(spec, 1, 2)?;
    xi.constant_like(1)
        .sub(&xi)
        .pow(spec.p)
        .exact_divide(Divisor::P)
}

/// The closed-form examples in the `s-plus-t` and cyclotomic scenarios.
pub fn examples(pr: &SuiteParams) -> Vec<Check> {
    let wants = |p: u64, set: &[u64]| set.contains(&p) && pr.prime.is_none_or(|q| q == p);
    let mut items = Items::new();
    for p in [2u64, 3, 5] {
        if wants(p, &[2, 3, 5]) {
            let pr = *pr;
            items.add(format!("examples/level-one/p={p}"), move || {
                let th = theta_at(&pr, p, 1, &ScenarioTag::SPlusT)?;
                let form = level_one_form(th.spec())?;
                let nf = congruent_normal_form(&th, &form.to_element()?, 1);
                let cong = congruent_mod_pn(&th, &form, 1)?;
                Ok((nf && cong, format!("theta(A) = (S^(1/p) + T^(1/p) - 1)^p / p mod p: normal form {nf}, integral {cong}")))
            });
        }
        if wants(p, &[2, 3]) {
            let pr = *pr;
            items.add(format!("examples/level-two/p={p}"), move || {
                let th = theta_at(&pr, p, 2, &ScenarioTag::SPlusT)?;
                let ok = congruent_mod_pn(&th, &level_two_form(th.spec())?, 2)?;
                Ok((
                    ok,
                    "theta(A) = alpha_(p^2)^(p^2) + beta_p^p mod p^2 with beta_p as printed".into(),
                ))
            });
        }
        if p != 2 && wants(p, &[3]) {
            let pr = *pr;
            items.add(format!("examples/level-two-negated-sum/p={p}"), move || {
                let th = theta_at(&pr, p, 2, &ScenarioTag::SPlusT)?;
                let ok = congruent_mod_pn(&th, &level_two_form_with_sign(th.spec(), -1)?, 2)?;
                Ok((ok, "same with the trinomial sum in beta_p negated (second Witt coordinate of [S♭]+[T♭]+[-1])".into()))
            });
        }
        if wants(p, &[2]) {
            let pr = *pr;
            items.add("examples/level-two-mod4/p=2".into(), move || {
                let th = theta_at(&pr, 2, 2, &ScenarioTag::SPlusT)?;
                let form = level_two_mod4_form(th.spec())?;
                let ok = congruent_mod_pn(&th, &form, 2)?;
                let shifted = th.add(&th.constant_like(2));
                let control = !congruent_mod_pn(&shifted, &form, 2)?;
                Ok((ok && control, format!("theta(A) = 2a^2 + 2aB + (2√2+1)B^2 mod 4: {ok}; theta(A)+2 rejected: {control}")))
            });
        }
        if p != 2 && wants(p, &[3, 5]) {
            let pr = *pr;
            items.add(format!("examples/cyclotomic/p={p}"), move || {
                let th = theta_at(&pr, p, 1, &ScenarioTag::Cyclotomic)?;
                let order = cyclotomic_order(&th)?;
                let expect = Q::new(1, p as i64 - 1);
                let lit = congruent_normal_form(&th, &literal_cyclotomic_form(th.spec())?, 1);
                let ok = lit && order == Some(expect);
                Ok((
                    ok,
                    format!(
                        "theta(a) = (1 - xi_p)^p / p mod p: {lit}; order {} (expected {expect})",
                        show_order(order)
                    ),
                ))
            });
            items.add(
                format!("examples/cyclotomic-root-difference/p={p}"),
                move || {
                    let th = theta_at(&pr, p, 1, &ScenarioTag::Cyclotomic)?;
                    let ok = congruent_normal_form(&th, &cyclotomic_form(th.spec())?, 1);
                    Ok((ok, "theta(a) = (xi_p - 1)^p / p mod p".into()))
                },
            );
        }
        if wants(p, &[2]) {
            let pr = *pr;
            items.add("examples/cyclotomic/p=2".into(), move || {
                let th = theta_at(&pr, 2, 1, &ScenarioTag::Cyclotomic)?;
                let order = cyclotomic_order(&th)?;
                let xi4 = root_of_unity(th.spec(), 2, 1)?;
                let eq = congruent_normal_form(&th, &xi4, 1);
                let ok = eq && order == Some(Q::from_integer(0));
                Ok((
                    ok,
                    format!("theta(a) = xi_4 mod 2: {eq}; order {}", show_order(order)),
                ))
            });
        }
    }
    items.run()
}

fn show_order(o: Option<Q>) -> String {
    o.map_or("undefined (zero mod p)".into(), |q| q.to_string())
}

/// Primes `p` and exponents `m` with `p^m <= bound`.
pub fn prime_powers(bound: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in 2..=bound {
        if (2..p).any(|d| p % d == 0) {
            continue;
        }
        let mut m = 1;
        while p.pow(m) <= bound {
            out.push((p, m));
            m += 1;
        }
    }
    out
}

/// Goodness verdicts, weighted homogeneity of the universal polynomials and
/// the multinomial valuation bound.
pub fn goodness(pr: &SuiteParams) -> Vec<Check> {
    let mut items = Items::new();
    for (p, n) in levels_of(pr, &[2, 3]) {
        let pr = *pr;
        items.add(format!("goodness/p={p}/n={n}"), move || {
            let th = theta_at(&pr, p, n, &ScenarioTag::SPlusT)?;
            let g = goodness_check(&th, n)?;
            let witness = g.witness.map_or(String::new(), |m| {
                format!(", witness {}", th.mono_string(&m))
            });
            Ok((
                g.verdict,
                format!("{} terms, lattice {}{witness}", th.len(), g.lattice_desc),
            ))
        });
    }
    for p in pr.primes(&[2, 3]) {
        for i in 0..=ORACLE_MAX_INDEX {
            items.add(format!("goodness/homogeneity/p={p}/i={i}"), move || {
                let s = witt_poly(p, i, WittKind::Sum)?;
                let m = witt_poly(p, i, WittKind::Product)?;
                let (hs, hm) = (s.is_weighted_homogeneous(), m.is_weighted_homogeneous());
                Ok((
                    hs && hm,
                    format!("S_{i} homogeneous of weight p^{i}: {hs}; P_{i} bihomogeneous: {hm}"),
                ))
            });
        }
    }
    for (p, m) in prime_powers(27) {
        if pr.prime.is_some_and(|q| q != p) {
            continue;
        }
        items.add(
            format!("goodness/multinomial-bound/p={p}/m={m}"),
            move || {
                let (count, counterexample) = multinomial_bound_exhaustive(p, m)?;
                let detail = match &counterexample {
                    None => format!("{count} partitions of {} checked", p.pow(m)),
                    Some(c) => format!("counterexample {c:?}"),
                };
                Ok((counterexample.is_none(), detail))
            },
        );
    }
    items.run()
}

/// Type checks of the quotient coordinates and closure instances.
pub fn types(pr: &SuiteParams) -> Vec<Check> {
    let p = pr.prime.unwrap_or(2);
    let n = pr.level.unwrap_or(2);
    let base = format!("types/p={p}/n={n}");
    let setup = || -> Result<(Scenario, TiltWitt)> {
        let sc = pr.scenario(p, n, &ScenarioTag::SPlusT)?;
        let a = scenario_quotient(&sc)?;
        Ok((sc, a))
    };
    let (sc, a) = match setup() {
        Ok(s) => s,
        Err(e) => return vec![Check::errored(base, &e)],
    };
    let a0 = a.coords[0].clone();
    let b0 = sc.b.coords[0].clone();
    let pf = sc.pflat.clone();
    let mul = |x: &TiltElement, y: &TiltElement| x.arith(y, ArithOp::Mul);
    let mut cases: Vec<(String, Result<TiltElement>, TypeTag)> = vec![
        ("B_0".into(), Ok(b0.clone()), TypeTag::new(0, 0, 0)),
        (
            "B_0 (weakened)".into(),
            Ok(b0.clone()),
            TypeTag::new(1, 1, 0),
        ),
    ];
    for l in 0..n {
        let m = (l as u64 + 1) * p.pow(l);
        cases.push((
            format!("A_{l}"),
            Ok(a.coords[l as usize].clone()),
            TypeTag::new(m, 1, l),
        ));
    }
    cases.push(("p♭ A_0".into(), mul(&pf, &a0), TypeTag::new(0, 0, 0)));
    cases.push(("A_0^p".into(), Ok(a0.frobenius()), TypeTag::new(p, 0, 1)));
    cases.push(("A_0 A_0".into(), mul(&a0, &a0), TypeTag::new(2, 1, 0)));
    cases.push((
        "A_0 + B_0".into(),
        a0.arith(&b0, ArithOp::Add),
        TypeTag::new(1, 1, 0),
    ));
    if n >= 2 {
        let a1 = a.coords[1].clone();
        let pfp = (1..p).try_fold(pf.clone(), |acc, _| mul(&acc, &pf));
        cases.push((
            "(p♭)^p A_1".into(),
            pfp.and_then(|x| mul(&x, &a1)),
            TypeTag::new(p, 0, 1),
        ));
        cases.push((
            "A_0 A_1".into(),
            mul(&a0, &a1),
            TypeTag::new(2 * p + 1, 1, 1),
        ));
    }
    let mut items = Items::new();
    for (label, el, tag) in cases {
        items.add(
            format!("{base}/{label}/type({},{},{})", tag.m, tag.k, tag.n0),
            move || {
                let r = type_check(&el?, tag)?;
                Ok((r.passed(), r.summary()))
            },
        );
    }
    // control: A_0 has a pole, so the type of B_0 must fail for it
    items.add(format!("{base}/A_0/not-type(0,0,0)"), move || {
        let r = type_check(&a0, TypeTag::new(0, 0, 0))?;
        Ok((!r.violated().is_empty(), r.summary()))
    });
    items.run()
}

fn expected_annihilator(g: DiffGen, p: u64, n: u32) -> Q {
    match g {
        DiffGen::P => {
            let d = p.pow(n) as i64;
            Q::new((n as i64 + 1) * d - 1, d)
        }
        _ => Q::from_integer(n as i64),
    }
}

fn x_power(spec: &Arc<TowerSpec>, e: i64) -> RingElement {
    RingElement::monomial(spec, Repr::Char0, None, Mono::new(e, 0, 0), 1)
}

/// Annihilators with minimality witnesses, the pushforward square, the
/// derivation laws and representative independence of basis changes.
pub fn omega(pr: &SuiteParams) -> Vec<Check> {
    let mut items = Items::new();
    for p in pr.primes(&[2, 3]) {
        for base in [OmegaBase::Zp, OmegaBase::OK0] {
            for n in 0..=3u32 {
                items.add(
                    format!("omega/annihilators/p={p}/{base:?}/n={n}"),
                    move || annihilator_check(p, base, n),
                );
            }
        }
        for n in 0..=2u32 {
            items.add(format!("omega/nu-diagram/p={p}/n={n}"), move || {
                nu_diagram(p, n)
            });
        }
        for n in 1..=2u32 {
            items.add(format!("omega/pushforward-square/p={p}/n={n}"), move || {
                pushforward_square(p, n)
            });
        }
        items.add(format!("omega/derivation/p={p}"), move || {
            derivation_laws(p)
        });
        for n in 1..=2u32 {
            let pr = *pr;
            items.add(format!("omega/basis-change/p={p}/n={n}"), move || {
                basis_change(&pr, p, n)
            });
        }
    }
    items.run()
}

fn annihilator_check(p: u64, base: OmegaBase, n: u32) -> Result<(bool, String)> {
    let spec = TowerSpec::new(p, n.max(1), ScenarioTag::SPlusT)?;
    let om = PresentedOmega::new(&spec, n, base)?;
    let mut notes = Vec::new();
    let mut ok = true;
    for &g in &om.generators {
        let ann = annihilator(g, &om)?;
        let want = expected_annihilator(g, p, n);
        let e = ann.x_exponent(&spec)?;
        let kills = DiffForm::generator(&om, g, &x_power(&spec, e))?.is_zero()?;
        let minimal = e == 0 || !DiffForm::generator(&om, g, &x_power(&spec, e - 1))?.is_zero()?;
        ok &= ann.valuation == want && kills && minimal;
        notes.push(format!(
            "d{} killed by {ann} (expected p^({want})), exact: {}",
            g.name(),
            kills && minimal
        ));
    }
    Ok((ok, notes.join("; ")))
}

struct OmegaBench {
    spec: Arc<TowerSpec>,
    p: u64,
    depth: u32,
    cut: i64,
}

impl OmegaBench {
    fn new(p: u64) -> Result<Self> {
        let spec = TowerSpec::new(p, 6, ScenarioTag::SPlusT)?;
        let cut = 4 * spec.q();
        Ok(OmegaBench {
            spec,
            p,
            depth: 6,
            cut,
        })
    }

    fn teich(&self, s: Seed) -> Result<TiltWitt> {
        Ok(WittVector::teichmuller(
            self.p,
            3,
            make_tilt(&self.spec, self.depth, self.cut, &s)?,
        ))
    }
}

/// `pushforward(ν_n(1⊗1)) = p ν_{n+1}(1⊗1)` with `ν_n(1⊗1) = p^{1-1/p^n} dp^{1/p^n}`,
/// and the same square for `T^{1-1/p^n} dT^{1/p^n}`.
fn nu_diagram(p: u64, n: u32) -> Result<(bool, String)> {
    let spec = TowerSpec::new(p, n + 1, ScenarioTag::SPlusT)?;
    let one = RingElement::from_int(&spec, Repr::Char0, None, 1);
    let mut notes = Vec::new();
    let mut ok = true;
    for (base, gens) in [
        (OmegaBase::Zp, vec![DiffGen::P]),
        (OmegaBase::OK0, vec![DiffGen::P, DiffGen::T, DiffGen::S]),
    ] {
        let lo = PresentedOmega::new(&spec, n, base)?;
        let hi = PresentedOmega::new(&spec, n + 1, base)?;
        for g in gens {
            let pushed = pushforward(&DiffForm::basis_form(&lo, g, &one)?)?;
            let target = DiffForm::basis_form(&hi, g, &one.constant_like(p as i64))?;
            let eq = pushed.equals(&target)?;
            ok &= eq;
            notes.push(format!("{base:?} d{}: {eq}", g.name()));
        }
    }
    Ok((ok, notes.join(", ")))
}

fn pushforward_square(p: u64, n: u32) -> Result<(bool, String)> {
    let b = OmegaBench::new(p)?;
    let om = PresentedOmega::new(&b.spec, n, OmegaBase::OK0)?;
    let om1 = PresentedOmega::new(&b.spec, n - 1, OmegaBase::OK0)?;
    let (pf, tf, sf) = (
        b.teich(Seed::PFlat)?,
        b.teich(Seed::TFlat)?,
        b.teich(Seed::SFlat)?,
    );
    let t0 = tf.coords[0].clone();
    let tp = t0.frobenius();
    let pp = pf.coords[0].frobenius().frobenius();
    let mixed = WittVector::new(p, vec![t0, tp, pp]);
    let mut inputs = vec![
        ("[p♭]", pf.clone()),
        ("[T♭]", tf.clone()),
        ("[p♭][T♭]", pf.mul(&tf)?),
        ("(T♭, (T♭)^p, (p♭)^(p^2))", mixed),
    ];
    // S = 1 - T is not a monomial at level 0
    if n >= 2 {
        inputs.push(("[S♭]", sf.clone()));
        inputs.push(("[T♭][S♭]", tf.mul(&sf)?));
    }
    let mut bad = Vec::new();
    for (name, x) in &inputs {
        let top = dtheta_n(x, n, &om)?;
        let lhs = top.scale(&top.coords[0].constant_like(p as i64));
        let rhs = pushforward(&dtheta_n(x, n - 1, &om1)?)?;
        if !lhs.equals(&rhs)? {
            bad.push(*name);
        }
    }
    Ok((
        bad.is_empty(),
        format!(
            "p d_{n} = pushforward of d_{} on {} inputs, failures {bad:?}",
            n - 1,
            inputs.len()
        ),
    ))
}

fn derivation_laws(p: u64) -> Result<(bool, String)> {
    let b = OmegaBench::new(p)?;
    let n = 2;
    let om = PresentedOmega::new(&b.spec, n, OmegaBase::OK0)?;
    let one = WittVector::one(p, 3, &make_tilt(&b.spec, b.depth, b.cut, &Seed::PFlat)?);
    let d_one = dtheta_n(&one, n, &om)?.is_zero()?;
    let (x, y) = (b.teich(Seed::TFlat)?, b.teich(Seed::SFlat)?);
    let lhs = dtheta_n(&x.mul(&y)?, n, &om)?;
    let rhs = dtheta_n(&y, n, &om)?
        .scale(&theta_exact(&x, n + 1)?)
        .add(&dtheta_n(&x, n, &om)?.scale(&theta_exact(&y, n + 1)?))?;
    let leibniz = lhs.equals(&rhs)?;
    let g = ker_generator(&make_tilt(&b.spec, b.depth, b.cut, &Seed::PFlat)?, 3)?;
    let dg = dtheta_n(&g, n, &om)?.is_zero()?;
    Ok((
        d_one && leibniz && !dg,
        format!(
            "d(1) = 0: {d_one}; Leibniz on [T♭][S♭]: {leibniz}; d([p♭]-p) nonzero: {}",
            !dg
        ),
    ))
}

/// Basis changes between `(ω_p, ω_T)` and `(ω_p, ω_S)` with the computed
/// `a_n`: the S-form, round trips, and independence of the torsion
/// representatives of `a_n` and of the input coordinates.
fn basis_change(pr: &SuiteParams, p: u64, n: u32) -> Result<(bool, String)> {
    let sc = pr.scenario(p, n, &ScenarioTag::SPlusT)?;
    let an = theta_of_a(&sc)?;
    let spec = sc.spec.clone();
    let q = spec.q();
    let om = PresentedOmega::new(&spec, n, OmegaBase::OK0)?;
    let one = RingElement::from_int(&spec, Repr::Char0, None, 1);
    let zero = one.constant_like(0);
    let rel = FormRelation::s_plus_t(&an, n);
    let same = |basis: FormBasis, u: &[RingElement; 2], v: &[RingElement; 2]| -> Result<bool> {
        form_in_basis(&om, basis, u)?.equals(&form_in_basis(&om, basis, v)?)
    };

    let s_form = basis_transform(
        &[zero.clone(), one.clone()],
        FormBasis::PS,
        FormBasis::PT,
        &rel,
    )?;
    let s_ok = same(FormBasis::PT, &s_form, &[an.clone(), one.constant_like(-1)])?;

    let pn = BigInt::from(p).pow(n);
    let step = q / p.pow(n) as i64;
    let c = [
        one.add(&one.monomial_like(Mono::new(0, step as u32, 0), 1)),
        one.monomial_like(Mono::new(step, 0, step as u32), 2),
    ];
    let mut round = true;
    for (from, to) in [
        (FormBasis::PT, FormBasis::PS),
        (FormBasis::PS, FormBasis::PT),
    ] {
        let there = basis_transform(&c, from, to, &rel)?;
        let back = basis_transform(&there, to, from, &rel)?;
        round &= same(from, &back, &c)?;
    }

    let torsion = one
        .monomial_like(Mono::new(step, step as u32, 0), 1)
        .scale(&pn);
    let rel2 = FormRelation::s_plus_t(&an.add(&torsion), n);
    let mut indep = true;
    for (from, to) in [
        (FormBasis::PT, FormBasis::PS),
        (FormBasis::PS, FormBasis::PT),
    ] {
        let r1 = basis_transform(&c, from, to, &rel)?;
        let r2 = basis_transform(&c, from, to, &rel2)?;
        indep &= same(to, &r1, &r2)?;
    }
    let shifted = [
        c[0].add(&x_power(&spec, q).scale(&pn)),
        c[1].add(&one.scale(&pn)),
    ];
    let r1 = basis_transform(&c, FormBasis::PT, FormBasis::PS, &rel)?;
    let r2 = basis_transform(&shifted, FormBasis::PT, FormBasis::PS, &rel)?;
    indep &= same(FormBasis::PS, &r1, &r2)?;
    // control: a unit change of a_n is visible
    let rel3 = FormRelation::s_plus_t(&an.add(&one), n);
    let unit = [zero.clone(), one.clone()];
    let sensitive = !same(
        FormBasis::PT,
        &basis_transform(&unit, FormBasis::PS, FormBasis::PT, &rel)?,
        &basis_transform(&unit, FormBasis::PS, FormBasis::PT, &rel3)?,
    )?;
    Ok((
        s_ok && round && indep && sensitive,
        format!(
            "S-form is (a_{n}, -1) in (ω_p, ω_T): {s_ok}; round trips: {round}; \
             representative independence: {indep}; a_n + 1 detected: {sensitive}"
        ),
    ))
}
