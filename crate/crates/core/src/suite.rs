//! Seeded instance families and the checks run over them by `verify-all`.

use std::sync::Arc;

use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    interval_extremum, pseudo_derivative_estimate, ExtensionBudget, Extremum, MonotoneExtension,
    Side,
};
use crate::counterexample::{
    build_counterexample, default_enumeration, verify_denjoy_failure, OverlapPolicy,
};
use crate::density::low_density_open_set;
use crate::error::{Error, Result};
use crate::gen::{non_dyadic_point, random_enumeration, rng_for, Denominators, InstanceRng};
use crate::interval::{Interval, IntervalSet, StagedOpenEnumeration};
use crate::martingale::{
    anti_debt_strategy, check_fairness, combine_scaled, force, martingale_to_function,
    savings_windows, slope_martingale, AntiDebtMode, ApproxMode, Capped, Condition, ForcingStep,
    Martingale, MartingaleRef, Rooted, TableMartingale,
};
use crate::numeric::{binary_prefix, BitString, Expansion, Rational};
use crate::oracle::{Oracle, PiecewiseLinear, Polynomial};
use crate::porosity::{porosity_test, PorosityParams};
use crate::randomness::{
    build_domination_tests, build_escape_sets, cylinder_enumeration, DominationCase, EscapeVerdict,
    TestFamily, TestKind,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &str, checks: usize, failures: usize, detail: String) -> Self {
        CriterionResult {
            id,
            name: name.to_string(),
            passed: failures == 0 && checks > 0,
            checks,
            failures,
            detail,
        }
    }

    fn errored(id: u8, name: &str, err: Error) -> Self {
        CriterionResult {
            id,
            name: name.to_string(),
            passed: false,
            checks: 0,
            failures: 1,
            detail: format!("error: {err}"),
        }
    }
}

fn finish(id: u8, name: &str, r: Result<(usize, usize, String)>) -> CriterionResult {
    match r {
        Ok((checks, failures, detail)) => CriterionResult::new(id, name, checks, failures, detail),
        Err(e) => CriterionResult::errored(id, name, e),
    }
}

/// Cells of width `1/units` covered by the union of open windows `(L, R)` on the grid in which `C`
/// has density below `ε`; an equality window counts when shrinking it by an arbitrarily small amount
/// at an end lying in `C` makes it qualify.
pub fn grid_low_density_set(c: &IntervalSet, eps: &Rational, units: i64) -> Result<IntervalSet> {
    let n = units as usize;
    let scale = Rational::from(units);
    let mut cum = vec![0i64; n + 1];
    for i in 0..n {
        let cell = c.measure_in(
            &Rational::new(i as i64, units),
            &Rational::new(i as i64 + 1, units),
        ) * &scale;
        if !cell.denom().is_one() {
            return Err(Error::ParameterOutOfRange {
                name: "grid units",
                value: units.to_string(),
            });
        }
        cum[i + 1] = cum[i] + cell.numer().to_i64().expect("small");
    }
    let full = |i: usize| cum[i + 1] - cum[i] == 1;
    let p = eps.numer().to_i64().expect("small");
    let q = eps.denom().to_i64().expect("small");
    let reach: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut best = l;
            for r in l + 1..=n {
                let m = cum[r] - cum[l];
                let w = (r - l) as i64;
                if q * m < p * w || (q * m == p * w && (full(l) || full(r - 1))) {
                    best = r;
                }
            }
            best
        })
        .collect();
    let mut diff = vec![0i64; n + 1];
    for (l, &r) in reach.iter().enumerate() {
        if r > l {
            diff[l] += 1;
            diff[r] -= 1;
        }
    }
    let mut parts = Vec::new();
    let mut run: Option<usize> = None;
    let mut acc = 0;
    for i in 0..=n {
        acc += if i < n { diff[i] } else { 0 };
        let covered = i < n && acc > 0;
        match (covered, run) {
            (true, None) => run = Some(i),
            (false, Some(s)) => {
                parts.push(Interval::new(
                    Rational::new(s as i64, units),
                    Rational::new(i as i64, units),
                )?);
                run = None;
            }
            _ => {}
        }
    }
    Ok(IntervalSet::canonicalize(parts))
}

const EPSILONS: [(i64, i64); 3] = [(1, 4), (1, 2), (3, 4)];

pub fn covering_bounds(seed: u64) -> CriterionResult {
    let name = "covering bounds λ(C∩U) ≤ 2ε and λ(U) ≤ 2(1−λC)/(1−ε)";
    let runs: Vec<Result<bool>> = (0..200u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let e =
                random_enumeration(&mut rng_for(seed, 1, i), 12, Denominators::Bounded(1 << 16));
            let c = e.final_class();
            EPSILONS
                .iter()
                .map(move |&(a, b)| {
                    low_density_open_set(&c, &Rational::new(a, b))
                        .map(|r| r.bound1_ok && r.bound2_ok)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    finish(1, name, tally(runs, "instance×ε pairs"))
}

fn tally(runs: Vec<Result<bool>>, what: &str) -> Result<(usize, usize, String)> {
    let mut fails = 0;
    let n = runs.len();
    for r in runs {
        if !r? {
            fails += 1;
        }
    }
    Ok((n, fails, format!("{n} {what}, {fails} violations")))
}

pub const GRID_UNITS: i64 = 3 << 10;

pub fn u_oracle_equivalence(seed: u64) -> CriterionResult {
    let name = "fat-interval U equals the grid brute-force U up to finitely many points";
    let runs: Vec<Result<bool>> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let e = random_enumeration(&mut rng_for(seed, 2, i), 12, Denominators::Dyadic(8));
            let c = e.final_class();
            let (a, b) = EPSILONS[(i % 3) as usize];
            let eps = Rational::new(a, b);
            let fat = low_density_open_set(&c, &eps)?.u;
            let grid = grid_low_density_set(&c, &eps, GRID_UNITS)?;
            Ok(fat.equal_up_to_null_points(&grid))
        })
        .collect();
    finish(2, name, tally(runs, "instances"))
}

pub fn porosity_bounds(seed: u64) -> CriterionResult {
    let name = "porosity antichain, nesting, per-node and level bounds";
    let runs: Vec<Result<bool>> = (0..50u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let e =
                random_enumeration(&mut rng_for(seed, 3, i), 20, Denominators::Bounded(1 << 10));
            (1..=3u32)
                .map(move |c| {
                    porosity_test(&e, &PorosityParams::new(c), 8, 200).map(|r| r.all_hold())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    finish(3, name, tally(runs, "enumeration×c runs"))
}

fn random_string(rng: &mut InstanceRng, len: usize) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.gen_bool(0.5)).collect())
}

/// A difference test against a class with cylinder holes avoiding `z`; component `n` contains
/// `Cyl(z↾(n+1))`, the hole cylinders incomparable with it and random extras of weight `≤ 2^{-n-1}`.
pub fn escape_instance(rng: &mut InstanceRng, components: usize) -> Result<(TestFamily, Rational)> {
    let z = non_dyadic_point(rng, 8);
    let path = binary_prefix(&z, components + 8, Expansion::Reject)?;
    let mut holes: Vec<BitString> = Vec::new();
    while holes.len() < 6 {
        let len = rng.gen_range(2..=7);
        let s = random_string(rng, len);
        if !s.is_prefix_of(&path) && holes.iter().all(|h| !h.comparable(&s)) {
            holes.push(s);
        }
    }
    let mut comps = Vec::with_capacity(components);
    for n in 0..components {
        let head = path.prefix(n + 1);
        let mut strings = vec![head.clone()];
        strings.extend(holes.iter().filter(|h| !h.comparable(&head)).cloned());
        let mut extra = Rational::zero();
        let cap = Rational::pow2(n as i64 + 1);
        for _ in 0..12 {
            let len = n + 1 + rng.gen_range(2..=5);
            let s = random_string(rng, len);
            if strings.iter().all(|t| !t.comparable(&s)) && &extra + s.weight() <= cap {
                extra += s.weight();
                strings.push(s);
            }
        }
        strings.shuffle(rng);
        comps.push(cylinder_enumeration(&strings));
    }
    Ok((
        TestFamily {
            kind: TestKind::Difference,
            components: comps,
            closed_part: Some(cylinder_enumeration(&holes)),
            budget: None,
        },
        z,
    ))
}

pub fn escape_sets(seed: u64) -> CriterionResult {
    let name = "escape sets λ(G_m) ≤ (1−2^{-r-1})^m and λ_σ(C) ≤ 2^{-r} at escape";
    let runs: Vec<Result<(bool, bool)>> = (0..30u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let inst = escape_instance(&mut rng_for(seed, 4, i), 24);
            (0..=3u32)
                .map(move |r| {
                    let (d, z) = inst.clone()?;
                    let rep = build_escape_sets(&d, r, 6, &z)?;
                    let escaped = matches!(rep.verdict, EscapeVerdict::Escaped { .. });
                    Ok((rep.all_hold(), escaped))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let r = (|| {
        let mut escapes = 0;
        let bools = runs
            .into_iter()
            .map(|r| {
                r.map(|(ok, esc)| {
                    escapes += esc as usize;
                    ok
                })
            })
            .collect();
        let (n, f, d) = tally(bools, "test×r runs")?;
        Ok((n, f, format!("{d}; {escapes} escapes certified")))
    })();
    finish(4, name, r)
}

/// Holes are the siblings of the path of `1/3` at depths `1..=depth`.
pub fn sibling_instance(depth: usize) -> StagedOpenEnumeration {
    let z = Rational::new(1, 3);
    let path = binary_prefix(&z, depth, Expansion::Reject).expect("non-dyadic");
    let holes: Vec<BitString> = (1..=depth)
        .map(|i| {
            let mut s = path.prefix(i - 1);
            s.push(!path.bits()[i - 1]);
            s
        })
        .collect();
    cylinder_enumeration(&holes)
}

pub fn domination_tests(_seed: u64) -> CriterionResult {
    let name = "Solovay tests Σλ(S_n) ≤ 2/(1−ε) and capture at claimed indices";
    let r = (|| {
        let e = sibling_instance(30);
        let z = Rational::new(1, 3);
        let eps = Rational::new(1, 3);
        let mut checks = 0;
        let mut fails = 0;
        let mut notes = Vec::new();
        let dominating: Vec<usize> = (0..=30).map(|k| (k + 3).min(30)).collect();
        let sparse: Vec<Vec<usize>> = vec![
            (0..=15).map(|k| 2 * k).collect(),
            (0..=10).map(|k| 3 * k).collect(),
            vec![0, 1, 4, 5, 9, 10, 16, 17, 25, 26],
        ];
        let mut runs = vec![(DominationCase::Dominating, dominating)];
        runs.extend(
            sparse
                .into_iter()
                .map(|h| (DominationCase::InfinitelyOften, h)),
        );
        for (case, h) in runs {
            let rep = build_domination_tests(&e, &eps, &z, &h, case)?;
            checks += 1;
            let ok = rep.budget_ok && rep.claims_ok && !rep.claimed_indices.is_empty();
            if !ok {
                fails += 1;
            }
            notes.push(format!(
                "{case:?}: {} blocks, {} claimed, total {}",
                rep.s.len(),
                rep.claimed_indices.len(),
                rep.budget.lhs
            ));
        }
        Ok((checks, fails, notes.join("; ")))
    })();
    finish(5, name, r)
}

fn random_table(rng: &mut InstanceRng, depth: usize, max: i64, den: i64) -> TableMartingale {
    let leaves = (0..1usize << depth)
        .map(|_| Rational::new(rng.gen_range(0..=max), den))
        .collect();
    TableMartingale::from_leaves(depth, leaves).expect("leaf count matches")
}

/// Random table with initial capital exactly `1`.
fn unit_table(rng: &mut InstanceRng, depth: usize) -> TableMartingale {
    let raw: Vec<i64> = (0..1usize << depth).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    let leaves = raw
        .iter()
        .map(|&v| Rational::new(v << depth, total))
        .collect();
    TableMartingale::from_leaves(depth, leaves).expect("leaf count matches")
}

pub const MARTINGALE_DEPTH: usize = 16;

fn round_trip_holds(m: MartingaleRef, depth: usize) -> Result<bool> {
    let f: Oracle = Arc::new(martingale_to_function(
        m.clone(),
        &BitString::empty(),
        depth,
    )?);
    let back = slope_martingale(f, depth as u32)?;
    let strings = BitString::empty().extensions_up_to(depth);
    Ok(strings.par_iter().all(|s| back.value(s) == m.value(s)))
}

pub fn martingale_algebra(seed: u64) -> CriterionResult {
    let name = "fairness of constructed martingales and exact round trip to depth 16";
    let r = (|| {
        let mut rng = rng_for(seed, 6, 0);
        let d = MARTINGALE_DEPTH;
        let square: MartingaleRef = Arc::new(slope_martingale(
            Arc::new(Polynomial::new(vec![
                Rational::zero(),
                Rational::zero(),
                Rational::one(),
            ])),
            d as u32,
        )?);
        let cubic: MartingaleRef = Arc::new(slope_martingale(
            Arc::new(Polynomial::new(vec![
                Rational::zero(),
                Rational::new(-3, 1),
                Rational::zero(),
                Rational::new(4, 1),
            ])),
            d as u32,
        )?);
        let table: MartingaleRef = Arc::new(random_table(&mut rng, 10, 16, 4));
        let unit: MartingaleRef = Arc::new(unit_table(&mut rng, 8));
        let combined: MartingaleRef = Arc::new(combine_scaled(
            table.clone(),
            unit.clone(),
            &BitString::from_bits(vec![true, false]),
            &Rational::new(1, 3),
        )?);
        let capped: MartingaleRef = Arc::new(
            Capped::new(combined.clone(), Rational::from(3), ApproxMode::Floor).with_cache(d),
        );
        let rooted: MartingaleRef = Arc::new(Rooted {
            inner: table.clone(),
            root: BitString::from_bits(vec![false, true, true]),
        });
        let low_leaves = [4, 4, 3, 9].iter().map(|&v| Rational::new(v, 2)).collect();
        let low: MartingaleRef = Arc::new(TableMartingale::from_leaves(2, low_leaves)?);
        let sigma1 = BitString::from_bits(vec![true]);
        let case1: MartingaleRef = Arc::new(anti_debt_strategy(
            low,
            &sigma1,
            AntiDebtMode::Case1,
            3,
            ApproxMode::Floor,
        )?);
        let steep: MartingaleRef = Arc::new(slope_martingale(
            Arc::new(Polynomial::new(vec![
                Rational::zero(),
                Rational::from(3),
                Rational::one(),
            ])),
            d as u32,
        )?);
        let case2: MartingaleRef = Arc::new(anti_debt_strategy(
            steep.clone(),
            &BitString::from_bits(vec![false]),
            AntiDebtMode::Case2,
            d,
            ApproxMode::Floor,
        )?);
        let family: Vec<(&str, MartingaleRef)> = vec![
            ("slope x²", square.clone()),
            ("slope 4x³−3x", cubic),
            ("table", table.clone()),
            ("combined", combined),
            ("capped", capped.clone()),
            ("rooted", rooted),
            ("anti-debt case 1", case1),
            ("anti-debt case 2", case2),
        ];
        let mut checks = 0;
        let mut fails = Vec::new();
        for (label, m) in &family {
            checks += 1;
            if !check_fairness(&**m, &BitString::empty(), d).fair() {
                fails.push(format!("{label} unfair"));
            }
        }
        for (label, m) in [
            ("slope x²", square),
            ("table", table),
            ("capped", capped),
            ("slope 3x+x²", steep),
        ] {
            checks += 1;
            if !round_trip_holds(m, d)? {
                fails.push(format!("{label} round trip"));
            }
        }
        let detail = if fails.is_empty() {
            format!("{} martingales fair, 4 round trips exact", family.len())
        } else {
            fails.join(", ")
        };
        Ok((checks, fails.len(), detail))
    })();
    finish(6, name, r)
}

pub fn forcing_instance(
    rng: &mut InstanceRng,
) -> Result<(Condition, Vec<ForcingStep>, Rational, usize)> {
    let depth = rng.gen_range(4..=6);
    let m: MartingaleRef = Arc::new(random_table(rng, depth, 12, 4));
    let len = rng.gen_range(0..=2);
    let sigma = random_string(rng, len);
    let q = m.value(&sigma) + Rational::new(rng.gen_range(1..=8), 4);
    let n: MartingaleRef = Arc::new(unit_table(rng, depth));
    let eps = [
        Rational::new(1, 4),
        Rational::new(1, 3),
        Rational::new(1, 2),
    ][rng.gen_range(0..3)]
    .clone();
    let steps = vec![
        ForcingStep::Length(sigma.len() + 2),
        ForcingStep::Absorb(n),
        ForcingStep::Save {
            eps: eps.clone(),
            search_depth: depth,
        },
    ];
    Ok((Condition::new(sigma, m, q)?, steps, eps, depth))
}

pub const FORCING_CHECK_DEPTH: usize = 12;
pub const WINDOW_DEPTH: usize = 10;

pub fn forcing_mechanics(seed: u64) -> CriterionResult {
    let name = "condition extensions, savings gap and window inequality";
    let runs: Vec<Result<(bool, usize)>> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let (start, steps, eps, depth) = forcing_instance(&mut rng_for(seed, 7, i))?;
            let (trace, last) = force(start, &steps, FORCING_CHECK_DEPTH)?;
            let cap_q = trace
                .records
                .iter()
                .find(|r| r.step == "cap")
                .map(|r| r.q.clone())
                .expect("save step records the capped condition");
            let sv = trace
                .records
                .last()
                .and_then(|r| r.savings.clone())
                .expect("savings record");
            let win = savings_windows(
                last.m.clone(),
                &sv.tau,
                &cap_q,
                &sv.d_hat,
                &sv.s,
                &eps,
                WINDOW_DEPTH,
                WINDOW_DEPTH.max(depth),
            )?;
            Ok((trace.all_hold() && win.holds(), win.slow_windows))
        })
        .collect();
    let r = (|| {
        let mut slow = 0;
        let bools = runs
            .into_iter()
            .map(|r| {
                r.map(|(ok, s)| {
                    slow += s;
                    ok
                })
            })
            .collect();
        let (n, f, d) = tally(bools, "instances")?;
        Ok((n, f, format!("{d}; {slow} slow windows checked")))
    })();
    finish(7, name, r)
}

pub const DEFAULT_INCREASES: usize = 24;

pub fn counterexample_certificates(_seed: u64) -> CriterionResult {
    let name = "slope certificates ≤ −2^{k/2} for even k ≤ 16 and zero-slope witnesses";
    let r = (|| {
        let (plan, trace, f) = build_counterexample(
            &default_enumeration(DEFAULT_INCREASES),
            OverlapPolicy::Reject,
        )?;
        let rep = verify_denjoy_failure(&plan, &trace, &f, 16);
        let checks = rep.certificates.len() + rep.zero_slopes.len() + rep.not_realized.len();
        let fails = rep.certificates.iter().filter(|c| !c.holds).count()
            + rep.zero_slopes.iter().filter(|w| !w.holds).count()
            + rep.not_realized.len()
            + usize::from(!rep.all_hold())
            + usize::from(rep.zero_slopes.len() != 8);
        Ok((
            checks,
            fails,
            format!(
                "{} certificates, {} zero-slope witnesses, unrealized k: {:?}",
                rep.certificates.len(),
                rep.zero_slopes.len(),
                rep.not_realized
            ),
        ))
    })();
    finish(8, name, r)
}

fn monotone_oracle(rng: &mut InstanceRng, which: u64) -> Oracle {
    let r = |a: i64, b: i64| Rational::new(a, b);
    match which % 5 {
        0 => Arc::new(Polynomial::identity()),
        1 => Arc::new(Polynomial::new(vec![r(0, 1), r(0, 1), r(1, 1)])),
        2 => Arc::new(Polynomial::new(vec![r(1, 5), r(1, 2), r(0, 1), r(1, 2)])),
        3 => {
            let k = rng.gen_range(3..=6);
            let mut xs: Vec<i64> = (1..16).collect();
            xs.shuffle(rng);
            let mut xs: Vec<i64> = xs[..k].to_vec();
            xs.sort();
            let mut pts = vec![(r(0, 1), r(0, 1))];
            let mut y = 0;
            for x in xs {
                y += rng.gen_range(0..=4);
                pts.push((r(x, 16), r(y, 4)));
            }
            pts.push((r(1, 1), r(y + 1, 4)));
            Arc::new(PiecewiseLinear::new(pts).expect("sorted"))
        }
        _ => {
            let a = rng.gen_range(1..=14);
            Arc::new(
                PiecewiseLinear::new(vec![
                    (r(0, 1), r(0, 1)),
                    (r(a, 16), r(0, 1)),
                    (r(a + 1, 16), r(1, 1)),
                    (r(1, 1), r(1, 1)),
                ])
                .expect("sorted"),
            )
        }
    }
}

pub const EXTENSION_PRECISION: u32 = 10;
pub const EXTENSION_GRID: u32 = 12;

pub fn monotone_extension_check(seed: u64) -> CriterionResult {
    let name = "monotone extension nondecreasing on the 2^-12 grid and within 2·2^-10 of h on C";
    let runs: Vec<Result<bool>> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 9, i);
            let e = random_enumeration(&mut rng, 6, Denominators::Dyadic(8));
            let h = monotone_oracle(&mut rng, i);
            let n = EXTENSION_PRECISION;
            let ext = MonotoneExtension::new(&*h, &e, n, ExtensionBudget::for_precision(n))?;
            let tol = Rational::pow2(n as i64 - 1);
            let grid: Vec<Rational> = (0..=1i64 << EXTENSION_GRID)
                .map(|j| Rational::dyadic(j, EXTENSION_GRID))
                .collect();
            let vals = grid
                .iter()
                .map(|x| ext.value(x))
                .collect::<Result<Vec<_>>>()?;
            let monotone = vals.windows(2).all(|w| w[0] <= w[1]);
            let agrees = grid.iter().zip(&vals).all(|(x, v)| {
                !ext.class().contains(x) || (v - h.exact(x).expect("exact oracle")).abs() <= tol
            });
            Ok(monotone && agrees)
        })
        .collect();
    finish(9, name, tally(runs, "instances"))
}

/// Closed-form extrema: `x(1−x)` on `[0,1]`, `x²` on `[1/4,3/4]`, `4x³−3x` on `[0,1]`.
pub fn golden_extrema() -> Vec<(Polynomial, Rational, Rational, Extremum, Rational)> {
    let r = |a: i64, b: i64| Rational::new(a, b);
    vec![
        (
            Polynomial::new(vec![r(0, 1), r(1, 1), r(-1, 1)]),
            r(0, 1),
            r(1, 1),
            Extremum::Sup,
            r(1, 4),
        ),
        (
            Polynomial::new(vec![r(0, 1), r(0, 1), r(1, 1)]),
            r(1, 4),
            r(3, 4),
            Extremum::Inf,
            r(1, 16),
        ),
        (
            Polynomial::new(vec![r(0, 1), r(-3, 1), r(0, 1), r(4, 1)]),
            r(0, 1),
            r(1, 1),
            Extremum::Inf,
            r(-1, 1),
        ),
    ]
}

pub fn calculus_sanity(seed: u64) -> CriterionResult {
    let name =
        "upper ≥ lower pseudo-derivative, lower ≥ 0 for nondecreasing f, extrema within 2^-n";
    let r = (|| {
        let mut checks = 0;
        let mut fails = 0;
        for i in 0..24u64 {
            let mut rng = rng_for(seed, 10, i);
            let (f, monotone): (Oracle, bool) = if i % 2 == 0 {
                (monotone_oracle(&mut rng, i / 2), true)
            } else {
                let coeffs = (0..4)
                    .map(|_| Rational::new(rng.gen_range(-8..=8), 4))
                    .collect();
                (Arc::new(Polynomial::new(coeffs)), false)
            };
            let x = Rational::new(rng.gen_range(0..=96), 96);
            for h in [Rational::new(1, 4), Rational::new(1, 32)] {
                let up = pseudo_derivative_estimate(&*f, &x, &h, 7, Side::Upper)?;
                let lo = pseudo_derivative_estimate(&*f, &x, &h, 7, Side::Lower)?;
                checks += 1;
                if up.value < lo.value || (monotone && lo.value.is_negative()) {
                    fails += 1;
                }
            }
        }
        let n = 12;
        for (p, a, b, which, expected) in golden_extrema() {
            checks += 1;
            let v = interval_extremum(&p, &a, &b, n, which)?;
            if (v - expected).abs() > Rational::pow2(n as i64) {
                fails += 1;
            }
        }
        Ok((
            checks,
            fails,
            format!("{checks} checks, {fails} violations"),
        ))
    })();
    finish(10, name, r)
}

pub fn run_criterion(id: u8, seed: u64) -> Option<CriterionResult> {
    Some(match id {
        1 => covering_bounds(seed),
        2 => u_oracle_equivalence(seed),
        3 => porosity_bounds(seed),
        4 => escape_sets(seed),
        5 => domination_tests(seed),
        6 => martingale_algebra(seed),
        7 => forcing_mechanics(seed),
        8 => counterexample_certificates(seed),
        9 => monotone_extension_check(seed),
        10 => calculus_sanity(seed),
        _ => return None,
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    (1..=10).filter_map(|id| run_criterion(id, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_oracle_single_hole() {
        let c = IntervalSet::from_pairs(vec![
            (Rational::zero(), Rational::new(1, 4)),
            (Rational::new(1, 2), Rational::one()),
        ])
        .unwrap();
        let u = grid_low_density_set(&c, &Rational::new(1, 2), 12).unwrap();
        let expect =
            IntervalSet::from_pairs(vec![(Rational::zero(), Rational::new(3, 4))]).unwrap();
        assert!(u.equal_up_to_null_points(&expect));
    }

    #[test]
    fn sibling_holes_avoid_third() {
        let e = sibling_instance(10);
        assert!(e.final_class().contains(&Rational::new(1, 3)));
    }
}
