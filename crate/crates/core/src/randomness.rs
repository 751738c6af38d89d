//! Martin-Löf, Solovay and difference tests; escape sets; domination tests.

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::density::low_density_open_set;
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet, StagedOpenEnumeration};
use crate::numeric::{BitString, Rational};
use crate::report::Inequality;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    MartinLof,
    Solovay,
    Difference,
}

/// A test as indexed staged open sets; stage `s` exposes the first `s` items of each component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFamily {
    pub kind: TestKind,
    pub components: Vec<StagedOpenEnumeration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_part: Option<StagedOpenEnumeration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Rational>,
}

impl TestFamily {
    pub fn max_stage(&self) -> usize {
        let c = self.components.iter().map(|e| e.len()).max().unwrap_or(0);
        c.max(self.closed_part.as_ref().map_or(0, |e| e.len()))
    }

    fn closed_at(&self, stage: usize) -> Option<IntervalSet> {
        self.closed_part
            .as_ref()
            .map(|e| e.stage_class(stage.min(e.len())).expect("stage clamped"))
    }

    /// Exact invariant checks at every stage.
    pub fn check_invariants(&self) -> Vec<Inequality> {
        let mut out = Vec::new();
        let c_final = self.closed_part.as_ref().map(|e| e.final_class());
        match self.kind {
            TestKind::MartinLof | TestKind::Difference => {
                for (n, comp) in self.components.iter().enumerate() {
                    let bound = Rational::pow2(n as i64);
                    let mut acc: Vec<Interval> = Vec::new();
                    let mut worst = Rational::zero();
                    for item in &comp.holes {
                        acc.push(item.clone());
                        let u = IntervalSet::canonicalize(acc.clone());
                        let m = match (&self.kind, &c_final) {
                            (TestKind::Difference, Some(c)) => u.intersection(c).measure(),
                            _ => u.measure(),
                        };
                        worst = worst.max(m);
                    }
                    let label = match self.kind {
                        TestKind::Difference => format!("max_s λ(U_{n},s ∩ C) ≤ 2^-{n}"),
                        _ => format!("max_s λ(U_{n},s) ≤ 2^-{n}"),
                    };
                    out.push(Inequality::le(label, worst, bound));
                }
            }
            TestKind::Solovay => {
                let total: Rational = self
                    .components
                    .iter()
                    .map(|c| c.open_set(c.len()).measure())
                    .sum();
                let budget = self.budget.clone().unwrap_or_else(Rational::one);
                out.push(Inequality::le("Σ λ(S_n) ≤ budget", total, budget));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureReport {
    pub point: Rational,
    pub stage: usize,
    pub hits: Vec<usize>,
}

/// Components whose stage-`s` open set contains `z`; for difference tests `z` must also lie in `C_s`.
pub fn capture_check(test: &TestFamily, z: &Rational, stage: usize) -> CaptureReport {
    let in_closed = match (test.kind, test.closed_at(stage)) {
        (TestKind::Difference, Some(c)) => c.contains(z),
        _ => true,
    };
    let hits = if in_closed {
        test.components
            .iter()
            .enumerate()
            .filter(|(_, e)| e.covers_open(z, stage))
            .map(|(n, _)| n)
            .collect()
    } else {
        Vec::new()
    };
    CaptureReport {
        point: z.clone(),
        stage,
        hits,
    }
}

/// Replays `W`, dropping each item that would push the running total above `ε`.
pub fn truncated_enumeration(w: &StagedOpenEnumeration, eps: &Rational) -> StagedOpenEnumeration {
    let mut total = Rational::zero();
    let mut kept = Vec::new();
    for item in &w.holes {
        let next = &total + &item.length();
        if &next <= eps {
            total = next;
            kept.push(item.clone());
        }
    }
    StagedOpenEnumeration::new(kept)
}

/// The string whose cylinder is `i`, if `i` is a dyadic cylinder.
pub fn interval_to_cylinder(i: &Interval) -> Result<BitString> {
    let bad = || Error::NotACylinder {
        lo: i.lo.clone(),
        hi: i.hi.clone(),
    };
    let len = i.length();
    if !len.is_positive() || !len.numer().is_one() {
        return Err(bad());
    }
    let k = len.dyadic_exponent().ok_or_else(bad)? as usize;
    let scaled = &i.lo * Rational::pow2(-(k as i64));
    if !scaled.denom().is_one() {
        return Err(bad());
    }
    Ok(BitString::from_index(&scaled.floor(), k))
}

pub fn cylinders_of(e: &StagedOpenEnumeration) -> Result<Vec<BitString>> {
    e.holes.iter().map(interval_to_cylinder).collect()
}

pub fn cylinder_enumeration(strings: &[BitString]) -> StagedOpenEnumeration {
    StagedOpenEnumeration::new(strings.iter().map(BitString::cylinder).collect())
}

fn prefix_free(strings: &[BitString]) -> bool {
    for (i, a) in strings.iter().enumerate() {
        for b in &strings[i + 1..] {
            if a.comparable(b) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EscapeVerdict {
    /// `z ∈ G_m` for every `m ≤ m_max`.
    Inside,
    /// `z ∉ G_m`; `z` was captured by the test component that was truncated.
    Escaped {
        m: usize,
        sigma: BitString,
        component: usize,
        relative_measure: Rational,
        bound: Inequality,
    },
    /// `z ∉ G_m` because `z` avoids the relevant component.
    NotCaptured {
        m: usize,
        sigma: BitString,
        component: usize,
        relative_measure: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub r: u32,
    pub g: Vec<IntervalSet>,
    pub antichains: Vec<Vec<BitString>>,
    pub level_bounds: Vec<Inequality>,
    pub ratio_bounds: Vec<Inequality>,
    pub verdict: EscapeVerdict,
}

impl EscapeReport {
    pub fn all_hold(&self) -> bool {
        let esc = match &self.verdict {
            EscapeVerdict::Escaped { bound, .. } => bound.holds,
            _ => true,
        };
        esc && self.level_bounds.iter().all(|i| i.holds)
            && self.ratio_bounds.iter().all(|i| i.holds)
    }
}

/// `U_k ∩ Cyl σ` for a prefix-free cylinder enumeration, in source order.
fn restrict_to(strings: &[BitString], sigma: &BitString) -> Vec<BitString> {
    strings
        .iter()
        .filter_map(|rho| {
            if sigma.is_prefix_of(rho) {
                Some(rho.clone())
            } else if rho.is_prefix_of(sigma) {
                Some(sigma.clone())
            } else {
                None
            }
        })
        .collect()
}

/// Escape sets `G_0 ⊇ G_1 ⊇ …` built against a difference test given by prefix-free cylinders.
pub fn build_escape_sets(
    d: &TestFamily,
    r: u32,
    m_max: usize,
    z: &Rational,
) -> Result<EscapeReport> {
    if z.is_dyadic() {
        return Err(Error::AmbiguousExpansion { value: z.clone() });
    }
    if !z.in_unit() {
        return Err(Error::OutOfUnitInterval { value: z.clone() });
    }
    let comps: Vec<Vec<BitString>> = d
        .components
        .iter()
        .enumerate()
        .map(|(n, e)| {
            let s = cylinders_of(e)?;
            if prefix_free(&s) {
                Ok(s)
            } else {
                Err(Error::NotPrefixFree { component: n })
            }
        })
        .collect::<Result<_>>()?;
    let c_final = d
        .closed_part
        .as_ref()
        .map(|e| e.final_class())
        .unwrap_or_else(IntervalSet::unit);
    let keep = Rational::one() - Rational::pow2(r as i64 + 1);
    let mut antichains = vec![vec![BitString::empty()]];
    let mut g = vec![IntervalSet::unit()];
    let mut level_bounds = vec![Inequality::le(
        "λ(G_0) ≤ 1",
        Rational::one(),
        Rational::one(),
    )];
    let mut ratio_bounds = Vec::new();
    let mut verdict = EscapeVerdict::Inside;
    for m in 0..m_max {
        let mut next = Vec::new();
        for sigma in &antichains[m] {
            let k = sigma.len() + r as usize + 1;
            let inside = comps
                .get(k)
                .map(|s| restrict_to(s, sigma))
                .unwrap_or_default();
            let w = cylinder_enumeration(&inside);
            let kept = truncated_enumeration(&w, &(&keep * &sigma.weight()));
            next.extend(cylinders_of(&kept)?);
        }
        let gm = IntervalSet::canonicalize(next.iter().map(BitString::cylinder).collect());
        ratio_bounds.push(Inequality::le(
            format!("λ(G_{}) ≤ (1−2^-{})λ(G_{m})", m + 1, r + 1),
            gm.measure(),
            &keep * &g[m].measure(),
        ));
        level_bounds.push(Inequality::le(
            format!("λ(G_{}) ≤ (1−2^-{})^{}", m + 1, r + 1, m + 1),
            gm.measure(),
            keep.pow(m as u32 + 1),
        ));
        let escaped = !gm.contains_in_interior(z) && matches!(verdict, EscapeVerdict::Inside);
        if escaped {
            let sigma = antichains[m]
                .iter()
                .find(|s| s.cylinder().contains_open(z))
                .cloned()
                .expect("z lies in G_m for the minimal escape index");
            let k = sigma.len() + r as usize + 1;
            let captured = comps
                .get(k)
                .is_some_and(|s| s.iter().any(|rho| rho.cylinder().contains_open(z)));
            let rel = c_final.relative_measure(&sigma.cylinder())?;
            verdict = if captured {
                EscapeVerdict::Escaped {
                    m: m + 1,
                    sigma,
                    component: k,
                    bound: Inequality::le(
                        format!("λ_σ(C) ≤ 2^-{r}"),
                        rel.clone(),
                        Rational::pow2(r as i64),
                    ),
                    relative_measure: rel,
                }
            } else {
                EscapeVerdict::NotCaptured {
                    m: m + 1,
                    sigma,
                    component: k,
                    relative_measure: rel,
                }
            };
        }
        g.push(gm);
        antichains.push(next);
    }
    Ok(EscapeReport {
        r,
        g,
        antichains,
        level_bounds,
        ratio_bounds,
        verdict,
    })
}

/// Component `n` collects `U[C_t]` at `ε = 2^-(n+1)` for successive stages `t`, so that
/// `λ(U_n ∩ C) ≤ 2^-n`.
pub fn density_difference_test(e: &StagedOpenEnumeration, n_max: usize) -> Result<TestFamily> {
    let mut components = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let eps = Rational::pow2(n as i64 + 1);
        let mut items: Vec<Interval> = Vec::new();
        let mut so_far = IntervalSet::empty();
        for t in 1..=e.len() {
            let u = low_density_open_set(&e.stage_class(t)?, &eps)?.u;
            for p in u.parts() {
                if p.is_degenerate() || so_far.intersect_interval(p).measure() == p.length() {
                    continue;
                }
                items.push(p.clone());
            }
            so_far = so_far.union(&u);
        }
        components.push(StagedOpenEnumeration::new(items));
    }
    Ok(TestFamily {
        kind: TestKind::Difference,
        components,
        closed_part: Some(e.clone()),
        budget: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationCase {
    Dominating,
    InfinitelyOften,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationReport {
    pub epsilon: Rational,
    pub case: DominationCase,
    pub g: Vec<Option<usize>>,
    pub f: Vec<usize>,
    /// Stage boundaries `k(0) < k(1) < …` of the blocks.
    pub blocks: Vec<usize>,
    pub s: Vec<IntervalSet>,
    pub block_bounds: Vec<Inequality>,
    pub budget: Inequality,
    pub decomposition: Inequality,
    pub budget_ok: bool,
    pub capture_indices: Vec<usize>,
    pub claimed_indices: Vec<usize>,
    pub claims_ok: bool,
}

/// `C_{s,t}`: `[0,1]` minus the items enumerated at stages `s ≤ m < t`.
pub fn window_class(e: &StagedOpenEnumeration, s: usize, t: usize) -> IntervalSet {
    crate::interval::complement_of_open(&e.holes[s.min(e.len())..t.min(e.len())])
}

/// The least `t > s` such that `z` lies in the open set `U[C_{s,t}]` at `ε`.
pub fn first_low_stage(
    e: &StagedOpenEnumeration,
    eps: &Rational,
    z: &Rational,
    s: usize,
) -> Result<Option<usize>> {
    for t in s + 1..=e.len() {
        let u = low_density_open_set(&window_class(e, s, t), eps)?.u;
        if u.contains_in_interior(z) {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Solovay tests from the proof that sufficiently fast-growing `h` capture `z`.
pub fn build_domination_tests(
    e: &StagedOpenEnumeration,
    eps: &Rational,
    z: &Rational,
    h: &[usize],
    case: DominationCase,
) -> Result<DominationReport> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::ParameterOutOfRange {
            name: "epsilon",
            value: eps.to_string(),
        });
    }
    let strings = cylinders_of(e)?;
    if !prefix_free(&strings) {
        return Err(Error::NotPrefixFree { component: 0 });
    }
    let len = e.len();
    let g: Vec<Option<usize>> = (0..len)
        .map(|s| first_low_stage(e, eps, z, s))
        .collect::<Result<_>>()?;
    let Some(g0) = g.first().copied().flatten() else {
        return Err(Error::SearchUndefined { stage: 0 });
    };
    let mut f = vec![g0];
    while let Some(Some(next)) = g.get(*f.last().unwrap()) {
        f.push(*next);
    }

    let blocks: Vec<usize> = match case {
        DominationCase::Dominating => {
            let mut k = vec![0usize];
            while let Some(&next) = h.get(*k.last().unwrap()) {
                if next <= *k.last().unwrap() || next > len {
                    break;
                }
                k.push(next);
            }
            k
        }
        DominationCase::InfinitelyOften => {
            let mut k = Vec::new();
            for &v in h {
                if v > len || k.last().is_some_and(|&l| v <= l) {
                    break;
                }
                k.push(v);
            }
            k
        }
    };

    let delta = Rational::from(2) / (Rational::one() - eps);
    let mut s_sets = Vec::new();
    let mut block_bounds = Vec::new();
    let mut block_total = Rational::zero();
    let mut capture_indices = Vec::new();
    let mut claimed_indices = Vec::new();
    for n in 0..blocks.len().saturating_sub(1) {
        let (a, b) = (blocks[n], blocks[n + 1]);
        let u = low_density_open_set(&window_class(e, a, b), eps)?.u;
        let removed: Rational = strings[a..b].iter().map(BitString::weight).sum();
        block_total += &removed;
        block_bounds.push(Inequality::le(
            format!("λ(S_{n}) ≤ δ·λ(block {n})"),
            u.measure(),
            &delta * &removed,
        ));
        if u.contains_in_interior(z) {
            capture_indices.push(n);
        }
        let claimed = match case {
            DominationCase::Dominating => true,
            DominationCase::InfinitelyOften => f
                .get(n)
                .zip(f.get(n + 1))
                .is_some_and(|(&fa, &fb)| a <= fa && fb <= b),
        };
        if claimed {
            claimed_indices.push(n);
        }
        s_sets.push(u);
    }
    let total: Rational = s_sets.iter().map(IntervalSet::measure).sum();
    let budget = Inequality::le("Σ λ(S_n) ≤ 2/(1−ε)", total, delta);
    let covered = match (blocks.first(), blocks.last()) {
        (Some(&a), Some(&b)) => {
            IntervalSet::canonicalize(strings[a..b].iter().map(BitString::cylinder).collect())
                .measure()
        }
        _ => Rational::zero(),
    };
    let decomposition = Inequality::eq(
        "Σ_n λ(block n) = λ(⋃ covered cylinders)",
        block_total,
        covered,
    );
    let claims_ok = claimed_indices.iter().all(|n| capture_indices.contains(n));
    let budget_ok = budget.holds && decomposition.holds && block_bounds.iter().all(|i| i.holds);
    Ok(DominationReport {
        epsilon: eps.clone(),
        case,
        g,
        f,
        blocks,
        s: s_sets,
        block_bounds,
        budget,
        decomposition,
        budget_ok,
        capture_indices,
        claimed_indices,
        claims_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    fn cyl(s: &str) -> Interval {
        s.parse::<BitString>().unwrap().cylinder()
    }

    #[test]
    fn truncation_examples() {
        let w = StagedOpenEnumeration::new(vec![cyl("00"), cyl("1"), cyl("01")]);
        let t = truncated_enumeration(&w, &q(1, 2));
        assert_eq!(t.holes, vec![cyl("00"), cyl("01")]);
        assert!(truncated_enumeration(&w, &q(0, 1)).is_empty());
        assert_eq!(truncated_enumeration(&w, &q(1, 1)), w);
    }

    #[test]
    fn capture_examples() {
        let t = TestFamily {
            kind: TestKind::MartinLof,
            components: vec![StagedOpenEnumeration::new(vec![Interval::new(
                q(1, 4),
                q(1, 2),
            )
            .unwrap()])],
            closed_part: None,
            budget: None,
        };
        assert_eq!(capture_check(&t, &q(1, 3), 1).hits, vec![0]);
        assert!(capture_check(&t, &q(1, 3), 0).hits.is_empty());
        let empty = TestFamily {
            components: vec![],
            ..t
        };
        assert!(capture_check(&empty, &q(1, 3), 1).hits.is_empty());
    }

    #[test]
    fn cylinder_round_trip() {
        assert_eq!(
            interval_to_cylinder(&cyl("0110")).unwrap().to_string(),
            "0110"
        );
        assert!(interval_to_cylinder(&Interval::new(q(1, 3), q(2, 3)).unwrap()).is_err());
        assert!(interval_to_cylinder(&Interval::new(q(1, 8), q(3, 8)).unwrap()).is_err());
    }

    #[test]
    fn escape_from_two_holes() {
        // C = [0,1] minus the cylinders 00 and 11; every U_n = C's holes, so U_n ∩ C = ∅.
        let holes = vec![cyl("00"), cyl("11")];
        let comp = StagedOpenEnumeration::new(holes.clone());
        let d = TestFamily {
            kind: TestKind::Difference,
            components: vec![comp; 8],
            closed_part: Some(StagedOpenEnumeration::new(holes)),
            budget: None,
        };
        assert!(d.check_invariants().iter().all(|i| i.holds));
        let rep = build_escape_sets(&d, 1, 3, &q(1, 3)).unwrap();
        assert!(rep.all_hold());
        match rep.verdict {
            EscapeVerdict::NotCaptured {
                m,
                relative_measure,
                ..
            } => {
                assert_eq!(m, 1);
                assert!(relative_measure <= q(1, 2));
            }
            other => panic!("unexpected verdict {other:?}"),
        }
        assert!(build_escape_sets(&d, 1, 3, &q(1, 2)).is_err());
    }

    #[test]
    fn density_test_trivial_class() {
        let e = StagedOpenEnumeration::new(vec![]);
        let d = density_difference_test(&e, 4).unwrap();
        assert!(d.components.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn domination_without_holes_is_undefined() {
        let e = StagedOpenEnumeration::new(vec![]);
        let err = build_domination_tests(
            &e,
            &q(1, 3),
            &q(1, 3),
            &[1, 2, 3],
            DominationCase::Dominating,
        );
        assert!(matches!(err, Err(Error::SearchUndefined { .. })));
    }
}
