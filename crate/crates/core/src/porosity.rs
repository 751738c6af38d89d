//! Porosity witnesses, minimal porous extensions and the level antichains built from them.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet, StagedOpenEnumeration};
use crate::numeric::{BitString, Rational};
use crate::report::Inequality;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PorosityParams {
    pub c: u32,
    pub depth_cap: usize,
    pub stage_cap: usize,
}

impl PorosityParams {
    pub fn new(c: u32) -> Self {
        PorosityParams {
            c,
            depth_cap: 96,
            stage_cap: 200,
        }
    }

    /// `1 − 2^{−c−2}`.
    pub fn shrink_factor(&self) -> Rational {
        Rational::one() - Rational::pow2(self.c as i64 + 2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PorosityWitness {
    pub beta: Rational,
    pub hole: Option<Interval>,
}

/// For each scale `β`, an interval of length `≥ εβ` in `(z−β, z+β)` that misses `C`.
pub fn porosity_witness(
    c: &IntervalSet,
    z: &Rational,
    eps: &Rational,
    scales: &[Rational],
) -> Vec<PorosityWitness> {
    let gaps = c.gaps();
    scales
        .iter()
        .map(|beta| {
            let lo = z - beta;
            let hi = z + beta;
            let hole = gaps.iter().find_map(|g| {
                let a = (&g.lo).max(&lo).clone();
                let b = (&g.hi).min(&hi).clone();
                (a < b && &b - &a >= eps * beta).then(|| Interval::new_unchecked(a, b))
            });
            PorosityWitness {
                beta: beta.clone(),
                hole,
            }
        })
        .collect()
}

pub fn porous_at_all_scales(witnesses: &[PorosityWitness]) -> bool {
    witnesses.iter().all(|w| w.hole.is_some())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extensions {
    pub strings: Vec<BitString>,
    pub deepest_level: usize,
    pub truncated: bool,
}

/// Upper bound on new cells admitted at a single level.
const LEVEL_CELL_LIMIT: u64 = 1 << 20;

/// `N_t(σ)`: minimal `ρ ⪰ σ` within `2^c` cells of an empty cylinder `τ ⪰ σ` of the same length.
pub fn minimal_porous_extensions(
    e: &StagedOpenEnumeration,
    sigma: &BitString,
    c: u32,
    t: usize,
) -> Result<Extensions> {
    let class = e.stage_class(t)?;
    extensions_in(&class.without_degenerate().gaps(), sigma, c, 96)
}

/// `N(σ)` against a class given by its gaps (closures of maximal null regions).
pub fn extensions_in(
    gaps: &[Interval],
    sigma: &BitString,
    c: u32,
    depth_cap: usize,
) -> Result<Extensions> {
    let cyl = sigma.cylinder();
    let inside: Vec<Interval> = gaps
        .iter()
        .filter_map(|g| g.intersection(&cyl).filter(|x| !x.is_degenerate()))
        .collect();
    let mut out = Vec::new();
    let mut covered = IntervalSet::empty();
    let reach = BigInt::one() << c;
    let base_len = sigma.len();
    let mut level = base_len;
    loop {
        let scale = Rational::pow2(-(level as i64));
        let base = sigma.index() << (level - base_len);
        let top: BigInt = &base + (BigInt::one() << (level - base_len)) - 1;
        let mut ranges = Vec::new();
        let mut all_visible = true;
        for g in &inside {
            let lo = (&g.lo * &scale).ceil();
            let hi = (&g.hi * &scale).floor() - 1;
            if lo > hi {
                all_visible = false;
                continue;
            }
            let r0 = (&lo - &reach).max(base.clone());
            let r1 = (&hi + &reach).min(top.clone());
            ranges.push(Interval::new_unchecked(
                Rational::dyadic(r0, level as u32),
                Rational::dyadic(r1 + 1, level as u32),
            ));
        }
        let fresh = IntervalSet::canonicalize(ranges).intersection(&covered.complement());
        let mut admitted = 0u64;
        let mut new_cells = Vec::new();
        for piece in fresh.parts().iter().filter(|p| !p.is_degenerate()) {
            let j0 = (&piece.lo * &scale).floor();
            let j1 = (&piece.hi * &scale).ceil();
            let mut j = j0;
            while j < j1 {
                admitted += 1;
                if admitted > LEVEL_CELL_LIMIT {
                    return Err(Error::ParameterOutOfRange {
                        name: "cells per level",
                        value: admitted.to_string(),
                    });
                }
                let rho = BitString::from_index(&j, level);
                new_cells.push(rho.cylinder());
                out.push(rho);
                j += 1;
            }
        }
        if !new_cells.is_empty() {
            covered = covered.union(&IntervalSet::canonicalize(new_cells));
        }
        if all_visible || inside.is_empty() {
            return Ok(Extensions {
                strings: out,
                deepest_level: level,
                truncated: false,
            });
        }
        if level >= base_len + depth_cap {
            return Ok(Extensions {
                strings: out,
                deepest_level: level,
                truncated: true,
            });
        }
        level += 1;
    }
}

pub fn is_antichain(strings: &[BitString]) -> bool {
    let mut sorted: Vec<&BitString> = strings.iter().collect();
    sorted.sort();
    // Lexicographic order places each string directly before its extensions.
    sorted.windows(2).all(|w| !w[0].is_prefix_of(w[1]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelAntichain {
    pub n: usize,
    pub t: usize,
    pub strings: Vec<BitString>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PorosityLevel {
    pub n: usize,
    pub u_n: IntervalSet,
    /// `λ(U_n ∩ C)`.
    pub measure: Rational,
    pub bound: Rational,
    pub bound_ok: bool,
    pub max_antichain_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PorosityReport {
    pub c: u32,
    pub n_max: usize,
    pub stages_checked: usize,
    pub levels: Vec<PorosityLevel>,
    pub antichain_ok: bool,
    pub nesting_ok: bool,
    pub per_node_ok: bool,
    pub level_ok: bool,
    pub truncated: bool,
    /// Failing inequalities, if any.
    pub violations: Vec<Inequality>,
    pub violation_notes: Vec<String>,
}

impl PorosityReport {
    pub fn all_hold(&self) -> bool {
        self.antichain_ok && self.nesting_ok && self.per_node_ok && self.level_ok && !self.truncated
    }
}

fn meets(class: &IntervalSet, rho: &BitString) -> bool {
    let cyl = rho.cylinder();
    class.measure_in(&cyl.lo, &cyl.hi).is_positive()
}

/// Antichains `B_{n,t}` for `n ≤ n_max`, with per-node sums checked at each `σ`.
fn antichains_at(
    class: &IntervalSet,
    c: u32,
    n_max: usize,
    depth_cap: usize,
    factor: &Rational,
    report: &mut PorosityReport,
    t: usize,
) -> Result<Vec<Vec<BitString>>> {
    let gaps = class.without_degenerate().gaps();
    let mut levels = vec![vec![BitString::empty()]];
    for n in 1..=n_max {
        let mut next = Vec::new();
        for sigma in &levels[n - 1] {
            let ext = extensions_in(&gaps, sigma, c, depth_cap)?;
            report.truncated |= ext.truncated;
            if !is_antichain(&ext.strings) {
                report.antichain_ok = false;
                report
                    .violation_notes
                    .push(format!("N_{t}({sigma}) is not an antichain"));
            }
            let meeting: Rational = ext
                .strings
                .iter()
                .filter(|r| meets(class, r))
                .map(BitString::weight)
                .sum();
            let ineq = Inequality::le(
                format!("t={t} σ={sigma}: Σ meeting 2^-|ρ| ≤ (1−2^-(c+2))2^-|σ|"),
                meeting,
                factor * &sigma.weight(),
            );
            if !ineq.holds {
                report.per_node_ok = false;
                report.violations.push(ineq);
            }
            next.extend(ext.strings);
        }
        next.sort();
        next.dedup();
        levels.push(next);
    }
    Ok(levels)
}

/// Builds `B_{n,t}` for every `n ≤ n_max` and `t ≤ min(t_max, |E|)` and checks
/// the antichain, nesting, per-node and level bounds exactly.
pub fn porosity_test(
    e: &StagedOpenEnumeration,
    params: &PorosityParams,
    n_max: usize,
    t_max: usize,
) -> Result<PorosityReport> {
    if params.c == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "c",
            value: "0".into(),
        });
    }
    let stages = t_max.min(e.len()).min(params.stage_cap);
    let factor = params.shrink_factor();
    let final_class = e.stage_class(stages)?;
    let mut report = PorosityReport {
        c: params.c,
        n_max,
        stages_checked: stages + 1,
        levels: Vec::new(),
        antichain_ok: true,
        nesting_ok: true,
        per_node_ok: true,
        level_ok: true,
        truncated: false,
        violations: Vec::new(),
        violation_notes: Vec::new(),
    };
    let mut u_raw: Vec<Vec<Interval>> = vec![Vec::new(); n_max + 1];
    let mut sizes = vec![0usize; n_max + 1];
    let mut previous: Option<Vec<Vec<BitString>>> = None;
    for t in 0..=stages {
        let class = e.stage_class(t)?;
        let levels = antichains_at(
            &class,
            params.c,
            n_max,
            params.depth_cap,
            &factor,
            &mut report,
            t,
        )?;
        for (n, b) in levels.iter().enumerate() {
            sizes[n] = sizes[n].max(b.len());
            if !is_antichain(b) {
                report.antichain_ok = false;
                report
                    .violation_notes
                    .push(format!("B_{{{n},{t}}} is not an antichain"));
            }
            let bound = factor.pow(n as u32);
            let meeting: Rational = b
                .iter()
                .filter(|r| meets(&class, r))
                .map(BitString::weight)
                .sum();
            let cyl = IntervalSet::canonicalize(b.iter().map(BitString::cylinder).collect());
            for ineq in [
                Inequality::le(
                    format!("t={t} n={n}: Σ meeting 2^-|ρ| ≤ (1−2^-(c+2))^n"),
                    meeting,
                    bound.clone(),
                ),
                Inequality::le(
                    format!("t={t} n={n}: λ(C_final ∩ [B_n,t]) ≤ (1−2^-(c+2))^n"),
                    cyl.intersection(&final_class).measure(),
                    bound.clone(),
                ),
            ] {
                if !ineq.holds {
                    report.level_ok = false;
                    report.violations.push(ineq);
                }
            }
            u_raw[n].extend(cyl.parts().iter().cloned());
            if let Some(prev) = &previous {
                for rho in &prev[n] {
                    if !b.iter().any(|p| p.is_prefix_of(rho)) {
                        report.nesting_ok = false;
                        report.violation_notes.push(format!(
                            "{rho} ∈ B_{{{n},{}}} has no prefix in B_{{{n},{t}}}",
                            t - 1
                        ));
                    }
                }
            }
        }
        previous = Some(levels);
    }
    for (n, raw) in u_raw.into_iter().enumerate() {
        let u_n = IntervalSet::canonicalize(raw);
        let bound = factor.pow(n as u32);
        let measure = u_n.intersection(&final_class).measure();
        let bound_ok = measure <= bound;
        report.level_ok &= bound_ok;
        report.levels.push(PorosityLevel {
            n,
            u_n,
            measure,
            bound,
            bound_ok,
            max_antichain_size: sizes[n],
        });
    }
    Ok(report)
}

/// `B_{n,t}` for a single `(n, t)`.
pub fn level_antichain(
    e: &StagedOpenEnumeration,
    c: u32,
    n: usize,
    t: usize,
) -> Result<LevelAntichain> {
    let class = e.stage_class(t)?;
    let gaps = class.without_degenerate().gaps();
    let mut current = vec![BitString::empty()];
    for _ in 0..n {
        let mut next = Vec::new();
        for sigma in &current {
            next.extend(extensions_in(&gaps, sigma, c, 96)?.strings);
        }
        next.sort();
        next.dedup();
        current = next;
    }
    Ok(LevelAntichain {
        n,
        t,
        strings: current,
    })
}

/// For each `k`, the first level `n` with `λ(C ∩ U_n) ≤ 2^-k`.
pub fn subsequence_indices(
    report: &PorosityReport,
    class: &IntervalSet,
    k_max: u32,
) -> Vec<Option<usize>> {
    (0..=k_max)
        .map(|k| {
            let target = Rational::pow2(k as i64);
            report
                .levels
                .iter()
                .find(|l| l.u_n.intersection(class).measure() <= target)
                .map(|l| l.n)
        })
        .collect()
}

impl Default for PorosityParams {
    fn default() -> Self {
        PorosityParams::new(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    fn enumeration(holes: &[((i64, i64), (i64, i64))]) -> StagedOpenEnumeration {
        StagedOpenEnumeration::new(
            holes
                .iter()
                .map(|&(a, b)| Interval::new(q(a.0, a.1), q(b.0, b.1)).unwrap())
                .collect(),
        )
    }

    fn strings(v: &[&str]) -> Vec<BitString> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn nothing_removed_gives_nothing() {
        let e = enumeration(&[((1, 2), (3, 4))]);
        let n = minimal_porous_extensions(&e, &BitString::empty(), 1, 0).unwrap();
        assert!(n.strings.is_empty());
    }

    #[test]
    fn single_cylinder_hole() {
        let e = enumeration(&[((1, 2), (3, 4))]);
        let n = minimal_porous_extensions(&e, &BitString::empty(), 1, 1).unwrap();
        assert_eq!(n.strings, strings(&["00", "01", "10", "11"]));
        let n = minimal_porous_extensions(&e, &"10".parse().unwrap(), 1, 1).unwrap();
        assert_eq!(n.strings, strings(&["10"]));
    }

    #[test]
    fn single_hole_level_one_bound() {
        let e = enumeration(&[((1, 2), (3, 4))]);
        let r = porosity_test(&e, &PorosityParams::new(1), 1, 1).unwrap();
        assert!(r.all_hold(), "{:?}", r.violations);
        let c = e.final_class();
        assert_eq!(r.levels[1].u_n.intersection(&c).measure(), q(3, 4));
        assert_eq!(r.levels[1].bound, q(7, 8));
        assert_eq!(r.levels[0].u_n, IntervalSet::unit());
    }

    #[test]
    fn witnesses_near_zero() {
        let mut holes = Vec::new();
        for k in 0..=10 {
            let p = 1i64 << (k + 2);
            holes.push(Interval::new(q(3, p), q(4, p)).unwrap());
        }
        let c = crate::interval::complement_of_open(&holes);
        let scales: Vec<Rational> = (0..=10).map(Rational::pow2).collect();
        let w = porosity_witness(&c, &q(0, 1), &q(1, 8), &scales);
        assert!(porous_at_all_scales(&w));
        let w = porosity_witness(&IntervalSet::unit(), &q(1, 3), &q(1, 8), &scales);
        assert!(w.iter().all(|x| x.hole.is_none()));
    }

    #[test]
    fn antichain_detection() {
        assert!(is_antichain(&strings(&["00", "01", "1"])));
        assert!(!is_antichain(&strings(&["0", "01"])));
    }
}
