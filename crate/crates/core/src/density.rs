//! Window densities, finite-family density estimates and the low-density covering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::numeric::Rational;
use crate::report::{Inequality, Relation};

/// `λ([z−γ, z+δ] ∩ C) / (γ+δ)`, with the window clipped to `[0, 1]`.
pub fn window_density(
    c: &IntervalSet,
    z: &Rational,
    gamma: &Rational,
    delta: &Rational,
) -> Result<Rational> {
    window(z, gamma, delta).and_then(|w| c.relative_measure(&w))
}

fn window(z: &Rational, gamma: &Rational, delta: &Rational) -> Result<Interval> {
    if !gamma.is_positive() || !delta.is_positive() {
        return Err(Error::NonPositiveWindow);
    }
    if !z.in_unit() {
        return Err(Error::OutOfUnitInterval { value: z.clone() });
    }
    Interval::clipped(&(z - gamma), &(z + delta)).ok_or(Error::ZeroLengthWindow)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    General,
    Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub estimate: Rational,
    pub witness: Interval,
    pub windows_examined: usize,
}

/// Exact minimum of the window density over a finite family of windows around `z`.
///
/// General mode: both offsets range over `2^-k` (`1 ≤ k ≤ depth`), distances to
/// endpoints of `C`, and distances to the ends of dyadic intervals of depth
/// `≤ depth` containing `z`, all capped at `1/2`. Dyadic mode: every basic dyadic
/// interval of depth `1..=depth` that contains `z`.
pub fn lower_density_estimate(
    c: &IntervalSet,
    z: &Rational,
    depth: u32,
    mode: DensityMode,
) -> Result<DensityEstimate> {
    if !z.in_unit() {
        return Err(Error::OutOfUnitInterval { value: z.clone() });
    }
    if depth == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "scale_depth",
            value: "0".into(),
        });
    }
    let windows = match mode {
        DensityMode::General => general_windows(c, z, depth),
        DensityMode::Dyadic => dyadic_windows(z, depth),
    };
    let mut best: Option<(Rational, Interval)> = None;
    let count = windows.len();
    for w in windows {
        let d = c.relative_measure(&w)?;
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            best = Some((d, w));
        }
    }
    let (estimate, witness) = best.expect("window family is never empty");
    Ok(DensityEstimate {
        estimate,
        witness,
        windows_examined: count,
    })
}

fn general_windows(c: &IntervalSet, z: &Rational, depth: u32) -> Vec<Interval> {
    let half = Rational::new(1, 2);
    let mut left: Vec<Rational> = (1..=depth).map(|k| Rational::pow2(k as i64)).collect();
    let mut right = left.clone();
    let mut anchors = c.endpoints();
    for k in 1..=depth {
        anchors.push(z.floor_dyadic(k));
        anchors.push(z.ceil_dyadic(k));
    }
    for e in anchors {
        let d = (&e - z).abs();
        if d.is_zero() || d > half {
            continue;
        }
        if &e < z {
            left.push(d);
        } else {
            right.push(d);
        }
    }
    for v in [&mut left, &mut right] {
        v.sort();
        v.dedup();
    }
    let mut out = Vec::with_capacity(left.len() * right.len());
    for g in &left {
        for d in &right {
            if let Some(w) = Interval::clipped(&(z - g), &(z + d)) {
                if !w.is_degenerate() {
                    out.push(w);
                }
            }
        }
    }
    out
}

fn dyadic_windows(z: &Rational, depth: u32) -> Vec<Interval> {
    let mut out = Vec::new();
    for k in 1..=depth {
        let w = Rational::pow2(k as i64);
        let lo = z.floor_dyadic(k);
        if lo.is_positive() && &lo == z {
            out.push(Interval::new_unchecked(&lo - &w, lo.clone()));
        }
        if lo < Rational::one() {
            out.push(Interval::new_unchecked(lo.clone(), &lo + &w));
        }
    }
    out
}

/// The maximal fat intervals and the chain selected from them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatCover {
    pub epsilon: Rational,
    pub fat_intervals: Vec<Interval>,
    pub chain: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub u: IntervalSet,
    pub cover: FatCover,
    pub bound1: Inequality,
    pub bound2: Inequality,
    pub bound1_ok: bool,
    pub bound2_ok: bool,
    /// Chain structure: coverage, separation of members two apart, per-parity sums.
    pub structure: Vec<Inequality>,
}

impl CoveringReport {
    pub fn all_hold(&self) -> bool {
        self.bound1_ok && self.bound2_ok && self.structure.iter().all(|i| i.holds)
    }
}

/// Points of `[0,1]` with an interval around them in which `C` has density below `ε`,
/// together with the fat-interval chain and both measure bounds.
pub fn low_density_open_set(c: &IntervalSet, eps: &Rational) -> Result<CoveringReport> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::ParameterOutOfRange {
            name: "epsilon",
            value: eps.to_string(),
        });
    }
    let holes = c.gaps();
    let mirror = reflect(c);
    let mut u_parts = Vec::new();
    let mut fat = Vec::new();
    for h in &holes {
        let mh = Interval::new_unchecked(Rational::one() - &h.hi, Rational::one() - &h.lo);
        let a = left_reach(c, &h.hi, eps, true);
        let b = Rational::one() - left_reach(&mirror, &mh.hi, eps, true);
        u_parts.push(Interval::new_unchecked(a, h.hi.clone()));
        u_parts.push(Interval::new_unchecked(h.lo.clone(), b));
        let a2 = left_reach(c, &h.hi, eps, false);
        let b2 = Rational::one() - left_reach(&mirror, &mh.hi, eps, false);
        fat.push(Interval::new_unchecked(a2, h.hi.clone()));
        fat.push(Interval::new_unchecked(h.lo.clone(), b2));
    }
    let u = IntervalSet::canonicalize(u_parts);
    let fat = maximal(fat);
    let chain = build_chain(&fat);

    let one = Rational::one();
    let lam_c = c.measure();
    let bound1 = Inequality::le(
        "λ(C∩U) ≤ 2ε",
        u.intersection(c).measure(),
        eps * Rational::from(2),
    );
    let bound2 = Inequality::le(
        "λ(U) ≤ 2(1−λC)/(1−ε)",
        u.measure(),
        Rational::from(2) * (&one - &lam_c) / (&one - eps),
    );

    let mut structure = Vec::new();
    let chain_set = IntervalSet::canonicalize(chain.clone());
    structure.push(Inequality::eq(
        "λ(U ∖ chain) = 0",
        u.measure() - u.intersection(&chain_set).measure(),
        Rational::zero(),
    ));
    let fat_set = IntervalSet::canonicalize(fat.clone());
    structure.push(Inequality::eq(
        "λ(fat ∖ chain) = 0",
        fat_set.measure() - fat_set.intersection(&chain_set).measure(),
        Rational::zero(),
    ));
    for n in 0..chain.len().saturating_sub(2) {
        structure.push(Inequality::le(
            format!("sup I_{n} ≤ inf I_{}", n + 2),
            chain[n].hi.clone(),
            chain[n + 2].lo.clone(),
        ));
    }
    for parity in 0..2 {
        let members: Vec<&Interval> = chain.iter().skip(parity).step_by(2).collect();
        let in_c: Rational = members.iter().map(|i| c.measure_in(&i.lo, &i.hi)).sum();
        let total: Rational = members.iter().map(|i| i.length()).sum();
        let outside = &total - &in_c;
        structure.push(Inequality::le(
            format!("parity {parity}: λ(C∩⋃I) ≤ ε"),
            in_c,
            eps.clone(),
        ));
        structure.push(Inequality::new(
            format!("parity {parity}: (1−ε)Σ|I| ≤ λ(⋃I∖C)"),
            (&one - eps) * &total,
            Relation::Le,
            outside,
        ));
    }

    Ok(CoveringReport {
        bound1_ok: bound1.holds,
        bound2_ok: bound2.holds,
        u,
        cover: FatCover {
            epsilon: eps.clone(),
            fat_intervals: fat,
            chain,
        },
        bound1,
        bound2,
        structure,
    })
}

fn reflect(c: &IntervalSet) -> IntervalSet {
    let one = Rational::one();
    IntervalSet::canonicalize(
        c.parts()
            .iter()
            .map(|p| Interval::new_unchecked(&one - &p.hi, &one - &p.lo))
            .collect(),
    )
}

/// Infimum of `x ∈ [0, b)` with `λ(C ∩ [x, b]) < ε(b − x)` (`≤` when `strict` is false).
fn left_reach(c: &IntervalSet, b: &Rational, eps: &Rational, strict: bool) -> Rational {
    let one = Rational::one();
    let mut breaks: Vec<Rational> = vec![Rational::zero(), b.clone()];
    breaks.extend(c.endpoints().into_iter().filter(|e| e < b));
    breaks.sort();
    breaks.dedup();
    for w in breaks.windows(2) {
        let (p, qq) = (&w[0], &w[1]);
        let m = c.measure_in(qq, b);
        let mid = p.midpoint(qq);
        if c.contains(&mid) {
            let x = (qq + &m - eps * b) / (&one - eps);
            let hit = if strict { &x < qq } else { &x <= qq };
            if hit {
                return x.max(p.clone());
            }
        } else {
            let x = b - &m / eps;
            let hit = if strict { &x > p } else { &x >= p };
            if hit {
                return p.clone();
            }
        }
    }
    b.clone()
}

fn maximal(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort();
    v.dedup();
    let keep: Vec<bool> = v
        .iter()
        .enumerate()
        .map(|(i, a)| {
            !v.iter()
                .enumerate()
                .any(|(j, b)| i != j && b.contains_interval(a))
        })
        .collect();
    v.into_iter()
        .zip(keep)
        .filter_map(|(i, k)| k.then_some(i))
        .collect()
}

/// Leftmost start; then the rightmost later interval meeting the current one,
/// else the leftmost later interval.
fn build_chain(fat: &[Interval]) -> Vec<Interval> {
    let mut chain: Vec<Interval> = Vec::new();
    let Some(first) = fat.first() else {
        return chain;
    };
    chain.push(first.clone());
    loop {
        let cur = chain.last().unwrap();
        let later: Vec<&Interval> = fat.iter().filter(|j| j.lo > cur.lo).collect();
        if later.is_empty() {
            break;
        }
        let next = later
            .iter()
            .filter(|j| j.lo <= cur.hi)
            .max_by(|a, b| a.lo.cmp(&b.lo))
            .or_else(|| later.iter().min_by(|a, b| a.lo.cmp(&b.lo)))
            .unwrap();
        chain.push((*next).clone());
    }
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    fn set(pairs: &[((i64, i64), (i64, i64))]) -> IntervalSet {
        IntervalSet::from_pairs(
            pairs
                .iter()
                .map(|&(a, b)| (q(a.0, a.1), q(b.0, b.1)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn window_examples() {
        let c = set(&[((0, 1), (1, 4)), ((1, 2), (1, 1))]);
        assert_eq!(
            window_density(&IntervalSet::unit(), &q(1, 3), &q(1, 8), &q(1, 4)).unwrap(),
            q(1, 1)
        );
        assert_eq!(
            window_density(&c, &q(1, 2), &q(1, 4), &q(1, 4)).unwrap(),
            q(1, 2)
        );
        assert_eq!(
            window_density(&IntervalSet::empty(), &q(1, 3), &q(1, 8), &q(1, 4)).unwrap(),
            q(0, 1)
        );
        assert!(window_density(&c, &q(1, 2), &q(0, 1), &q(1, 4)).is_err());
    }

    #[test]
    fn clipped_window_uses_clipped_length() {
        let c = set(&[((0, 1), (1, 8))]);
        assert_eq!(
            window_density(&c, &q(0, 1), &q(1, 2), &q(1, 4)).unwrap(),
            q(1, 2)
        );
    }

    #[test]
    fn dyadic_estimate_at_hole_end() {
        let c = set(&[((0, 1), (1, 4)), ((1, 2), (1, 1))]);
        let e = lower_density_estimate(&c, &q(1, 2), 3, DensityMode::Dyadic).unwrap();
        assert_eq!(e.estimate, q(0, 1));
        assert_eq!(e.witness, Interval::new(q(1, 4), q(1, 2)).unwrap());
    }

    #[test]
    fn general_estimate_far_from_holes() {
        let c = set(&[((0, 1), (7, 8))]);
        let e = lower_density_estimate(&c, &q(1, 5), 6, DensityMode::General).unwrap();
        assert_eq!(e.estimate, q(1, 1));
    }

    #[test]
    fn general_estimate_skews_into_hole() {
        let c = set(&[((0, 1), (1, 4)), ((3, 8), (1, 1))]);
        let e = lower_density_estimate(&c, &q(3, 8), 4, DensityMode::General).unwrap();
        assert_eq!(e.estimate, q(1, 3));
        assert!(&q(3, 8) - &e.witness.lo > &e.witness.hi - &q(3, 8));
    }

    #[test]
    fn covering_trivial_cases() {
        let r = low_density_open_set(&IntervalSet::unit(), &q(1, 2)).unwrap();
        assert!(r.u.is_empty() && r.all_hold());
        let r = low_density_open_set(&IntervalSet::empty(), &q(1, 2)).unwrap();
        assert_eq!(r.u, IntervalSet::unit());
        assert!(r.all_hold());
        assert!(low_density_open_set(&IntervalSet::unit(), &q(1, 1)).is_err());
    }

    #[test]
    fn covering_single_hole() {
        let c = set(&[((0, 1), (1, 4)), ((1, 2), (1, 1))]);
        let r = low_density_open_set(&c, &q(1, 2)).unwrap();
        // [x, 1/2] with x < 1/4 has density (1/4 − x)/(1/2 − x) < 1/2 for every x ≥ 0.
        assert_eq!(r.u, set(&[((0, 1), (3, 4))]));
        assert!(r.all_hold());
    }
}
