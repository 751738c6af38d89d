//! A uniformly continuous function built from an enumeration of closed intervals whose lower
//! pseudo-derivative at the leftmost uncovered point is very negative while the upper one is `0`.

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::numeric::Rational;
use crate::oracle::PointFunction;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    #[default]
    Reject,
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Flat,
    Spike,
}

/// One enumerated interval. A spike has height `2^{-n/2}`, stored through `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStage {
    pub interval: Interval,
    pub kind: StageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl PlanStage {
    /// `v²`, always rational.
    pub fn height_squared(&self) -> Rational {
        match self.n {
            Some(n) => Rational::pow2(n as i64),
            None => Rational::zero(),
        }
    }

    /// `v` when it is rational.
    pub fn height(&self) -> Option<Rational> {
        match self.n {
            Some(n) if n % 2 == 0 => Some(Rational::pow2((n / 2) as i64)),
            Some(_) => None,
            None => Some(Rational::zero()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikePlan {
    pub stages: Vec<PlanStage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaTrace {
    pub alpha: Vec<Rational>,
}

impl AlphaTrace {
    pub fn last(&self) -> &Rational {
        self.alpha.last().expect("trace starts at 0")
    }
}

/// Infimum of `[0, 1] ∖ ⋃ parts`.
pub fn leftmost_uncovered(covered: &IntervalSet) -> Rational {
    covered
        .complement()
        .leftmost()
        .cloned()
        .unwrap_or_else(Rational::one)
}

/// Least `n ≥ 0` such that `[lo, hi]` contains a positive multiple of `2^-n`.
pub fn dyadic_level(lo: &Rational, hi: &Rational) -> u32 {
    let mut n = 0;
    loop {
        let first = lo.ceil_dyadic(n).max(Rational::pow2(n as i64));
        if &first <= hi {
            return n;
        }
        n += 1;
    }
}

fn repair(intervals: &[Interval], policy: OverlapPolicy) -> Result<Vec<Interval>> {
    let mut out: Vec<Interval> = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        match policy {
            OverlapPolicy::Reject => {
                if let Some(j) = intervals[..i]
                    .iter()
                    .position(|p| p.overlap_length(&iv.lo, &iv.hi).is_positive())
                {
                    return Err(Error::OverlappingIntervals {
                        first: j,
                        second: i,
                    });
                }
                out.push(iv.clone());
            }
            OverlapPolicy::Split => {
                let earlier = IntervalSet::canonicalize(out.clone());
                let rest = IntervalSet::from_interval(iv.clone())
                    .intersection(&earlier.complement())
                    .without_degenerate();
                out.extend(rest.parts().iter().cloned());
            }
        }
    }
    Ok(out)
}

/// The spike plan, `α`-trace and resulting function for a stage list of closed intervals.
pub fn build_counterexample(
    intervals: &[Interval],
    policy: OverlapPolicy,
) -> Result<(SpikePlan, AlphaTrace, Counterexample)> {
    let list = repair(intervals, policy)?;
    let mut alpha = vec![Rational::zero()];
    let mut covered = IntervalSet::empty();
    let mut stages = Vec::with_capacity(list.len());
    let mut previous: Option<(Rational, Rational)> = None;
    for iv in list {
        covered = covered.union(&IntervalSet::from_interval(iv.clone()));
        let before = alpha.last().unwrap().clone();
        let after = leftmost_uncovered(&covered);
        if after > before {
            let (lo, hi) = previous
                .clone()
                .unwrap_or((Rational::zero(), after.clone()));
            stages.push(PlanStage {
                interval: iv,
                kind: StageKind::Spike,
                n: Some(dyadic_level(&lo, &hi)),
            });
            previous = Some((before, after.clone()));
        } else {
            stages.push(PlanStage {
                interval: iv,
                kind: StageKind::Flat,
                n: None,
            });
        }
        alpha.push(after);
    }
    let plan = SpikePlan { stages };
    let f = Counterexample::new(&plan);
    Ok((plan, AlphaTrace { alpha }, f))
}

/// Increases of `α_j = 1/3 − 3^{-(j+1)}` followed by intervals to the right of `1/3` that leave `α` unchanged.
pub fn default_enumeration(increases: usize) -> Vec<Interval> {
    let third = Rational::new(1, 3);
    let a = |j: usize| &third - Rational::new(1, 3).pow(j as u32 + 1);
    let mut out = Vec::new();
    let flats = [
        (Rational::new(1, 2), Rational::new(5, 8)),
        (Rational::new(3, 4), Rational::one()),
        (Rational::new(5, 8), Rational::new(3, 4)),
    ];
    for j in 0..increases {
        out.push(Interval::new(a(j), a(j + 1)).expect("increasing sequence in [0,1/3]"));
        if j % 7 == 3 {
            let (lo, hi) = flats[(j / 7) % flats.len()].clone();
            out.push(Interval::new(lo, hi).expect("valid"));
        }
    }
    out
}

/// The triangular-spike function; `0` off the spike intervals.
#[derive(Clone, Debug)]
pub struct Counterexample {
    spikes: Vec<(Interval, u32)>,
}

/// `2^{-n/2}` rounded down to a multiple of `2^-p`.
fn height_floor(n: u32, p: u32) -> Rational {
    let scale = BigInt::one() << (2 * p as usize);
    let num = (scale >> n as usize).sqrt();
    Rational::new(num, BigInt::one() << p as usize)
}

impl Counterexample {
    pub fn new(plan: &SpikePlan) -> Self {
        let mut spikes: Vec<(Interval, u32)> = plan
            .stages
            .iter()
            .filter_map(|s| s.n.map(|n| (s.interval.clone(), n)))
            .collect();
        spikes.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));
        Counterexample { spikes }
    }

    fn spike_at(&self, x: &Rational) -> Option<&(Interval, u32)> {
        let i = self.spikes.partition_point(|(iv, _)| &iv.hi <= x);
        self.spikes.get(i).filter(|(iv, _)| iv.contains_open(x))
    }

    /// `f(x) = v·w(x)` with `w` the unit triangle on the spike containing `x`; returns `(w, n)`.
    pub fn shape(&self, x: &Rational) -> Option<(Rational, u32)> {
        let (iv, n) = self.spike_at(x)?;
        let m = iv.midpoint();
        let half = iv.length() * Rational::new(1, 2);
        Some((Rational::one() - (x - &m).abs() / half, *n))
    }

    /// `f(x)²`, exact.
    pub fn value_squared(&self, x: &Rational) -> Rational {
        match self.shape(x) {
            Some((w, n)) => &w * &w * Rational::pow2(n as i64),
            None => Rational::zero(),
        }
    }

    pub fn spikes(&self) -> &[(Interval, u32)] {
        &self.spikes
    }
}

impl PointFunction for Counterexample {
    fn exact(&self, x: &Rational) -> Option<Rational> {
        if !x.in_unit() {
            return None;
        }
        match self.shape(x) {
            None => Some(Rational::zero()),
            Some((w, n)) if n % 2 == 0 => Some(w * Rational::pow2((n / 2) as i64)),
            Some(_) => None,
        }
    }

    fn sample(&self, x: &Rational, n: u32) -> Result<Rational> {
        if !x.in_unit() {
            return Err(Error::OutsideDomain { point: x.clone() });
        }
        match self.shape(x) {
            None => Ok(Rational::zero()),
            Some((w, k)) if k % 2 == 0 => Ok(w * Rational::pow2((k / 2) as i64)),
            Some((w, k)) => Ok(w * height_floor(k, n)),
        }
    }

    fn lipschitz(&self) -> Option<Rational> {
        let two = Rational::from(2);
        Some(
            self.spikes
                .iter()
                .map(|(iv, _)| &two / iv.length())
                .max()
                .unwrap_or_else(Rational::zero),
        )
    }

    fn feature_points(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        self.spikes
            .iter()
            .flat_map(|(iv, _)| [iv.lo.clone(), iv.midpoint(), iv.hi.clone()])
            .filter(|x| lo <= x && x <= hi)
            .collect()
    }
}

/// Slope certificate `S_f(x_k, q) ≤ −2^{k/2}`, compared through squares.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeCertificate {
    pub k: u32,
    pub b_k: Rational,
    pub x_k: Rational,
    pub q: Rational,
    pub spike_n: u32,
    /// `(f(x_k) − f(q))² / (q − x_k)²`.
    pub slope_squared: Rational,
    /// `2^k`.
    pub bound_squared: Rational,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSlopeWitness {
    pub k: u32,
    pub a: Rational,
    pub b: Rational,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeGroup {
    pub n: u32,
    pub count: usize,
    pub sup_norm_squared: Rational,
    pub disjoint: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub alpha: Rational,
    pub certificates: Vec<SlopeCertificate>,
    pub zero_slopes: Vec<ZeroSlopeWitness>,
    pub not_realized: Vec<u32>,
    pub groups: Vec<SpikeGroup>,
    pub trace_monotone: bool,
    pub trace_matches_intervals: bool,
    pub right_side_zero: bool,
}

impl FailureReport {
    pub fn all_hold(&self) -> bool {
        self.certificates.iter().all(|c| c.holds)
            && self.zero_slopes.iter().all(|w| w.holds)
            && self.groups.iter().all(|g| g.disjoint)
            && self.trace_monotone
            && self.trace_matches_intervals
            && self.right_side_zero
    }
}

fn certificate(
    plan: &SpikePlan,
    trace: &AlphaTrace,
    f: &Counterexample,
    k: u32,
) -> Option<SlopeCertificate> {
    let alpha = trace.last();
    let b_k = alpha.ceil_dyadic(k) - Rational::pow2(k as i64);
    let t = (0..plan.stages.len()).find(|&t| {
        plan.stages[t].kind == StageKind::Spike
            && trace.alpha[t] <= b_k
            && b_k <= trace.alpha[t + 1]
    })?;
    let s = (t + 1..plan.stages.len()).find(|&s| plan.stages[s].kind == StageKind::Spike)?;
    let spike = &plan.stages[s];
    let x_k = spike.interval.midpoint();
    let q = alpha.midpoint(&(&b_k + Rational::pow2(k as i64)));
    let d = &q - &x_k;
    let fq2 = f.value_squared(&q);
    let fx2 = f.value_squared(&x_k);
    let slope_squared = if fq2.is_zero() {
        fx2 / (&d * &d)
    } else {
        return None;
    };
    let bound_squared = Rational::pow2(-(k as i64));
    Some(SlopeCertificate {
        k,
        holds: slope_squared >= bound_squared && d.is_positive() && &q > alpha,
        b_k,
        x_k,
        q,
        spike_n: spike.n.unwrap_or(0),
        slope_squared,
        bound_squared,
    })
}

fn zero_witness(trace: &AlphaTrace, f: &Counterexample, k: u32) -> Option<ZeroSlopeWitness> {
    let alpha = trace.last();
    let width = Rational::pow2(k as i64);
    let a = trace
        .alpha
        .iter().find(|a| *a < alpha && (alpha - *a) < (&width * Rational::new(1, 2)))?
        .clone();
    let b = alpha + &width * Rational::new(1, 4);
    let holds =
        f.value_squared(&a).is_zero() && f.value_squared(&b).is_zero() && &a < alpha && alpha < &b;
    Some(ZeroSlopeWitness { k, a, b, holds })
}

/// Certificates for every even `k ≤ k_max`, zero-slope witnesses straddling `α`, and audits of the plan.
pub fn verify_denjoy_failure(
    plan: &SpikePlan,
    trace: &AlphaTrace,
    f: &Counterexample,
    k_max: u32,
) -> FailureReport {
    let alpha = trace.last().clone();
    let ks: Vec<u32> = (1..=k_max).filter(|k| k % 2 == 0).collect();
    let results: Vec<(u32, Option<SlopeCertificate>, Option<ZeroSlopeWitness>)> = ks
        .par_iter()
        .map(|&k| (k, certificate(plan, trace, f, k), zero_witness(trace, f, k)))
        .collect();
    let mut certificates = Vec::new();
    let mut zero_slopes = Vec::new();
    let mut not_realized = Vec::new();
    for (k, c, z) in results {
        match c {
            Some(c) => certificates.push(c),
            None => not_realized.push(k),
        }
        zero_slopes.extend(z);
    }
    let mut by_n: std::collections::BTreeMap<u32, Vec<Interval>> = Default::default();
    for (iv, n) in f.spikes() {
        by_n.entry(*n).or_default().push(iv.clone());
    }
    let groups = by_n
        .into_iter()
        .map(|(n, ivs)| SpikeGroup {
            n,
            count: ivs.len(),
            sup_norm_squared: Rational::pow2(n as i64),
            disjoint: ivs.iter().enumerate().all(|(i, a)| {
                ivs[i + 1..]
                    .iter()
                    .all(|b| !a.overlap_length(&b.lo, &b.hi).is_positive())
            }),
        })
        .collect();
    let trace_monotone = trace.alpha.windows(2).all(|w| w[0] <= w[1]);
    let mut covered = IntervalSet::empty();
    let mut trace_matches_intervals =
        trace.alpha.len() == plan.stages.len() + 1 && trace.alpha[0].is_zero();
    for (s, st) in plan.stages.iter().enumerate() {
        covered = covered.union(&IntervalSet::from_interval(st.interval.clone()));
        if trace_matches_intervals && leftmost_uncovered(&covered) != trace.alpha[s + 1] {
            trace_matches_intervals = false;
        }
    }
    let right_side_zero = f.spikes().iter().all(|(iv, _)| iv.hi <= alpha);
    FailureReport {
        alpha,
        certificates,
        zero_slopes,
        not_realized,
        groups,
        trace_monotone,
        trace_matches_intervals,
        right_side_zero,
    }
}
