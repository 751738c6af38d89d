use num_traits::ToPrimitive;
use proptest::prelude::*;

use randlab_core::counterexample::{
    build_counterexample, default_enumeration, dyadic_level, leftmost_uncovered,
    verify_denjoy_failure, OverlapPolicy, StageKind,
};
use randlab_core::numeric::q;
use randlab_core::oracle::PointFunction;
use randlab_core::{Error, Interval, IntervalSet, Rational};

fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
    Interval::new(q(a.0, a.1), q(b.0, b.1)).unwrap()
}

/// Leftmost point not covered, by repeatedly jumping over a closed interval that holds it.
fn walk_alpha(intervals: &[Interval]) -> Rational {
    let mut a = Rational::zero();
    loop {
        match intervals.iter().find(|i| i.lo <= a && a < i.hi) {
            Some(i) => a = i.hi.clone(),
            None => return a,
        }
    }
}

/// Least `n` for which some `k/2^n` with `k ≥ 1` lies in `[lo, hi]`, by scanning `k`.
fn scan_level(lo: &Rational, hi: &Rational) -> u32 {
    for n in 0..64u32 {
        let den = 1i64 << n;
        let first = (lo * Rational::from(den)).ceil().to_i64().unwrap().max(1);
        for k in first..first + 2 {
            let m = q(k, den);
            if lo <= &m && &m <= hi {
                return n;
            }
        }
    }
    unreachable!()
}

#[test]
fn single_interval_spike() {
    let (plan, trace, f) =
        build_counterexample(&[iv((0, 1), (1, 2))], OverlapPolicy::Reject).unwrap();
    assert_eq!(plan.stages.len(), 1);
    assert_eq!(plan.stages[0].kind, StageKind::Spike);
    assert_eq!(plan.stages[0].n, Some(1));
    assert_eq!(plan.stages[0].height_squared(), q(1, 2));
    assert_eq!(plan.stages[0].height(), None);
    assert_eq!(trace.alpha, vec![q(0, 1), q(1, 2)]);
    assert_eq!(f.value_squared(&q(1, 4)), q(1, 2));
    assert_eq!(f.exact(&q(1, 4)), None);
    assert_eq!(f.exact(&q(0, 1)), Some(q(0, 1)));
    assert_eq!(f.exact(&q(1, 2)), Some(q(0, 1)));
    let s = f.sample(&q(1, 4), 20).unwrap();
    assert!(&s * &s <= q(1, 2));
    assert!((&s - q(1, 1 << 20)).pow(2) <= q(1, 2) || s.is_zero());
}

#[test]
fn flat_stage_leaves_f_zero() {
    let list = [iv((1, 2), (3, 4)), iv((0, 1), (1, 4))];
    let (plan, trace, f) = build_counterexample(&list, OverlapPolicy::Reject).unwrap();
    assert_eq!(plan.stages[0].kind, StageKind::Flat);
    assert_eq!(trace.alpha, vec![q(0, 1), q(0, 1), q(1, 4)]);
    for k in 0..=8 {
        let x = q(1, 2) + q(k, 32);
        assert_eq!(f.exact(&x), Some(q(0, 1)));
    }
    assert_eq!(plan.stages[1].height(), Some(q(1, 2)));
    assert_eq!(f.exact(&q(1, 8)), Some(q(1, 2)));
}

#[test]
fn flat_only_plan_has_no_certificates() {
    let list = [iv((1, 2), (1, 1)), iv((1, 4), (3, 8))];
    let (plan, trace, f) = build_counterexample(&list, OverlapPolicy::Reject).unwrap();
    assert!(plan.stages.iter().all(|s| s.kind == StageKind::Flat));
    assert_eq!(trace.last(), &q(0, 1));
    let rep = verify_denjoy_failure(&plan, &trace, &f, 8);
    assert!(rep.certificates.is_empty());
    assert_eq!(rep.not_realized, vec![2, 4, 6, 8]);
    for k in 0..=64 {
        assert_eq!(f.exact(&q(k, 64)), Some(q(0, 1)));
    }
}

#[test]
fn overlapping_intervals() {
    let list = [iv((0, 1), (1, 2)), iv((1, 4), (3, 4))];
    assert!(matches!(
        build_counterexample(&list, OverlapPolicy::Reject),
        Err(Error::OverlappingIntervals {
            first: 0,
            second: 1
        })
    ));
    let (plan, trace, _) = build_counterexample(&list, OverlapPolicy::Split).unwrap();
    assert_eq!(plan.stages[1].interval, iv((1, 2), (3, 4)));
    assert_eq!(trace.last(), &q(3, 4));
    // Touching endpoints are allowed.
    assert!(build_counterexample(
        &[iv((0, 1), (1, 2)), iv((1, 2), (1, 1))],
        OverlapPolicy::Reject
    )
    .is_ok());
}

#[test]
fn level_rule_examples() {
    assert_eq!(dyadic_level(&q(0, 1), &q(1, 2)), 1);
    assert_eq!(dyadic_level(&q(0, 1), &q(1, 1)), 0);
    assert_eq!(dyadic_level(&q(1, 3), &q(3, 8)), 3);
    assert_eq!(dyadic_level(&q(1, 2), &q(1, 2)), 1);
    for (lo, hi) in [(q(1, 5), q(1, 4)), (q(0, 1), q(1, 100)), (q(7, 9), q(4, 5))] {
        assert_eq!(dyadic_level(&lo, &hi), scan_level(&lo, &hi));
    }
}

#[test]
fn even_spikes_give_exact_certificates() {
    // α: 0 → 3/10 → 8/25 → 33/100 → 67/200; each level is read off the previous increase.
    let list = [
        iv((0, 1), (3, 10)),
        iv((3, 10), (8, 25)),
        iv((8, 25), (33, 100)),
        iv((33, 100), (67, 200)),
    ];
    let (plan, trace, f) = build_counterexample(&list, OverlapPolicy::Reject).unwrap();
    let levels: Vec<u32> = plan.stages.iter().map(|s| s.n.unwrap()).collect();
    assert_eq!(levels, vec![2, 2, 4, 6]);
    let rep = verify_denjoy_failure(&plan, &trace, &f, 6);
    assert!(rep.all_hold());
    let ks: Vec<u32> = rep.certificates.iter().map(|c| c.k).collect();
    assert_eq!(ks, vec![2, 4, 6]);
    for c in &rep.certificates {
        // (f(x_k) − f(q))/(q − x_k) ≤ −2^{k/2}, recomputed with exact heights.
        let fx = f.exact(&c.x_k).unwrap();
        let fq = f.exact(&c.q).unwrap();
        let s = (fq - fx) / (&c.q - &c.x_k);
        assert!(s <= -Rational::from(1i64 << (c.k / 2)), "k = {}", c.k);
        assert!(&c.q - &c.b_k < Rational::pow2(c.k as i64));
    }
}

#[test]
fn default_enumeration_certificates() {
    let list = default_enumeration(16);
    let (plan, trace, f) = build_counterexample(&list, OverlapPolicy::Reject).unwrap();
    assert_eq!(trace.last(), &walk_alpha(&list));
    let rep = verify_denjoy_failure(&plan, &trace, &f, 16);
    assert!(rep.all_hold());
    assert!(rep.certificates.len() >= 4);
    for c in &rep.certificates {
        let d = &c.q - &c.x_k;
        assert_eq!(c.slope_squared, f.value_squared(&c.x_k) / (&d * &d));
        assert_eq!(c.bound_squared, Rational::from(1i64 << c.k));
        assert!(c.q > rep.alpha);
    }
    for w in &rep.zero_slopes {
        assert_eq!(f.exact(&w.a), Some(q(0, 1)));
        assert_eq!(f.exact(&w.b), Some(q(0, 1)));
        assert!(w.a < rep.alpha && rep.alpha < w.b);
    }
    // Sup norms 2^{-n/2} per group; the tail after level m is bounded by a geometric series.
    let mut prev = 0;
    for g in &rep.groups {
        assert!(g.n >= prev);
        prev = g.n;
        assert_eq!(g.sup_norm_squared, Rational::pow2(g.n as i64));
    }
    let total_sq: Rational = rep
        .groups
        .iter()
        .map(|g| &g.sup_norm_squared * Rational::from(g.count as i64))
        .sum();
    assert!(total_sq <= q(4, 1));
}

fn dyadic_list() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((0i64..32, 1i64..6), 1..10).prop_map(|v| {
        v.into_iter()
            .map(|(a, w)| (a, (a + w).min(32)))
            .filter(|(a, b)| a < b)
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_follows_the_stage_rule(raw in dyadic_list()) {
        prop_assume!(!raw.is_empty());
        let list: Vec<Interval> = raw.iter().map(|&(a, b)| iv((a, 32), (b, 32))).collect();
        let (plan, trace, f) = build_counterexample(&list, OverlapPolicy::Split).unwrap();
        let repaired: Vec<Interval> = plan.stages.iter().map(|s| s.interval.clone()).collect();
        prop_assert!(IntervalSet::canonicalize(repaired.clone()).equal_up_to_null_points(&IntervalSet::canonicalize(list.clone())));
        let mut prev_increase: Option<(Rational, Rational)> = None;
        for (s, st) in plan.stages.iter().enumerate() {
            let alpha = walk_alpha(&repaired[..=s]);
            prop_assert_eq!(&trace.alpha[s + 1], &alpha);
            prop_assert_eq!(&alpha, &leftmost_uncovered(&IntervalSet::canonicalize(repaired[..=s].to_vec())));
            prop_assert!(trace.alpha[s] <= trace.alpha[s + 1]);
            let increased = trace.alpha[s + 1] > trace.alpha[s];
            prop_assert_eq!(st.kind == StageKind::Spike, increased);
            if increased {
                let (lo, hi) = prev_increase.clone().unwrap_or((Rational::zero(), alpha.clone()));
                prop_assert_eq!(st.n, Some(scan_level(&lo, &hi)));
                prev_increase = Some((trace.alpha[s].clone(), alpha));
            }
        }
        let rep = verify_denjoy_failure(&plan, &trace, &f, 4);
        prop_assert!(rep.trace_monotone && rep.trace_matches_intervals);
    }

    #[test]
    fn spikes_are_exact_triangles(raw in dyadic_list(), t in 0i64..=64) {
        prop_assume!(!raw.is_empty());
        let list: Vec<Interval> = raw.iter().map(|&(a, b)| iv((a, 32), (b, 32))).collect();
        let (plan, _, f) = build_counterexample(&list, OverlapPolicy::Split).unwrap();
        for st in &plan.stages {
            let i = &st.interval;
            let x = &i.lo + i.length() * q(t, 64);
            let v2 = f.value_squared(&x);
            match st.kind {
                StageKind::Flat => prop_assert!(v2.is_zero()),
                StageKind::Spike => {
                    // w(x) = 1 − |x − m|/(|I|/2)
                    let m = i.midpoint();
                    let w = Rational::one() - (&x - &m).abs() / (i.length() * q(1, 2));
                    prop_assert_eq!(&v2, &(&w * &w * st.height_squared()));
                    if let Some(v) = st.height() {
                        let left = f.exact(&(&i.lo + i.length() * q(1, 4))).unwrap();
                        prop_assert_eq!(left / (i.length() * q(1, 4)), q(2, 1) * &v / i.length());
                    }
                }
            }
            prop_assert!(f.value_squared(&i.lo).is_zero() && f.value_squared(&i.hi).is_zero());
        }
        let lip = f.lipschitz().unwrap();
        let steepest = plan
            .stages
            .iter()
            .filter(|s| s.kind == StageKind::Spike)
            .map(|s| q(2, 1) / s.interval.length())
            .max()
            .unwrap_or_else(Rational::zero);
        prop_assert_eq!(lip, steepest);
    }
}
