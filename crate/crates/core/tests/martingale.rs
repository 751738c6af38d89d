use std::sync::Arc;

use proptest::prelude::*;

use randlab_core::martingale::{
    anti_debt_strategy, check_fairness, combine_scaled, condition_extends, diagonalize_against,
    force, martingale_to_function, savings_extension, slope_martingale, AntiDebtMode, ApproxMode,
    Capped, Condition, Constant, FnMartingale, ForcingStep, Martingale, MartingaleRef,
    TableMartingale,
};
use randlab_core::numeric::q;
use randlab_core::oracle::{Oracle, PiecewiseLinear, PointFunction, Polynomial};
use randlab_core::{BitString, Error, Rational};

fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

/// Every string of length `≤ n`, built from counting in machine integers.
fn all_strings(n: usize) -> Vec<BitString> {
    let mut out = Vec::new();
    for len in 0..=n {
        for j in 0..1u64 << len {
            out.push(BitString::from_bits(
                (0..len).map(|i| (j >> (len - 1 - i)) & 1 == 1).collect(),
            ));
        }
    }
    out
}

/// `0.τ` as `k/2^n`.
fn left_end(s: &BitString) -> Rational {
    let k = s.bits().iter().fold(0i64, |acc, &b| 2 * acc + b as i64);
    q(k, 1 << s.len())
}

#[test]
fn slope_of_identity_is_one() {
    let g: Oracle = Arc::new(Polynomial::identity());
    let m = slope_martingale(g, 6).unwrap();
    for s in all_strings(8) {
        assert_eq!(m.value(&s), q(1, 1), "{s}");
    }
}

#[test]
fn slope_of_square() {
    let g: Oracle = Arc::new(Polynomial::new(vec![q(0, 1), q(0, 1), q(1, 1)]));
    let m = slope_martingale(g, 5).unwrap();
    for s in all_strings(8) {
        // ((a+w)^2 − a^2)/w = 2a + w
        let expect = q(2, 1) * left_end(&s) + Rational::pow2(s.len() as i64);
        assert_eq!(m.value(&s), expect, "{s}");
    }
    assert!(check_fairness(&m, &BitString::empty(), 8).fair());
}

#[test]
fn slope_of_nonmonotone_function_is_fair_but_negative() {
    let g: Oracle = Arc::new(
        PiecewiseLinear::new(vec![
            (q(0, 1), q(0, 1)),
            (q(1, 2), q(1, 1)),
            (q(1, 1), q(0, 1)),
        ])
        .unwrap(),
    );
    let m = slope_martingale(g, 4).unwrap();
    assert_eq!(m.value(&bs("0")), q(2, 1));
    assert_eq!(m.value(&bs("1")), q(-2, 1));
    assert_eq!(m.value(&BitString::empty()), q(0, 1));
    let rep = check_fairness(&m, &BitString::empty(), 7);
    assert!(rep.fair());
    assert!(!rep.negative.is_empty());
}

#[test]
fn slope_rejects_inexact_grid() {
    let g: Oracle =
        Arc::new(PiecewiseLinear::new(vec![(q(1, 4), q(0, 1)), (q(1, 1), q(1, 1))]).unwrap());
    assert!(matches!(
        slope_martingale(g, 3),
        Err(Error::OutsideDomain { .. })
    ));
}

#[test]
fn constant_one_integrates_to_offset_identity() {
    let m: MartingaleRef = Arc::new(Constant(q(1, 1)));
    for root in ["", "1", "01"] {
        let root = bs(root);
        let f = martingale_to_function(m.clone(), &root, 6).unwrap();
        let lo = left_end(&root);
        for k in 0..=32 {
            let x = &lo + q(k, 32) * root.weight();
            assert_eq!(f.exact(&x).unwrap(), &x - &lo);
        }
    }
}

#[test]
fn one_bet_integrates_to_ramp() {
    let m: MartingaleRef =
        Arc::new(TableMartingale::from_leaves(1, vec![q(2, 1), q(0, 1)]).unwrap());
    let f = martingale_to_function(m, &BitString::empty(), 4).unwrap();
    for k in 0..=16 {
        let x = q(k, 16);
        let expect = if k <= 8 { q(2, 1) * &x } else { q(1, 1) };
        assert_eq!(f.exact(&x).unwrap(), expect);
    }
}

#[test]
fn negative_martingale_cannot_be_integrated() {
    let m: MartingaleRef =
        Arc::new(TableMartingale::from_leaves(1, vec![q(3, 1), q(-1, 1)]).unwrap());
    assert!(matches!(
        martingale_to_function(m, &BitString::empty(), 3),
        Err(Error::NegativeMartingale { .. })
    ));
}

fn leaves_strategy(depth: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((0i64..40, 1i64..9), 1 << depth)
        .prop_map(|v| v.into_iter().map(|(a, b)| q(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integrate_then_differentiate(leaves in leaves_strategy(4), root_bits in prop::collection::vec(any::<bool>(), 0..3)) {
        let table = TableMartingale::from_leaves(4, leaves.clone()).unwrap();
        let m: MartingaleRef = Arc::new(table);
        let root = BitString::from_bits(root_bits);
        let f = martingale_to_function(m.clone(), &root, 6).unwrap();
        let g: Oracle = Arc::new(f);
        let lo = left_end(&root);
        prop_assert_eq!(g.exact(&lo).unwrap(), Rational::zero());
        for rho in all_strings(6).into_iter().filter(|s| root.is_prefix_of(s)) {
            let a = left_end(&rho);
            let b = &a + rho.weight();
            let slope = (g.exact(&b).unwrap() - g.exact(&a).unwrap()) / rho.weight();
            prop_assert_eq!(slope, m.value(&rho), "{}", rho);
        }
    }

    #[test]
    fn combination_adds_scaled_capital(leaves in leaves_strategy(3), sigma_bits in prop::collection::vec(any::<bool>(), 0..4), d in 1i64..10) {
        let m: MartingaleRef = Arc::new(TableMartingale::from_leaves(3, leaves).unwrap());
        let sigma = BitString::from_bits(sigma_bits);
        let delta = q(d, 7);
        let n: MartingaleRef = Arc::new(Constant(q(1, 1)));
        let c = combine_scaled(m.clone(), n, &sigma, &delta).unwrap();
        let shift = &delta * Rational::pow2(sigma.len() as i64);
        for s in all_strings(6) {
            prop_assert_eq!(c.value(&s), m.value(&s) + &shift);
        }
        prop_assert!(check_fairness(&c, &BitString::empty(), 6).fair());
    }
}

#[test]
fn combination_inherits_success() {
    // N doubles on every 1; along 111… the combination grows without bound.
    let m: MartingaleRef = Arc::new(Constant(q(1, 1)));
    let n: MartingaleRef = Arc::new(FnMartingale(|s: &BitString| {
        if s.bits().iter().all(|&b| b) {
            Rational::from(1i64 << s.len())
        } else {
            Rational::zero()
        }
    }));
    let sigma = bs("1");
    let c = combine_scaled(m, n, &sigma, &q(1, 4)).unwrap();
    let mut path = BitString::empty();
    for k in 0..12 {
        let expect = q(1, 1) + q(1, 8) * Rational::from(1i64 << k);
        assert_eq!(c.value(&path), expect);
        path.push(true);
    }
    let bad: MartingaleRef = Arc::new(Constant(q(2, 1)));
    assert!(combine_scaled(Arc::new(Constant(q(1, 1))), bad, &sigma, &q(1, 4)).is_err());
    assert!(combine_scaled(
        Arc::new(Constant(q(1, 1))),
        Arc::new(Constant(q(1, 1))),
        &sigma,
        &q(0, 1)
    )
    .is_err());
}

#[test]
fn diagonalize_against_constant() {
    let m = Constant(q(1, 1));
    let tau = diagonalize_against(&m, &bs("10"), &q(2, 1), 7).unwrap();
    assert_eq!(tau, bs("1000000"));
    assert!(diagonalize_against(&m, &bs("10"), &q(1, 1), 7).is_err());
}

#[test]
fn diagonalize_against_doubling_on_ones() {
    let m = FnMartingale(|s: &BitString| {
        if s.bits().iter().all(|&b| b) {
            Rational::from(1i64 << s.len())
        } else {
            Rational::zero()
        }
    });
    let sigma = bs("11");
    let tau = diagonalize_against(&m, &sigma, &q(5, 1), 9).unwrap();
    assert_eq!(tau, bs("110000000"));
    for l in sigma.len()..=tau.len() {
        assert!(m.value(&tau.prefix(l)) < q(5, 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn diagonal_path_never_rises(leaves in leaves_strategy(4), sigma_bits in prop::collection::vec(any::<bool>(), 0..3)) {
        let m = TableMartingale::from_leaves(4, leaves).unwrap();
        let sigma = BitString::from_bits(sigma_bits);
        let q0 = m.value(&sigma) + q(1, 100);
        let tau = diagonalize_against(&m, &sigma, &q0, 7).unwrap();
        prop_assert_eq!(tau.len(), 7);
        prop_assert!(sigma.is_prefix_of(&tau));
        let mut prev = m.value(&sigma);
        for l in sigma.len() + 1..=7 {
            let p = tau.prefix(l);
            let here = m.value(&p);
            let sib = m.value(&p.prefix(l - 1).child(!p.bits()[l - 1]));
            prop_assert!(here <= sib);
            prop_assert!(here <= prev);
            prev = here;
        }
    }

    #[test]
    fn savings_minimise_over_the_search_tree(leaves in leaves_strategy(4), e in 1i64..8) {
        let m: MartingaleRef = Arc::new(TableMartingale::from_leaves(4, leaves).unwrap());
        let sigma = BitString::empty();
        let q0 = m.value(&sigma) + q(1, 2);
        let cond = Condition::new(sigma.clone(), m.clone(), q0.clone()).unwrap();
        let eps = q(e, 8);
        let sv = savings_extension(&cond, &eps, 5).unwrap();
        // Strings reachable from σ without passing through M ≥ q.
        let mut best = m.value(&sigma);
        for s in all_strings(5) {
            let reachable = (0..=s.len()).all(|l| m.value(&s.prefix(l)) < q0);
            if reachable {
                best = best.min(m.value(&s));
            }
        }
        prop_assert_eq!(&sv.d_hat, &best);
        prop_assert_eq!(m.value(&sv.tau), best.clone());
        prop_assert!(sv.r < sv.s);
        prop_assert!(&sv.s - &sv.d_hat <= &eps * (&q0 - &sv.d_hat));
        prop_assert!(sv.gap.holds);
    }
}

#[test]
fn savings_of_constant_stay_at_sigma() {
    let cond = Condition::new(bs("01"), Arc::new(Constant(q(1, 1))), q(3, 2)).unwrap();
    let sv = savings_extension(&cond, &q(1, 2), 6).unwrap();
    assert_eq!(sv.d_hat, q(1, 1));
    assert_eq!(sv.tau, bs("01"));
    assert_eq!(sv.s, q(5, 4));
    assert!(savings_extension(&cond, &q(1, 1), 6).is_err());
}

#[test]
fn savings_follow_a_decreasing_branch() {
    // M(1^k) = 1 + 2^-k on the all-ones path; siblings absorb the difference.
    let m: MartingaleRef = Arc::new(FnMartingale(|s: &BitString| {
        let ones = s.bits().iter().take_while(|&&b| b).count();
        if ones == s.len() {
            q(1, 1) + Rational::pow2(s.len() as i64)
        } else {
            q(1, 1) + Rational::pow2(ones as i64) * q(3, 2)
        }
    }));
    assert!(check_fairness(&*m, &BitString::empty(), 8).fair());
    let cond = Condition::new(BitString::empty(), m, q(5, 2)).unwrap();
    let sv = savings_extension(&cond, &q(1, 4), 6).unwrap();
    assert_eq!(sv.tau, bs("111111"));
    assert_eq!(sv.d_hat, q(65, 64));
}

/// `S_g` from `leaves`, with depth-2 leaves frozen below.
fn frozen_table() -> MartingaleRef {
    Arc::new(TableMartingale::from_leaves(2, vec![q(2, 1), q(2, 1), q(3, 2), q(9, 2)]).unwrap())
}

/// Case 1 recomputed: start at 1 on `σ`; on a low child lose everything, on the other double.
fn case1_oracle(sg: &dyn Martingale, sigma: &BitString, s: &BitString) -> Rational {
    let mut v = q(1, 1);
    for l in sigma.len()..s.len() {
        let tau = s.prefix(l);
        let low = [false, true]
            .into_iter()
            .find(|&b| sg.value(&tau.child(b)).floor() <= Rational::one().floor());
        if let Some(low) = low {
            if s.bits()[l] == low {
                return Rational::zero();
            }
            v = v * q(2, 1);
        }
    }
    v
}

#[test]
fn anti_debt_case_one() {
    let sg = frozen_table();
    let sigma = bs("1");
    let strat = anti_debt_strategy(
        sg.clone(),
        &sigma,
        AntiDebtMode::Case1,
        4,
        ApproxMode::Floor,
    )
    .unwrap();
    for s in all_strings(8).into_iter().filter(|s| sigma.is_prefix_of(s)) {
        assert_eq!(strat.value(&s), case1_oracle(&*sg, &sigma, &s), "{s}");
    }
    // The only low child on the path 1 → 11… is at σ itself.
    assert_eq!(strat.value(&bs("11")), q(2, 1));
    assert_eq!(strat.value(&bs("1111111")), q(2, 1));
    assert_eq!(strat.value(&bs("10")), q(0, 1));
    assert_eq!(strat.value(&BitString::empty()), q(1, 2));
    let rep = check_fairness(&strat, &BitString::empty(), 8);
    assert!(rep.fair() && rep.negative.is_empty());
}

#[test]
fn anti_debt_case_two_copies_the_slope_martingale() {
    let g: Oracle = Arc::new(Polynomial::new(vec![q(0, 1), q(3, 1), q(1, 1)]));
    let sg: MartingaleRef = Arc::new(slope_martingale(g, 6).unwrap());
    let sigma = bs("0");
    let strat = anti_debt_strategy(
        sg.clone(),
        &sigma,
        AntiDebtMode::Case2,
        6,
        ApproxMode::Floor,
    )
    .unwrap();
    for s in all_strings(7).into_iter().filter(|s| sigma.is_prefix_of(s)) {
        assert_eq!(strat.value(&s), sg.value(&s));
    }
    assert!(check_fairness(&strat, &BitString::empty(), 7).fair());
    assert!(anti_debt_strategy(sg, &sigma, AntiDebtMode::Case1, 6, ApproxMode::Floor).is_err());
    assert!(anti_debt_strategy(
        frozen_table(),
        &bs("1"),
        AntiDebtMode::Case2,
        4,
        ApproxMode::Floor
    )
    .is_err());
}

#[test]
fn extension_is_reflexive() {
    let c = Condition::new(bs("01"), frozen_table(), q(5, 2)).unwrap();
    let r = condition_extends(&c, &c, 8);
    assert!(r.holds, "{:?}", r.reason);
}

#[test]
fn absorbing_a_martingale_extends() {
    let c = Condition::new(bs("0"), frozen_table(), q(5, 2)).unwrap();
    let n: MartingaleRef =
        Arc::new(TableMartingale::from_leaves(1, vec![q(3, 2), q(1, 2)]).unwrap());
    let (trace, next) = force(c.clone(), &[ForcingStep::Absorb(n)], 8).unwrap();
    assert!(trace.all_hold());
    assert_eq!(next.sigma, c.sigma);
    assert!(condition_extends(&next, &c, 8).holds);
}

#[test]
fn lowering_q_below_a_reachable_value_fails() {
    let m = frozen_table();
    let c1 = Condition::new(bs("1"), m.clone(), q(5, 1)).unwrap();
    // M(11) = 9/2 ≥ 4 but < 5, so ⟨1, M′, 5⟩ with M′ ≡ 1 is not below ⟨1, M, 4⟩.
    let c_low = Condition::new(bs("1"), m, q(4, 1)).unwrap();
    let c2 = Condition::new(bs("1"), Arc::new(Constant(q(1, 1))), q(4, 1)).unwrap();
    let r = condition_extends(&c2, &c_low, 6);
    assert!(!r.holds);
    let cx = r.counterexample.unwrap();
    assert!(bs("11").is_prefix_of(&cx));
    assert!(condition_extends(&c_low, &c1, 6).holds);
    let raised = Condition::new(bs("1"), Arc::new(Constant(q(1, 1))), q(6, 1)).unwrap();
    assert!(!condition_extends(&raised, &c1, 6).holds);
}

#[test]
fn capping_freezes_subtrees() {
    let inner: MartingaleRef = Arc::new(FnMartingale(|s: &BitString| {
        if s.bits().iter().all(|&b| b) {
            Rational::from(1i64 << s.len())
        } else {
            Rational::zero()
        }
    }));
    let capped = Capped::new(inner.clone(), q(3, 1), ApproxMode::Floor);
    let cached = Capped::new(inner, q(3, 1), ApproxMode::Floor).with_cache(5);
    assert_eq!(capped.stop_point(&bs("11011")), Some(bs("11")));
    for s in all_strings(9) {
        assert_eq!(capped.value(&s), cached.value(&s), "{s}");
        if bs("11").is_prefix_of(&s) {
            assert_eq!(capped.value(&s), q(4, 1));
        }
    }
    assert!(check_fairness(&capped, &BitString::empty(), 9).fair());
}

#[test]
fn forcing_with_savings_step() {
    let start = Condition::new(BitString::empty(), frozen_table(), q(5, 1)).unwrap();
    let steps = [
        ForcingStep::Length(3),
        ForcingStep::Save {
            eps: q(1, 4),
            search_depth: 6,
        },
        ForcingStep::Length(8),
    ];
    let (trace, last) = force(start, &steps, 8).unwrap();
    assert!(trace.all_hold());
    assert_eq!(last.sigma.len(), 8);
    assert!(last.is_valid());
}
