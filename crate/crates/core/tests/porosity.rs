use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;

use randlab_core::gen::{random_enumeration, rng_for, Denominators};
use randlab_core::numeric::q;
use randlab_core::porosity::{
    is_antichain, minimal_porous_extensions, porosity_test, porosity_witness, porous_at_all_scales,
    PorosityParams,
};
use randlab_core::{BitString, Interval, IntervalSet, Rational, StagedOpenEnumeration};

fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

fn cell(index: u64, len: usize) -> BitString {
    BitString::from_index(&BigInt::from(index), len)
}

fn null_in(class: &IntervalSet, s: &BitString) -> bool {
    let cyl = s.cylinder();
    class.measure_in(&cyl.lo, &cyl.hi).is_zero()
}

/// Minimal `ρ ⪰ σ` of length `≤ max_len` having a same-length `τ ⪰ σ` within `2^c` cells whose
/// cylinder carries no measure of the class; found by scanning every extension.
fn scan_extensions(
    class: &IntervalSet,
    sigma: &BitString,
    c: u32,
    max_len: usize,
) -> BTreeSet<BitString> {
    let mut found: BTreeSet<BitString> = BTreeSet::new();
    for len in sigma.len()..=max_len {
        let extra = len - sigma.len();
        let count = 1u64 << extra;
        let base = (sigma.prefix_index(sigma.len())) << extra;
        let empty: Vec<bool> = (0..count)
            .map(|j| null_in(class, &cell(base + j, len)))
            .collect();
        let reach = 1i64 << c;
        for j in 0..count {
            let rho = cell(base + j, len);
            if found.iter().any(|p| p.is_prefix_of(&rho)) {
                continue;
            }
            let lo = (j as i64 - reach).max(0);
            let hi = (j as i64 + reach).min(count as i64 - 1);
            if (lo..=hi).any(|k| empty[k as usize]) {
                found.insert(rho);
            }
        }
    }
    found
}

fn enumeration(holes: &[((i64, i64), (i64, i64))]) -> StagedOpenEnumeration {
    StagedOpenEnumeration::new(
        holes
            .iter()
            .map(|&(a, b)| Interval::new(q(a.0, a.1), q(b.0, b.1)).unwrap())
            .collect(),
    )
}

#[test]
fn no_holes_no_witnesses() {
    let scales: Vec<Rational> = (1..6).map(Rational::pow2).collect();
    let w = porosity_witness(&IntervalSet::unit(), &q(1, 3), &q(1, 8), &scales);
    assert!(w.iter().all(|x| x.hole.is_none()));
}

#[test]
fn shrinking_holes_give_witness_at_every_scale() {
    let holes: Vec<Interval> = (0..=10)
        .map(|k| Interval::new(Rational::pow2(k + 2) * q(3, 1), Rational::pow2(k)).unwrap())
        .collect();
    let c = StagedOpenEnumeration::new(holes).final_class();
    let scales: Vec<Rational> = (0..=10).map(Rational::pow2).collect();
    let eps = q(1, 8);
    let w = porosity_witness(&c, &Rational::zero(), &eps, &scales);
    assert!(porous_at_all_scales(&w));
    for x in &w {
        let h = x.hole.as_ref().unwrap();
        assert!(h.length() >= &eps * &x.beta);
        assert!(h.lo >= -x.beta.clone() && h.hi <= x.beta);
        assert!(c.measure_in(&h.lo, &h.hi).is_zero());
    }
}

#[test]
fn interior_point_fails_below_hole_distance() {
    let c = enumeration(&[((3, 4), (7, 8))]).final_class();
    let z = q(1, 4);
    let scales: Vec<Rational> = (1..8).map(Rational::pow2).collect();
    let w = porosity_witness(&c, &z, &q(1, 16), &scales);
    for x in &w {
        if x.beta <= q(1, 2) {
            assert!(x.hole.is_none(), "β = {}", x.beta);
        }
    }
}

#[test]
fn nothing_removed_means_no_extensions() {
    let e = enumeration(&[((1, 2), (3, 4))]);
    let ext = minimal_porous_extensions(&e, &BitString::empty(), 1, 0).unwrap();
    assert!(ext.strings.is_empty());
}

#[test]
fn single_cylinder_hole() {
    let e = enumeration(&[((1, 2), (3, 4))]);
    let ext = minimal_porous_extensions(&e, &BitString::empty(), 1, 1).unwrap();
    let got: BTreeSet<BitString> = ext.strings.iter().cloned().collect();
    let expect: BTreeSet<BitString> = ["00", "01", "10", "11"].iter().map(|s| bs(s)).collect();
    assert_eq!(got, expect);
    let scanned = scan_extensions(&e.stage_class(1).unwrap(), &BitString::empty(), 1, 6);
    assert_eq!(got, scanned);
    assert!(got.contains(&bs("10")));
}

#[test]
fn level_zero_and_single_hole_bound() {
    let e = enumeration(&[((1, 2), (3, 4))]);
    let rep = porosity_test(&e, &PorosityParams::new(1), 1, 1).unwrap();
    assert!(rep.all_hold());
    assert_eq!(rep.levels[0].u_n, IntervalSet::unit());
    assert_eq!(rep.levels[0].bound, q(1, 1));
    assert_eq!(rep.levels[1].bound, q(7, 8));
    // U_1 covers [0,1]; C has measure 3/4.
    assert_eq!(rep.levels[1].measure, q(3, 4));
    assert!(rep.levels[1].measure <= rep.levels[1].bound);
}

#[test]
fn zero_constant_is_rejected() {
    let e = enumeration(&[((1, 2), (3, 4))]);
    assert!(porosity_test(&e, &PorosityParams::new(0), 1, 1).is_err());
}

fn small_enumeration(seed: u64) -> StagedOpenEnumeration {
    random_enumeration(&mut rng_for(seed, 9, 0), 4, Denominators::Dyadic(4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn extensions_match_exhaustive_scan(seed in 0u64..100_000, c in 1u32..=2, sigma_bits in prop::collection::vec(any::<bool>(), 0..3)) {
        let e = small_enumeration(seed);
        let sigma = BitString::from_bits(sigma_bits);
        let t = e.len();
        let ext = minimal_porous_extensions(&e, &sigma, c, t).unwrap();
        prop_assert!(!ext.truncated);
        prop_assert!(is_antichain(&ext.strings));
        let got: BTreeSet<BitString> = ext.strings.iter().cloned().collect();
        let scanned = scan_extensions(&e.stage_class(t).unwrap(), &sigma, c, 9);
        prop_assert_eq!(got, scanned);
    }

    #[test]
    fn level_sets_match_scanned_antichains(seed in 0u64..100_000, c in 1u32..=2) {
        let e = small_enumeration(seed);
        let n_max = 2;
        let rep = porosity_test(&e, &PorosityParams::new(c), n_max, e.len()).unwrap();
        prop_assert!(rep.all_hold());
        let final_class = e.final_class();
        let factor = Rational::one() - Rational::pow2(c as i64 + 2);
        let mut union: Vec<Vec<Interval>> = vec![Vec::new(); n_max + 1];
        for t in 0..=e.len() {
            let class = e.stage_class(t).unwrap();
            let mut level = vec![BitString::empty()];
            union[0].push(Interval::unit());
            for n in 1..=n_max {
                let mut next = BTreeSet::new();
                for sigma in &level {
                    let ext = scan_extensions(&class, sigma, c, 12);
                    let meeting: Rational = ext
                        .iter()
                        .filter(|r| !null_in(&class, r))
                        .map(BitString::weight)
                        .sum();
                    prop_assert!(meeting <= &factor * &sigma.weight());
                    next.extend(ext);
                }
                level = next.into_iter().collect();
                prop_assert!(is_antichain(&level));
                union[n].extend(level.iter().map(BitString::cylinder));
            }
        }
        for n in 0..=n_max {
            let u = IntervalSet::canonicalize(union[n].clone());
            prop_assert!(u.equal_up_to_null_points(&rep.levels[n].u_n), "level {}", n);
            let m = u.intersection(&final_class).measure();
            prop_assert_eq!(&m, &rep.levels[n].measure);
            prop_assert!(m <= factor.pow(n as u32));
        }
    }
}
