//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interval::{Interval, StagedOpenEnumeration};
use crate::numeric::Rational;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derived stream for instance `index` of a batch.
pub fn rng_for(seed: u64, stream: u64, index: u64) -> InstanceRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos(u128::from(index) << 20);
    r
}

#[derive(Clone, Copy, Debug)]
pub enum Denominators {
    /// Any denominator in `1..=max`.
    Bounded(i64),
    /// Exactly `2^k`.
    Dyadic(u32),
}

fn point(rng: &mut InstanceRng, den: Denominators) -> Rational {
    match den {
        Denominators::Bounded(max) => {
            let d = rng.gen_range(1..=max);
            Rational::new(rng.gen_range(0..=d), d)
        }
        Denominators::Dyadic(k) => Rational::dyadic(rng.gen_range(0..=(1i64 << k)), k),
    }
}

/// An enumeration of `1..=max_holes` open intervals of positive length.
pub fn random_enumeration(
    rng: &mut InstanceRng,
    max_holes: usize,
    den: Denominators,
) -> StagedOpenEnumeration {
    let n = rng.gen_range(1..=max_holes);
    let mut holes = Vec::with_capacity(n);
    while holes.len() < n {
        let a = point(rng, den);
        let b = point(rng, den);
        if a == b {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let cap = Rational::new(1, 4);
        if &hi - &lo > cap && rng.gen_bool(0.75) {
            continue;
        }
        holes.push(Interval::new(lo, hi).expect("endpoints drawn from [0,1]"));
    }
    StagedOpenEnumeration::new(holes)
}

/// A point in `(0,1)` whose denominator is `3·2^k` for some `k`, so never dyadic.
pub fn non_dyadic_point(rng: &mut InstanceRng, k: u32) -> Rational {
    let den = 3i64 << k;
    loop {
        let n = rng.gen_range(1..den);
        if n % 3 != 0 {
            return Rational::new(n, den);
        }
    }
}
