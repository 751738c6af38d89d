//! Closed rational intervals, canonical interval sets and staged enumerations.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::Rational;

/// Closed interval `[lo, hi]` inside `[0, 1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if !lo.in_unit() {
            return Err(Error::OutOfUnitInterval { value: lo });
        }
        if !hi.in_unit() {
            return Err(Error::OutOfUnitInterval { value: hi });
        }
        if lo > hi {
            return Err(Error::InvertedInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub(crate) fn new_unchecked(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn unit() -> Self {
        Interval::new_unchecked(Rational::zero(), Rational::one())
    }

    pub fn point(x: Rational) -> Self {
        Interval::new_unchecked(x.clone(), x)
    }

    /// `[lo, hi]` intersected with `[0, 1]`; `None` if that is empty.
    pub fn clipped(lo: &Rational, hi: &Rational) -> Option<Self> {
        let lo = lo.clone().max(Rational::zero());
        let hi = hi.clone().min(Rational::one());
        (lo <= hi).then(|| Interval::new_unchecked(lo, hi))
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Membership in the open interval `(lo, hi)`.
    pub fn contains_open(&self, x: &Rational) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then(|| Interval::new_unchecked(lo, hi))
    }

    pub fn overlap_length(&self, lo: &Rational, hi: &Rational) -> Rational {
        let a = (&self.lo).max(lo);
        let b = (&self.hi).min(hi);
        if a < b {
            b - a
        } else {
            Rational::zero()
        }
    }

    pub fn midpoint(&self) -> Rational {
        self.lo.midpoint(&self.hi)
    }
}

impl std::fmt::Debug for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.lo, &self.hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (lo, hi) = <(Rational, Rational)>::deserialize(d)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

/// Finite union of closed intervals in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn unit() -> Self {
        IntervalSet {
            parts: vec![Interval::unit()],
        }
    }

    pub fn from_interval(i: Interval) -> Self {
        IntervalSet { parts: vec![i] }
    }

    /// Sort and merge overlapping or touching parts.
    pub fn canonicalize(raw: Vec<Interval>) -> Self {
        let mut raw = raw;
        raw.sort();
        let mut parts: Vec<Interval> = Vec::with_capacity(raw.len());
        for i in raw {
            match parts.last_mut() {
                Some(last) if i.lo <= last.hi => {
                    if i.hi > last.hi {
                        last.hi = i.hi;
                    }
                }
                _ => parts.push(i),
            }
        }
        IntervalSet { parts }
    }

    /// Validating constructor from raw endpoint pairs.
    pub fn from_pairs(pairs: Vec<(Rational, Rational)>) -> Result<Self> {
        let raw = pairs
            .into_iter()
            .map(|(a, b)| Interval::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalSet::canonicalize(raw))
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.parts.iter().map(Interval::length).sum()
    }

    /// `λ(S ∩ [lo, hi])`.
    pub fn measure_in(&self, lo: &Rational, hi: &Rational) -> Rational {
        let start = self.parts.partition_point(|p| &p.hi <= lo);
        let mut total = Rational::zero();
        for p in &self.parts[start..] {
            if &p.lo >= hi {
                break;
            }
            total += p.overlap_length(lo, hi);
        }
        total
    }

    /// `λ(S ∩ I) / λ(I)`.
    pub fn relative_measure(&self, window: &Interval) -> Result<Rational> {
        let len = window.length();
        if len.is_zero() {
            return Err(Error::ZeroLengthWindow);
        }
        Ok(self.measure_in(&window.lo, &window.hi) / len)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.parts.partition_point(|p| &p.hi < x);
        i < self.parts.len() && self.parts[i].lo <= *x
    }

    /// Membership in the interior of some part.
    pub fn contains_in_interior(&self, x: &Rational) -> bool {
        self.parts.iter().any(|p| p.contains_open(x))
    }

    pub fn leftmost(&self) -> Option<&Rational> {
        self.parts.first().map(|p| &p.lo)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut raw = self.parts.clone();
        raw.extend(other.parts.iter().cloned());
        IntervalSet::canonicalize(raw)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.parts.len() && j < other.parts.len() {
            let (a, b) = (&self.parts[i], &other.parts[j]);
            if let Some(x) = a.intersection(b) {
                out.push(x);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::canonicalize(out)
    }

    pub fn intersect_interval(&self, window: &Interval) -> IntervalSet {
        self.intersection(&IntervalSet::from_interval(window.clone()))
    }

    /// Closure of `[0, 1] ∖ S`.
    pub fn complement(&self) -> IntervalSet {
        IntervalSet::canonicalize(self.gaps())
    }

    /// Maximal intervals of `[0, 1] ∖ S`, as closures of positive length.
    pub fn gaps(&self) -> Vec<Interval> {
        if self.parts.is_empty() {
            return vec![Interval::unit()];
        }
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for p in &self.parts {
            if p.lo > cursor {
                out.push(Interval::new_unchecked(cursor.clone(), p.lo.clone()));
            }
            cursor = p.hi.clone();
        }
        if cursor < Rational::one() {
            out.push(Interval::new_unchecked(cursor, Rational::one()));
        }
        out
    }

    /// `S` minus the union of the given open intervals.
    pub fn remove_open(&self, holes: &[Interval]) -> IntervalSet {
        self.intersection(&complement_of_open(holes))
    }

    /// Parts of positive length only.
    pub fn without_degenerate(&self) -> IntervalSet {
        IntervalSet {
            parts: self
                .parts
                .iter()
                .filter(|p| !p.is_degenerate())
                .cloned()
                .collect(),
        }
    }

    /// Equality after discarding degenerate parts and merging across single points.
    pub fn equal_up_to_null_points(&self, other: &IntervalSet) -> bool {
        let norm = |s: &IntervalSet| IntervalSet::canonicalize(s.without_degenerate().parts);
        norm(self) == norm(other)
    }

    /// Every endpoint in increasing order.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self
            .parts
            .iter()
            .flat_map(|p| [p.lo.clone(), p.hi.clone()])
            .collect();
        v.dedup();
        v
    }
}

impl std::fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.parts).finish()
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(IntervalSet::canonicalize(Vec::<Interval>::deserialize(d)?))
    }
}

pub fn canonicalize(raw: Vec<Interval>) -> IntervalSet {
    IntervalSet::canonicalize(raw)
}

pub fn measure(s: &IntervalSet) -> Rational {
    s.measure()
}

pub fn relative_measure(s: &IntervalSet, window: &Interval) -> Result<Rational> {
    s.relative_measure(window)
}

/// `[0, 1]` minus the union of the open intervals `(lo, hi)`.
pub fn complement_of_open(holes: &[Interval]) -> IntervalSet {
    let mut hs: Vec<&Interval> = holes.iter().filter(|h| !h.is_degenerate()).collect();
    hs.sort();
    let mut merged: Vec<(Rational, Rational)> = Vec::new();
    for h in hs {
        match merged.last_mut() {
            Some((_, b)) if h.lo < *b => {
                if h.hi > *b {
                    *b = h.hi.clone();
                }
            }
            _ => merged.push((h.lo.clone(), h.hi.clone())),
        }
    }
    let mut parts = Vec::new();
    let mut cursor = Rational::zero();
    for (a, b) in merged {
        parts.push(Interval::new_unchecked(cursor, a));
        cursor = b;
    }
    parts.push(Interval::new_unchecked(cursor, Rational::one()));
    IntervalSet::canonicalize(parts)
}

/// An effectively open set given by an indexed list of open intervals.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StagedOpenEnumeration {
    pub holes: Vec<Interval>,
}

impl StagedOpenEnumeration {
    pub fn new(holes: Vec<Interval>) -> Self {
        StagedOpenEnumeration { holes }
    }

    pub fn len(&self) -> usize {
        self.holes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn check_stage(&self, t: usize) -> Result<()> {
        if t > self.holes.len() {
            return Err(Error::StageOutOfRange {
                stage: t,
                len: self.holes.len(),
            });
        }
        Ok(())
    }

    /// Items enumerated before stage `t`.
    pub fn items_before(&self, t: usize) -> &[Interval] {
        &self.holes[..t.min(self.holes.len())]
    }

    pub fn stage_class(&self, t: usize) -> Result<IntervalSet> {
        self.check_stage(t)?;
        Ok(complement_of_open(&self.holes[..t]))
    }

    pub fn final_class(&self) -> IntervalSet {
        complement_of_open(&self.holes)
    }

    /// Closed union of the items enumerated before stage `t`.
    pub fn open_set(&self, t: usize) -> IntervalSet {
        IntervalSet::canonicalize(self.items_before(t).to_vec())
    }

    /// Whether `x` lies in the open union at stage `t`.
    pub fn covers_open(&self, x: &Rational, t: usize) -> bool {
        self.items_before(t).iter().any(|h| h.contains_open(x))
    }
}

pub fn stage_class(e: &StagedOpenEnumeration, t: usize) -> Result<IntervalSet> {
    e.stage_class(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(q(a.0, a.1), q(b.0, b.1)).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let s = canonicalize(vec![iv((0, 1), (1, 2)), iv((1, 2), (1, 1))]);
        assert_eq!(s, IntervalSet::unit());
        assert!(canonicalize(vec![]).is_empty());
        let s = canonicalize(vec![
            iv((1, 4), (3, 8)),
            iv((1, 3), (2, 3)),
            iv((3, 4), (3, 4)),
        ]);
        assert_eq!(s.parts(), &[iv((1, 4), (2, 3)), iv((3, 4), (3, 4))]);
    }

    #[test]
    fn measures() {
        assert_eq!(IntervalSet::unit().measure(), q(1, 1));
        assert_eq!(IntervalSet::empty().measure(), q(0, 1));
        let s = canonicalize(vec![iv((1, 8), (1, 4)), iv((1, 2), (7, 8))]);
        assert_eq!(s.measure(), q(1, 2));
        let s = canonicalize(vec![iv((0, 1), (1, 2))]);
        assert_eq!(s.relative_measure(&iv((1, 4), (3, 4))).unwrap(), q(1, 2));
        assert!(s.relative_measure(&iv((1, 4), (1, 4))).is_err());
    }

    #[test]
    fn stages() {
        let e = StagedOpenEnumeration::new(vec![iv((1, 4), (1, 2))]);
        assert_eq!(e.stage_class(0).unwrap(), IntervalSet::unit());
        assert_eq!(
            e.stage_class(1).unwrap().parts(),
            &[iv((0, 1), (1, 4)), iv((1, 2), (1, 1))]
        );
        assert!(e.stage_class(2).is_err());
    }

    #[test]
    fn touching_holes_leave_a_point() {
        let e = StagedOpenEnumeration::new(vec![iv((1, 4), (1, 2)), iv((1, 2), (3, 4))]);
        let c = e.stage_class(2).unwrap();
        assert!(c.contains(&q(1, 2)));
        assert_eq!(c.measure(), q(1, 2));
    }

    #[test]
    fn complement_and_gaps() {
        let s = canonicalize(vec![iv((1, 4), (1, 2))]);
        assert_eq!(
            s.complement().parts(),
            &[iv((0, 1), (1, 4)), iv((1, 2), (1, 1))]
        );
        assert_eq!(IntervalSet::unit().complement(), IntervalSet::empty());
        assert_eq!(IntervalSet::empty().complement(), IntervalSet::unit());
    }

    #[test]
    fn json_shape() {
        let s = canonicalize(vec![iv((1, 4), (1, 2))]);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"[["1/4","1/2"]]"#);
        let e: StagedOpenEnumeration =
            serde_json::from_str(r#"{"holes":[["1/4","1/2"]]}"#).unwrap();
        assert_eq!(e.len(), 1);
        assert!(serde_json::from_str::<Interval>(r#"["1/2","1/4"]"#).is_err());
        assert!(serde_json::from_str::<Interval>(r#"["0","3/2"]"#).is_err());
    }
}
