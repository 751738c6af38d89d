//! Slopes, pseudo-derivative estimates, interval extrema and the monotone extension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet, StagedOpenEnumeration};
use crate::numeric::Rational;
use crate::oracle::PointFunction;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub a: Rational,
    pub b: Rational,
    pub value: Rational,
    pub precision: u32,
    /// `0` when both endpoint values were exact.
    pub error_bound: Rational,
}

fn ceil_log2(x: &Rational) -> u32 {
    let mut k = 0;
    while Rational::pow2(-(k as i64)) < *x {
        k += 1;
    }
    k
}

/// `S_f(a, b)` to within `2^-n`.
pub fn slope(f: &dyn PointFunction, a: &Rational, b: &Rational, n: u32) -> Result<SlopeSample> {
    if a == b {
        return Err(Error::ZeroLengthWindow);
    }
    for p in [a, b] {
        if !f.in_domain(p) {
            return Err(Error::OutsideDomain { point: p.clone() });
        }
    }
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let width = b - a;
    if let (Some(fa), Some(fb)) = (f.exact(a), f.exact(b)) {
        return Ok(SlopeSample {
            a: a.clone(),
            b: b.clone(),
            value: (fb - fa) / &width,
            precision: n,
            error_bound: Rational::zero(),
        });
    }
    let m = n + 1 + ceil_log2(&width.recip());
    let fa = f.sample(a, m)?;
    let fb = f.sample(b, m)?;
    Ok(SlopeSample {
        a: a.clone(),
        b: b.clone(),
        value: (fb - fa) / &width,
        precision: n,
        error_bound: Rational::pow2(m as i64 - 1) / width,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoDerivativeEstimate {
    pub value: Rational,
    pub witness: (Rational, Rational),
    pub pairs: usize,
}

/// Dyadic points of depth `depth` in `[lo, hi]`.
fn dyadic_grid(lo: &Rational, hi: &Rational, depth: u32) -> Vec<Rational> {
    let start = lo.ceil_dyadic(depth);
    let step = Rational::pow2(depth as i64);
    let mut out = Vec::new();
    let mut x = start;
    while &x <= hi {
        out.push(x.clone());
        x += &step;
    }
    out
}

fn straddling_points(
    f: &dyn PointFunction,
    x: &Rational,
    lo: &Rational,
    hi: &Rational,
    depth: u32,
) -> (Vec<Rational>, Vec<Rational>) {
    let mut pts = dyadic_grid(lo, hi, depth);
    pts.extend(f.feature_points(lo, hi));
    pts.push(x.clone());
    pts.retain(|p| lo <= p && p <= hi && f.in_domain(p));
    pts.sort();
    pts.dedup();
    let left = pts.iter().filter(|p| *p <= x).cloned().collect();
    let right = pts.into_iter().filter(|p| p >= x).collect();
    (left, right)
}

const SAMPLE_PRECISION: u32 = 40;

/// Largest (upper) or smallest (lower) slope over straddling pairs `a ≤ x ≤ b`, `0 < b−a ≤ h`,
/// drawn from dyadics of depth `grid_depth`, feature points of `f`, and `x` itself.
pub fn pseudo_derivative_estimate(
    f: &dyn PointFunction,
    x: &Rational,
    h: &Rational,
    grid_depth: u32,
    side: Side,
) -> Result<PseudoDerivativeEstimate> {
    if !h.is_positive() {
        return Err(Error::NonPositiveWindow);
    }
    let lo = (x - h).max(Rational::zero());
    let hi = (x + h).min(Rational::one());
    let (left, right) = straddling_points(f, x, &lo, &hi, grid_depth);
    let pairs: Vec<(Rational, Rational)> = left
        .iter()
        .flat_map(|a| {
            right
                .iter()
                .filter(move |b| a < *b && &(*b - a) <= h)
                .map(move |b| (a.clone(), b.clone()))
        })
        .collect();
    let samples: Vec<SlopeSample> = pairs
        .par_iter()
        .map(|(a, b)| slope(f, a, b, SAMPLE_PRECISION))
        .collect::<Result<_>>()?;
    let best = match side {
        Side::Upper => samples
            .iter()
            .reduce(|m, s| if s.value > m.value { s } else { m }),
        Side::Lower => samples
            .iter()
            .reduce(|m, s| if s.value < m.value { s } else { m }),
    };
    let best = best.ok_or(Error::NoStraddlingPair { depth: grid_depth })?;
    Ok(PseudoDerivativeEstimate {
        value: best.value.clone(),
        witness: (best.a.clone(), best.b.clone()),
        pairs: samples.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenjoyVerdict {
    /// Upper and lower estimates within `gap` at the finest scale.
    DerivativeLike,
    /// Upper estimate `≥ blowup` and lower `≤ −blowup`.
    DenjoyBad,
    /// Exactly one side blows up while the other stays bounded.
    AlternativeFails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub h: Rational,
    pub upper: PseudoDerivativeEstimate,
    pub lower: PseudoDerivativeEstimate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenjoyReport {
    pub verdict: DenjoyVerdict,
    pub curve: Vec<ScaleEstimate>,
}

pub fn denjoy_classify(
    f: &dyn PointFunction,
    x: &Rational,
    scales: &[Rational],
    grid_depth: u32,
    gap: &Rational,
    blowup: &Rational,
) -> Result<DenjoyReport> {
    let mut curve = Vec::with_capacity(scales.len());
    for h in scales {
        curve.push(ScaleEstimate {
            h: h.clone(),
            upper: pseudo_derivative_estimate(f, x, h, grid_depth, Side::Upper)?,
            lower: pseudo_derivative_estimate(f, x, h, grid_depth, Side::Lower)?,
        });
    }
    let verdict = match curve.last() {
        None => DenjoyVerdict::Inconclusive,
        Some(e) => {
            let up = e.upper.value >= *blowup;
            let down = e.lower.value <= -blowup;
            if &(&e.upper.value - &e.lower.value) <= gap {
                DenjoyVerdict::DerivativeLike
            } else if up && down {
                DenjoyVerdict::DenjoyBad
            } else if up != down {
                DenjoyVerdict::AlternativeFails
            } else {
                DenjoyVerdict::Inconclusive
            }
        }
    };
    Ok(DenjoyReport { verdict, curve })
}

/// A straddling pair around `z` of width `≤ t` whose slope is certainly below `p`.
pub fn slope_threshold_witness(
    f: &dyn PointFunction,
    z: &Rational,
    p: &Rational,
    t: &Rational,
    grid_depth: u32,
) -> Result<Option<(Rational, Rational)>> {
    if !t.is_positive() {
        return Err(Error::NonPositiveWindow);
    }
    let lo = (z - t).max(Rational::zero());
    let hi = (z + t).min(Rational::one());
    let (left, right) = straddling_points(f, z, &lo, &hi, grid_depth);
    for a in &left {
        for b in right.iter().filter(|b| a < *b && &(*b - a) <= t) {
            let s = slope(f, a, b, SAMPLE_PRECISION)?;
            if &s.value + &s.error_bound < *p {
                return Ok(Some((a.clone(), b.clone())));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EMembership {
    pub member: bool,
    pub pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<SlopeSample>,
}

/// Checks `S_f(a,b)_0 > −n+1` for every grid pair `r ≤ a ≤ x ≤ b ≤ s` with `a < b`.
pub fn e_membership(
    f: &dyn PointFunction,
    x: &Rational,
    n: u32,
    r: &Rational,
    s: &Rational,
    grid_depth: u32,
) -> Result<EMembership> {
    if r >= s || x < r || x > s {
        return Err(Error::InvertedInterval {
            lo: r.clone(),
            hi: s.clone(),
        });
    }
    let mut pts = dyadic_grid(r, s, grid_depth);
    pts.push(x.clone());
    pts.retain(|p| f.in_domain(p));
    pts.sort();
    pts.dedup();
    let threshold = Rational::from(1 - n as i64);
    let mut pairs = 0;
    for a in pts.iter().filter(|p| *p <= x) {
        for b in pts.iter().filter(|p| *p >= x && a < *p) {
            pairs += 1;
            let sm = slope(f, a, b, 0)?;
            if sm.value <= threshold {
                return Ok(EMembership {
                    member: false,
                    pairs,
                    witness: Some(sm),
                });
            }
        }
    }
    Ok(EMembership {
        member: true,
        pairs,
        witness: None,
    })
}

/// `max f(a)_n` over `a ∈ {r} ∪ (dyadics of depth grid_depth in [r, x])`.
pub fn sup_function(
    f: &dyn PointFunction,
    r: &Rational,
    x: &Rational,
    n: u32,
    grid_depth: u32,
) -> Result<Rational> {
    if r > x {
        return Err(Error::InvertedInterval {
            lo: r.clone(),
            hi: x.clone(),
        });
    }
    let mut pts = dyadic_grid(r, x, grid_depth);
    pts.push(r.clone());
    let mut best: Option<Rational> = None;
    for p in pts.iter().filter(|p| f.in_domain(p)) {
        let v = f.sample(p, n)?;
        best = Some(best.map_or(v.clone(), |b| b.max(v)));
    }
    best.ok_or(Error::OutsideDomain { point: r.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Sup,
    Inf,
}

/// Sup or inf of `p` over `[a, b]` to within `2^-n`, by a mesh fine enough for the declared Lipschitz constant.
pub fn interval_extremum(
    p: &dyn PointFunction,
    a: &Rational,
    b: &Rational,
    n: u32,
    which: Extremum,
) -> Result<Rational> {
    if a > b {
        return Err(Error::InvertedInterval {
            lo: a.clone(),
            hi: b.clone(),
        });
    }
    if a == b {
        return p.sample(a, n);
    }
    let lip = p.lipschitz().ok_or(Error::MissingModulus)?;
    let target = Rational::pow2(n as i64);
    let cells = (&lip * (b - a) / &target).ceil();
    let cells: u64 = num_traits::ToPrimitive::to_u64(&cells)
        .unwrap_or(u64::MAX)
        .max(1);
    if cells > 1 << 22 {
        return Err(Error::ParameterOutOfRange {
            name: "mesh size",
            value: cells.to_string(),
        });
    }
    let width = b - a;
    let mut pts: Vec<Rational> = (0..=cells)
        .map(|j| a + &width * Rational::new(j as i64, cells as i64))
        .collect();
    pts.extend(p.feature_points(a, b));
    let vals: Vec<Rational> = pts
        .par_iter()
        .map(|x| p.sample(x, n + 1))
        .collect::<Result<_>>()?;
    let out = match which {
        Extremum::Sup => vals.into_iter().max(),
        Extremum::Inf => vals.into_iter().min(),
    };
    Ok(out.expect("mesh is nonempty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    LowerInf,
    UpperSup,
}

/// `inf` or `sup` of `h` over `C ∩ [a, b]`, each part handled by `interval_extremum`.
pub fn envelope(
    h: &dyn PointFunction,
    c: &IntervalSet,
    a: &Rational,
    b: &Rational,
    n: u32,
    which: EnvelopeSide,
) -> Result<Rational> {
    let window = Interval::new(a.clone(), b.clone())?;
    let k = c.intersect_interval(&window);
    if k.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let ext = match which {
        EnvelopeSide::LowerInf => Extremum::Inf,
        EnvelopeSide::UpperSup => Extremum::Sup,
    };
    let vals = k
        .parts()
        .iter()
        .map(|p| interval_extremum(h, &p.lo, &p.hi, n, ext))
        .collect::<Result<Vec<_>>>()?;
    Ok(match which {
        EnvelopeSide::LowerInf => vals.into_iter().min(),
        EnvelopeSide::UpperSup => vals.into_iter().max(),
    }
    .expect("nonempty"))
}

/// `s·m / (1 + s·m)` with `m = min(|x−a|, |x−b|)` on `[a, b]`, and `0` elsewhere.
pub fn smooth_approximant(a: &Rational, b: &Rational, s: u64, x: &Rational) -> Result<Rational> {
    if a >= b {
        return Err(Error::InvertedInterval {
            lo: a.clone(),
            hi: b.clone(),
        });
    }
    if x <= a || x >= b {
        return Ok(Rational::zero());
    }
    let m = (x - a).min(b - x);
    let sm = Rational::from(s as i64) * m;
    Ok(&sm / (Rational::one() + &sm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionBudget {
    /// Largest refinement stage scanned.
    pub max_stage: u32,
    /// Depth of the dyadic grid used to check monotonicity of `h` on `C`.
    pub check_depth: u32,
}

impl ExtensionBudget {
    pub fn for_precision(n: u32) -> Self {
        ExtensionBudget {
            max_stage: n + 48,
            check_depth: 12,
        }
    }
}

/// Nondecreasing extension of `h` from the final class of an enumeration to `[0, 1]`.
///
/// At stage `t` an upper function `F(·,t)` and a lower function `G(·,t)` are formed; both are
/// nondecreasing in `x`, `F` decreases and `G` increases in `t`. The extension is
/// `sup_t min(F(x,t), G(x,t))`.
pub struct MonotoneExtension<'a> {
    h: &'a dyn PointFunction,
    class: IntervalSet,
    holes: Vec<(Rational, Rational, Rational, Rational)>,
    top: Rational,
    bottom: Rational,
    n: u32,
    budget: ExtensionBudget,
}

fn exact_at(h: &dyn PointFunction, x: &Rational) -> Result<Rational> {
    if !h.in_domain(x) {
        return Err(Error::OutsideDomain { point: x.clone() });
    }
    h.exact(x).ok_or(Error::InexactOracle)
}

fn up(v: &Rational, u: u32) -> Rational {
    v.ceil_dyadic(u) + Rational::pow2(u as i64)
}

fn down(v: &Rational, u: u32) -> Rational {
    v.floor_dyadic(u) - Rational::pow2(u as i64)
}

impl<'a> MonotoneExtension<'a> {
    pub fn new(
        h: &'a dyn PointFunction,
        e: &StagedOpenEnumeration,
        n: u32,
        budget: ExtensionBudget,
    ) -> Result<Self> {
        let class = e.final_class();
        let mut pts: Vec<Rational> =
            dyadic_grid(&Rational::zero(), &Rational::one(), budget.check_depth)
                .into_iter()
                .filter(|x| class.contains(x))
                .collect();
        pts.extend(class.endpoints());
        pts.sort();
        pts.dedup();
        let vals = pts
            .iter()
            .map(|x| exact_at(h, x))
            .collect::<Result<Vec<_>>>()?;
        for i in 1..pts.len() {
            if vals[i] < vals[i - 1] {
                return Err(Error::MonotonicityViolation {
                    x: pts[i - 1].clone(),
                    y: pts[i].clone(),
                });
            }
        }
        let holes = class
            .gaps()
            .into_iter()
            .map(|g| {
                let ha = exact_at(h, &g.lo)?;
                let hb = exact_at(h, &g.hi)?;
                Ok((g.lo, g.hi, ha, hb))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MonotoneExtension {
            h,
            top: exact_at(h, &Rational::one())? + Rational::from(2),
            bottom: exact_at(h, &Rational::zero())? - Rational::from(2),
            class,
            holes,
            n,
            budget,
        })
    }

    fn hole_of(&self, x: &Rational) -> Option<&(Rational, Rational, Rational, Rational)> {
        let i = self.holes.partition_point(|(_, b, _, _)| b <= x);
        self.holes.get(i).filter(|(a, b, _, _)| a < x && x < b)
    }

    /// `(F(x,t), G(x,t))`.
    pub fn stage(&self, x: &Rational, t: u32) -> Result<(Rational, Rational)> {
        if t == 0 {
            return Ok((self.top.clone(), self.bottom.clone()));
        }
        let u = t - 1;
        match self.hole_of(x) {
            None => {
                let v = exact_at(self.h, x)?;
                Ok((up(&v, u), down(&v, u)))
            }
            Some((a, b, ha, hb)) => {
                let s = Rational::pow2(-(u as i64));
                let len = b - a;
                let one = Rational::one();
                let phi = ((x - a) / &len) / (&one + &s * (b - x));
                let psi = ((b - x) / &len) / (&one + &s * (x - a));
                let (ua, ub) = (up(ha, u), up(hb, u));
                let (la, lb) = (down(ha, u), down(hb, u));
                let f = &ua + (&ub - &ua) * &phi;
                let g = &lb - (&lb - &la) * &psi;
                Ok((f, g))
            }
        }
    }

    /// `ĥ(x)`, exact when `F` and `G` cross within the budget, otherwise within `2·2^-n`.
    pub fn value(&self, x: &Rational) -> Result<Rational> {
        if !x.in_unit() {
            return Err(Error::OutOfUnitInterval { value: x.clone() });
        }
        let tol = Rational::pow2(self.n as i64 - 1);
        let max = self.budget.max_stage;
        let (f, g) = self.stage(x, max)?;
        if g < f {
            let gap = &f - &g;
            if gap > tol {
                return Err(Error::BudgetExhausted {
                    stage: max as usize,
                    gap,
                });
            }
            return Ok(g);
        }
        let (mut lo, mut hi) = (0, max);
        let mut crossing = f;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let (f, g) = self.stage(x, mid)?;
            if g >= f {
                hi = mid;
                crossing = f;
            } else {
                lo = mid + 1;
            }
        }
        if hi == 0 {
            return Ok(crossing);
        }
        let (_, before) = self.stage(x, hi - 1)?;
        Ok(before.max(crossing))
    }

    pub fn class(&self) -> &IntervalSet {
        &self.class
    }
}

pub fn monotone_extension(
    h: &dyn PointFunction,
    e: &StagedOpenEnumeration,
    x: &Rational,
    n: u32,
    budget: ExtensionBudget,
) -> Result<Rational> {
    MonotoneExtension::new(h, e, n, budget)?.value(x)
}
