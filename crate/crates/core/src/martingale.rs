//! Exact martingales, slope martingales and the condition poset used for forcing.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::numeric::{BitString, Rational};
use crate::oracle::{Oracle, PointFunction};
use crate::report::Inequality;

/// Capital as a function of the bits seen so far.
pub trait Martingale: Send + Sync {
    fn value(&self, s: &BitString) -> Rational;
}

pub type MartingaleRef = Arc<dyn Martingale>;

impl<M: Martingale + ?Sized> Martingale for Arc<M> {
    fn value(&self, s: &BitString) -> Rational {
        (**self).value(s)
    }
}

/// Rounding used when a first approximant `M(τ)_n` is requested.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxMode {
    #[default]
    Floor,
    Ceil,
    Nearest,
    Exact,
}

/// `M(τ)_n`: a rational within `2^-n` of `M(τ)`.
pub fn approximate(m: &dyn Martingale, s: &BitString, n: u32, mode: ApproxMode) -> Rational {
    round_at(&m.value(s), n, mode)
}

pub fn round_at(v: &Rational, n: u32, mode: ApproxMode) -> Rational {
    match mode {
        ApproxMode::Floor => v.floor_dyadic(n),
        ApproxMode::Ceil => v.ceil_dyadic(n),
        ApproxMode::Nearest => (v + Rational::pow2(n as i64 + 1)).floor_dyadic(n),
        ApproxMode::Exact => v.clone(),
    }
}

pub struct Constant(pub Rational);

impl Martingale for Constant {
    fn value(&self, _: &BitString) -> Rational {
        self.0.clone()
    }
}

pub struct FnMartingale<F>(pub F);

impl<F: Fn(&BitString) -> Rational + Send + Sync> Martingale for FnMartingale<F> {
    fn value(&self, s: &BitString) -> Rational {
        (self.0)(s)
    }
}

/// Values for every string up to `depth`; frozen beyond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableMartingale {
    depth: usize,
    levels: Vec<Vec<Rational>>,
}

const MAX_TABLE_DEPTH: usize = 24;

impl TableMartingale {
    /// Builds inner nodes by averaging the `2^depth` leaf values.
    pub fn from_leaves(depth: usize, leaves: Vec<Rational>) -> Result<Self> {
        if depth > MAX_TABLE_DEPTH || leaves.len() != 1 << depth {
            return Err(Error::Schema(format!(
                "expected {} leaves for depth {depth}",
                1usize << depth.min(63)
            )));
        }
        let half = Rational::new(1, 2);
        let mut levels = vec![leaves];
        for _ in 0..depth {
            let below = levels.last().unwrap();
            let up = below.chunks(2).map(|c| (&c[0] + &c[1]) * &half).collect();
            levels.push(up);
        }
        levels.reverse();
        Ok(TableMartingale { depth, levels })
    }

    /// Table of another martingale's values to `depth`.
    pub fn capture(m: &dyn Martingale, depth: usize) -> Result<Self> {
        let leaves = BitString::all_of_length(depth)
            .map(|s| m.value(&s))
            .collect();
        TableMartingale::from_leaves(depth, leaves)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn from_map(depth: usize, values: &BTreeMap<String, Rational>) -> Result<Self> {
        if depth > MAX_TABLE_DEPTH {
            return Err(Error::Schema(format!(
                "table depth {depth} exceeds {MAX_TABLE_DEPTH}"
            )));
        }
        let mut levels = Vec::with_capacity(depth + 1);
        for l in 0..=depth {
            let mut row = Vec::with_capacity(1 << l);
            for s in BitString::all_of_length(l) {
                let v = values
                    .get(&s.to_string())
                    .ok_or_else(|| Error::Schema(format!("missing value for {s:?}")))?;
                row.push(v.clone());
            }
            levels.push(row);
        }
        if values.len() != (1 << (depth + 1)) - 1 {
            return Err(Error::Schema("table has entries beyond its depth".into()));
        }
        Ok(TableMartingale { depth, levels })
    }

    pub fn to_map(&self) -> BTreeMap<String, Rational> {
        let mut out = BTreeMap::new();
        for (l, row) in self.levels.iter().enumerate() {
            for (s, v) in BitString::all_of_length(l).zip(row) {
                out.insert(s.to_string(), v.clone());
            }
        }
        out
    }
}

impl Martingale for TableMartingale {
    fn value(&self, s: &BitString) -> Rational {
        let l = s.len().min(self.depth);
        self.levels[l][s.prefix_index(l) as usize].clone()
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    depth: usize,
    values: BTreeMap<String, Rational>,
}

impl Serialize for TableMartingale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableJson {
            depth: self.depth,
            values: self.to_map(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TableMartingale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = TableJson::deserialize(d)?;
        TableMartingale::from_map(t.depth, &t.values).map_err(serde::de::Error::custom)
    }
}

/// `M` on extensions of `root`; `M(root)·2^{|p|−|root|}` on prefixes `p` of `root`; `0` elsewhere.
pub struct Rooted {
    pub inner: MartingaleRef,
    pub root: BitString,
}

impl Martingale for Rooted {
    fn value(&self, s: &BitString) -> Rational {
        if self.root.is_prefix_of(s) {
            self.inner.value(s)
        } else if s.is_prefix_of(&self.root) {
            self.inner.value(&self.root) * Rational::pow2((self.root.len() - s.len()) as i64)
        } else {
            Rational::zero()
        }
    }
}

/// `M + 2^{-|σ|}δN`.
pub struct Combined {
    pub m: MartingaleRef,
    pub n: MartingaleRef,
    pub scale: Rational,
}

impl Martingale for Combined {
    fn value(&self, s: &BitString) -> Rational {
        self.m.value(s) + &self.scale * self.n.value(s)
    }
}

pub fn combine_scaled(
    m: MartingaleRef,
    n: MartingaleRef,
    sigma: &BitString,
    delta: &Rational,
) -> Result<Combined> {
    if !delta.is_positive() {
        return Err(Error::ParameterOutOfRange {
            name: "delta",
            value: delta.to_string(),
        });
    }
    let start = n.value(&BitString::empty());
    if start != Rational::one() {
        return Err(Error::ParameterOutOfRange {
            name: "initial capital of N",
            value: start.to_string(),
        });
    }
    Ok(Combined {
        m,
        n,
        scale: delta * sigma.weight(),
    })
}

/// Stops betting at the first prefix whose approximant `M(τ)_0` exceeds `threshold`.
pub struct Capped {
    pub inner: MartingaleRef,
    pub threshold: Rational,
    pub mode: ApproxMode,
    stops: Vec<Vec<Option<u8>>>,
}

impl Capped {
    pub fn new(inner: MartingaleRef, threshold: Rational, mode: ApproxMode) -> Self {
        Capped {
            inner,
            threshold,
            mode,
            stops: Vec::new(),
        }
    }

    /// Tabulates the capping level of every string of length `≤ depth`.
    pub fn with_cache(mut self, depth: usize) -> Self {
        let depth = depth.min(MAX_SLOPE_GRID as usize);
        let mut stops: Vec<Vec<Option<u8>>> = Vec::with_capacity(depth + 1);
        for l in 0..=depth {
            let prev = stops.last();
            let level: Vec<Option<u8>> = (0..1u64 << l)
                .into_par_iter()
                .map(|j| {
                    if let Some(p) = prev.and_then(|p| p[(j >> 1) as usize]) {
                        return Some(p);
                    }
                    let s = BitString::from_index(&BigInt::from(j), l);
                    (approximate(&*self.inner, &s, 0, self.mode) > self.threshold)
                        .then_some(l as u8)
                })
                .collect();
            stops.push(level);
        }
        self.stops = stops;
        self
    }

    /// The capping point on the path to `s`, if any.
    pub fn stop_point(&self, s: &BitString) -> Option<BitString> {
        let cached = self.stops.len().min(s.len() + 1);
        if cached > 0 {
            if let Some(l) = self.stops[cached - 1][s.prefix_index(cached - 1) as usize] {
                return Some(s.prefix(l as usize));
            }
        }
        (cached..=s.len())
            .map(|l| s.prefix(l))
            .find(|p| approximate(&*self.inner, p, 0, self.mode) > self.threshold)
    }
}

impl Martingale for Capped {
    fn value(&self, s: &BitString) -> Rational {
        match self.stop_point(s) {
            Some(p) => self.inner.value(&p),
            None => self.inner.value(s),
        }
    }
}

/// `τ ↦ S_g(Cyl τ)`, with `g` tabulated on the dyadic grid of depth `depth`.
pub struct SlopeMartingale {
    pub g: Oracle,
    depth: usize,
    grid: Vec<Rational>,
}

impl Martingale for SlopeMartingale {
    fn value(&self, s: &BitString) -> Rational {
        if s.len() <= self.depth {
            let shift = self.depth - s.len();
            let i = (s.prefix_index(s.len()) as usize) << shift;
            let j = i + (1usize << shift);
            return (&self.grid[j] - &self.grid[i]) * Rational::pow2(-(s.len() as i64));
        }
        let cyl = s.cylinder();
        let a = self.g.exact(&cyl.lo).expect("checked exact oracle");
        let b = self.g.exact(&cyl.hi).expect("checked exact oracle");
        (b - a) / cyl.length()
    }
}

const MAX_SLOPE_GRID: u32 = 24;

/// Slope martingale of `g`; `g` must be exact at every dyadic point of depth `≤ depth`.
pub fn slope_martingale(g: Oracle, depth: u32) -> Result<SlopeMartingale> {
    if depth > MAX_SLOPE_GRID {
        return Err(Error::ParameterOutOfRange {
            name: "slope grid depth",
            value: depth.to_string(),
        });
    }
    let grid = (0..=(1u64 << depth))
        .into_par_iter()
        .map(|j| {
            let x = Rational::dyadic(j, depth);
            if !g.in_domain(&x) {
                return Err(Error::OutsideDomain { point: x });
            }
            g.exact(&x).ok_or(Error::InexactOracle)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlopeMartingale {
        g,
        depth: depth as usize,
        grid,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub checked: usize,
    pub violations: Vec<BitString>,
    pub negative: Vec<BitString>,
}

impl FairnessReport {
    pub fn fair(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `M(ρ) = (M(ρ0)+M(ρ1))/2` for every `ρ ⪰ root` with `|ρ| < depth`.
pub fn check_fairness(m: &dyn Martingale, root: &BitString, depth: usize) -> FairnessReport {
    let nodes: Vec<BitString> = root
        .extensions_up_to(depth.saturating_sub(1).max(root.len()))
        .into_iter()
        .filter(|s| s.len() < depth)
        .collect();
    let results: Vec<(BitString, bool, bool)> = nodes
        .into_par_iter()
        .map(|s| {
            let v = m.value(&s);
            let a = m.value(&s.child(false));
            let b = m.value(&s.child(true));
            let fair = (&a + &b) == &v * Rational::from(2);
            let neg = v.is_negative() || a.is_negative() || b.is_negative();
            (s, fair, neg)
        })
        .collect();
    let checked = results.len();
    let mut violations = Vec::new();
    let mut negative = Vec::new();
    for (s, fair, neg) in results {
        if !fair {
            violations.push(s.clone());
        }
        if neg {
            negative.push(s);
        }
    }
    FairnessReport {
        checked,
        violations,
        negative,
    }
}

/// `f` on `Cyl τ0` with `f(0.τ0) = 0` and `S_f(Cyl ρ) = M(ρ)`, linear on cells of depth `depth`.
pub struct IntegratedMartingale {
    root: BitString,
    depth: usize,
    lo: Rational,
    hi: Rational,
    grid: Vec<Rational>,
    slopes: Vec<Rational>,
    lipschitz: Rational,
}

const MAX_INTEGRATION_DEPTH: usize = 22;

pub fn martingale_to_function(
    m: MartingaleRef,
    root: &BitString,
    depth: usize,
) -> Result<IntegratedMartingale> {
    let depth = depth.max(root.len());
    if depth - root.len() > MAX_INTEGRATION_DEPTH {
        return Err(Error::ParameterOutOfRange {
            name: "integration depth",
            value: depth.to_string(),
        });
    }
    let cyl = root.cylinder();
    let cell = Rational::pow2(depth as i64);
    let values: Vec<(BitString, Rational)> = root
        .extensions_up_to(depth)
        .into_par_iter()
        .map(|s| {
            let v = m.value(&s);
            (s, v)
        })
        .collect();
    let mut sup = Rational::zero();
    for (s, v) in values {
        if v.is_negative() {
            return Err(Error::NegativeMartingale {
                string: s.to_string(),
                value: v,
            });
        }
        sup = sup.max(v);
    }
    let count = 1usize << (depth - root.len());
    let base = root.index() << (depth - root.len());
    let slopes: Vec<Rational> = (0..count)
        .into_par_iter()
        .map(|j| m.value(&BitString::from_index(&(&base + j), depth)))
        .collect();
    let mut grid = Vec::with_capacity(count + 1);
    let mut acc = Rational::zero();
    grid.push(acc.clone());
    for v in &slopes {
        acc += v * &cell;
        grid.push(acc.clone());
    }
    Ok(IntegratedMartingale {
        root: root.clone(),
        depth,
        lo: cyl.lo,
        hi: cyl.hi,
        grid,
        slopes,
        lipschitz: sup,
    })
}

impl IntegratedMartingale {
    pub fn root(&self) -> &BitString {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

impl PointFunction for IntegratedMartingale {
    fn exact(&self, x: &Rational) -> Option<Rational> {
        if !self.in_domain(x) {
            return None;
        }
        let steps = Rational::pow2(-(self.depth as i64));
        let pos = (x - &self.lo) * &steps;
        let j = pos.floor().to_usize()?;
        if j + 1 >= self.grid.len() {
            return Some(self.grid[self.grid.len() - 1].clone());
        }
        let left = &self.lo + Rational::from(j as i64) / &steps;
        Some(&self.grid[j] + &self.slopes[j] * (x - left))
    }

    fn in_domain(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    fn lipschitz(&self) -> Option<Rational> {
        Some(self.lipschitz.clone())
    }

    fn feature_points(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        let _ = (lo, hi);
        vec![self.lo.clone(), self.hi.clone()]
    }
}

/// Greedy path from `σ` of total length `length`, always taking the smaller child (ties to `0`).
pub fn diagonalize_against(
    m: &dyn Martingale,
    sigma: &BitString,
    q: &Rational,
    length: usize,
) -> Result<BitString> {
    let start = m.value(sigma);
    if &start >= q {
        return Err(Error::ParameterOutOfRange {
            name: "M(σ) (must be below q)",
            value: start.to_string(),
        });
    }
    let mut tau = sigma.clone();
    while tau.len() < length {
        let a = m.value(&tau.child(false));
        let b = m.value(&tau.child(true));
        tau.push(b < a);
    }
    Ok(tau)
}

/// A forcing condition `⟨σ, M, q⟩`.
#[derive(Clone)]
pub struct Condition {
    pub sigma: BitString,
    pub m: MartingaleRef,
    pub q: Rational,
}

impl Condition {
    pub fn new(sigma: BitString, m: MartingaleRef, q: Rational) -> Result<Self> {
        let v = m.value(&sigma);
        if v >= q {
            return Err(Error::ParameterOutOfRange {
                name: "M(σ) (must be below q)",
                value: v.to_string(),
            });
        }
        Ok(Condition { sigma, m, q })
    }

    pub fn is_valid(&self) -> bool {
        self.m.value(&self.sigma) < self.q
    }
}

impl std::fmt::Debug for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "⟨{}, M, {}⟩", self.sigma, self.q)
    }
}

/// JSON form of a condition: `{sigma, table, q}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub sigma: BitString,
    pub table: TableMartingale,
    pub q: Rational,
}

impl ConditionSpec {
    pub fn to_condition(&self) -> Result<Condition> {
        Condition::new(
            self.sigma.clone(),
            Arc::new(self.table.clone()),
            self.q.clone(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub holds: bool,
    pub depth: usize,
    pub reason: Option<String>,
    pub counterexample: Option<BitString>,
}

/// Whether `c2 ≤ c1`, with the implication clause checked for all `τ ⪰ σ′` of length `≤ depth`.
pub fn condition_extends(c2: &Condition, c1: &Condition, depth: usize) -> ExtensionCheck {
    let fail = |reason: &str, cx: Option<BitString>| ExtensionCheck {
        holds: false,
        depth,
        reason: Some(reason.to_string()),
        counterexample: cx,
    };
    if !c2.is_valid() {
        return fail("M′(σ′) ≥ q′", Some(c2.sigma.clone()));
    }
    if c2.q > c1.q {
        return fail("q′ > q", None);
    }
    if !c1.sigma.is_prefix_of(&c2.sigma) {
        return fail("σ is not a prefix of σ′", None);
    }
    for l in c1.sigma.len()..=c2.sigma.len() {
        let p = c2.sigma.prefix(l);
        if c1.m.value(&p) >= c1.q {
            return fail("M(τ) ≥ q on the path from σ to σ′", Some(p));
        }
    }
    let nodes = c2.sigma.extensions_up_to(depth.max(c2.sigma.len()));
    let bad = nodes
        .par_iter()
        .find_first(|t| c2.m.value(t) < c2.q && c1.m.value(t) >= c1.q);
    if let Some(t) = bad {
        return fail("M′(τ) < q′ but M(τ) ≥ q", Some(t.clone()));
    }
    ExtensionCheck {
        holds: true,
        depth,
        reason: None,
        counterexample: None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Savings {
    pub tau: BitString,
    pub d_hat: Rational,
    pub r: Rational,
    pub s: Rational,
    pub search_depth: usize,
    pub gap: Inequality,
}

/// Finds `τ ⪰ σ` with `M(τ)` equal to the depth-bounded savings `d̂`, and `r < s` with
/// `s − d̂ ≤ ε(q − d̂)`. The search never passes through strings with `M ≥ q`.
pub fn savings_extension(cond: &Condition, eps: &Rational, search_depth: usize) -> Result<Savings> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::ParameterOutOfRange {
            name: "epsilon",
            value: eps.to_string(),
        });
    }
    let mut best: Option<(Rational, BitString)> = None;
    let mut frontier = vec![cond.sigma.clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in frontier {
            let v = cond.m.value(&s);
            if v >= cond.q {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| &v < b) {
                best = Some((v, s.clone()));
            }
            if s.len() < search_depth {
                next.push(s.child(false));
                next.push(s.child(true));
            }
        }
        frontier = next;
    }
    let Some((d_hat, tau)) = best else {
        return Err(Error::NoExtension {
            depth: search_depth,
            minimum: cond.m.value(&cond.sigma),
        });
    };
    let gap = eps * (&cond.q - &d_hat);
    let s = &d_hat + &gap;
    let r = &d_hat + &gap * Rational::new(1, 2);
    let ineq = Inequality::le("s − d̂ ≤ ε(q − d̂)", &s - &d_hat, eps * (&cond.q - &d_hat));
    Ok(Savings {
        tau,
        d_hat,
        r,
        s,
        search_depth,
        gap: ineq,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowReport {
    pub windows: usize,
    pub slow_windows: usize,
    pub infimum: Inequality,
    pub violations: Vec<Inequality>,
}

impl WindowReport {
    pub fn holds(&self) -> bool {
        self.infimum.holds && self.violations.is_empty()
    }
}

/// For `D = ⋃{Cyl ρ : ρ ⪰ τ, M(ρ) ≥ q}` and every dyadic window `[a,b] ⊆ Cyl τ` of depth
/// `≤ window_depth` whose slope under the integrated `M` is `< s`, checks `λ_D(a,b) ≤ ε`.
pub fn savings_windows(
    m: MartingaleRef,
    tau: &BitString,
    q: &Rational,
    d_hat: &Rational,
    s: &Rational,
    eps: &Rational,
    window_depth: usize,
    model_depth: usize,
) -> Result<WindowReport> {
    let f = martingale_to_function(m.clone(), tau, model_depth)?;
    let mut d_parts = Vec::new();
    let mut inf = m.value(tau);
    let mut stack = vec![tau.clone()];
    while let Some(rho) = stack.pop() {
        let v = m.value(&rho);
        inf = inf.min(v.clone());
        if &v >= q {
            d_parts.push(rho.cylinder());
        } else if rho.len() < model_depth {
            stack.push(rho.child(false));
            stack.push(rho.child(true));
        }
    }
    let d = IntervalSet::canonicalize(d_parts);
    let infimum = Inequality::new(
        "min_{ρ⪰τ} M(ρ) ≥ d̂",
        inf,
        crate::report::Relation::Ge,
        d_hat.clone(),
    );
    let depth = window_depth.max(tau.len());
    let cyl = tau.cylinder();
    let count = 1usize << (depth - tau.len());
    let step = Rational::pow2(depth as i64);
    let points: Vec<Rational> = (0..=count)
        .map(|j| &cyl.lo + &step * Rational::from(j as i64))
        .collect();
    let fv: Vec<Rational> = points
        .iter()
        .map(|x| f.exact(x).expect("inside cylinder"))
        .collect();
    let mut dcum = vec![Rational::zero()];
    for w in points.windows(2) {
        let last = dcum.last().unwrap().clone();
        dcum.push(last + d.measure_in(&w[0], &w[1]));
    }
    let mut windows = 0;
    let mut slow = 0;
    let mut violations = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            windows += 1;
            let len = &points[j] - &points[i];
            if &fv[j] - &fv[i] >= s * &len {
                continue;
            }
            slow += 1;
            let lam = &dcum[j] - &dcum[i];
            if lam > eps * &len {
                violations.push(Inequality::le(
                    format!("λ(D ∩ [{}, {}]) ≤ ε(b−a)", points[i], points[j]),
                    lam,
                    eps * &len,
                ));
            }
        }
    }
    Ok(WindowReport {
        windows,
        slow_windows: slow,
        infimum,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntiDebtMode {
    Case1,
    Case2,
}

/// Nonnegative strategy built from a slope martingale that may go into debt.
pub struct AntiDebt {
    pub sg: MartingaleRef,
    pub sigma: BitString,
    pub mode: AntiDebtMode,
    pub approx: ApproxMode,
    low_cache: Vec<Vec<Option<bool>>>,
}

const ANTI_DEBT_CACHE_SPAN: usize = 16;

impl AntiDebt {
    pub fn new(
        sg: MartingaleRef,
        sigma: BitString,
        mode: AntiDebtMode,
        approx: ApproxMode,
    ) -> Self {
        let mut strat = AntiDebt {
            sg,
            sigma,
            mode,
            approx,
            low_cache: Vec::new(),
        };
        let base = strat.sigma.clone();
        strat.low_cache = (0..ANTI_DEBT_CACHE_SPAN)
            .map(|l| {
                (0..1u64 << l)
                    .into_par_iter()
                    .map(|j| {
                        strat.low_child_uncached(
                            &base.concat(&BitString::from_index(&BigInt::from(j), l)),
                        )
                    })
                    .collect()
            })
            .collect();
        strat
    }

    /// The child `v` whose first approximant is `≤ 1`, preferring `0`.
    fn low_child(&self, tau: &BitString) -> Option<bool> {
        if self.sigma.is_prefix_of(tau) {
            let rel = tau.len() - self.sigma.len();
            if let Some(level) = self.low_cache.get(rel) {
                let j = tau.bits()[self.sigma.len()..]
                    .iter()
                    .fold(0u64, |acc, &b| (acc << 1) | b as u64);
                return level[j as usize];
            }
        }
        self.low_child_uncached(tau)
    }

    fn low_child_uncached(&self, tau: &BitString) -> Option<bool> {
        [false, true]
            .into_iter()
            .find(|&v| approximate(&*self.sg, &tau.child(v), 0, self.approx) <= Rational::one())
    }

    fn on_extension(&self, s: &BitString) -> Rational {
        let two = Rational::from(2);
        match self.mode {
            AntiDebtMode::Case1 => {
                let mut v = Rational::one();
                for l in self.sigma.len()..s.len() {
                    if !v.is_positive() {
                        break;
                    }
                    let tau = s.prefix(l);
                    let next = s.bits()[l];
                    if let Some(low) = self.low_child(&tau) {
                        v = if next == low {
                            Rational::zero()
                        } else {
                            v * &two
                        };
                    }
                }
                v
            }
            AntiDebtMode::Case2 => {
                let mut v = self.sg.value(&self.sigma);
                for l in self.sigma.len()..s.len() {
                    let tau = s.prefix(l);
                    if !v.is_positive() || self.low_child(&tau).is_some() {
                        break;
                    }
                    v = self.sg.value(&s.prefix(l + 1));
                }
                v
            }
        }
    }
}

impl Martingale for AntiDebt {
    fn value(&self, s: &BitString) -> Rational {
        if self.sigma.is_prefix_of(s) {
            self.on_extension(s)
        } else if s.is_prefix_of(&self.sigma) {
            self.on_extension(&self.sigma) * Rational::pow2((self.sigma.len() - s.len()) as i64)
        } else {
            Rational::zero()
        }
    }
}

/// Builds the nonnegative strategy for the chosen case after checking, to `depth`, that the
/// low-child pattern matches the mode.
pub fn anti_debt_strategy(
    sg: MartingaleRef,
    sigma: &BitString,
    mode: AntiDebtMode,
    depth: usize,
    approx: ApproxMode,
) -> Result<AntiDebt> {
    let strat = AntiDebt::new(sg, sigma.clone(), mode, approx);
    let nodes: Vec<BitString> = sigma
        .extensions_up_to(depth.max(sigma.len()))
        .into_iter()
        .filter(|t| t.len() < depth)
        .collect();
    let low = nodes.iter().find(|t| strat.low_child(t).is_some()).cloned();
    match (mode, low) {
        (AntiDebtMode::Case1, None) => Err(Error::ModeMismatch {
            mode: "case1",
            detail: format!("no string of length < {depth} extending {sigma} has a low child"),
        }),
        (AntiDebtMode::Case2, Some(t)) => Err(Error::ModeMismatch {
            mode: "case2",
            detail: format!("{t} has a child with first approximant ≤ 1"),
        }),
        _ => {
            if mode == AntiDebtMode::Case2 {
                let v = strat.sg.value(sigma);
                if v.is_negative() {
                    return Err(Error::NegativeMartingale {
                        string: sigma.to_string(),
                        value: v,
                    });
                }
            }
            Ok(strat)
        }
    }
}

/// One step of the finite forcing driver.
#[derive(Clone)]
pub enum ForcingStep {
    /// Extend `σ` to at least this length along a path where `M` stays below `q`.
    Length(usize),
    /// Absorb a martingale with initial capital 1.
    Absorb(MartingaleRef),
    /// Move to the savings point of the capped martingale.
    Save { eps: Rational, search_depth: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForcingRecord {
    pub step: String,
    pub sigma: BitString,
    pub q: Rational,
    pub extends: ExtensionCheck,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub savings: Option<Savings>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForcingTrace {
    pub records: Vec<ForcingRecord>,
    pub prefix: BitString,
}

impl ForcingTrace {
    pub fn all_hold(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.extends.holds && r.savings.as_ref().is_none_or(|s| s.gap.holds))
    }
}

/// Meets the given dense sets in order, checking each extension to `check_depth`.
pub fn force(
    start: Condition,
    steps: &[ForcingStep],
    check_depth: usize,
) -> Result<(ForcingTrace, Condition)> {
    let mut cur = start;
    let mut records = Vec::new();
    for step in steps {
        let (label, next, savings) = match step {
            ForcingStep::Length(n) => {
                let tau =
                    diagonalize_against(&*cur.m, &cur.sigma, &cur.q, (*n).max(cur.sigma.len()))?;
                (
                    "length".to_string(),
                    Condition::new(tau, cur.m.clone(), cur.q.clone())?,
                    None,
                )
            }
            ForcingStep::Absorb(n) => {
                let delta = (&cur.q - cur.m.value(&cur.sigma)) * Rational::new(1, 2);
                let combined = combine_scaled(cur.m.clone(), n.clone(), &cur.sigma, &delta)?;
                (
                    "absorb".to_string(),
                    Condition::new(cur.sigma.clone(), Arc::new(combined), cur.q.clone())?,
                    None,
                )
            }
            ForcingStep::Save { eps, search_depth } => {
                let capped: MartingaleRef = Arc::new(Capped::new(
                    cur.m.clone(),
                    &cur.q + Rational::one(),
                    ApproxMode::Floor,
                ));
                let capped_cond = Condition::new(cur.sigma.clone(), capped.clone(), cur.q.clone())?;
                let ext = condition_extends(&capped_cond, &cur, check_depth);
                records.push(ForcingRecord {
                    step: "cap".into(),
                    sigma: capped_cond.sigma.clone(),
                    q: capped_cond.q.clone(),
                    extends: ext,
                    savings: None,
                });
                cur = capped_cond;
                let sv = savings_extension(&cur, eps, *search_depth)?;
                let next = Condition::new(sv.tau.clone(), capped, sv.r.clone())?;
                ("save".to_string(), next, Some(sv))
            }
        };
        let ext = condition_extends(&next, &cur, check_depth);
        records.push(ForcingRecord {
            step: label,
            sigma: next.sigma.clone(),
            q: next.q.clone(),
            extends: ext,
            savings,
        });
        cur = next;
    }
    let trace = ForcingTrace {
        records,
        prefix: cur.sigma.clone(),
    };
    Ok((trace, cur))
}
