//! Functions known through rational sample points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rational;

/// A function on a set of rationals, answering `f(x)` to within `2^-n`.
pub trait PointFunction: Send + Sync {
    /// Exact value, when the oracle can produce one.
    fn exact(&self, x: &Rational) -> Option<Rational>;

    fn in_domain(&self, x: &Rational) -> bool {
        x.in_unit()
    }

    /// A rational within `2^-n` of `f(x)`.
    fn sample(&self, x: &Rational, n: u32) -> Result<Rational> {
        let _ = n;
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain { point: x.clone() });
        }
        self.exact(x).ok_or(Error::InexactOracle)
    }

    /// Lipschitz constant on the domain, if declared.
    fn lipschitz(&self) -> Option<Rational> {
        None
    }

    /// Points in `[lo, hi]` where the function changes slope or attains local extrema.
    fn feature_points(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        let _ = (lo, hi);
        Vec::new()
    }
}

pub type Oracle = Arc<dyn PointFunction>;

/// `Σ a_k x^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        Polynomial { coeffs }
    }

    pub fn identity() -> Self {
        Polynomial::new(vec![Rational::zero(), Rational::one()])
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, a| acc * x + a)
    }
}

impl PointFunction for Polynomial {
    fn exact(&self, x: &Rational) -> Option<Rational> {
        Some(self.eval(x))
    }

    fn lipschitz(&self) -> Option<Rational> {
        Some(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a.abs() * Rational::from(k as i64))
                .sum(),
        )
    }
}

/// Linear interpolation through sorted breakpoints; the domain is `[x_0, x_last]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub points: Vec<(Rational, Rational)>,
}

impl PiecewiseLinear {
    pub fn new(mut points: Vec<(Rational, Rational)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.cmp(&b.0));
        if points.is_empty() || points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Schema(
                "breakpoints must be nonempty with distinct abscissae".into(),
            ));
        }
        if points.iter().any(|p| !p.0.in_unit()) {
            return Err(Error::Schema("breakpoints must lie in [0,1]".into()));
        }
        Ok(PiecewiseLinear { points })
    }

    /// `|x − c|` on `[0, 1]`.
    pub fn abs_at(c: Rational) -> Self {
        let one = Rational::one();
        PiecewiseLinear::new(vec![
            (Rational::zero(), c.clone()),
            (c.clone(), Rational::zero()),
            (one.clone(), one - c),
        ])
        .expect("valid breakpoints")
    }
}

impl PointFunction for PiecewiseLinear {
    fn exact(&self, x: &Rational) -> Option<Rational> {
        if !self.in_domain(x) {
            return None;
        }
        let i = self.points.partition_point(|p| &p.0 < x);
        if i < self.points.len() && &self.points[i].0 == x {
            return Some(self.points[i].1.clone());
        }
        let (x0, y0) = &self.points[i - 1];
        let (x1, y1) = &self.points[i];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    fn in_domain(&self, x: &Rational) -> bool {
        &self.points[0].0 <= x && x <= &self.points[self.points.len() - 1].0
    }

    fn lipschitz(&self) -> Option<Rational> {
        Some(
            self.points
                .windows(2)
                .map(|w| ((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).abs())
                .max()
                .unwrap_or_else(Rational::zero),
        )
    }

    fn feature_points(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        self.points
            .iter()
            .map(|p| p.0.clone())
            .filter(|x| lo <= x && x <= hi)
            .collect()
    }
}

/// Answers only to the requested precision: `f(x)` rounded down to a multiple of `2^-n`.
pub struct Truncating<F> {
    pub inner: F,
}

impl<F: PointFunction> PointFunction for Truncating<F> {
    fn exact(&self, _x: &Rational) -> Option<Rational> {
        None
    }

    fn in_domain(&self, x: &Rational) -> bool {
        self.inner.in_domain(x)
    }

    fn sample(&self, x: &Rational, n: u32) -> Result<Rational> {
        Ok(self.inner.sample(x, n + 1)?.floor_dyadic(n + 1))
    }

    fn lipschitz(&self) -> Option<Rational> {
        self.inner.lipschitz()
    }

    fn feature_points(&self, lo: &Rational, hi: &Rational) -> Vec<Rational> {
        self.inner.feature_points(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    #[test]
    fn polynomial_eval() {
        let p = Polynomial::new(vec![q(0, 1), q(1, 1), q(-1, 1)]);
        assert_eq!(p.eval(&q(1, 2)), q(1, 4));
        assert_eq!(p.lipschitz(), Some(q(3, 1)));
    }

    #[test]
    fn piecewise_eval() {
        let f = PiecewiseLinear::abs_at(q(1, 2));
        assert_eq!(f.exact(&q(1, 4)), Some(q(1, 4)));
        assert_eq!(f.exact(&q(3, 4)), Some(q(1, 4)));
        assert_eq!(f.exact(&q(1, 2)), Some(q(0, 1)));
        assert_eq!(f.lipschitz(), Some(q(1, 1)));
        assert!(f.sample(&q(3, 2), 0).is_err());
    }

    #[test]
    fn truncating_precision() {
        let f = Truncating {
            inner: Polynomial::new(vec![q(1, 3)]),
        };
        for n in 0..10 {
            let v = f.sample(&q(1, 2), n).unwrap();
            assert!((v - q(1, 3)).abs() <= Rational::pow2(n as i64));
        }
    }
}
