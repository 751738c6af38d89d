use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::counterexample::{build_counterexample, default_enumeration, OverlapPolicy};
use crate::error::Result;
use crate::interval::Interval;
use crate::martingale::{martingale_to_function, TableMartingale};
use crate::numeric::{BitString, Rational};
use crate::oracle::{Oracle, PiecewiseLinear, Polynomial};

/// JSON descriptor of a built-in point-function oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OracleSpec {
    /// `Σ coeffs[i]·x^i`.
    Polynomial { coeffs: Vec<Rational> },
    /// Linear interpolation of a breakpoint table, defined between the first and last abscissa.
    PiecewiseLinear { points: Vec<(Rational, Rational)> },
    /// Spike function of a stage list; the built-in enumeration when `intervals` is absent.
    Counterexample {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intervals: Option<Vec<Interval>>,
        #[serde(default = "default_increases")]
        increases: usize,
        #[serde(default)]
        policy: OverlapPolicy,
    },
    /// Integral of a value table over `Cyl root`, linear on cells of depth `depth`.
    Integrated {
        table: TableMartingale,
        #[serde(default)]
        root: BitString,
        depth: usize,
    },
}

fn default_increases() -> usize {
    24
}

impl OracleSpec {
    pub fn build(&self) -> Result<Oracle> {
        Ok(match self {
            OracleSpec::Polynomial { coeffs } => Arc::new(Polynomial::new(coeffs.clone())),
            OracleSpec::PiecewiseLinear { points } => {
                Arc::new(PiecewiseLinear::new(points.clone())?)
            }
            OracleSpec::Counterexample {
                intervals,
                increases,
                policy,
            } => {
                let list = intervals
                    .clone()
                    .unwrap_or_else(|| default_enumeration(*increases));
                Arc::new(build_counterexample(&list, *policy)?.2)
            }
            OracleSpec::Integrated { table, root, depth } => Arc::new(martingale_to_function(
                Arc::new(table.clone()),
                root,
                *depth,
            )?),
        })
    }
}
