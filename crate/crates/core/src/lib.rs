//! Exact finite-stage verification of density, porosity, randomness-test,
//! martingale and Denjoy-alternative constructions on the unit interval.

pub mod calculus;
pub mod counterexample;
pub mod density;
pub mod descriptor;
pub mod error;
pub mod gen;
pub mod interval;
pub mod martingale;
pub mod numeric;
pub mod oracle;
pub mod porosity;
pub mod randomness;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalSet, StagedOpenEnumeration};
pub use numeric::{BitString, Expansion, Rational};
pub use report::{Inequality, Relation};
