use thiserror::Error;

use crate::numeric::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed rational {0:?}")]
    ParseRational(String),
    #[error("malformed bit string {0:?}")]
    ParseBitString(String),
    #[error("{value} is a dyadic rational; select an expansion explicitly")]
    AmbiguousExpansion { value: Rational },
    #[error("value {value} outside [0, 1]")]
    OutOfUnitInterval { value: Rational },
    #[error("interval endpoints out of order: [{lo}, {hi}]")]
    InvertedInterval { lo: Rational, hi: Rational },
    #[error("window has zero length")]
    ZeroLengthWindow,
    #[error("window parameters must be positive")]
    NonPositiveWindow,
    #[error("stage {stage} beyond enumeration of length {len}")]
    StageOutOfRange { stage: usize, len: usize },
    #[error("parameter {name} = {value} out of range")]
    ParameterOutOfRange { name: &'static str, value: String },
    #[error("interval ({lo}, {hi}) is not a dyadic cylinder")]
    NotACylinder { lo: Rational, hi: Rational },
    #[error("component {component} is not prefix-free")]
    NotPrefixFree { component: usize },
    #[error(
        "g({stage}) undefined: no later stage lowers the density around the point below epsilon"
    )]
    SearchUndefined { stage: usize },
    #[error("oracle has no value at {point}")]
    OutsideDomain { point: Rational },
    #[error("oracle does not provide exact values")]
    InexactOracle,
    #[error("oracle declares no modulus of continuity")]
    MissingModulus,
    #[error("martingale value {value} at {string:?} is negative")]
    NegativeMartingale { string: String, value: Rational },
    #[error("mode {mode} inconsistent with the detected pattern: {detail}")]
    ModeMismatch { mode: &'static str, detail: String },
    #[error("no qualifying extension within depth {depth}; minimum reached {minimum}")]
    NoExtension { depth: usize, minimum: Rational },
    #[error("no straddling pair in the domain at depth {depth}")]
    NoStraddlingPair { depth: u32 },
    #[error("intersection of the class with the window is empty")]
    EmptyIntersection,
    #[error("function decreases on the class: h({x}) > h({y})")]
    MonotonicityViolation { x: Rational, y: Rational },
    #[error("budget exhausted at stage {stage}; achieved gap {gap}")]
    BudgetExhausted { stage: usize, gap: Rational },
    #[error("intervals {first} and {second} overlap")]
    OverlappingIntervals { first: usize, second: usize },
    #[error("requested k = {k} not realized by the enumeration")]
    NotRealized { k: u32 },
    #[error("invalid instance: {0}")]
    Schema(String),
}
