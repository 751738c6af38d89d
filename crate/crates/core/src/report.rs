//! Audit records shared by every verification routine.

use serde::{Deserialize, Serialize};

use crate::numeric::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

/// One exact inequality with both sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub relation: Relation,
    pub holds: bool,
}

impl Inequality {
    pub fn new(label: impl Into<String>, lhs: Rational, relation: Relation, rhs: Rational) -> Self {
        let holds = match relation {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        };
        Inequality {
            label: label.into(),
            lhs,
            rhs,
            relation,
            holds,
        }
    }

    pub fn le(label: impl Into<String>, lhs: Rational, rhs: Rational) -> Self {
        Inequality::new(label, lhs, Relation::Le, rhs)
    }

    pub fn eq(label: impl Into<String>, lhs: Rational, rhs: Rational) -> Self {
        Inequality::new(label, lhs, Relation::Eq, rhs)
    }
}

pub fn all_hold(items: &[Inequality]) -> bool {
    items.iter().all(|i| i.holds)
}

pub fn first_violation(items: &[Inequality]) -> Option<&Inequality> {
    items.iter().find(|i| !i.holds)
}
