//! Mamdani fuzzy inference.
//!
//! Terms are piecewise linear (two-parameter triangles peaking at the
//! midpoint, and left/right shoulders). An engine maps crisp inputs to one
//! crisp output using min for AND, max for OR and aggregation, clipping of
//! consequents and centroid defuzzification over a uniform grid. Engines can
//! be stacked into a hierarchy ([`HfsGraph`]) where lower crisp outputs feed
//! upper inputs.

pub mod builtin;
mod engine;
mod hfs;
mod parse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{builtin_engine, BuiltinKind, BuiltinSystem};
pub use engine::{infer, Expr, FuzzyEngine, Inference, MamdaniRule, DEFUZZ_POINTS};
pub use hfs::{hfs_infer, HfsGraph, HfsNode, HfsSource};
pub use parse::{engine_from_text, engine_to_text};

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("term {label:?}: parameters must satisfy a < b (got {a}, {b})")]
    BadTerm { label: String, a: f64, b: f64 },
    #[error("variable {variable:?}: term {label:?} lies outside the universe")]
    TermOutsideUniverse { variable: String, label: String },
    #[error("variable {variable:?}: duplicate term {label:?}")]
    DuplicateTerm { variable: String, label: String },
    #[error("variable {0:?} has no terms")]
    NoTerms(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("variable {variable:?} has no term {label:?}")]
    UnknownTerm { variable: String, label: String },
    #[error("input {0:?} is not assigned")]
    MissingInput(String),
    #[error("input {0:?} is assigned more than once")]
    DuplicateInput(String),
    #[error("input {name:?} is not finite ({value})")]
    NonFinite { name: String, value: f64 },
    #[error("hierarchy: {0}")]
    Graph(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TermShape {
    /// Zero outside `[a, b]`, one at `(a + b) / 2`.
    Triangular(f64, f64),
    /// One up to `a`, falling to zero at `b`.
    ShoulderLeft(f64, f64),
    /// Zero up to `a`, rising to one at `b`.
    ShoulderRight(f64, f64),
}

impl TermShape {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            TermShape::Triangular(a, b) | TermShape::ShoulderLeft(a, b) | TermShape::ShoulderRight(a, b) => (a, b),
        }
    }

    /// Representative point where membership is one.
    pub fn core(&self) -> f64 {
        match *self {
            TermShape::Triangular(a, b) => 0.5 * (a + b),
            TermShape::ShoulderLeft(a, _) => a,
            TermShape::ShoulderRight(_, b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTerm {
    pub label: String,
    pub shape: TermShape,
}

impl FuzzyTerm {
    pub fn new(label: &str, shape: TermShape) -> Result<Self, FuzzyError> {
        let (a, b) = shape.bounds();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(FuzzyError::BadTerm {
                label: label.into(),
                a,
                b,
            });
        }
        Ok(Self {
            label: label.into(),
            shape,
        })
    }

    pub fn triangular(label: &str, a: f64, b: f64) -> Self {
        Self::new(label, TermShape::Triangular(a, b)).expect("valid built-in term")
    }

    pub fn shoulder_left(label: &str, a: f64, b: f64) -> Self {
        Self::new(label, TermShape::ShoulderLeft(a, b)).expect("valid built-in term")
    }

    pub fn shoulder_right(label: &str, a: f64, b: f64) -> Self {
        Self::new(label, TermShape::ShoulderRight(a, b)).expect("valid built-in term")
    }

    pub fn membership(&self, x: f64) -> f64 {
        membership(&self.shape, x)
    }
}

/// Degree of membership of `x` in a term shape.
pub fn membership(shape: &TermShape, x: f64) -> f64 {
    match *shape {
        TermShape::Triangular(a, b) => {
            if x <= a || x >= b {
                return 0.0;
            }
            let mid = 0.5 * (a + b);
            if x <= mid {
                (x - a) / (mid - a)
            } else {
                (b - x) / (b - mid)
            }
        }
        TermShape::ShoulderLeft(a, b) => {
            if x <= a {
                1.0
            } else if x >= b {
                0.0
            } else {
                (b - x) / (b - a)
            }
        }
        TermShape::ShoulderRight(a, b) => {
            if x <= a {
                0.0
            } else if x >= b {
                1.0
            } else {
                (x - a) / (b - a)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe: (f64, f64),
    pub terms: Vec<FuzzyTerm>,
}

impl LinguisticVariable {
    pub fn new(name: &str, universe: (f64, f64), terms: Vec<FuzzyTerm>) -> Result<Self, FuzzyError> {
        if terms.is_empty() {
            return Err(FuzzyError::NoTerms(name.into()));
        }
        let (lo, hi) = universe;
        for (i, t) in terms.iter().enumerate() {
            let (a, b) = t.shape.bounds();
            if a < lo || b > hi {
                return Err(FuzzyError::TermOutsideUniverse {
                    variable: name.into(),
                    label: t.label.clone(),
                });
            }
            if terms[..i].iter().any(|o| o.label == t.label) {
                return Err(FuzzyError::DuplicateTerm {
                    variable: name.into(),
                    label: t.label.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            universe,
            terms,
        })
    }

    pub fn term(&self, label: &str) -> Option<&FuzzyTerm> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    /// Index of the term with the highest membership at `x` (first wins on
    /// ties); `None` when no term is active.
    pub fn best_term(&self, x: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, t) in self.terms.iter().enumerate() {
            let m = t.membership(x);
            if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
                best = Some((i, m));
            }
        }
        best.map(|(i, _)| i)
    }
}
