//! Declarative input generation.
//!
//! A [`GeneratorSpec`] describes the shape of a valid problem input: scalar
//! ranges, arrays whose length is another variable, strings over an alphabet
//! and literal lines, optionally repeated per sub-case under a leading count.
//! From it we derive reproducible random cases addressed by `(seed, index)`
//! and a fixed list of boundary cases.

mod dsl;
mod edge;
mod random;
mod value;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dsl::parse_generator_spec;
pub use edge::generate_edge_cases;
pub use random::{generate_random, generate_random_batch};
pub use value::{parse_input, GeneratedInput, Value};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenSpecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: i64,
    pub max: i64,
    /// Upper bound used while stress testing; never above `max`.
    pub stress_max: Option<i64>,
}

impl IntRange {
    pub fn new(min: i64, max: i64) -> Self {
        Self {
            min,
            max,
            stress_max: None,
        }
    }

    /// The upper bound generation actually uses.
    pub fn effective_max(&self) -> i64 {
        match self.stress_max {
            Some(s) => s.min(self.max),
            None => self.max,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.min <= v && v <= self.effective_max()
    }

    /// Number of values in the effective range, saturating.
    pub(crate) fn span(&self) -> u128 {
        (self.effective_max() as i128 - self.min as i128 + 1).max(0) as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    OwnLine,
    /// Appended to the previous line, separated by one space.
    SameLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeclKind {
    Int(IntRange),
    Array {
        len_ref: String,
        elems: IntRange,
        sorted: bool,
        distinct: bool,
    },
    Str {
        len_ref: String,
        alphabet: Vec<char>,
    },
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    /// `None` for literal lines.
    pub name: Option<String>,
    pub kind: DeclKind,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiCase {
    pub count_var: String,
    pub count: IntRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub multi_case: Option<MultiCase>,
    pub decls: Vec<VarDecl>,
}

impl GeneratorSpec {
    pub(crate) fn decl_index(&self, name: &str) -> Option<usize> {
        self.decls
            .iter()
            .position(|d| d.name.as_deref() == Some(name))
    }

    pub(crate) fn is_length_var(&self, name: &str) -> bool {
        self.decls.iter().any(|d| match &d.kind {
            DeclKind::Array { len_ref, .. } | DeclKind::Str { len_ref, .. } => len_ref == name,
            _ => false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseOrigin {
    Random { seed: u64, index: u64 },
    Edge { strategy: String },
    Sample { index: usize },
    Shrunk { parent: Box<CaseOrigin> },
}

impl fmt::Display for CaseOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseOrigin::Random { seed, index } => write!(f, "random(seed={seed}, index={index})"),
            CaseOrigin::Edge { strategy } => write!(f, "edge({strategy})"),
            CaseOrigin::Sample { index } => write!(f, "sample({index})"),
            CaseOrigin::Shrunk { parent } => write!(f, "shrunk({parent})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub origin: CaseOrigin,
}

impl TestCase {
    /// Builds a case, normalizing the input to end in exactly one newline.
    pub fn new(input: impl Into<String>, origin: CaseOrigin) -> Self {
        Self {
            input: normalize_input(&input.into()),
            origin,
        }
    }
}

pub(crate) fn normalize_input(text: &str) -> String {
    let mut s = text.trim_end_matches(['\n', '\r', ' ', '\t']).to_string();
    s.push('\n');
    s
}
