//! Problem specification: statement, limits, samples and comparator.
//!
//! A problem lives in a single TOML document (conventionally `problem.spec`).
//! Relative paths inside it (`generator`, `comparator.checker`) are kept as
//! written; [`ProblemSpec::resolve_paths`] anchors them to a directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid problem spec: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub time_ms: u64,
    pub memory_mb: u64,
}

impl ResourceLimits {
    pub fn new(time_ms: u64, memory_mb: u64) -> Self {
        Self { time_ms, memory_mb }
    }

    /// Same memory, time scaled by `factor`.
    pub fn scaled_time(self, factor: u64) -> Self {
        Self {
            time_ms: self.time_ms.saturating_mul(factor.max(1)),
            memory_mb: self.memory_mb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCase {
    pub input: String,
    #[serde(rename = "output")]
    pub expected_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CompareMode {
    Exact,
    Tokens,
    FloatEps { epsilon: f64 },
    Checker { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSpec {
    pub mode: CompareMode,
    pub case_insensitive: bool,
}

impl Default for ComparatorSpec {
    fn default() -> Self {
        Self {
            mode: CompareMode::Tokens,
            case_insensitive: false,
        }
    }
}

impl ComparatorSpec {
    pub fn tokens() -> Self {
        Self::default()
    }

    pub fn exact() -> Self {
        Self {
            mode: CompareMode::Exact,
            case_insensitive: false,
        }
    }

    pub fn float_eps(epsilon: f64) -> Self {
        Self {
            mode: CompareMode::FloatEps { epsilon },
            case_insensitive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub statement: String,
    pub input_description: String,
    pub output_description: String,
    pub limits: ResourceLimits,
    pub samples: Vec<SampleCase>,
    pub comparator: ComparatorSpec,
    pub generator_path: PathBuf,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.limits.time_ms == 0 {
            return Err(ProblemError::Validation("limits.time_ms > 0".into()));
        }
        if self.limits.memory_mb == 0 {
            return Err(ProblemError::Validation("limits.memory_mb > 0".into()));
        }
        if self.samples.is_empty() {
            return Err(ProblemError::Validation("samples non-empty".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| s.input.trim().is_empty()) {
            return Err(ProblemError::Validation(format!(
                "samples[{i}].input non-empty"
            )));
        }
        if let CompareMode::FloatEps { epsilon } = self.comparator.mode {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(ProblemError::Validation(
                    "comparator.epsilon >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Makes the generator and checker paths absolute relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if self.generator_path.is_relative() {
            self.generator_path = base.join(&self.generator_path);
        }
        if let CompareMode::Checker { path } = &mut self.comparator.mode {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

// On-disk shape. Field names follow the prompt labels in snake_case.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    id: String,
    statement: String,
    input_description: String,
    output_description: String,
    time_ms: u64,
    memory_mb: u64,
    samples: Vec<SampleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comparator: Option<ComparatorDoc>,
    generator: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleDoc {
    input: String,
    output: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparatorDoc {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checker: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    case_insensitive: Option<bool>,
}

fn comparator_from_doc(doc: ComparatorDoc) -> Result<ComparatorSpec, ProblemError> {
    let invalid = |m: &str| ProblemError::Validation(m.to_string());
    let mode = match doc.mode.as_str() {
        "exact" | "tokens" => {
            if doc.epsilon.is_some() {
                return Err(invalid("comparator.epsilon present iff mode is float_eps"));
            }
            if doc.checker.is_some() {
                return Err(invalid("comparator.checker present iff mode is checker"));
            }
            if doc.mode == "exact" {
                CompareMode::Exact
            } else {
                CompareMode::Tokens
            }
        }
        "float_eps" => {
            if doc.checker.is_some() {
                return Err(invalid("comparator.checker present iff mode is checker"));
            }
            let epsilon = doc
                .epsilon
                .ok_or_else(|| invalid("comparator.epsilon present iff mode is float_eps"))?;
            CompareMode::FloatEps { epsilon }
        }
        "checker" => {
            if doc.epsilon.is_some() {
                return Err(invalid("comparator.epsilon present iff mode is float_eps"));
            }
            let path = doc
                .checker
                .ok_or_else(|| invalid("comparator.checker present iff mode is checker"))?;
            CompareMode::Checker { path }
        }
        other => {
            return Err(ProblemError::Validation(format!(
                "comparator.mode must be one of exact, tokens, float_eps, checker (got {other:?})"
            )))
        }
    };
    Ok(ComparatorSpec {
        mode,
        case_insensitive: doc.case_insensitive.unwrap_or(false),
    })
}

fn comparator_to_doc(spec: &ComparatorSpec) -> ComparatorDoc {
    let (mode, epsilon, checker) = match &spec.mode {
        CompareMode::Exact => ("exact", None, None),
        CompareMode::Tokens => ("tokens", None, None),
        CompareMode::FloatEps { epsilon } => ("float_eps", Some(*epsilon), None),
        CompareMode::Checker { path } => ("checker", None, Some(path.clone())),
    };
    ComparatorDoc {
        mode: mode.to_string(),
        epsilon,
        checker,
        case_insensitive: spec.case_insensitive.then_some(true),
    }
}

/// Parses and validates a problem document from text. `origin` is only used
/// in error messages.
pub fn parse_problem(text: &str, origin: &Path) -> Result<ProblemSpec, ProblemError> {
    let doc: ProblemDoc = toml::from_str(text).map_err(|e| ProblemError::Parse {
        path: origin.to_path_buf(),
        message: e.message().to_string(),
    })?;
    let comparator = match doc.comparator {
        Some(c) => comparator_from_doc(c)?,
        None => ComparatorSpec::default(),
    };
    let spec = ProblemSpec {
        id: doc.id,
        statement: doc.statement,
        input_description: doc.input_description,
        output_description: doc.output_description,
        limits: ResourceLimits::new(doc.time_ms, doc.memory_mb),
        samples: doc
            .samples
            .into_iter()
            .map(|s| SampleCase {
                input: s.input,
                expected_output: s.output,
            })
            .collect(),
        comparator,
        generator_path: doc.generator,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec, ProblemError> {
    let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text, path)
}

pub fn problem_to_string(spec: &ProblemSpec) -> String {
    let doc = ProblemDoc {
        id: spec.id.clone(),
        statement: spec.statement.clone(),
        input_description: spec.input_description.clone(),
        output_description: spec.output_description.clone(),
        time_ms: spec.limits.time_ms,
        memory_mb: spec.limits.memory_mb,
        samples: spec
            .samples
            .iter()
            .map(|s| SampleDoc {
                input: s.input.clone(),
                output: s.expected_output.clone(),
            })
            .collect(),
        comparator: Some(comparator_to_doc(&spec.comparator)),
        generator: spec.generator_path.clone(),
    };
    toml::to_string(&doc).expect("problem document always serializes")
}

pub fn save_problem(spec: &ProblemSpec, path: &Path) -> Result<(), ProblemError> {
    fs::write(path, problem_to_string(spec)).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The shared problem preamble used by every prompt.
pub fn render_problem_context(spec: &ProblemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Problem Statement:\n{}\n", spec.statement.trim_end());
    let _ = writeln!(out, "Time Limit: {} ms", spec.limits.time_ms);
    let _ = writeln!(out, "Memory Limit: {} megabytes\n", spec.limits.memory_mb);
    let _ = writeln!(out, "Input:\n{}\n", spec.input_description.trim_end());
    let _ = writeln!(out, "Output:\n{}", spec.output_description.trim_end());
    for (i, sample) in spec.samples.iter().enumerate() {
        let n = i + 1;
        let _ = write!(
            out,
            "\nSample Input {n}:\n{}\nSample Output {n}:\n{}\n",
            sample.input.trim_end(),
            sample.expected_output.trim_end()
        );
    }
    out
}
