use std::fs;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::problem::{CompareMode, ComparatorSpec};
use crate::sandbox::exec::{execute, Exit, ExecRequest};

const CHECKER_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("cannot run checker {path}: {message}")]
    Spawn { path: String, message: String },
    #[error("checker timed out")]
    Timeout,
    #[error("checker failed with {status}: {stderr}")]
    Crashed { status: String, stderr: String },
}

/// Output equivalence without the test input. Checker mode receives an
/// empty input file; use [`compare_with_input`] when the input matters.
pub fn compare_outputs(expected: &str, actual: &str, cmp: &ComparatorSpec) -> Result<bool, CheckerError> {
    compare_with_input("", expected, actual, cmp)
}

pub fn compare_with_input(
    input: &str,
    expected: &str,
    actual: &str,
    cmp: &ComparatorSpec,
) -> Result<bool, CheckerError> {
    let fold = |s: &str| {
        if cmp.case_insensitive {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };
    match &cmp.mode {
        CompareMode::Exact => Ok(fold(expected) == fold(actual)),
        CompareMode::Tokens => {
            let (e, a) = (fold(expected), fold(actual));
            Ok(e.split_whitespace().eq(a.split_whitespace()))
        }
        CompareMode::FloatEps { epsilon } => {
            let (e, a) = (fold(expected), fold(actual));
            let mut et = e.split_whitespace();
            let mut at = a.split_whitespace();
            loop {
                match (et.next(), at.next()) {
                    (None, None) => return Ok(true),
                    (Some(x), Some(y)) => {
                        if !tokens_close(x, y, *epsilon) {
                            return Ok(false);
                        }
                    }
                    _ => return Ok(false),
                }
            }
        }
        CompareMode::Checker { path } => run_checker(path, input, expected, actual),
    }
}

// Absolute tolerance. Integer pairs are compared exactly so large values do
// not collapse through f64 rounding.
fn tokens_close(x: &str, y: &str, epsilon: f64) -> bool {
    if x == y {
        return true;
    }
    if let (Ok(a), Ok(b)) = (x.parse::<i128>(), y.parse::<i128>()) {
        return ((a - b).unsigned_abs() as f64) <= epsilon;
    }
    match (x.parse::<f64>(), y.parse::<f64>()) {
        (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => (a - b).abs() <= epsilon,
        _ => false,
    }
}

fn run_checker(path: &Path, input: &str, expected: &str, actual: &str) -> Result<bool, CheckerError> {
    let spawn_err = |message: String| CheckerError::Spawn {
        path: path.display().to_string(),
        message,
    };
    let dir = tempfile::Builder::new()
        .prefix("depro-check-")
        .tempdir()
        .map_err(|e| spawn_err(e.to_string()))?;
    let files = [("input.txt", input), ("expected.txt", expected), ("actual.txt", actual)];
    let mut argv = vec![path.to_string_lossy().into_owned()];
    for (name, body) in files {
        let p = dir.path().join(name);
        fs::write(&p, body).map_err(|e| spawn_err(e.to_string()))?;
        argv.push(p.to_string_lossy().into_owned());
    }
    let outcome = execute(&ExecRequest {
        argv: &argv,
        cwd: dir.path(),
        stdin: b"",
        kill_after: CHECKER_TIMEOUT,
        memory_limit_mb: None,
    })
    .map_err(|e| spawn_err(e.to_string()))?;
    if outcome.killed {
        return Err(CheckerError::Timeout);
    }
    match outcome.exit {
        Exit::Code(0) => Ok(true),
        Exit::Code(1) => Ok(false),
        other => Err(CheckerError::Crashed {
            status: format!("{other:?}"),
            stderr: String::from_utf8_lossy(&outcome.stderr).into_owned(),
        }),
    }
}
