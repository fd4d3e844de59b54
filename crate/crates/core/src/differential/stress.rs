use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compare::{compare_with_input, CheckerError};
use super::StressError;
use crate::problem::ProblemSpec;
use crate::sandbox::{CompiledProgram, RunResult, RunStatus, Sandbox};
use crate::testgen::{generate_edge_cases, generate_random, CaseOrigin, GeneratorSpec, TestCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StressConfig {
    pub max_random_cases: u64,
    pub seed: u64,
    pub run_edge_cases_first: bool,
    pub include_samples_first: bool,
    /// Reference time limit as a multiple of the problem limit.
    pub reference_time_factor: u64,
    /// Worker threads for case evaluation.
    pub jobs: usize,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            max_random_cases: 500,
            seed: 0,
            run_edge_cases_first: true,
            include_samples_first: true,
            reference_time_factor: 10,
            jobs: 1,
        }
    }
}

impl StressConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_random_cases == 0 {
            return Err("max_random_cases >= 1".into());
        }
        if self.reference_time_factor == 0 {
            return Err("reference_time_factor >= 1".into());
        }
        Ok(())
    }
}

/// A case where the candidate disagrees with the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub test: TestCase,
    pub expected: String,
    pub actual: String,
    /// Position in the evaluation order (samples, edges, random).
    pub position: u64,
    /// Candidate verdict when it did not finish normally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<RunStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StressOutcome {
    NoMismatch { cases_run: u64 },
    Failure(Failure),
    CandidateFault { failure: Failure, run: RunResult },
    ReferenceFault { test: TestCase, position: u64, run: RunResult },
}

impl StressOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            StressOutcome::NoMismatch { .. } => "no_mismatch",
            StressOutcome::Failure(_) => "failure",
            StressOutcome::CandidateFault { .. } => "candidate_fault",
            StressOutcome::ReferenceFault { .. } => "reference_fault",
        }
    }

    /// The failing case to feed back, for wrong answers and candidate faults.
    pub fn failure(&self) -> Option<&Failure> {
        match self {
            StressOutcome::Failure(f) | StressOutcome::CandidateFault { failure: f, .. } => Some(f),
            _ => None,
        }
    }

    pub fn position(&self) -> Option<u64> {
        match self {
            StressOutcome::NoMismatch { .. } => None,
            StressOutcome::Failure(f) | StressOutcome::CandidateFault { failure: f, .. } => Some(f.position),
            StressOutcome::ReferenceFault { position, .. } => Some(*position),
        }
    }

    pub fn cases_run(&self) -> u64 {
        match self {
            StressOutcome::NoMismatch { cases_run } => *cases_run,
            _ => self.position().unwrap_or(0) + 1,
        }
    }
}

pub(crate) struct Harness<'a> {
    pub sandbox: &'a Sandbox,
    pub candidate: &'a CompiledProgram,
    pub reference: &'a CompiledProgram,
    pub spec: &'a ProblemSpec,
    pub cfg: &'a StressConfig,
}

impl Harness<'_> {
    /// Runs both programs on one case; `None` when they agree.
    pub(crate) fn evaluate(&self, test: &TestCase, position: u64) -> Result<Option<StressOutcome>, StressError> {
        let ref_limits = self.spec.limits.scaled_time(self.cfg.reference_time_factor);
        let reference = self.sandbox.run(self.reference, &test.input, ref_limits)?;
        if !reference.is_ok() {
            return Ok(Some(StressOutcome::ReferenceFault {
                test: test.clone(),
                position,
                run: reference,
            }));
        }
        let candidate = self.sandbox.run(self.candidate, &test.input, self.spec.limits)?;
        if !candidate.is_ok() {
            let failure = Failure {
                test: test.clone(),
                expected: reference.stdout,
                actual: candidate.stdout.clone(),
                position,
                fault: Some(candidate.status.clone()),
            };
            return Ok(Some(StressOutcome::CandidateFault { failure, run: candidate }));
        }
        let same = compare_with_input(&test.input, &reference.stdout, &candidate.stdout, &self.spec.comparator)
            .map_err(|e: CheckerError| StressError::Checker(e))?;
        if same {
            return Ok(None);
        }
        Ok(Some(StressOutcome::Failure(Failure {
            test: test.clone(),
            expected: reference.stdout,
            actual: candidate.stdout,
            position,
            fault: None,
        })))
    }
}

/// The fixed prefix of the evaluation order: samples, then edge cases.
pub fn leading_cases(gen: &GeneratorSpec, spec: &ProblemSpec, cfg: &StressConfig) -> Vec<TestCase> {
    let mut cases = Vec::new();
    if cfg.include_samples_first {
        cases.extend(
            spec.samples
                .iter()
                .enumerate()
                .map(|(index, s)| TestCase::new(s.input.clone(), CaseOrigin::Sample { index })),
        );
    }
    if cfg.run_edge_cases_first {
        cases.extend(generate_edge_cases(gen));
    }
    cases
}

/// Differential test of `candidate` against `reference`. Returns the
/// earliest disagreement in evaluation order, independent of `cfg.jobs`.
pub fn stress_test(
    sandbox: &Sandbox,
    candidate: &CompiledProgram,
    reference: &CompiledProgram,
    gen: &GeneratorSpec,
    spec: &ProblemSpec,
    cfg: &StressConfig,
) -> Result<StressOutcome, StressError> {
    let harness = Harness {
        sandbox,
        candidate,
        reference,
        spec,
        cfg,
    };
    let leading = leading_cases(gen, spec, cfg);
    let lead = leading.len() as u64;
    let total = lead + cfg.max_random_cases;
    let case_at = |pos: u64| -> TestCase {
        if pos < lead {
            leading[pos as usize].clone()
        } else {
            generate_random(gen, cfg.seed, pos - lead)
        }
    };

    if cfg.jobs <= 1 {
        for pos in 0..total {
            if let Some(outcome) = harness.evaluate(&case_at(pos), pos)? {
                return Ok(outcome);
            }
        }
        return Ok(StressOutcome::NoMismatch { cases_run: total });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| StressError::Pool(e.to_string()))?;
    let chunk = (cfg.jobs as u64) * 4;
    let mut start = 0;
    while start < total {
        let end = (start + chunk).min(total);
        let results: Vec<Result<Option<StressOutcome>, StressError>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|pos| harness.evaluate(&case_at(pos), pos))
                .collect()
        });
        // Results are in position order; the first non-pass wins.
        for r in results {
            if let Some(outcome) = r? {
                return Ok(outcome);
            }
        }
        start = end;
    }
    Ok(StressOutcome::NoMismatch { cases_run: total })
}
