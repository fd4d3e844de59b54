//! The repair loop: reference generation, stress testing, and iterative
//! LLM-guided fixes, plus the zero-shot baseline that re-prompts without
//! failure details.

mod engine;
mod reference;
mod replay;
mod report;
mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::differential::{Failure, StressConfig, StressError, StressOutcome};
use crate::llm::{ChatExchange, ProviderConfig, ProviderKind};
use crate::problem::ProblemSpec;
use crate::sandbox::{Language, Sandbox, SandboxError, SolutionArtifact};
use crate::testgen::GeneratorSpec;

pub use engine::{resume_session, run_depro, run_session, run_zero_shot, ReferenceChoice};
pub use reference::{generate_reference, ReferenceError};
pub use replay::{replay_session, ReplayDiff, ReplayReport};
pub use report::{compare_with_baselines, render_report_table, report, Baselines, ComparisonRow, IterationRow, SessionReport};
pub use store::{
    ArtifactMeta, IterationSummary, SessionManifest, SessionStore, StressSummary, MANIFEST_FILE, TRANSCRIPT_FILE,
};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Stress(#[from] StressError),
    #[error("session store: {0}")]
    Store(String),
    #[error("invalid loop config: {0}")]
    Config(String),
}

impl From<std::io::Error> for OrchestratorError {
    fn from(e: std::io::Error) -> Self {
        OrchestratorError::Store(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Failing test case in every debug prompt.
    Depro,
    /// Problem and code only; no failure details.
    ZeroShot,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Depro => "depro",
            Mode::ZeroShot => "zero-shot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_iterations: u32,
    /// Extra brute-force requests after the first one is rejected.
    pub bruteforce_retries: u32,
    pub stress: StressConfig,
    pub provider: ProviderConfig,
    pub shrink: bool,
    pub shrink_budget: u32,
    pub reference_language: Language,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 8,
            bruteforce_retries: 3,
            stress: StressConfig::default(),
            provider: ProviderConfig::new(ProviderKind::Live {
                endpoint: "https://api.openai.com/v1".into(),
                model: "gpt-5".into(),
                credentials_env: "OPENAI_API_KEY".into(),
            }),
            shrink: false,
            shrink_budget: 200,
            reference_language: Language::Cpp,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.max_iterations < 1 {
            return Err(OrchestratorError::Config("max_iterations >= 1".into()));
        }
        self.stress.validate().map_err(OrchestratorError::Config)?;
        self.provider.validate().map_err(OrchestratorError::Config)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    Fixed { iteration: u32 },
    Unfixed { budget: u32 },
    AlreadyConsistent,
    ReferenceFailed { reason: String },
    Aborted { reason: String },
}

impl SessionStatus {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionStatus::Running => "running",
            SessionStatus::Fixed { .. } => "fixed",
            SessionStatus::Unfixed { .. } => "unfixed",
            SessionStatus::AlreadyConsistent => "already_consistent",
            SessionStatus::ReferenceFailed { .. } => "reference_failed",
            SessionStatus::Aborted { .. } => "aborted",
        }
    }

    /// Terminal statuses that a resume may not continue from.
    pub fn is_final(&self) -> bool {
        !matches!(self, SessionStatus::Running | SessionStatus::Aborted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompileVerdict {
    Ok,
    Ce { diagnostics: String },
    /// The response had no code block even after a reminder.
    NoCode,
}

/// One feedback cycle: prompt, response, rebuilt candidate, re-stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u32,
    pub candidate_in: SolutionArtifact,
    pub failure_in: Failure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics_in: Option<String>,
    /// One exchange, or two when the first reply lacked a code block.
    pub exchanges: Vec<ChatExchange>,
    pub candidate_out: Option<SolutionArtifact>,
    pub compile: CompileVerdict,
    pub stress_out: Option<StressOutcome>,
    pub wall_ms: u64,
}

impl IterationRecord {
    pub fn verdict(&self) -> &'static str {
        match (&self.compile, &self.stress_out) {
            (CompileVerdict::NoCode, _) => "no_code_block",
            (CompileVerdict::Ce { .. }, _) => "compile_error",
            (CompileVerdict::Ok, Some(StressOutcome::NoMismatch { .. })) => "passed",
            (CompileVerdict::Ok, Some(StressOutcome::Failure(_))) => "wrong_answer",
            (CompileVerdict::Ok, Some(StressOutcome::CandidateFault { .. })) => "candidate_fault",
            (CompileVerdict::Ok, Some(StressOutcome::ReferenceFault { .. })) => "reference_fault",
            (CompileVerdict::Ok, None) => "not_stressed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceOrigin {
    Llm,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugSession {
    pub mode: Mode,
    pub problem_id: String,
    pub candidate_initial: SolutionArtifact,
    pub reference: Option<SolutionArtifact>,
    pub reference_origin: Option<ReferenceOrigin>,
    pub reference_exchanges: Vec<ChatExchange>,
    pub initial_stress: Option<StressOutcome>,
    pub iterations: Vec<IterationRecord>,
    pub status: SessionStatus,
    pub attempts: u32,
    pub wall_ms_total: u64,
    pub config_snapshot: LoopConfig,
}

impl DebugSession {
    pub fn new(mode: Mode, problem_id: &str, candidate: SolutionArtifact, cfg: &LoopConfig) -> Self {
        Self {
            mode,
            problem_id: problem_id.to_string(),
            candidate_initial: candidate,
            reference: None,
            reference_origin: None,
            reference_exchanges: Vec::new(),
            initial_stress: None,
            iterations: Vec::new(),
            status: SessionStatus::Running,
            attempts: 0,
            wall_ms_total: 0,
            config_snapshot: cfg.clone(),
        }
    }

    /// Candidate after the last iteration that produced code.
    pub fn final_candidate(&self) -> &SolutionArtifact {
        self.iterations
            .iter()
            .rev()
            .find_map(|it| it.candidate_out.as_ref())
            .unwrap_or(&self.candidate_initial)
    }

    /// Debug-kind exchanges across all iterations.
    pub fn debug_exchange_count(&self) -> u32 {
        self.iterations
            .iter()
            .flat_map(|it| &it.exchanges)
            .filter(|e| e.kind.is_debug())
            .count() as u32
    }
}

/// Everything a session run needs besides the LLM.
pub struct SessionEnv<'a> {
    pub sandbox: &'a Sandbox,
    /// Problem with paths already resolved.
    pub spec: &'a ProblemSpec,
    pub gen: &'a GeneratorSpec,
    pub cfg: &'a LoopConfig,
}
