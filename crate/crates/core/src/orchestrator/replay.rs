use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::{run_session, ReferenceChoice};
use super::store::{digest, SessionManifest, SessionStore, TRANSCRIPT_FILE};
use super::{DebugSession, OrchestratorError, ReferenceOrigin, SessionEnv};
use crate::llm::{LlmGateway, ProviderConfig};
use crate::problem::load_problem;
use crate::sandbox::{Sandbox, SolutionArtifact};
use crate::testgen::parse_generator_spec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayDiff {
    pub field: String,
    pub recorded: String,
    pub replayed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub recorded_status: String,
    pub replayed_status: String,
    pub recorded_attempts: u32,
    pub replayed_attempts: u32,
    pub diffs: Vec<ReplayDiff>,
}

impl ReplayReport {
    pub fn reproduced(&self) -> bool {
        self.diffs.is_empty()
    }
}

fn fingerprint(session: &DebugSession) -> Vec<(&'static str, String)> {
    let verdicts: Vec<&str> = session.iterations.iter().map(|i| i.verdict()).collect();
    let digests: Vec<String> = session
        .iterations
        .iter()
        .map(|i| i.candidate_out.as_ref().map(|c| digest(&c.source)[..12].to_string()).unwrap_or_default())
        .collect();
    vec![
        ("status", serde_json::to_string(&session.status).unwrap_or_default()),
        ("attempts", session.attempts.to_string()),
        ("verdicts", verdicts.join(",")),
        ("code_digests", digests.join(",")),
        (
            "reference_digest",
            session.reference.as_ref().map(|r| digest(&r.source)).unwrap_or_default(),
        ),
    ]
}

fn recorded_fingerprint(m: &SessionManifest) -> Vec<(&'static str, String)> {
    let digests: Vec<String> = m
        .iterations
        .iter()
        .map(|i| i.code_digest.as_ref().map(|d| d[..12].to_string()).unwrap_or_default())
        .collect();
    vec![
        ("status", serde_json::to_string(&m.status).unwrap_or_default()),
        ("attempts", m.attempts.to_string()),
        ("verdicts", m.verdicts().join(",")),
        ("code_digests", digests.join(",")),
        (
            "reference_digest",
            m.reference.as_ref().map(|r| r.digest.clone()).unwrap_or_default(),
        ),
    ]
}

/// Re-runs a recorded session with its transcript as the only LLM source
/// and lists every observable difference from the recording.
pub fn replay_session(dir: &Path) -> Result<ReplayReport, OrchestratorError> {
    let manifest = SessionManifest::load(dir)?;
    let transcript = dir.join(TRANSCRIPT_FILE);
    if !transcript.is_file() {
        return Err(OrchestratorError::Store(format!("{} is missing", transcript.display())));
    }
    let store = SessionStore::open(dir)?;
    let recorded = store.load_session()?;

    let problem_path = SessionStore::problem_file(dir);
    let mut spec = load_problem(&problem_path).map_err(|e| OrchestratorError::Store(e.to_string()))?;
    spec.resolve_paths(problem_path.parent().unwrap_or(dir));
    let gen_text = fs::read_to_string(&spec.generator_path)?;
    let gen = parse_generator_spec(&gen_text).map_err(|e| OrchestratorError::Store(e.to_string()))?;

    let mut cfg = manifest.config.clone();
    cfg.provider = ProviderConfig::replay(&transcript);
    let sandbox = Sandbox::new(manifest.tools.clone());
    let env = SessionEnv {
        sandbox: &sandbox,
        spec: &spec,
        gen: &gen,
        cfg: &cfg,
    };
    let mut gateway = LlmGateway::from_config(&cfg.provider).map_err(|e| OrchestratorError::Store(e.to_string()))?;
    let reference = match (manifest.reference_origin, &recorded.reference) {
        (Some(ReferenceOrigin::User), Some(r)) => ReferenceChoice::Provided(SolutionArtifact::clone(r)),
        _ => ReferenceChoice::Generate,
    };
    let replayed = run_session(
        &env,
        manifest.mode,
        recorded.candidate_initial.clone(),
        reference,
        &mut gateway,
        None,
    )?;

    let diffs = recorded_fingerprint(&manifest)
        .into_iter()
        .zip(fingerprint(&replayed))
        .filter(|((_, a), (_, b))| a != b)
        .map(|((field, a), (_, b))| ReplayDiff {
            field: field.to_string(),
            recorded: a,
            replayed: b,
        })
        .collect();
    Ok(ReplayReport {
        recorded_status: manifest.status.kind().to_string(),
        replayed_status: replayed.status.kind().to_string(),
        recorded_attempts: manifest.attempts,
        replayed_attempts: replayed.attempts,
        diffs,
    })
}
