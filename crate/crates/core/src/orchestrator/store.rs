// On-disk session layout:
//
//   session.json              manifest (no large texts)
//   transcript.json           replay fixture of every exchange, in order
//   candidate_initial.<ext>
//   reference.<ext>
//   reference_exchanges.json
//   initial_stress.json
//   problem/{problem.spec, gen.dsl}
//   iterations/NN/{prompt.txt, response.txt, code.<ext>, verdict.json, failing_input.txt}

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DebugSession, IterationRecord, LoopConfig, Mode, OrchestratorError, ReferenceOrigin, SessionStatus};
use crate::differential::StressOutcome;
use crate::llm::{ChatExchange, ReplayRecord};
use crate::problem::{problem_to_string, ProblemSpec};
use crate::sandbox::{ArtifactOrigin, Language, Role, SolutionArtifact, ToolConfig};
use crate::testgen::CaseOrigin;

pub const MANIFEST_FILE: &str = "session.json";
pub const TRANSCRIPT_FILE: &str = "transcript.json";
const FORMAT_VERSION: u32 = 1;

pub(crate) fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressSummary {
    pub kind: String,
    pub cases_run: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_position: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_origin: Option<CaseOrigin>,
}

impl From<&StressOutcome> for StressSummary {
    fn from(o: &StressOutcome) -> Self {
        Self {
            kind: o.kind().to_string(),
            cases_run: o.cases_run(),
            failure_position: o.position(),
            failure_origin: match o {
                StressOutcome::ReferenceFault { test, .. } => Some(test.origin.clone()),
                other => other.failure().map(|f| f.test.origin.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub index: u32,
    pub verdict: String,
    pub exchanges: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress: Option<StressSummary>,
    pub wall_ms: u64,
}

impl From<&IterationRecord> for IterationSummary {
    fn from(it: &IterationRecord) -> Self {
        Self {
            index: it.index,
            verdict: it.verdict().to_string(),
            exchanges: it.exchanges.len() as u32,
            code_digest: it.candidate_out.as_ref().map(|c| digest(&c.source)),
            stress: it.stress_out.as_ref().map(StressSummary::from),
            wall_ms: it.wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub language: Language,
    pub origin: ArtifactOrigin,
    pub digest: String,
}

impl From<&SolutionArtifact> for ArtifactMeta {
    fn from(a: &SolutionArtifact) -> Self {
        Self {
            language: a.language.clone(),
            origin: a.origin,
            digest: digest(&a.source),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub format_version: u32,
    pub mode: Mode,
    pub problem_id: String,
    pub status: SessionStatus,
    pub attempts: u32,
    pub wall_ms_total: u64,
    pub candidate: ArtifactMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ArtifactMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_origin: Option<ReferenceOrigin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_stress: Option<StressSummary>,
    pub iterations: Vec<IterationSummary>,
    pub config: LoopConfig,
    pub tools: ToolConfig,
    pub created_at: String,
    pub updated_at: String,
}

impl SessionManifest {
    pub fn load(dir: &Path) -> Result<Self, OrchestratorError> {
        read_json(&dir.join(MANIFEST_FILE))
    }

    pub fn verdicts(&self) -> Vec<&str> {
        self.iterations.iter().map(|i| i.verdict.as_str()).collect()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OrchestratorError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), OrchestratorError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| OrchestratorError::Store(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, OrchestratorError> {
    let text = fs::read_to_string(path).map_err(|e| OrchestratorError::Store(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| OrchestratorError::Store(format!("{}: {e}", path.display())))
}

fn extension(tools: &ToolConfig, language: &Language) -> String {
    tools
        .toolchain(language)
        .map(|t| t.extension.clone())
        .unwrap_or_else(|_| language.name().to_string())
}

/// Session directory writer. Every write goes through a temporary file and
/// a rename, so a crash leaves either the old or the new version.
pub struct SessionStore {
    dir: PathBuf,
    transcript: Vec<ReplayRecord>,
    created_at: String,
}

impl SessionStore {
    /// Starts a fresh session directory with a copy of the problem.
    pub fn create(dir: &Path, spec: &ProblemSpec, generator_text: &str) -> Result<Self, OrchestratorError> {
        fs::create_dir_all(dir)?;
        let mut copy = spec.clone();
        copy.generator_path = PathBuf::from("gen.dsl");
        let problem_dir = dir.join("problem");
        write_atomic(&problem_dir.join("problem.spec"), problem_to_string(&copy).as_bytes())?;
        write_atomic(&problem_dir.join("gen.dsl"), generator_text.as_bytes())?;
        let _ = fs::remove_dir_all(dir.join("iterations"));
        let store = Self {
            dir: dir.to_path_buf(),
            transcript: Vec::new(),
            created_at: Utc::now().to_rfc3339(),
        };
        write_json(&store.dir.join(TRANSCRIPT_FILE), &store.transcript)?;
        Ok(store)
    }

    /// Reopens an existing session directory for appending.
    pub fn open(dir: &Path) -> Result<Self, OrchestratorError> {
        let manifest = SessionManifest::load(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            transcript: read_json(&dir.join(TRANSCRIPT_FILE))?,
            created_at: manifest.created_at,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn problem_file(dir: &Path) -> PathBuf {
        dir.join("problem").join("problem.spec")
    }

    pub fn transcript(&self) -> &[ReplayRecord] {
        &self.transcript
    }

    pub fn record_exchange(&mut self, exchange: &ChatExchange) -> Result<(), OrchestratorError> {
        self.transcript.push(exchange.replay_record());
        write_json(&self.dir.join(TRANSCRIPT_FILE), &self.transcript)
    }

    pub fn save(&self, session: &DebugSession, tools: &ToolConfig) -> Result<(), OrchestratorError> {
        let cand = &session.candidate_initial;
        write_atomic(
            &self.dir.join(format!("candidate_initial.{}", extension(tools, &cand.language))),
            cand.source.as_bytes(),
        )?;
        if let Some(r) = &session.reference {
            write_atomic(
                &self.dir.join(format!("reference.{}", extension(tools, &r.language))),
                r.source.as_bytes(),
            )?;
        }
        write_json(&self.dir.join("reference_exchanges.json"), &session.reference_exchanges)?;
        write_json(&self.dir.join("initial_stress.json"), &session.initial_stress)?;
        for it in &session.iterations {
            self.save_iteration(it, tools)?;
        }
        let now = Utc::now().to_rfc3339();
        let manifest = SessionManifest {
            format_version: FORMAT_VERSION,
            mode: session.mode,
            problem_id: session.problem_id.clone(),
            status: session.status.clone(),
            attempts: session.attempts,
            wall_ms_total: session.wall_ms_total,
            candidate: ArtifactMeta::from(cand),
            reference: session.reference.as_ref().map(ArtifactMeta::from),
            reference_origin: session.reference_origin,
            initial_stress: session.initial_stress.as_ref().map(StressSummary::from),
            iterations: session.iterations.iter().map(IterationSummary::from).collect(),
            config: session.config_snapshot.clone(),
            tools: tools.clone(),
            created_at: self.created_at.clone(),
            updated_at: now,
        };
        write_json(&self.dir.join(MANIFEST_FILE), &manifest)
    }

    fn save_iteration(&self, it: &IterationRecord, tools: &ToolConfig) -> Result<(), OrchestratorError> {
        let dir = self.dir.join("iterations").join(format!("{:02}", it.index));
        if let Some(last) = it.exchanges.last() {
            write_atomic(&dir.join("prompt.txt"), last.prompt.as_bytes())?;
            write_atomic(&dir.join("response.txt"), last.response.as_bytes())?;
        }
        if let Some(code) = &it.candidate_out {
            write_atomic(
                &dir.join(format!("code.{}", extension(tools, &code.language))),
                code.source.as_bytes(),
            )?;
        }
        write_atomic(&dir.join("failing_input.txt"), it.failure_in.test.input.as_bytes())?;
        write_json(&dir.join("verdict.json"), it)
    }

    /// Rebuilds the in-memory session from disk.
    pub fn load_session(&self) -> Result<DebugSession, OrchestratorError> {
        let m = SessionManifest::load(&self.dir)?;
        let read_source = |stem: &str, meta: &ArtifactMeta| -> Result<String, OrchestratorError> {
            let path = self.dir.join(format!("{stem}.{}", extension(&m.tools, &meta.language)));
            fs::read_to_string(&path).map_err(|e| OrchestratorError::Store(format!("{}: {e}", path.display())))
        };
        let candidate_initial = SolutionArtifact::new(
            read_source("candidate_initial", &m.candidate)?,
            m.candidate.language.clone(),
            Role::Candidate,
            m.candidate.origin,
        );
        let reference = match &m.reference {
            Some(meta) => Some(SolutionArtifact::new(
                read_source("reference", meta)?,
                meta.language.clone(),
                Role::Reference,
                meta.origin,
            )),
            None => None,
        };
        let iterations = m
            .iterations
            .iter()
            .map(|s| read_json(&self.dir.join("iterations").join(format!("{:02}", s.index)).join("verdict.json")))
            .collect::<Result<Vec<IterationRecord>, _>>()?;
        Ok(DebugSession {
            mode: m.mode,
            problem_id: m.problem_id,
            candidate_initial,
            reference,
            reference_origin: m.reference_origin,
            reference_exchanges: read_json(&self.dir.join("reference_exchanges.json"))?,
            initial_stress: read_json(&self.dir.join("initial_stress.json"))?,
            iterations,
            status: m.status,
            attempts: m.attempts,
            wall_ms_total: m.wall_ms_total,
            config_snapshot: m.config,
        })
    }
}
