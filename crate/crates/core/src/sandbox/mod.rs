//! Building and running solution programs under time and memory limits.
//!
//! Each compiled program owns a private directory under the work root and
//! every run gets its own scratch directory inside it, so concurrent runs
//! never share files or captured streams. Memory limits are enforced with
//! `RLIMIT_AS` and classified best-effort; time is wall clock.

mod config;
pub(crate) mod exec;

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;

use crate::problem::ResourceLimits;
use exec::{execute, Exit, ExecRequest};

pub use config::{Toolchain, ToolConfig, WORK_ROOT_ENV};

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("cannot spawn {command}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("work directory error: {0}")]
    Io(#[from] std::io::Error),
    #[error("tool config: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("compilation failed:\n{diagnostics}")]
    Failed { diagnostics: String },
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Language {
    Cpp,
    Python,
    Other(String),
}

impl Language {
    pub fn name(&self) -> &str {
        match self {
            Language::Cpp => "cpp",
            Language::Python => "python",
            Language::Other(n) => n,
        }
    }

    pub fn from_name(name: &str) -> Self {
        match name.to_ascii_lowercase().as_str() {
            "cpp" | "c++" | "cc" | "cxx" => Language::Cpp,
            "python" | "py" | "python3" => Language::Python,
            other => Language::Other(other.to_string()),
        }
    }

    /// Fence tag used when embedding source in prompts.
    pub fn fence_tag(&self) -> &str {
        self.name()
    }
}

impl From<Language> for String {
    fn from(l: Language) -> String {
        l.name().to_string()
    }
}

impl From<String> for Language {
    fn from(s: String) -> Self {
        Language::from_name(&s)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Candidate,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArtifactOrigin {
    User,
    Llm { iteration: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionArtifact {
    pub source: String,
    pub language: Language,
    pub role: Role,
    pub origin: ArtifactOrigin,
}

impl SolutionArtifact {
    pub fn new(source: impl Into<String>, language: Language, role: Role, origin: ArtifactOrigin) -> Self {
        Self {
            source: source.into(),
            language,
            role,
            origin,
        }
    }

    pub fn user_candidate(source: impl Into<String>, language: Language) -> Self {
        Self::new(source, language, Role::Candidate, ArtifactOrigin::User)
    }

    /// Source must contain something other than whitespace.
    pub fn is_valid(&self) -> bool {
        !self.source.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "UPPERCASE")]
pub enum RunStatus {
    Ok,
    Tle,
    Mle,
    Re { exit_code: i32 },
    Ce { diagnostics: String },
}

impl RunStatus {
    pub fn short(&self) -> &'static str {
        match self {
            RunStatus::Ok => "OK",
            RunStatus::Tle => "TLE",
            RunStatus::Mle => "MLE",
            RunStatus::Re { .. } => "RE",
            RunStatus::Ce { .. } => "CE",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RunStatus::Ok => "ok".into(),
            RunStatus::Tle => "time limit exceeded".into(),
            RunStatus::Mle => "memory limit exceeded".into(),
            RunStatus::Re { exit_code } => format!("runtime error (exit code {exit_code})"),
            RunStatus::Ce { .. } => "compilation error".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub stdout: String,
    pub stderr: String,
    pub wall_ms: u64,
    /// Peak resident set size; `None` when the platform does not report it.
    pub peak_mem_mb: Option<u64>,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

/// A built program ready to run. Cheap to clone; the work directory lives as
/// long as any clone does.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    dir: Arc<TempDir>,
    run_argv: Arc<Vec<String>>,
    language: Language,
}

impl CompiledProgram {
    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn dir(&self) -> &Path {
        self.dir.path()
    }
}

/// Wall-clock point at which a running program is killed. Twice the limit,
/// less a small headroom so the reported time stays within `2 × time_ms`.
pub fn kill_deadline(time_ms: u64) -> Duration {
    let headroom = (time_ms / 20).min(50);
    Duration::from_millis(2 * time_ms - headroom)
}

// Messages runtimes print when an allocation fails under RLIMIT_AS.
const OOM_MARKERS: &[&str] = &["std::bad_alloc", "MemoryError", "Cannot allocate memory", "out of memory"];

#[derive(Debug, Clone, Default)]
pub struct Sandbox {
    config: ToolConfig,
}

impl Sandbox {
    pub fn new(config: ToolConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &ToolConfig {
        &self.config
    }

    /// Compiles into a fresh directory under the configured work root.
    pub fn compile(&self, artifact: &SolutionArtifact) -> Result<CompiledProgram, CompileError> {
        let root = self.config.resolved_work_root();
        fs::create_dir_all(&root).map_err(SandboxError::from)?;
        let dir = tempfile::Builder::new()
            .prefix("depro-")
            .tempdir_in(&root)
            .map_err(SandboxError::from)?;
        self.compile_in(artifact, dir)
    }

    /// Compiles into `workdir`, which the returned program then owns.
    pub fn compile_in(&self, artifact: &SolutionArtifact, workdir: TempDir) -> Result<CompiledProgram, CompileError> {
        let toolchain = self.config.toolchain(&artifact.language)?;
        let src_name = format!("main.{}", toolchain.extension);
        let bin_name = "main.bin";
        fs::write(workdir.path().join(&src_name), &artifact.source).map_err(SandboxError::from)?;

        if let Some(compile_cmd) = &toolchain.compile_cmd {
            // Relative names keep diagnostics free of temp paths.
            let argv = config::expand(compile_cmd, &src_name, bin_name);
            let outcome = execute(&ExecRequest {
                argv: &argv,
                cwd: workdir.path(),
                stdin: b"",
                kill_after: Duration::from_millis(self.config.compile_timeout_ms),
                memory_limit_mb: None,
            })
            .map_err(|source| SandboxError::Spawn {
                command: argv.join(" "),
                source,
            })?;
            if outcome.killed {
                return Err(CompileError::Failed {
                    diagnostics: format!("compilation timed out after {} ms", self.config.compile_timeout_ms),
                });
            }
            if outcome.exit != Exit::Code(0) {
                let mut diagnostics = String::from_utf8_lossy(&outcome.stderr).into_owned();
                diagnostics.push_str(&String::from_utf8_lossy(&outcome.stdout));
                if diagnostics.trim().is_empty() {
                    diagnostics = format!("compiler exited with {:?}", outcome.exit);
                }
                return Err(CompileError::Failed { diagnostics });
            }
        }

        let abs = |name: &str| workdir.path().join(name).to_string_lossy().into_owned();
        let run_argv = config::expand(&toolchain.run_cmd, &abs(&src_name), &abs(bin_name));
        Ok(CompiledProgram {
            dir: Arc::new(workdir),
            run_argv: Arc::new(run_argv),
            language: artifact.language.clone(),
        })
    }

    /// Runs `program` on `input`. Program misbehaviour is reported through
    /// the status; errors are only for infrastructure faults.
    pub fn run(&self, program: &CompiledProgram, input: &str, limits: ResourceLimits) -> Result<RunResult, SandboxError> {
        let scratch = tempfile::Builder::new().prefix("run-").tempdir_in(program.dir())?;
        let outcome = execute(&ExecRequest {
            argv: &program.run_argv,
            cwd: scratch.path(),
            stdin: input.as_bytes(),
            kill_after: kill_deadline(limits.time_ms),
            memory_limit_mb: Some(limits.memory_mb),
        })
        .map_err(|source| SandboxError::Spawn {
            command: program.run_argv.join(" "),
            source,
        })?;

        let wall_ms = outcome.wall.as_millis() as u64;
        let peak_mem_mb = outcome.peak_rss_kb.map(|kb| kb.div_ceil(1024));
        let stdout = String::from_utf8_lossy(&outcome.stdout).into_owned();
        let stderr = String::from_utf8_lossy(&outcome.stderr).into_owned();
        let over_memory = peak_mem_mb.is_some_and(|mb| mb > limits.memory_mb)
            || OOM_MARKERS.iter().any(|m| stderr.contains(m));

        let status = if outcome.killed || wall_ms >= limits.time_ms {
            RunStatus::Tle
        } else {
            match outcome.exit {
                Exit::Code(0) if !over_memory => RunStatus::Ok,
                _ if over_memory => RunStatus::Mle,
                Exit::Code(c) => RunStatus::Re { exit_code: c },
                Exit::Signal(s) => RunStatus::Re { exit_code: 128 + s },
            }
        };
        Ok(RunResult {
            status,
            stdout,
            stderr,
            wall_ms,
            peak_mem_mb,
        })
    }
}
