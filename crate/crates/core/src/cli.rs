//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unfixed or mismatch found, 2 usage error,
//! 3 infrastructure error.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::differential::{stress_test, StressConfig, StressOutcome};
use crate::llm::{LlmGateway, ProviderConfig, ProviderKind};
use crate::orchestrator::{
    compare_with_baselines, generate_reference, render_report_table, replay_session, resume_session, run_session,
    Baselines, LoopConfig, Mode, OrchestratorError, ReferenceChoice, SessionEnv, SessionManifest, SessionReport,
    SessionStatus, SessionStore, MANIFEST_FILE, TRANSCRIPT_FILE,
};
use crate::problem::{load_problem, ProblemSpec};
use crate::sandbox::{CompileError, Role, Sandbox, SolutionArtifact, ToolConfig};
use crate::testgen::{generate_edge_cases, generate_random_batch, parse_generator_spec, GeneratorSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFRA: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "depro", version, about = "Debug competitive programming solutions with stress testing and an LLM")]
struct Cli {
    /// Line-delimited JSON output
    #[arg(long, global = true)]
    json: bool,

    /// Toolchain config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for test evaluation
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a template problem.spec and gen.dsl
    Init {
        dir: PathBuf,
        /// Overwrite a non-empty directory
        #[arg(long)]
        force: bool,
    },
    /// Print generated test inputs
    Gen {
        problem: PathBuf,
        #[arg(long, default_value_t = 5)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the edge cases instead of random ones
        #[arg(long)]
        edge: bool,
    },
    /// Compare a candidate against a reference on generated inputs
    Stress {
        problem: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Repair a candidate with failing test cases in the prompt
    Fix(FixArgs),
    /// Repair a candidate with the problem and code only
    ZeroShot(FixArgs),
    /// Re-run a recorded session against its transcript
    Replay { session: PathBuf },
    /// Summarize a session
    Report {
        session: PathBuf,
        /// External baseline numbers (JSON or TOML)
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    candidate: Option<PathBuf>,
    /// Local reference solution; skips brute-force generation
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cases after samples and edge cases
    #[arg(long, default_value_t = 500)]
    cases: u64,
}

#[derive(Args, Debug)]
struct ProviderArgs {
    /// live, scripted:<fixture> or replay:<fixture>
    #[arg(long)]
    provider: Option<String>,
    #[arg(long, default_value = "https://api.openai.com/v1")]
    endpoint: String,
    #[arg(long, default_value = "gpt-5")]
    model: String,
    /// Name of the environment variable holding the API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
}

#[derive(Args, Debug)]
struct FixArgs {
    /// Problem directory or problem.spec path
    problem: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long, default_value_t = 8)]
    max_iter: u32,
    #[arg(long, default_value_t = 3)]
    bruteforce_retries: u32,
    /// Shrink failing inputs before prompting
    #[arg(long)]
    shrink: bool,
    /// Session directory (default: <problem>/sessions/<mode>-<time>)
    #[arg(long)]
    session: Option<PathBuf>,
    /// Continue an interrupted session
    #[arg(long, conflicts_with_all = ["problem", "session"])]
    resume: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infra(String),
}

type CmdResult = Result<i32, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn infra(msg: impl std::fmt::Display) -> Failure {
    Failure::Infra(msg.to_string())
}

impl From<OrchestratorError> for Failure {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Config(m) => Failure::Usage(m),
            other => Failure::Infra(other.to_string()),
        }
    }
}

struct Out {
    json: bool,
}

// A closed pipe (`depro gen | head`) is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

impl Out {
    fn text(&self, line: impl AsRef<str>) {
        if !self.json {
            emit(&format!("{}\n", line.as_ref()));
        }
    }

    fn record(&self, value: serde_json::Value) {
        if self.json {
            emit(&format!("{value}\n"));
        }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Infra(m)) => {
            eprintln!("error: {m}");
            EXIT_INFRA
        }
    };
    let _ = std::io::stdout().flush();
    code
}

fn dispatch(cli: Cli) -> CmdResult {
    let out = Out { json: cli.json };
    if cli.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let tools = match &cli.config {
        Some(path) => ToolConfig::load(path).map_err(usage)?,
        None => ToolConfig::default(),
    };
    match cli.command {
        Command::Init { dir, force } => cmd_init(&out, &dir, force),
        Command::Gen {
            problem,
            count,
            seed,
            edge,
        } => cmd_gen(&out, &problem, count, seed, edge, cli.jobs),
        Command::Stress { problem, run, provider } => {
            cmd_stress(&out, &tools, &problem, &run, &provider, cli.jobs)
        }
        Command::Fix(args) => cmd_fix(&out, tools, Mode::Depro, &args, cli.jobs),
        Command::ZeroShot(args) => cmd_fix(&out, tools, Mode::ZeroShot, &args, cli.jobs),
        Command::Replay { session } => cmd_replay(&out, &session),
        Command::Report { session, baseline } => cmd_report(&out, &session, baseline.as_deref()),
    }
}

const PROBLEM_TEMPLATE: &str = r#"# Problem description. Every text field is sent to the LLM verbatim.
id = "sum-of-array"
statement = """
Given n integers, print their sum.
"""
input_description = """
The first line contains n (1 <= n <= 100000).
The second line contains n integers a_i (-10^9 <= a_i <= 10^9).
"""
output_description = """
Print one integer: the sum.
"""
time_ms = 1000
memory_mb = 256

# Input generator, relative to this file.
generator = "gen.dsl"

# mode: exact | tokens | float_eps (needs epsilon) | checker (needs checker)
[comparator]
mode = "tokens"

[[samples]]
input = """
3
1 2 3
"""
output = """
6
"""
"#;

const GENERATOR_TEMPLATE: &str = r#"# One declaration per line, in input order.
#   int <name> <min> <max> [stress_max=<v>]
#   array <name> <len> <min> <max> [sorted] [distinct] [stress_max=<v>]
#   string <name> <len> <alphabet>
#   literal <text>
# Add `inline` to keep a value on the previous line.
# A first line `cases <name> <min> <max>` repeats the rest t times.
int n 1 100000 stress_max=10
array a n -1e9 1e9
"#;

fn cmd_init(out: &Out, dir: &Path, force: bool) -> CmdResult {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(infra)?.next().is_some();
        if non_empty && !force {
            return Err(usage(format!("{} is not empty (use --force to overwrite)", dir.display())));
        }
    }
    fs::create_dir_all(dir).map_err(infra)?;
    fs::write(dir.join("problem.spec"), PROBLEM_TEMPLATE).map_err(infra)?;
    fs::write(dir.join("gen.dsl"), GENERATOR_TEMPLATE).map_err(infra)?;
    out.text(format!("created {}/problem.spec and {}/gen.dsl", dir.display(), dir.display()));
    out.record(json!({ "event": "init", "dir": dir }));
    Ok(EXIT_OK)
}

struct LoadedProblem {
    spec: ProblemSpec,
    gen: GeneratorSpec,
    gen_text: String,
    dir: PathBuf,
}

fn load_problem_arg(path: &Path) -> Result<LoadedProblem, Failure> {
    let file = if path.is_dir() { path.join("problem.spec") } else { path.to_path_buf() };
    if !file.is_file() {
        return Err(usage(format!("{} not found", file.display())));
    }
    let mut spec = load_problem(&file).map_err(usage)?;
    let dir = file.parent().unwrap_or(Path::new(".")).to_path_buf();
    spec.resolve_paths(&dir);
    let gen_text = fs::read_to_string(&spec.generator_path)
        .map_err(|e| usage(format!("{}: {e}", spec.generator_path.display())))?;
    let gen = parse_generator_spec(&gen_text).map_err(|e| usage(format!("{}: {e}", spec.generator_path.display())))?;
    Ok(LoadedProblem {
        spec,
        gen,
        gen_text,
        dir,
    })
}

fn read_artifact(tools: &ToolConfig, path: &Path, role: Role) -> Result<SolutionArtifact, Failure> {
    let language = tools
        .language_for_path(path)
        .ok_or_else(|| usage(format!("{}: no toolchain for this file extension", path.display())))?;
    let source = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut artifact = SolutionArtifact::user_candidate(source, language);
    artifact.role = role;
    Ok(artifact)
}

fn provider_config(args: &ProviderArgs) -> Result<Option<ProviderConfig>, Failure> {
    let Some(spec) = args.provider.as_deref() else {
        return Ok(None);
    };
    let cfg = if spec == "live" {
        ProviderConfig::new(ProviderKind::Live {
            endpoint: args.endpoint.clone(),
            model: args.model.clone(),
            credentials_env: args.api_key_env.clone(),
        })
    } else if let Some(path) = spec.strip_prefix("scripted:") {
        ProviderConfig::scripted(path)
    } else if let Some(path) = spec.strip_prefix("replay:") {
        ProviderConfig::replay(path)
    } else {
        return Err(usage(format!(
            "--provider must be live, scripted:<path> or replay:<path> (got {spec:?})"
        )));
    };
    cfg.validate().map_err(usage)?;
    if let ProviderKind::Scripted { fixture } | ProviderKind::Replay { fixture } = &cfg.provider {
        if !fixture.is_file() {
            return Err(usage(format!("{}: fixture not found", fixture.display())));
        }
    }
    Ok(Some(cfg))
}

fn gateway(cfg: &ProviderConfig) -> Result<LlmGateway, Failure> {
    LlmGateway::from_config(cfg).map_err(usage)
}

fn cmd_gen(out: &Out, problem: &Path, count: u64, seed: u64, edge: bool, jobs: usize) -> CmdResult {
    let p = load_problem_arg(problem)?;
    let cases = if edge {
        generate_edge_cases(&p.gen)
    } else {
        generate_random_batch(&p.gen, seed, 0..count, jobs)
    };
    for (i, case) in cases.iter().enumerate() {
        out.text(format!("# case {i}: {}", case.origin));
        if !out.json {
            emit(&case.input);
        }
        out.record(json!({ "event": "case", "index": i, "origin": case.origin, "input": case.input }));
    }
    Ok(EXIT_OK)
}

fn cmd_stress(
    out: &Out,
    tools: &ToolConfig,
    problem: &Path,
    run: &RunArgs,
    provider: &ProviderArgs,
    jobs: usize,
) -> CmdResult {
    let p = load_problem_arg(problem)?;
    let candidate_path = run.candidate.as_ref().ok_or_else(|| usage("--candidate is required"))?;
    let candidate = read_artifact(tools, candidate_path, Role::Candidate)?;
    let provider_cfg = provider_config(provider)?;
    if run.reference.is_none() && provider_cfg.is_none() {
        return Err(usage("give --reference or an LLM --provider to generate one"));
    }
    let stress = StressConfig {
        max_random_cases: run.cases,
        seed: run.seed,
        jobs,
        ..StressConfig::default()
    };
    stress.validate().map_err(usage)?;
    let sandbox = Sandbox::new(tools.clone());
    let compile = |a: &SolutionArtifact, what: &str| match sandbox.compile(a) {
        Ok(p) => Ok(p),
        Err(CompileError::Failed { diagnostics }) => Err(usage(format!("{what} does not compile:\n{diagnostics}"))),
        Err(CompileError::Sandbox(e)) => Err(infra(e)),
    };
    let cand_prog = compile(&candidate, "candidate")?;
    let ref_prog = match &run.reference {
        Some(path) => compile(&read_artifact(tools, path, Role::Reference)?, "reference")?,
        None => {
            let cfg = LoopConfig {
                stress: stress.clone(),
                provider: provider_cfg.clone().expect("checked above"),
                reference_language: candidate.language.clone(),
                ..LoopConfig::default()
            };
            let env = SessionEnv {
                sandbox: &sandbox,
                spec: &p.spec,
                gen: &p.gen,
                cfg: &cfg,
            };
            let mut gw = gateway(&cfg.provider)?;
            generate_reference(&env, &mut gw, &mut |_| {}).map_err(infra)?.1
        }
    };
    let outcome = stress_test(&sandbox, &cand_prog, &ref_prog, &p.gen, &p.spec, &stress).map_err(infra)?;
    out.record(json!({ "event": "stress", "seed": run.seed, "outcome": outcome }));
    match &outcome {
        StressOutcome::NoMismatch { cases_run } => {
            out.text(format!("no mismatch in {cases_run} cases"));
            Ok(EXIT_OK)
        }
        StressOutcome::ReferenceFault { test, position, run: r } => {
            eprintln!("reference {} on case {position} ({})", r.status.describe(), test.origin);
            Ok(EXIT_INFRA)
        }
        StressOutcome::Failure(f) | StressOutcome::CandidateFault { failure: f, .. } => {
            out.text(format!("mismatch on case {} ({}), seed {}", f.position, f.test.origin, run.seed));
            if let Some(fault) = &f.fault {
                out.text(format!("verdict: {}", fault.describe()));
            }
            out.text(format!("input:\n{}", f.test.input.trim_end()));
            out.text(format!("expected:\n{}", f.expected.trim_end()));
            out.text(format!("actual:\n{}", f.actual.trim_end()));
            Ok(EXIT_FAILED)
        }
    }
}

fn default_session_dir(problem_dir: &Path, mode: Mode) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S%.3f");
    problem_dir.join("sessions").join(format!("{}-{stamp}", mode.label()))
}

fn session_exit(status: &SessionStatus) -> i32 {
    match status {
        SessionStatus::Fixed { .. } | SessionStatus::AlreadyConsistent => EXIT_OK,
        SessionStatus::Unfixed { .. } => EXIT_FAILED,
        _ => EXIT_INFRA,
    }
}

fn cmd_fix(out: &Out, tools: ToolConfig, mode: Mode, args: &FixArgs, jobs: usize) -> CmdResult {
    if args.max_iter < 1 {
        return Err(usage("--max-iter must be at least 1"));
    }
    let provider = provider_config(&args.provider)?;
    let sandbox = Sandbox::new(tools.clone());

    if let Some(dir) = &args.resume {
        if !dir.join(MANIFEST_FILE).is_file() {
            return Err(usage(format!("{}: not a session directory", dir.display())));
        }
        let manifest = SessionManifest::load(dir)?;
        let p = load_problem_arg(&SessionStore::problem_file(dir))?;
        let mut cfg = manifest.config.clone();
        cfg.provider = provider.ok_or_else(|| usage("--provider is required"))?;
        cfg.stress.jobs = jobs;
        let env = SessionEnv {
            sandbox: &sandbox,
            spec: &p.spec,
            gen: &p.gen,
            cfg: &cfg,
        };
        let mut gw = gateway(&cfg.provider)?;
        let mut store = SessionStore::open(dir)?;
        let session = resume_session(&env, &mut store, &mut gw)?;
        return Ok(print_session(out, dir, &session.status, session.attempts, session.iterations.len()));
    }

    let problem = args.problem.as_ref().ok_or_else(|| usage("a problem directory is required"))?;
    let p = load_problem_arg(problem)?;
    let candidate_path = args.run.candidate.as_ref().ok_or_else(|| usage("--candidate is required"))?;
    let candidate = read_artifact(&tools, candidate_path, Role::Candidate)?;
    let reference = match &args.run.reference {
        Some(path) => ReferenceChoice::Provided(read_artifact(&tools, path, Role::Reference)?),
        None => ReferenceChoice::Generate,
    };
    let provider = provider.ok_or_else(|| usage("--provider is required"))?;
    let cfg = LoopConfig {
        max_iterations: args.max_iter,
        bruteforce_retries: args.bruteforce_retries,
        stress: StressConfig {
            max_random_cases: args.run.cases,
            seed: args.run.seed,
            jobs,
            ..StressConfig::default()
        },
        provider,
        shrink: args.shrink,
        reference_language: candidate.language.clone(),
        ..LoopConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let env = SessionEnv {
        sandbox: &sandbox,
        spec: &p.spec,
        gen: &p.gen,
        cfg: &cfg,
    };
    let dir = args.session.clone().unwrap_or_else(|| default_session_dir(&p.dir, mode));
    let mut store = SessionStore::create(&dir, &p.spec, &p.gen_text)?;
    let mut gw = gateway(&cfg.provider)?;
    let session = run_session(&env, mode, candidate, reference, &mut gw, Some(&mut store))?;
    Ok(print_session(out, &dir, &session.status, session.attempts, session.iterations.len()))
}

fn print_session(out: &Out, dir: &Path, status: &SessionStatus, attempts: u32, iterations: usize) -> i32 {
    let plural = |n: u32| if n == 1 { "attempt" } else { "attempts" };
    let line = match status {
        SessionStatus::Fixed { .. } => format!("Fixed after {attempts} {}", plural(attempts)),
        SessionStatus::AlreadyConsistent => "Already consistent with the reference; nothing to fix".into(),
        SessionStatus::Unfixed { budget } => {
            format!("Unfixed after {iterations} iterations ({attempts} {}, budget {budget})", plural(attempts))
        }
        SessionStatus::ReferenceFailed { reason } => format!("Reference failed: {reason}"),
        SessionStatus::Aborted { reason } => format!("Aborted: {reason}"),
        SessionStatus::Running => "Running".into(),
    };
    out.text(line);
    out.text(format!("session: {}", dir.display()));
    out.record(json!({
        "event": "session",
        "status": status,
        "attempts": attempts,
        "iterations": iterations,
        "dir": dir,
    }));
    session_exit(status)
}

fn cmd_replay(out: &Out, dir: &Path) -> CmdResult {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(usage(format!("{}: not a session directory", dir.display())));
    }
    if !dir.join(TRANSCRIPT_FILE).is_file() {
        return Err(usage(format!("{}: {TRANSCRIPT_FILE} is missing", dir.display())));
    }
    let report = replay_session(dir)?;
    out.record(json!({ "event": "replay", "report": report }));
    if report.reproduced() {
        out.text(format!(
            "reproduced: {} with {} attempts",
            report.replayed_status, report.replayed_attempts
        ));
        return Ok(EXIT_OK);
    }
    out.text("replay differs from the recording:");
    for d in &report.diffs {
        out.text(format!("  {}: recorded {} / replayed {}", d.field, d.recorded, d.replayed));
    }
    Ok(EXIT_FAILED)
}

fn read_baselines(path: &Path) -> Result<Baselines, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_report(out: &Out, dir: &Path, baseline: Option<&Path>) -> CmdResult {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(usage(format!("{}: not a session directory", dir.display())));
    }
    let manifest = SessionManifest::load(dir)?;
    let report = SessionReport::from(&manifest);
    let rows = match baseline {
        Some(path) => compare_with_baselines(&report, &read_baselines(path)?),
        None => Vec::new(),
    };
    out.record(json!({ "event": "report", "report": report, "comparison": rows }));
    if !out.json {
        emit(&render_report_table(&report, &rows));
    }
    Ok(EXIT_OK)
}
