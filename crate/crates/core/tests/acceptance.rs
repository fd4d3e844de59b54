//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use common::oracle::verify;
use common::*;
use depro::differential::{compare_outputs, leading_cases, stress_test, StressConfig, StressOutcome};
use depro::llm::{live_requests_issued, LlmGateway, PromptKind, ProviderConfig, ScriptedProvider};
use depro::orchestrator::{
    generate_reference, replay_session, run_depro, LoopConfig, ReferenceChoice, SessionEnv, SessionManifest,
    SessionStatus, TRANSCRIPT_FILE,
};
use depro::problem::{ComparatorSpec, ResourceLimits};
use depro::sandbox::{Language, RunStatus, Sandbox};
use depro::testgen::{generate_random_batch, parse_generator_spec, CaseOrigin};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

const AWK_TOOLS: &str = r#"
[languages.awk]
extension = "awk"
compile_cmd = "awk -f {src} /dev/null"
run_cmd = "awk -f {src}"
"#;

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        write_problem_dir(&root);
        fs::write(root.join("tools.toml"), AWK_TOOLS).unwrap();
        fs::write(root.join("buggy.awk"), SUM_AWK_BUGGY).unwrap();
        Self { _tmp: tmp, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn depro(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_depro"))
            .arg("--config")
            .arg(self.path("tools.toml"))
            .args(args)
            .output()
            .unwrap()
    }

    fn fix(&self, script: &Path, session: &Path) -> Output {
        let s = |p: &Path| p.to_str().unwrap().to_string();
        self.depro(&[
            "fix",
            &s(&self.root),
            "--candidate",
            &s(&self.path("buggy.awk")),
            "--provider",
            &format!("scripted:{}", s(script)),
            "--max-iter",
            "8",
            "--cases",
            "100",
            "--session",
            &s(session),
        ])
    }
}

fn loop_budget() -> Check {
    let ws = Workspace::new();
    let responses: Vec<String> = std::iter::once(awk_reply(SUM_AWK))
        .chain(std::iter::repeat_n(awk_reply(SUM_AWK_BUGGY), 8))
        .collect();
    let script = write_script(&ws.root, "never.json", &responses);
    let session = ws.path("session");
    let start = Instant::now();
    let out = ws.fix(&script, &session);
    let secs = start.elapsed().as_secs_f64();
    ensure(out.status.code() == Some(1), format!("exit code {:?}", out.status.code()))?;
    let m = SessionManifest::load(&session).map_err(|e| e.to_string())?;
    ensure(m.status == SessionStatus::Unfixed { budget: 8 }, format!("status {:?}", m.status))?;
    ensure(m.iterations.len() == 8, format!("{} iterations", m.iterations.len()))?;
    ensure(m.attempts == 8, format!("attempts {}", m.attempts))?;
    ensure(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!("Unfixed after 8 iterations, attempts 8, {secs:.1}s"))
}

fn fixed_at_k() -> Check {
    let sandbox = Sandbox::default();
    let (spec, gen) = (sum_spec(), sum_gen());
    let cfg = LoopConfig {
        stress: StressConfig {
            max_random_cases: 100,
            seed: 2024,
            ..StressConfig::default()
        },
        reference_language: Language::Cpp,
        ..LoopConfig::default()
    };
    let env = SessionEnv {
        sandbox: &sandbox,
        spec: &spec,
        gen: &gen,
        cfg: &cfg,
    };
    let mut seen = Vec::new();
    for k in [1u32, 3, 8] {
        let responses: Vec<String> = std::iter::once(fenced("cpp", SUM_CPP))
            .chain((1..k).map(|_| fenced("cpp", SUM_CPP_BUGGY)))
            .chain(std::iter::once(fenced("cpp", SUM_CPP)))
            .collect();
        let mut gw = LlmGateway::new(Box::new(ScriptedProvider::new(responses)));
        let cand = candidate(SUM_CPP_BUGGY, Language::Cpp);
        let session = run_depro(&env, cand, ReferenceChoice::Generate, &mut gw, None).map_err(|e| e.to_string())?;
        ensure(session.status == SessionStatus::Fixed { iteration: k }, format!("k={k}: {:?}", session.status))?;
        ensure(session.attempts == k, format!("k={k}: attempts {}", session.attempts))?;

        let fin = sandbox.compile(session.final_candidate()).map_err(|e| e.to_string())?;
        let reference = sandbox.compile(&candidate(SUM_CPP, Language::Cpp)).map_err(|e| e.to_string())?;
        let again = stress_test(&sandbox, &fin, &reference, &gen, &spec, &session.config_snapshot.stress)
            .map_err(|e| e.to_string())?;
        ensure(matches!(again, StressOutcome::NoMismatch { .. }), format!("k={k}: re-stress {}", again.kind()))?;
        seen.push(format!("Fixed({k})"));
    }
    Ok(format!("{} with clean re-stress", seen.join(", ")))
}

fn generator_determinism() -> Check {
    let spec = parse_generator_spec(
        "cases t 1 3\nint n 1 100\nint k -1000000000000 1000000000000 inline\narray a n 1 1000000000 sorted\nstring s n abc\n",
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let first = generate_random_batch(&spec, 42, 0..1000, 1);
    let second = generate_random_batch(&spec, 42, 0..1000, 1);
    let wide = generate_random_batch(&spec, 42, 0..1000, 8);
    ensure(first.len() == 1000, "batch size")?;
    ensure(first == second, "two runs differ")?;
    ensure(first == wide, "jobs 1 and 8 differ")?;
    for (i, c) in first.iter().enumerate() {
        verify(&spec, &c.input).map_err(|e| format!("case {i}: {e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("took {secs:.1}s"))?;
    Ok(format!("1000 cases identical across runs and jobs, all re-parse, {secs:.2}s"))
}

fn differential_soundness() -> Check {
    let sandbox = Sandbox::default();
    let (spec, gen) = (sum_spec(), sum_gen());
    let cand = sandbox.compile(&candidate(SUM_CPP_BUGGY, Language::Cpp)).map_err(|e| e.to_string())?;
    let reference = sandbox.compile(&candidate(SUM_CPP, Language::Cpp)).map_err(|e| e.to_string())?;
    let cfg = StressConfig {
        max_random_cases: 100,
        seed: 42,
        ..StressConfig::default()
    };
    let lead = leading_cases(&gen, &spec, &cfg).len() as u64;
    let mut position = None;
    for run in 0..50 {
        let out = stress_test(&sandbox, &cand, &reference, &gen, &spec, &cfg).map_err(|e| e.to_string())?;
        let StressOutcome::Failure(f) = &out else {
            return Err(format!("run {run}: {}", out.kind()));
        };
        ensure(matches!(f.test.origin, CaseOrigin::Edge { .. }), format!("run {run}: found by {}", f.test.origin))?;
        ensure(f.position < lead, format!("run {run}: position {} is past the edge cases", f.position))?;
        ensure(*position.get_or_insert(f.position) == f.position, format!("run {run}: position moved"))?;
        let r = sandbox.run(&reference, &f.test.input, spec.limits.scaled_time(10)).map_err(|e| e.to_string())?;
        let c = sandbox.run(&cand, &f.test.input, spec.limits).map_err(|e| e.to_string())?;
        let same = |a: &str, b: &str| compare_outputs(a, b, &spec.comparator).unwrap_or(false);
        ensure(same(&r.stdout, &f.expected) && same(&c.stdout, &f.actual), format!("run {run}: did not re-verify"))?;
        ensure(!same(&r.stdout, &c.stdout), format!("run {run}: flaky"))?;
    }
    Ok(format!("edge case at position {} in 50/50 runs, 0 flaky", position.unwrap_or(0)))
}

fn sandbox_limits() -> Check {
    let sandbox = Sandbox::default();
    let limits = ResourceLimits::new(1000, 256);
    let spin = sandbox
        .compile(&candidate("int main() { volatile unsigned x = 0; for (;;) x++; }\n", Language::Cpp))
        .map_err(|e| e.to_string())?;
    let crash = sandbox
        .compile(&candidate("#include <cstdlib>\nint main() { std::exit(3); }\n", Language::Cpp))
        .map_err(|e| e.to_string())?;
    let mut in_window = 0;
    let mut walls = Vec::new();
    for _ in 0..50 {
        let r = sandbox.run(&spin, "", limits).map_err(|e| e.to_string())?;
        if r.status == RunStatus::Tle && (1000..=2000).contains(&r.wall_ms) {
            in_window += 1;
        }
        walls.push(r.wall_ms);
    }
    let mut re3 = 0;
    for _ in 0..50 {
        if sandbox.run(&crash, "", limits).map_err(|e| e.to_string())?.status == (RunStatus::Re { exit_code: 3 }) {
            re3 += 1;
        }
    }
    let (lo, hi) = (walls.iter().min().unwrap(), walls.iter().max().unwrap());
    ensure(in_window >= 49, format!("TLE in window {in_window}/50, wall {lo}..{hi} ms"))?;
    ensure(re3 == 50, format!("RE(3) {re3}/50"))?;
    Ok(format!("TLE {in_window}/50 with wall {lo}..{hi} ms, RE(3) {re3}/50"))
}

fn laws_config() -> Config {
    Config {
        failure_persistence: None,
        ..Config::with_cases(1000)
    }
}

fn comparator_laws() -> Check {
    let tokens = ComparatorSpec::tokens();
    let exact = ComparatorSpec::exact();
    let eq = |a: &str, b: &str, c: &ComparatorSpec| compare_outputs(a, b, c).unwrap();
    ensure(!eq("4\n", "2\n", &tokens), "\"2\" vs \"4\" accepted")?;

    let mut runner = TestRunner::new(laws_config());
    let out = "[-0-9ab .\n\t]{0,16}";
    runner
        .run(&(out, out, out), |(a, b, c)| {
            prop_assert!(eq(&a, &a, &exact));
            prop_assert_eq!(eq(&a, &b, &exact), eq(&b, &a, &exact));
            if eq(&a, &b, &exact) && eq(&b, &c, &exact) {
                prop_assert!(eq(&a, &c, &exact));
            }
            prop_assert_eq!(eq(&a, &b, &tokens), eq(&b, &a, &tokens));
            Ok(())
        })
        .map_err(|e| format!("exact/tokens laws: {e}"))?;

    let mut runner = TestRunner::new(laws_config());
    runner
        .run(&("[a-z0-9 \n]{0,16}", "[ \t\n]{0,4}"), |(a, pad)| {
            let padded: String = a.lines().map(|l| format!("{l}{pad}\n")).collect();
            prop_assert!(eq(&a, &padded, &tokens));
            Ok(())
        })
        .map_err(|e| format!("trailing whitespace: {e}"))?;

    // Grid of 1e-4 steps around ε = 0.1; offsets within one step of ε are
    // skipped so float rounding cannot decide the case.
    let mut runner = TestRunner::new(laws_config());
    runner
        .run(&(-10_000i64..10_000, 0i64..2000), |(base, off)| {
            prop_assume!((off - 1000).abs() > 1);
            let a = base as f64 / 10_000.0;
            let b = (base + off) as f64 / 10_000.0;
            let got = eq(&format!("{a:.4}"), &format!("{b:.4}"), &ComparatorSpec::float_eps(0.1));
            prop_assert_eq!(got, off < 1000);
            Ok(())
        })
        .map_err(|e| format!("epsilon boundary: {e}"))?;
    Ok("3 x 1000 generated cases, \"2\" vs \"4\" is a mismatch".into())
}

fn replay_fidelity() -> Check {
    let ws = Workspace::new();
    let responses: Vec<String> = [SUM_AWK, SUM_AWK_BUGGY, SUM_AWK_BUGGY, SUM_AWK].iter().map(|c| awk_reply(c)).collect();
    let script = write_script(&ws.root, "rec.json", &responses);
    let session = ws.path("session");
    let out = ws.fix(&script, &session);
    ensure(out.status.code() == Some(0), format!("recording exit {:?}", out.status.code()))?;

    let before = live_requests_issued();
    let report = replay_session(&session).map_err(|e| e.to_string())?;
    ensure(report.reproduced(), format!("replay differs: {:?}", report.diffs))?;
    ensure(live_requests_issued() == before, "replay issued live requests")?;
    let m = SessionManifest::load(&session).map_err(|e| e.to_string())?;
    let verdicts = m.verdicts().join(",");

    let cli = ws.depro(&["replay", session.to_str().unwrap()]);
    ensure(cli.status.code() == Some(0), format!("replay exit {:?}", cli.status.code()))?;

    let path = session.join(TRANSCRIPT_FILE);
    let original = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let mutated = original.replacen("print s }", "print s;}", 1);
    ensure(mutated.len() == original.len() && mutated != original, "mutation did not apply")?;
    fs::write(&path, mutated).map_err(|e| e.to_string())?;
    let cli = ws.depro(&["replay", session.to_str().unwrap()]);
    ensure(cli.status.code() == Some(1), format!("mutated replay exit {:?}", cli.status.code()))?;
    Ok(format!("{} / {} attempts / [{verdicts}] reproduced, 0 live calls, mutation exits 1", m.status.kind(), m.attempts))
}

fn reference_validation() -> Check {
    let sandbox = Sandbox::default();
    let (spec, gen) = (sum_spec(), sum_gen());
    let cfg = LoopConfig {
        provider: ProviderConfig::scripted("unused.json"),
        reference_language: Language::Cpp,
        ..LoopConfig::default()
    };
    let env = SessionEnv {
        sandbox: &sandbox,
        spec: &spec,
        gen: &gen,
        cfg: &cfg,
    };
    let wrong = "#include <cstdio>\nint main() { puts(\"0\"); }\n";
    let mut gw = LlmGateway::new(Box::new(ScriptedProvider::new([fenced("cpp", wrong), fenced("cpp", SUM_CPP)])));
    let mut exchanges = 0;
    let (artifact, program) =
        generate_reference(&env, &mut gw, &mut |_| exchanges += 1).map_err(|e| e.to_string())?;
    ensure(artifact.source == SUM_CPP, "accepted the wrong program")?;
    ensure(exchanges == 2 && gw.transcript().len() == 2, format!("{exchanges} exchanges"))?;
    ensure(gw.transcript().iter().all(|e| e.kind == PromptKind::BruteForce), "transcript kinds")?;
    for s in &spec.samples {
        let r = sandbox.run(&program, &s.input, spec.limits).map_err(|e| e.to_string())?;
        ensure(eq_tokens(&s.expected_output, &r.stdout), "accepted reference fails a sample")?;
    }
    Ok("accepted on exchange 2, both exchanges in the transcript".into())
}

fn eq_tokens(a: &str, b: &str) -> bool {
    compare_outputs(a, b, &ComparatorSpec::tokens()).unwrap_or(false)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("loop budget", loop_budget),
        ("fixed at k", fixed_at_k),
        ("generator determinism", generator_determinism),
        ("differential soundness", differential_soundness),
        ("sandbox limits", sandbox_limits),
        ("comparator laws", comparator_laws),
        ("replay fidelity", replay_fidelity),
        ("reference validation", reference_validation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
