// Shared fixtures. The "sum" problem: n (1..=10), then n integers; print
// their sum. The planted bug adds one when n is at its maximum.
#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use depro::differential::StressConfig;
use depro::llm::ProviderConfig;
use depro::orchestrator::LoopConfig;
use depro::problem::{ComparatorSpec, ProblemSpec, ResourceLimits, SampleCase};
use depro::sandbox::{Language, Sandbox, SolutionArtifact, ToolConfig, Toolchain};
use depro::testgen::{parse_generator_spec, GeneratorSpec};

pub const SUM_GEN: &str = "int n 1 10\narray a n -100 100\n";

pub const SUM_CPP: &str = r#"#include <cstdio>
int main() {
    int n; long long s = 0, x;
    if (scanf("%d", &n) != 1) return 0;
    for (int i = 0; i < n; i++) { scanf("%lld", &x); s += x; }
    printf("%lld\n", s);
}
"#;

pub const SUM_CPP_BUGGY: &str = r#"#include <cstdio>
int main() {
    int n; long long s = 0, x;
    if (scanf("%d", &n) != 1) return 0;
    for (int i = 0; i < n; i++) { scanf("%lld", &x); s += x; }
    if (n == 10) s++;
    printf("%lld\n", s);
}
"#;

pub const SUM_AWK: &str = "NR == 1 { n = $1 }\nNR == 2 { s = 0; for (i = 1; i <= n; i++) s += $i; print s }\n";
pub const SUM_AWK_BUGGY: &str =
    "NR == 1 { n = $1 }\nNR == 2 { s = 0; for (i = 1; i <= n; i++) s += $i; if (n == 10) s++; print s }\n";
/// Right on the samples, wrong whenever n > 3.
pub const SUM_AWK_SAMPLES_ONLY: &str =
    "NR == 1 { n = $1 }\nNR == 2 { s = 0; for (i = 1; i <= n; i++) s += $i; if (n > 3) s = -s; print s }\n";
pub const SUM_AWK_WRONG: &str = "NR == 2 { print 0 }\n";
pub const AWK_SYNTAX_ERROR: &str = "NR == 2 { print ( }\n";

pub fn sum_spec() -> ProblemSpec {
    ProblemSpec {
        id: "sum".into(),
        statement: "Print the sum of the given integers.".into(),
        input_description: "The first line holds n (1 <= n <= 10). The second holds n integers in [-100, 100].".into(),
        output_description: "One integer: the sum.".into(),
        limits: ResourceLimits::new(1000, 256),
        samples: vec![
            SampleCase { input: "3\n1 2 3\n".into(), expected_output: "6\n".into() },
            SampleCase { input: "1\n-5\n".into(), expected_output: "-5\n".into() },
        ],
        comparator: ComparatorSpec::tokens(),
        generator_path: "gen.dsl".into(),
    }
}

pub fn sum_gen() -> GeneratorSpec {
    parse_generator_spec(SUM_GEN).unwrap()
}

pub fn awk() -> Language {
    Language::from_name("awk")
}

/// Default toolchains plus awk, whose "compile" step is a syntax check.
pub fn tools() -> ToolConfig {
    let mut t = ToolConfig::default();
    t.languages.insert(
        "awk".into(),
        Toolchain {
            extension: "awk".into(),
            compile_cmd: Some("awk -f {src} /dev/null".into()),
            run_cmd: "awk -f {src}".into(),
        },
    );
    t
}

pub fn sandbox() -> Sandbox {
    Sandbox::new(tools())
}

pub fn loop_config(provider: ProviderConfig, max_random_cases: u64) -> LoopConfig {
    LoopConfig {
        stress: StressConfig {
            max_random_cases,
            seed: 7,
            ..StressConfig::default()
        },
        provider,
        reference_language: awk(),
        ..LoopConfig::default()
    }
}

pub fn fenced(lang: &str, code: &str) -> String {
    format!("Here is the corrected program.\n\n```{lang}\n{code}```\n")
}

pub fn awk_reply(code: &str) -> String {
    fenced("awk", code)
}

pub fn candidate(code: &str, lang: Language) -> SolutionArtifact {
    SolutionArtifact::user_candidate(code, lang)
}

/// Writes a scripted-provider fixture and returns its path.
pub fn write_script(dir: &Path, name: &str, responses: &[String]) -> std::path::PathBuf {
    let records: Vec<serde_json::Value> = responses
        .iter()
        .map(|r| serde_json::json!({ "response": r }))
        .collect();
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&records).unwrap()).unwrap();
    path
}

/// Problem directory with problem.spec and gen.dsl.
pub fn write_problem_dir(dir: &Path) {
    depro::problem::save_problem(&sum_spec(), &dir.join("problem.spec")).unwrap();
    std::fs::write(dir.join("gen.dsl"), SUM_GEN).unwrap();
}
