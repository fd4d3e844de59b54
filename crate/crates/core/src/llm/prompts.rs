// Prompt builders. All are pure functions of their arguments.

use std::fmt::Write as _;

use crate::differential::Failure;
use crate::problem::{render_problem_context, ProblemSpec};
use crate::sandbox::{Language, SolutionArtifact};

pub const SINGLE_BLOCK_INSTRUCTION: &str =
    "Reply with the complete program in exactly one fenced code block.";

/// Appended when a response contained no code block.
pub const CODE_BLOCK_REMINDER: &str =
    "Your previous reply contained no code block. Output only one code block containing the complete program, with no other code blocks.";

const DEBUG_INSTRUCTION: &str = "Can you debug my code? Correct my existing code rather than writing a new solution.";

/// A fence longer than any backtick run inside `body`.
pub(crate) fn fence_for(body: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in body.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    "`".repeat((longest + 1).max(3))
}

pub(crate) fn fenced(body: &str, tag: &str) -> String {
    let fence = fence_for(body);
    let mut out = format!("{fence}{tag}\n{body}");
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&fence);
    out.push('\n');
    out
}

fn verbatim(text: &str) -> &str {
    text.strip_suffix('\n').unwrap_or(text)
}

pub fn build_bruteforce_prompt(spec: &ProblemSpec, language: &Language) -> String {
    let mut p = render_problem_context(spec);
    let _ = write!(
        p,
        "\nTask: Consider the given problem description. Can you generate a brute-force solution in {language}? \
Prefer the simplest exhaustive approach that is obviously correct over an efficient one. \
It must pass all sample test cases. Read from standard input and write to standard output. \
{SINGLE_BLOCK_INSTRUCTION}\n"
    );
    p
}

/// Brute-force request repeated with the reason the previous answer was
/// rejected.
pub fn build_bruteforce_retry_prompt(
    spec: &ProblemSpec,
    language: &Language,
    previous: Option<&SolutionArtifact>,
    feedback: &str,
) -> String {
    let mut p = build_bruteforce_prompt(spec, language);
    p.push_str("\nA previous attempt was rejected.\n");
    if let Some(prev) = previous {
        p.push_str("Previous attempt:\n");
        p.push_str(&fenced(&prev.source, prev.language.fence_tag()));
    }
    let _ = write!(p, "Reason:\n{}\n", verbatim(feedback));
    p
}

pub fn build_zero_shot_debug_prompt(spec: &ProblemSpec, candidate: &SolutionArtifact) -> String {
    let mut p = render_problem_context(spec);
    p.push_str("\nHere is my code for this problem:\n");
    p.push_str(&fenced(&candidate.source, candidate.language.fence_tag()));
    let _ = writeln!(
        p,
        "Task: Consider the given problem description. Here is my code for this problem. I got wrong answer. \
{DEBUG_INSTRUCTION} {SINGLE_BLOCK_INSTRUCTION}"
    );
    p
}

/// Failing-case prompt. The problem context is resent every time because
/// each exchange is single-turn.
pub fn build_failure_debug_prompt(spec: &ProblemSpec, candidate: &SolutionArtifact, failure: &Failure) -> String {
    let mut p = render_problem_context(spec);
    p.push_str("\nThis is my code.\n");
    p.push_str(&fenced(&candidate.source, candidate.language.fence_tag()));
    let _ = write!(
        p,
        "It failed in the test case:\nInput:\n{}\nOutput:\n{}\nExpected Output:\n{}\n",
        verbatim(&failure.test.input),
        verbatim(&failure.actual),
        verbatim(&failure.expected)
    );
    if let Some(fault) = &failure.fault {
        let _ = writeln!(p, "Verdict: {}", fault.describe());
    }
    let _ = writeln!(p, "{DEBUG_INSTRUCTION} {SINGLE_BLOCK_INSTRUCTION}");
    p
}

/// Adds compiler output to a debug prompt after a fix failed to build.
pub fn append_compile_diagnostics(prompt: &str, diagnostics: &str) -> String {
    format!(
        "{prompt}\nThe code above does not compile. Compiler output:\n{}",
        fenced(diagnostics, "")
    )
}

pub fn append_code_block_reminder(prompt: &str) -> String {
    format!("{prompt}\n{CODE_BLOCK_REMINDER}\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ComparatorSpec, ResourceLimits, SampleCase};
    use crate::sandbox::RunStatus;
    use crate::testgen::{CaseOrigin, TestCase};

    pub(crate) fn spec() -> ProblemSpec {
        ProblemSpec {
            id: "p".into(),
            statement: "Sum the numbers.".into(),
            input_description: "n then n integers".into(),
            output_description: "the sum".into(),
            limits: ResourceLimits::new(1000, 256),
            samples: vec![
                SampleCase { input: "2\n1 2\n".into(), expected_output: "3\n".into() },
                SampleCase { input: "1\n7\n".into(), expected_output: "7\n".into() },
            ],
            comparator: ComparatorSpec::tokens(),
            generator_path: "gen.dsl".into(),
        }
    }

    fn failure(input: &str, actual: &str, expected: &str) -> Failure {
        Failure {
            test: TestCase::new(input, CaseOrigin::Edge { strategy: "all_max".into() }),
            expected: expected.into(),
            actual: actual.into(),
            position: 3,
            fault: None,
        }
    }

    #[test]
    fn bruteforce_prompt_contents() {
        let p = build_bruteforce_prompt(&spec(), &Language::Cpp);
        assert!(p.contains("brute-force solution"));
        assert!(p.contains("Sample Input 1:\n2\n1 2"));
        assert!(p.contains("Sample Input 2:\n1\n7"));
        assert_eq!(p, build_bruteforce_prompt(&spec(), &Language::Cpp));
    }

    #[test]
    fn zero_shot_embeds_source_verbatim() {
        let code = SolutionArtifact::user_candidate("int main(){}\n", Language::Cpp);
        let p = build_zero_shot_debug_prompt(&spec(), &code);
        assert!(p.contains("```cpp\nint main(){}\n```\n"));
        assert!(p.contains("Can you debug my code?"));
        assert!(p.contains("rather than writing a new solution"));
    }

    #[test]
    fn failure_prompt_layout() {
        let code = SolutionArtifact::user_candidate("print(2)\n", Language::Python);
        let p = build_failure_debug_prompt(&spec(), &code, &failure("1 2 3 4\n", "2\n", "4\n"));
        assert!(p.contains("This is my code.\n```python\nprint(2)\n```\nIt failed in the test case:\nInput:\n1 2 3 4\nOutput:\n2\nExpected Output:\n4\nCan you debug my code?"), "{p}");
        assert_eq!(p, build_failure_debug_prompt(&spec(), &code, &failure("1 2 3 4\n", "2\n", "4\n")));
    }

    #[test]
    fn multi_line_input_keeps_its_lines() {
        let code = SolutionArtifact::user_candidate("x\n", Language::Python);
        let p = build_failure_debug_prompt(&spec(), &code, &failure("3\n1 2\n3 4\n", "0\n", "1\n"));
        assert!(p.contains("Input:\n3\n1 2\n3 4\nOutput:"));
    }

    #[test]
    fn fault_verdict_is_reported() {
        let code = SolutionArtifact::user_candidate("x\n", Language::Python);
        let mut f = failure("1\n", "", "1\n");
        f.fault = Some(RunStatus::Tle);
        let p = build_failure_debug_prompt(&spec(), &code, &f);
        assert!(p.contains("Verdict: time limit exceeded"));
    }

    #[test]
    fn fence_grows_past_backtick_runs() {
        assert_eq!(fence_for("no ticks"), "```");
        assert_eq!(fence_for("a ```` b"), "`````");
    }
}
