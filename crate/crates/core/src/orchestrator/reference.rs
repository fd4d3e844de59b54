use thiserror::Error;

use super::SessionEnv;
use crate::differential::{compare_with_input, CheckerError};
use crate::llm::{
    build_bruteforce_prompt, build_bruteforce_retry_prompt, extract_code, ChatExchange, LlmError, LlmGateway,
    PromptKind,
};
use crate::sandbox::{ArtifactOrigin, CompileError, CompiledProgram, Role, RunStatus, SandboxError, SolutionArtifact};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("no brute force passed the samples after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: u32, reason: String },
    #[error(transparent)]
    Provider(#[from] LlmError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
}

/// Why a program is not acceptable as a reference, or None if it is.
pub(crate) fn sample_rejection(
    env: &SessionEnv<'_>,
    program: &CompiledProgram,
) -> Result<Option<String>, ReferenceError> {
    let spec = env.spec;
    let limits = spec.limits.scaled_time(env.cfg.stress.reference_time_factor);
    for (i, sample) in spec.samples.iter().enumerate() {
        let n = i + 1;
        let run = env.sandbox.run(program, &sample.input, limits)?;
        if run.status != RunStatus::Ok {
            return Ok(Some(format!("Sample {n}: {}", run.status.describe())));
        }
        if !compare_with_input(&sample.input, &sample.expected_output, &run.stdout, &spec.comparator)? {
            return Ok(Some(format!(
                "On sample {n} the program printed:\n{}\nbut the expected output is:\n{}",
                run.stdout.trim_end(),
                sample.expected_output.trim_end()
            )));
        }
    }
    Ok(None)
}

/// Asks for a brute-force solution until one compiles and passes every
/// sample, at most `1 + bruteforce_retries` times. Every exchange is
/// handed to `on_exchange` as soon as it completes.
pub fn generate_reference(
    env: &SessionEnv<'_>,
    gateway: &mut LlmGateway,
    on_exchange: &mut dyn FnMut(&ChatExchange),
) -> Result<(SolutionArtifact, CompiledProgram), ReferenceError> {
    let language = &env.cfg.reference_language;
    let tries = 1 + env.cfg.bruteforce_retries;
    let mut previous: Option<SolutionArtifact> = None;
    let mut reason = String::new();
    for attempt in 1..=tries {
        let prompt = if attempt == 1 {
            build_bruteforce_prompt(env.spec, language)
        } else {
            build_bruteforce_retry_prompt(env.spec, language, previous.as_ref(), &reason)
        };
        let exchange = gateway.complete(&prompt, PromptKind::BruteForce)?;
        on_exchange(&exchange);

        let artifact = match extract_code(
            &exchange.response,
            language,
            Role::Reference,
            ArtifactOrigin::Llm { iteration: attempt },
        ) {
            Ok(a) => a,
            Err(LlmError::NoCodeBlock) => {
                previous = None;
                reason = "The reply contained no code block.".into();
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let artifact = with_known_language(env, artifact, language);
        match env.sandbox.compile(&artifact) {
            Ok(program) => match sample_rejection(env, &program)? {
                None => return Ok((artifact, program)),
                Some(why) => reason = why,
            },
            Err(CompileError::Failed { diagnostics }) => {
                reason = format!("The program does not compile:\n{}", diagnostics.trim_end());
            }
            Err(CompileError::Sandbox(e)) => return Err(e.into()),
        }
        previous = Some(artifact);
    }
    Err(ReferenceError::GenerationFailed {
        attempts: tries,
        reason,
    })
}

/// Replaces a fence-tag language with no configured toolchain by `fallback`.
pub(crate) fn with_known_language(
    env: &SessionEnv<'_>,
    mut artifact: SolutionArtifact,
    fallback: &crate::sandbox::Language,
) -> SolutionArtifact {
    if env.sandbox.config().toolchain(&artifact.language).is_err() {
        artifact.language = fallback.clone();
    }
    artifact
}
