use std::time::Instant;

use super::reference::{generate_reference, sample_rejection, with_known_language, ReferenceError};
use super::store::SessionStore;
use super::{
    CompileVerdict, DebugSession, IterationRecord, Mode, OrchestratorError, ReferenceOrigin, SessionEnv,
    SessionStatus,
};
use crate::differential::{shrink_failure, stress_test, Failure, StressError, StressOutcome};
use crate::llm::{
    append_code_block_reminder, append_compile_diagnostics, build_failure_debug_prompt, build_zero_shot_debug_prompt,
    extract_code, ChatExchange, LlmError, LlmGateway, PromptKind,
};
use crate::sandbox::{ArtifactOrigin, CompileError, CompiledProgram, Role, SolutionArtifact};

pub enum ReferenceChoice {
    /// Ask the LLM for a brute force.
    Generate,
    /// Use a local file as the reference.
    Provided(SolutionArtifact),
}

// What the next iteration's prompt is built from.
struct LoopState {
    candidate: SolutionArtifact,
    failure: Failure,
    diagnostics: Option<String>,
}

struct Runner<'a, 'e> {
    env: &'a SessionEnv<'e>,
    gateway: &'a mut LlmGateway,
    store: Option<&'a mut SessionStore>,
    started: Instant,
    wall_before: u64,
}

impl Runner<'_, '_> {
    fn record(&mut self, exchange: &ChatExchange) -> Result<(), OrchestratorError> {
        match self.store.as_deref_mut() {
            Some(store) => store.record_exchange(exchange),
            None => Ok(()),
        }
    }

    fn persist(&self, session: &mut DebugSession) -> Result<(), OrchestratorError> {
        session.attempts = session.debug_exchange_count();
        session.wall_ms_total = self.wall_before + self.started.elapsed().as_millis() as u64;
        match self.store.as_deref() {
            Some(store) => store.save(session, self.env.sandbox.config()),
            None => Ok(()),
        }
    }

    fn finish(&self, mut session: DebugSession, status: SessionStatus) -> Result<DebugSession, OrchestratorError> {
        session.status = status;
        self.persist(&mut session)?;
        Ok(session)
    }

    fn stress(&self, candidate: &CompiledProgram, reference: &CompiledProgram) -> Result<StressOutcome, StressError> {
        let env = self.env;
        stress_test(env.sandbox, candidate, reference, env.gen, env.spec, &env.cfg.stress)
    }

    fn prompt_failure(
        &self,
        failure: &Failure,
        candidate: &CompiledProgram,
        reference: &CompiledProgram,
    ) -> Result<Failure, OrchestratorError> {
        let env = self.env;
        if !env.cfg.shrink {
            return Ok(failure.clone());
        }
        Ok(shrink_failure(
            env.sandbox,
            failure,
            env.gen,
            env.spec,
            candidate,
            reference,
            &env.cfg.stress,
            env.cfg.shrink_budget,
        )?)
    }

    fn start(
        &mut self,
        mut session: DebugSession,
        reference: ReferenceChoice,
    ) -> Result<DebugSession, OrchestratorError> {
        let env = self.env;
        self.persist(&mut session)?;
        let candidate = session.candidate_initial.clone();
        if !candidate.is_valid() {
            return self.finish(session, SessionStatus::Aborted {
                reason: "candidate source is empty".into(),
            });
        }
        let cand_prog = match env.sandbox.compile(&candidate) {
            Ok(p) => p,
            Err(CompileError::Failed { diagnostics }) => {
                return self.finish(session, SessionStatus::Aborted {
                    reason: format!("candidate does not compile:\n{diagnostics}"),
                });
            }
            Err(CompileError::Sandbox(e)) => return Err(e.into()),
        };

        let ref_prog = match reference {
            ReferenceChoice::Provided(artifact) => {
                session.reference = Some(artifact.clone());
                session.reference_origin = Some(ReferenceOrigin::User);
                let program = match env.sandbox.compile(&artifact) {
                    Ok(p) => p,
                    Err(CompileError::Failed { diagnostics }) => {
                        return self.finish(session, SessionStatus::ReferenceFailed {
                            reason: format!("reference does not compile:\n{diagnostics}"),
                        });
                    }
                    Err(CompileError::Sandbox(e)) => return Err(e.into()),
                };
                match sample_rejection(env, &program) {
                    Ok(None) => program,
                    Ok(Some(why)) => {
                        return self.finish(session, SessionStatus::ReferenceFailed { reason: why });
                    }
                    Err(e) => return Err(reference_infra(e)),
                }
            }
            ReferenceChoice::Generate => {
                let mut store_err = None;
                let mut exchanges = Vec::new();
                let result = {
                    let store = &mut self.store;
                    generate_reference(env, self.gateway, &mut |ex: &ChatExchange| {
                        exchanges.push(ex.clone());
                        if let Some(s) = store.as_deref_mut() {
                            if let Err(e) = s.record_exchange(ex) {
                                store_err.get_or_insert(e);
                            }
                        }
                    })
                };
                session.reference_exchanges = exchanges;
                if let Some(e) = store_err {
                    return Err(e);
                }
                match result {
                    Ok((artifact, program)) => {
                        session.reference = Some(artifact);
                        session.reference_origin = Some(ReferenceOrigin::Llm);
                        program
                    }
                    Err(e @ ReferenceError::GenerationFailed { .. }) => {
                        return self.finish(session, SessionStatus::ReferenceFailed { reason: e.to_string() });
                    }
                    Err(ReferenceError::Provider(e)) => {
                        return self.finish(session, aborted_by(&e));
                    }
                    Err(e) => return Err(reference_infra(e)),
                }
            }
        };
        self.persist(&mut session)?;

        let initial = self.stress(&cand_prog, &ref_prog)?;
        session.initial_stress = Some(initial.clone());
        let failure = match initial.failure() {
            Some(f) => self.prompt_failure(f, &cand_prog, &ref_prog)?,
            None => {
                let status = terminal_for(&initial).expect("non-failure outcome is terminal");
                let status = match status {
                    SessionStatus::Fixed { .. } => SessionStatus::AlreadyConsistent,
                    other => other,
                };
                return self.finish(session, status);
            }
        };
        let state = LoopState {
            candidate,
            failure,
            diagnostics: None,
        };
        self.drive(session, state, &ref_prog)
    }

    fn drive(
        &mut self,
        mut session: DebugSession,
        mut state: LoopState,
        reference: &CompiledProgram,
    ) -> Result<DebugSession, OrchestratorError> {
        let env = self.env;
        let max = env.cfg.max_iterations;
        while (session.iterations.len() as u32) < max {
            let index = session.iterations.len() as u32 + 1;
            let t0 = Instant::now();
            let (prompt, kind) = match session.mode {
                Mode::Depro => {
                    let p = build_failure_debug_prompt(env.spec, &state.candidate, &state.failure);
                    let p = match &state.diagnostics {
                        Some(d) => append_compile_diagnostics(&p, d),
                        None => p,
                    };
                    (p, PromptKind::FailureDebug)
                }
                Mode::ZeroShot => (
                    build_zero_shot_debug_prompt(env.spec, &state.candidate),
                    PromptKind::ZeroShotDebug,
                ),
            };

            let mut exchanges = Vec::new();
            let mut extracted = Err(LlmError::NoCodeBlock);
            for (round, text) in [prompt.clone(), append_code_block_reminder(&prompt)].iter().enumerate() {
                if round > 0 && !matches!(extracted, Err(LlmError::NoCodeBlock)) {
                    break;
                }
                let exchange = match self.gateway.complete(text, kind) {
                    Ok(x) => x,
                    Err(e) => return self.finish(session, aborted_by(&e)),
                };
                self.record(&exchange)?;
                extracted = extract_code(
                    &exchange.response,
                    &state.candidate.language,
                    Role::Candidate,
                    ArtifactOrigin::Llm { iteration: index },
                );
                exchanges.push(exchange);
            }

            let mut record = IterationRecord {
                index,
                candidate_in: state.candidate.clone(),
                failure_in: state.failure.clone(),
                diagnostics_in: state.diagnostics.clone(),
                exchanges,
                candidate_out: None,
                compile: CompileVerdict::NoCode,
                stress_out: None,
                wall_ms: 0,
            };
            let mut status = SessionStatus::Running;
            if let Ok(artifact) = extracted {
                let artifact = with_known_language(env, artifact, &state.candidate.language);
                record.candidate_out = Some(artifact.clone());
                match env.sandbox.compile(&artifact) {
                    Err(CompileError::Failed { diagnostics }) => {
                        record.compile = CompileVerdict::Ce {
                            diagnostics: diagnostics.clone(),
                        };
                        state.candidate = artifact;
                        state.diagnostics = Some(diagnostics);
                    }
                    Err(CompileError::Sandbox(e)) => return Err(e.into()),
                    Ok(program) => {
                        record.compile = CompileVerdict::Ok;
                        let outcome = self.stress(&program, reference)?;
                        state.candidate = artifact;
                        state.diagnostics = None;
                        match outcome.failure() {
                            Some(f) => state.failure = self.prompt_failure(f, &program, reference)?,
                            None => {
                                status = terminal_for(&outcome).expect("non-failure outcome is terminal");
                                if let SessionStatus::Fixed { iteration } = &mut status {
                                    *iteration = index;
                                }
                            }
                        }
                        record.stress_out = Some(outcome);
                    }
                }
            }
            record.wall_ms = t0.elapsed().as_millis() as u64;
            session.iterations.push(record);
            if status != SessionStatus::Running {
                return self.finish(session, status);
            }
            self.persist(&mut session)?;
        }
        self.finish(session, SessionStatus::Unfixed { budget: max })
    }
}

// Status implied by an outcome without a candidate failure. Fixed carries
// a placeholder iteration that the caller fills in.
fn terminal_for(outcome: &StressOutcome) -> Option<SessionStatus> {
    match outcome {
        StressOutcome::NoMismatch { .. } => Some(SessionStatus::Fixed { iteration: 0 }),
        StressOutcome::ReferenceFault { test, position, run } => Some(SessionStatus::ReferenceFailed {
            reason: format!(
                "reference {} on case {position} ({})",
                run.status.describe(),
                test.origin
            ),
        }),
        _ => None,
    }
}

fn aborted_by(e: &LlmError) -> SessionStatus {
    SessionStatus::Aborted {
        reason: format!("provider: {e}"),
    }
}

fn reference_infra(e: ReferenceError) -> OrchestratorError {
    match e {
        ReferenceError::Sandbox(e) => e.into(),
        ReferenceError::Checker(e) => OrchestratorError::Stress(StressError::Checker(e)),
        other => OrchestratorError::Store(other.to_string()),
    }
}

/// Runs a full session in `mode`. With a store, the session directory is
/// rewritten after every iteration and every exchange.
pub fn run_session(
    env: &SessionEnv<'_>,
    mode: Mode,
    candidate: SolutionArtifact,
    reference: ReferenceChoice,
    gateway: &mut LlmGateway,
    store: Option<&mut SessionStore>,
) -> Result<DebugSession, OrchestratorError> {
    env.cfg.validate()?;
    let session = DebugSession::new(mode, &env.spec.id, candidate, env.cfg);
    let mut runner = Runner {
        env,
        gateway,
        store,
        started: Instant::now(),
        wall_before: 0,
    };
    runner.start(session, reference)
}

pub fn run_depro(
    env: &SessionEnv<'_>,
    candidate: SolutionArtifact,
    reference: ReferenceChoice,
    gateway: &mut LlmGateway,
    store: Option<&mut SessionStore>,
) -> Result<DebugSession, OrchestratorError> {
    run_session(env, Mode::Depro, candidate, reference, gateway, store)
}

pub fn run_zero_shot(
    env: &SessionEnv<'_>,
    candidate: SolutionArtifact,
    reference: ReferenceChoice,
    gateway: &mut LlmGateway,
    store: Option<&mut SessionStore>,
) -> Result<DebugSession, OrchestratorError> {
    run_session(env, Mode::ZeroShot, candidate, reference, gateway, store)
}

/// Continues an interrupted session from its last completed iteration.
/// Finished sessions are returned unchanged.
pub fn resume_session(
    env: &SessionEnv<'_>,
    store: &mut SessionStore,
    gateway: &mut LlmGateway,
) -> Result<DebugSession, OrchestratorError> {
    env.cfg.validate()?;
    let mut session = store.load_session()?;
    if session.status.is_final() {
        return Ok(session);
    }
    let wall_before = session.wall_ms_total;
    session.status = SessionStatus::Running;
    session.config_snapshot = env.cfg.clone();

    let Some(reference) = session.reference.clone() else {
        // Interrupted before a reference existed: start over in place.
        let fresh = DebugSession::new(session.mode, &session.problem_id, session.candidate_initial, env.cfg);
        let mut runner = Runner {
            env,
            gateway,
            store: Some(store),
            started: Instant::now(),
            wall_before,
        };
        return runner.start(fresh, ReferenceChoice::Generate);
    };

    let mut runner = Runner {
        env,
        gateway,
        store: Some(store),
        started: Instant::now(),
        wall_before,
    };
    let compile = |a: &SolutionArtifact| match env.sandbox.compile(a) {
        Ok(p) => Ok(Some(p)),
        Err(CompileError::Failed { .. }) => Ok(None),
        Err(CompileError::Sandbox(e)) => Err(OrchestratorError::from(e)),
    };
    let Some(ref_prog) = compile(&reference)? else {
        return runner.finish(session, SessionStatus::ReferenceFailed {
            reason: "reference no longer compiles".into(),
        });
    };

    let state = match session.iterations.last() {
        None => {
            let Some(cand_prog) = compile(&session.candidate_initial)? else {
                return runner.finish(session, SessionStatus::Aborted {
                    reason: "candidate does not compile".into(),
                });
            };
            let initial = runner.stress(&cand_prog, &ref_prog)?;
            session.initial_stress = Some(initial.clone());
            match initial.failure() {
                Some(f) => LoopState {
                    candidate: session.candidate_initial.clone(),
                    failure: runner.prompt_failure(f, &cand_prog, &ref_prog)?,
                    diagnostics: None,
                },
                None => {
                    let status = match terminal_for(&initial) {
                        Some(SessionStatus::Fixed { .. }) | None => SessionStatus::AlreadyConsistent,
                        Some(other) => other,
                    };
                    return runner.finish(session, status);
                }
            }
        }
        Some(last) => match (&last.compile, &last.candidate_out, &last.stress_out) {
            (CompileVerdict::Ce { diagnostics }, Some(code), _) => LoopState {
                candidate: code.clone(),
                failure: last.failure_in.clone(),
                diagnostics: Some(diagnostics.clone()),
            },
            (CompileVerdict::Ok, Some(code), Some(outcome)) if outcome.failure().is_some() => LoopState {
                candidate: code.clone(),
                failure: outcome.failure().cloned().expect("checked"),
                diagnostics: None,
            },
            _ => LoopState {
                candidate: last.candidate_in.clone(),
                failure: last.failure_in.clone(),
                diagnostics: last.diagnostics_in.clone(),
            },
        },
    };
    runner.drive(session, state, &ref_prog)
}
