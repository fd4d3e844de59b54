use super::stress::{Failure, Harness, StressOutcome};
use super::{StressConfig, StressError};
use crate::problem::ProblemSpec;
use crate::sandbox::{CompiledProgram, Sandbox};
use crate::testgen::{parse_input, CaseOrigin, DeclKind, GeneratedInput, GeneratorSpec, TestCase, Value};

// Strictly smaller neighbours of `input`, most aggressive first: single
// sub-cases, dropped sub-cases, then halved and decremented lengths.
fn reductions(gen: &GeneratorSpec, input: &GeneratedInput) -> Vec<GeneratedInput> {
    let mut out = Vec::new();
    let k = input.cases.len();
    if let Some(mc) = &gen.multi_case {
        if k > 1 {
            if mc.count.min <= 1 {
                for case in &input.cases {
                    out.push(GeneratedInput { cases: vec![case.clone()] });
                }
            }
            if (k as i64 - 1) >= mc.count.min {
                for skip in 0..k {
                    let mut cases = input.cases.clone();
                    cases.remove(skip);
                    out.push(GeneratedInput { cases });
                }
            }
        }
    }
    for (ci, case) in input.cases.iter().enumerate() {
        for (di, decl) in gen.decls.iter().enumerate() {
            let (DeclKind::Int(range), Some(name)) = (&decl.kind, decl.name.as_deref()) else {
                continue;
            };
            if !gen.is_length_var(name) {
                continue;
            }
            let Value::Int(len) = case[di] else { continue };
            let mut targets = vec![(len / 2).max(range.min)];
            if len > range.min {
                targets.push(len - 1);
            }
            targets.dedup();
            for new_len in targets.into_iter().filter(|&l| l < len) {
                let mut shrunk = input.clone();
                truncate_block(gen, &mut shrunk.cases[ci], name, di, new_len);
                out.push(shrunk);
            }
        }
    }
    out
}

fn truncate_block(gen: &GeneratorSpec, block: &mut [Value], len_var: &str, len_pos: usize, new_len: i64) {
    block[len_pos] = Value::Int(new_len);
    let n = new_len.max(0) as usize;
    for (decl, value) in gen.decls.iter().zip(block.iter_mut()) {
        match (&decl.kind, value) {
            (DeclKind::Array { len_ref, .. }, Value::Array(xs)) if len_ref == len_var => xs.truncate(n),
            (DeclKind::Str { len_ref, .. }, Value::Str(s)) if len_ref == len_var => {
                *s = s.chars().take(n).collect();
            }
            _ => {}
        }
    }
}

fn same_kind(original: &Failure, outcome: &StressOutcome) -> Option<Failure> {
    let f = outcome.failure()?;
    let kind = |x: &Failure| x.fault.as_ref().map(|s| s.short());
    (kind(f) == kind(original)).then(|| f.clone())
}

/// Greedily reduces a failing input while it keeps failing the same way.
/// `budget` caps the number of re-executions (each runs both programs).
#[allow(clippy::too_many_arguments)]
pub fn shrink_failure(
    sandbox: &Sandbox,
    failure: &Failure,
    gen: &GeneratorSpec,
    spec: &ProblemSpec,
    candidate: &CompiledProgram,
    reference: &CompiledProgram,
    cfg: &StressConfig,
    budget: u32,
) -> Result<Failure, StressError> {
    let mut budget = budget;
    let Some(mut current) = parse_input(gen, &failure.test.input) else {
        return Ok(failure.clone());
    };
    let harness = Harness {
        sandbox,
        candidate,
        reference,
        spec,
        cfg,
    };
    let mut best = failure.clone();
    'outer: while budget > 0 {
        for smaller in reductions(gen, &current) {
            if budget == 0 {
                break 'outer;
            }
            budget -= 1;
            let test = TestCase::new(smaller.render(gen), CaseOrigin::Shrunk {
                parent: Box::new(failure.test.origin.clone()),
            });
            if let Some(outcome) = harness.evaluate(&test, failure.position)? {
                if let Some(f) = same_kind(failure, &outcome) {
                    best = f;
                    current = smaller;
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok(best)
}
