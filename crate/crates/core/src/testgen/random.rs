use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::value::{GeneratedInput, Value};
use super::{CaseOrigin, DeclKind, GeneratorSpec, IntRange, TestCase};

// Stream slot used for the case count of a multi-case input.
const COUNT_SLOT: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one (seed, index, sub-case, decl) coordinate.
pub(crate) fn stream(seed: u64, index: u64, case: u64, slot: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(index ^ splitmix64(case ^ splitmix64(slot))));
    ChaCha8Rng::seed_from_u64(key)
}

fn sample_int<R: Rng>(rng: &mut R, range: &IntRange) -> i64 {
    rng.gen_range(range.min..=range.effective_max())
}

pub(crate) fn sample_distinct<R: Rng>(rng: &mut R, range: &IntRange, len: usize) -> Vec<i64> {
    let span = range.span();
    if (len as u128).saturating_mul(2) >= span {
        // Dense: shuffle the whole range and take a prefix.
        let mut all: Vec<i64> = (range.min..=range.effective_max()).collect();
        all.shuffle(rng);
        all.truncate(len);
        all
    } else {
        let mut seen = HashSet::with_capacity(len);
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            let v = sample_int(rng, range);
            if seen.insert(v) {
                out.push(v);
            }
        }
        out
    }
}

fn length_of(spec: &GeneratorSpec, values: &[Value], len_ref: &str) -> usize {
    let idx = spec
        .decl_index(len_ref)
        .expect("length reference validated at parse time");
    match values[idx] {
        Value::Int(v) => usize::try_from(v).unwrap_or(0),
        _ => unreachable!("length reference is an int decl"),
    }
}

fn random_block(spec: &GeneratorSpec, seed: u64, index: u64, case: u64) -> Vec<Value> {
    let mut values = Vec::with_capacity(spec.decls.len());
    for (pos, decl) in spec.decls.iter().enumerate() {
        let mut rng = stream(seed, index, case, pos as u64);
        let value = match &decl.kind {
            DeclKind::Int(range) => Value::Int(sample_int(&mut rng, range)),
            DeclKind::Array {
                len_ref,
                elems,
                sorted,
                distinct,
            } => {
                let len = length_of(spec, &values, len_ref);
                let mut xs = if *distinct {
                    sample_distinct(&mut rng, elems, len)
                } else {
                    (0..len).map(|_| sample_int(&mut rng, elems)).collect()
                };
                if *sorted {
                    xs.sort_unstable();
                }
                Value::Array(xs)
            }
            DeclKind::Str { len_ref, alphabet } => {
                let len = length_of(spec, &values, len_ref);
                Value::Str(
                    (0..len)
                        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                        .collect(),
                )
            }
            DeclKind::Literal(_) => Value::Literal,
        };
        values.push(value);
    }
    values
}

pub(crate) fn random_structured(spec: &GeneratorSpec, seed: u64, index: u64) -> GeneratedInput {
    let count = match &spec.multi_case {
        Some(mc) => {
            let mut rng = stream(seed, index, COUNT_SLOT, COUNT_SLOT);
            sample_int(&mut rng, &mc.count) as u64
        }
        None => 1,
    };
    GeneratedInput {
        cases: (0..count)
            .map(|case| random_block(spec, seed, index, case))
            .collect(),
    }
}

/// One random case, a pure function of `(spec, seed, index)`.
pub fn generate_random(spec: &GeneratorSpec, seed: u64, index: u64) -> TestCase {
    let input = random_structured(spec, seed, index).render(spec);
    TestCase {
        input,
        origin: CaseOrigin::Random { seed, index },
    }
}

/// Cases `indices` generated on `jobs` workers; output order follows the
/// index order regardless of `jobs`.
pub fn generate_random_batch(
    spec: &GeneratorSpec,
    seed: u64,
    indices: std::ops::Range<u64>,
    jobs: usize,
) -> Vec<TestCase> {
    if jobs <= 1 {
        return indices.map(|i| generate_random(spec, seed, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        indices
            .into_par_iter()
            .map(|i| generate_random(spec, seed, i))
            .collect()
    })
}
