use std::collections::HashSet;

use super::value::{GeneratedInput, Value};
use super::{CaseOrigin, DeclKind, GeneratorSpec, IntRange, TestCase};

#[derive(Clone, Copy)]
enum Pick {
    Min,
    Max,
}

#[derive(Clone, Copy)]
enum Pattern {
    AllMin,
    AllMax,
    AllEqual,
    Ascending,
    Descending,
    Alternating,
    Permutation,
}

struct Plan {
    name: &'static str,
    count: Pick,
    scalar: Pick,
    length: Pick,
    pattern: Pattern,
}

const PLANS: &[Plan] = &[
    Plan { name: "all_min", count: Pick::Min, scalar: Pick::Min, length: Pick::Min, pattern: Pattern::AllMin },
    Plan { name: "all_max", count: Pick::Max, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::AllMax },
    Plan { name: "max_len_min_values", count: Pick::Min, scalar: Pick::Min, length: Pick::Max, pattern: Pattern::AllMin },
    Plan { name: "min_len_max_values", count: Pick::Min, scalar: Pick::Max, length: Pick::Min, pattern: Pattern::AllMax },
    Plan { name: "all_equal", count: Pick::Min, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::AllEqual },
    Plan { name: "sorted", count: Pick::Min, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::Ascending },
    Plan { name: "reverse_sorted", count: Pick::Min, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::Descending },
    Plan { name: "alternating_extremes", count: Pick::Min, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::Alternating },
    Plan { name: "distinct_permutation", count: Pick::Min, scalar: Pick::Max, length: Pick::Max, pattern: Pattern::Permutation },
    Plan { name: "max_cases_min_values", count: Pick::Max, scalar: Pick::Min, length: Pick::Min, pattern: Pattern::AllMin },
];

fn pick(range: &IntRange, p: Pick) -> i64 {
    match p {
        Pick::Min => range.min,
        Pick::Max => range.effective_max(),
    }
}

fn offset(range: &IntRange, k: u128) -> i64 {
    (range.min as i128 + k as i128) as i64
}

// Evenly spread ascending values; strictly increasing when span >= len.
fn spread(range: &IntRange, len: usize) -> Vec<i64> {
    if len <= 1 {
        return vec![range.min; len];
    }
    let gap = range.span() - 1;
    (0..len as u128)
        .map(|i| offset(range, i * gap / (len as u128 - 1)))
        .collect()
}

fn elements(range: &IntRange, len: usize, pattern: Pattern, distinct: bool) -> Vec<i64> {
    let lo = range.min;
    let hi = range.effective_max();
    let mid = offset(range, (range.span() - 1) / 2);
    match (pattern, distinct) {
        (Pattern::AllMin, false) => vec![lo; len],
        (Pattern::AllMax, false) => vec![hi; len],
        (Pattern::AllEqual, false) => vec![mid; len],
        (Pattern::AllMin | Pattern::AllEqual, true) => (0..len as u128).map(|k| offset(range, k)).collect(),
        (Pattern::AllMax, true) => (0..len as i128).map(|k| (hi as i128 - k) as i64).collect(),
        (Pattern::Ascending, _) => spread(range, len),
        (Pattern::Descending, _) => {
            let mut v = spread(range, len);
            v.reverse();
            v
        }
        (Pattern::Alternating, false) => (0..len).map(|i| if i % 2 == 0 { lo } else { hi }).collect(),
        (Pattern::Alternating, true) => {
            // min, max, min+1, max-1, ...
            (0..len as i128)
                .map(|i| {
                    if i % 2 == 0 {
                        (lo as i128 + i / 2) as i64
                    } else {
                        (hi as i128 - i / 2) as i64
                    }
                })
                .collect()
        }
        (Pattern::Permutation, _) => {
            // First `len` values of the range, rotated by half.
            let half = len / 2;
            (0..len)
                .map(|i| offset(range, ((i + half) % len) as u128))
                .collect()
        }
    }
}

fn chars(alphabet: &[char], len: usize, pattern: Pattern) -> String {
    let first = alphabet[0];
    let last = *alphabet.last().unwrap();
    let n = alphabet.len();
    (0..len)
        .map(|i| match pattern {
            Pattern::AllMin | Pattern::AllEqual => first,
            Pattern::AllMax => last,
            Pattern::Ascending | Pattern::Permutation => alphabet[i % n],
            Pattern::Descending => alphabet[n - 1 - i % n],
            Pattern::Alternating => {
                if i % 2 == 0 {
                    first
                } else {
                    last
                }
            }
        })
        .collect()
}

fn build(spec: &GeneratorSpec, plan: &Plan) -> GeneratedInput {
    let count = spec
        .multi_case
        .as_ref()
        .map_or(1, |mc| pick(&mc.count, plan.count) as usize);
    let mut block = Vec::with_capacity(spec.decls.len());
    for decl in &spec.decls {
        let len_of = |name: &str, block: &[Value]| match block[spec.decl_index(name).unwrap()] {
            Value::Int(v) => v.max(0) as usize,
            _ => 0,
        };
        let value = match &decl.kind {
            DeclKind::Int(range) => {
                let is_len = decl.name.as_deref().is_some_and(|n| spec.is_length_var(n));
                Value::Int(pick(range, if is_len { plan.length } else { plan.scalar }))
            }
            DeclKind::Array {
                len_ref,
                elems,
                sorted,
                distinct,
            } => {
                let mut xs = elements(elems, len_of(len_ref, &block), plan.pattern, *distinct);
                if *sorted {
                    xs.sort_unstable();
                }
                Value::Array(xs)
            }
            DeclKind::Str { len_ref, alphabet } => {
                Value::Str(chars(alphabet, len_of(len_ref, &block), plan.pattern))
            }
            DeclKind::Literal(_) => Value::Literal,
        };
        block.push(value);
    }
    GeneratedInput {
        cases: vec![block; count],
    }
}

/// Boundary-value cases in a fixed order. Strategies that produce an input
/// identical to an earlier one are dropped.
pub fn generate_edge_cases(spec: &GeneratorSpec) -> Vec<TestCase> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for plan in PLANS {
        if matches!(plan.pattern, Pattern::Permutation)
            && !spec
                .decls
                .iter()
                .any(|d| matches!(d.kind, DeclKind::Array { distinct: true, .. }))
        {
            continue;
        }
        if plan.name == "max_cases_min_values" && spec.multi_case.is_none() {
            continue;
        }
        let input = build(spec, plan).render(spec);
        if seen.insert(input.clone()) {
            out.push(TestCase {
                input,
                origin: CaseOrigin::Edge {
                    strategy: plan.name.to_string(),
                },
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testgen::parse_generator_spec;

    fn inputs(dsl: &str) -> Vec<String> {
        generate_edge_cases(&parse_generator_spec(dsl).unwrap())
            .into_iter()
            .map(|c| c.input)
            .collect()
    }

    #[test]
    fn scalar_boundaries() {
        let cases = inputs("int n 1 100");
        assert!(cases.contains(&"1\n".to_string()));
        assert!(cases.contains(&"100\n".to_string()));
    }

    #[test]
    fn forced_elements_at_max_length() {
        assert!(inputs("int n 1 3\narray a n 0 0").contains(&"3\n0 0 0\n".to_string()));
    }

    #[test]
    fn stress_max_bounds_edges() {
        let cases = inputs("int n 1 200000 stress_max=6\narray a n 1 1000000000 stress_max=9");
        assert!(cases.contains(&"6\n9 9 9 9 9 9\n".to_string()));
        assert!(!cases.iter().any(|c| c.contains("200000")));
    }

    #[test]
    fn distinct_patterns_stay_distinct() {
        let spec = parse_generator_spec("int n 1 5\narray a n 1 5 distinct").unwrap();
        let cases = generate_edge_cases(&spec);
        assert!(cases
            .iter()
            .any(|c| c.origin == CaseOrigin::Edge { strategy: "distinct_permutation".into() }));
        for c in &cases {
            let xs: Vec<i64> = c.input.lines().nth(1).unwrap_or("").split_whitespace().map(|t| t.parse().unwrap()).collect();
            let set: HashSet<_> = xs.iter().collect();
            assert_eq!(set.len(), xs.len(), "{}", c.input);
        }
    }

    #[test]
    fn deterministic_and_deduplicated() {
        let dsl = "cases t 1 3\nint n 0 4\narray a n -3 3 sorted\nstring s n abc";
        let a = inputs(dsl);
        assert_eq!(a, inputs(dsl));
        assert_eq!(a.len(), a.iter().collect::<HashSet<_>>().len());
    }

    #[test]
    fn spread_is_strictly_increasing_when_possible() {
        let r = IntRange::new(0, 4);
        assert_eq!(spread(&r, 5), vec![0, 1, 2, 3, 4]);
        assert_eq!(spread(&IntRange::new(1, 100), 3), vec![1, 50, 100]);
    }
}
