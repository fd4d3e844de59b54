use super::{normalize_input, DeclKind, GeneratorSpec, Layout};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Array(Vec<i64>),
    Str(String),
    Literal,
}

/// Structured form of one generated input: one value per decl per sub-case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedInput {
    pub cases: Vec<Vec<Value>>,
}

impl GeneratedInput {
    pub fn render(&self, spec: &GeneratorSpec) -> String {
        let mut lines: Vec<String> = Vec::new();
        if spec.multi_case.is_some() {
            lines.push(self.cases.len().to_string());
        }
        for case in &self.cases {
            for (decl, value) in spec.decls.iter().zip(case) {
                let text = match (value, &decl.kind) {
                    (Value::Int(v), _) => v.to_string(),
                    (Value::Array(xs), _) => xs
                        .iter()
                        .map(i64::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                    (Value::Str(s), _) => s.clone(),
                    (Value::Literal, DeclKind::Literal(t)) => t.clone(),
                    (Value::Literal, _) => String::new(),
                };
                match decl.layout {
                    Layout::SameLine if !lines.is_empty() => {
                        if !text.is_empty() {
                            let last = lines.last_mut().unwrap();
                            if !last.is_empty() {
                                last.push(' ');
                            }
                            last.push_str(&text);
                        }
                    }
                    _ => lines.push(text),
                }
            }
        }
        normalize_input(&lines.join("\n"))
    }

    /// Total number of array elements and string characters, plus sub-cases.
    pub fn size(&self) -> usize {
        self.cases.len()
            + self
                .cases
                .iter()
                .flatten()
                .map(|v| match v {
                    Value::Array(xs) => xs.len(),
                    Value::Str(s) => s.chars().count(),
                    _ => 0,
                })
                .sum::<usize>()
    }
}

/// Reads `input` back into values following `spec`. Whitespace-token based,
/// and checks only shape, not ranges; used to restructure inputs for
/// shrinking.
pub fn parse_input(spec: &GeneratorSpec, input: &str) -> Option<GeneratedInput> {
    let mut tokens = input.split_whitespace();
    let count = match &spec.multi_case {
        Some(_) => tokens.next()?.parse::<usize>().ok()?,
        None => 1,
    };
    let mut cases = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values: Vec<Value> = Vec::with_capacity(spec.decls.len());
        for decl in &spec.decls {
            let lookup_len = |name: &str, values: &[Value]| -> Option<usize> {
                let idx = spec.decl_index(name)?;
                match values.get(idx)? {
                    Value::Int(v) => usize::try_from(*v).ok(),
                    _ => None,
                }
            };
            let value = match &decl.kind {
                DeclKind::Int(_) => Value::Int(tokens.next()?.parse().ok()?),
                DeclKind::Array { len_ref, .. } => {
                    let len = lookup_len(len_ref, &values)?;
                    let mut xs = Vec::with_capacity(len);
                    for _ in 0..len {
                        xs.push(tokens.next()?.parse().ok()?);
                    }
                    Value::Array(xs)
                }
                DeclKind::Str { len_ref, .. } => {
                    let len = lookup_len(len_ref, &values)?;
                    if len == 0 {
                        Value::Str(String::new())
                    } else {
                        let s = tokens.next()?;
                        if s.chars().count() != len {
                            return None;
                        }
                        Value::Str(s.to_string())
                    }
                }
                DeclKind::Literal(text) => {
                    for expected in text.split_whitespace() {
                        if tokens.next()? != expected {
                            return None;
                        }
                    }
                    Value::Literal
                }
            };
            values.push(value);
        }
        cases.push(values);
    }
    if tokens.next().is_some() {
        return None;
    }
    Some(GeneratedInput { cases })
}
