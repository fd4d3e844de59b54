// Line-oriented generator DSL:
//
//   cases <name> <min> <max> [stress_max=<v>]         (first line only)
//   int <name> <min> <max> [stress_max=<v>] [inline]
//   array <name> <len_ref> <min> <max> [sorted] [distinct] [stress_max=<v>] [inline]
//   string <name> <len_ref> <alphabet> [inline]
//   literal <text>
//
// Blank lines and lines starting with '#' are ignored.

use std::collections::HashSet;

use super::{DeclKind, GenSpecError, GeneratorSpec, IntRange, Layout, MultiCase, VarDecl};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

struct LineParser<'a> {
    line_no: usize,
    line_len: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> GenSpecError {
        GenSpecError::Parse {
            line: self.line_no,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>, GenSpecError> {
        if self.pos >= self.tokens.len() {
            return Err(self.err(self.line_len + 1, format!("expected {what}")));
        }
        self.pos += 1;
        Ok(&self.tokens[self.pos - 1])
    }

    fn ident(&mut self, what: &str) -> Result<String, GenSpecError> {
        let line_no = self.line_no;
        let tok = self.next(what)?;
        let ok = tok
            .text
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && tok.text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(GenSpecError::Parse {
                line: line_no,
                column: tok.column,
                message: format!("expected {what}, found {:?}", tok.text),
            });
        }
        Ok(tok.text.to_string())
    }

    fn int(&mut self, what: &str) -> Result<i64, GenSpecError> {
        let line_no = self.line_no;
        let tok = self.next(what)?;
        parse_int(tok.text).ok_or_else(|| GenSpecError::Parse {
            line: line_no,
            column: tok.column,
            message: format!("expected integer {what}, found {:?}", tok.text),
        })
    }

    fn rest(&self) -> &[Token<'a>] {
        &self.tokens[self.pos..]
    }
}

// Accepts plain integers plus the `1e9` shorthand common in statements.
fn parse_int(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    let (mantissa, exp) = s.split_once(['e', 'E'])?;
    let m: i64 = mantissa.parse().ok()?;
    let e: u32 = exp.parse().ok()?;
    m.checked_mul(10i64.checked_pow(e)?)
}

#[derive(Default)]
struct Flags {
    sorted: bool,
    distinct: bool,
    inline: bool,
    stress_max: Option<i64>,
}

fn parse_flags(p: &LineParser<'_>, allowed: &[&str]) -> Result<Flags, GenSpecError> {
    let mut flags = Flags::default();
    for tok in p.rest() {
        let key = tok.text.split('=').next().unwrap_or_default();
        if !allowed.contains(&key) {
            return Err(p.err(tok.column, format!("unexpected token {:?}", tok.text)));
        }
        match key {
            "sorted" => flags.sorted = true,
            "distinct" => flags.distinct = true,
            "inline" => flags.inline = true,
            "stress_max" => {
                let v = tok
                    .text
                    .strip_prefix("stress_max=")
                    .and_then(parse_int)
                    .ok_or_else(|| p.err(tok.column, "expected stress_max=<integer>"))?;
                flags.stress_max = Some(v);
            }
            _ => unreachable!(),
        }
    }
    Ok(flags)
}

fn layout(inline: bool) -> Layout {
    if inline {
        Layout::SameLine
    } else {
        Layout::OwnLine
    }
}

fn check_range(range: &IntRange, line: usize) -> Result<(), GenSpecError> {
    if range.min > range.max {
        return Err(GenSpecError::Validation {
            line,
            message: "min ≤ max".into(),
        });
    }
    if let Some(s) = range.stress_max {
        if s < range.min || s > range.max {
            return Err(GenSpecError::Validation {
                line,
                message: "stress_max must lie within [min, max]".into(),
            });
        }
    }
    Ok(())
}

pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec, GenSpecError> {
    let mut multi_case = None;
    let mut decls: Vec<VarDecl> = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    // Integer decls seen so far: (name, range).
    let mut ints: Vec<(String, IntRange)> = Vec::new();
    let mut seen_decl = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens = tokenize(raw);
        let keyword_col = tokens[0].column;
        let mut p = LineParser {
            line_no,
            line_len: raw.len(),
            tokens,
            pos: 1,
        };
        let keyword = p.tokens[0].text;
        let validation = |message: String| GenSpecError::Validation {
            line: line_no,
            message,
        };
        let declare = |name: &str, names: &mut HashSet<String>| {
            if !names.insert(name.to_string()) {
                return Err(validation(format!("duplicate declaration {name}")));
            }
            Ok(())
        };

        match keyword {
            "cases" => {
                if seen_decl || multi_case.is_some() {
                    return Err(validation("cases header must be the first line".into()));
                }
                let name = p.ident("count variable name")?;
                let min = p.int("min")?;
                let max = p.int("max")?;
                let flags = parse_flags(&p, &["stress_max"])?;
                let count = IntRange {
                    min,
                    max,
                    stress_max: flags.stress_max,
                };
                check_range(&count, line_no)?;
                if min < 0 {
                    return Err(validation("case count must be non-negative".into()));
                }
                declare(&name, &mut names)?;
                multi_case = Some(MultiCase {
                    count_var: name,
                    count,
                });
            }
            "int" => {
                let name = p.ident("variable name")?;
                let min = p.int("min")?;
                let max = p.int("max")?;
                let flags = parse_flags(&p, &["stress_max", "inline"])?;
                let range = IntRange {
                    min,
                    max,
                    stress_max: flags.stress_max,
                };
                check_range(&range, line_no)?;
                declare(&name, &mut names)?;
                ints.push((name.clone(), range));
                decls.push(VarDecl {
                    name: Some(name),
                    kind: DeclKind::Int(range),
                    layout: layout(flags.inline),
                });
            }
            "array" => {
                let name = p.ident("array name")?;
                let len_ref = p.ident("length reference")?;
                let min = p.int("min")?;
                let max = p.int("max")?;
                let flags = parse_flags(&p, &["sorted", "distinct", "stress_max", "inline"])?;
                let elems = IntRange {
                    min,
                    max,
                    stress_max: flags.stress_max,
                };
                check_range(&elems, line_no)?;
                let len_range = lookup_len(&ints, &len_ref, line_no)?;
                if flags.distinct {
                    let full = max as i128 - min as i128 + 1;
                    if full < len_range.max as i128 || (elems.span() as i128) < len_range.effective_max() as i128 {
                        return Err(validation(format!(
                            "distinct array {name} needs at least as many values as its maximum length"
                        )));
                    }
                }
                declare(&name, &mut names)?;
                decls.push(VarDecl {
                    name: Some(name),
                    kind: DeclKind::Array {
                        len_ref,
                        elems,
                        sorted: flags.sorted,
                        distinct: flags.distinct,
                    },
                    layout: layout(flags.inline),
                });
            }
            "string" => {
                let name = p.ident("string name")?;
                let len_ref = p.ident("length reference")?;
                let alphabet_tok = p.next("alphabet")?;
                let alphabet: Vec<char> = alphabet_tok.text.chars().collect();
                let flags = parse_flags(&p, &["inline"])?;
                lookup_len(&ints, &len_ref, line_no)?;
                declare(&name, &mut names)?;
                decls.push(VarDecl {
                    name: Some(name),
                    kind: DeclKind::Str { len_ref, alphabet },
                    layout: layout(flags.inline),
                });
            }
            "literal" => {
                let text = raw.trim_start()["literal".len()..].trim().to_string();
                if text.is_empty() {
                    return Err(p.err(raw.len() + 1, "expected literal text"));
                }
                decls.push(VarDecl {
                    name: None,
                    kind: DeclKind::Literal(text),
                    layout: Layout::OwnLine,
                });
            }
            other => {
                return Err(GenSpecError::Parse {
                    line: line_no,
                    column: keyword_col,
                    message: format!("unknown declaration kind {other:?}"),
                })
            }
        }
        if keyword != "cases" {
            if !seen_decl && decls.last().is_some_and(|d| d.layout == Layout::SameLine) {
                return Err(validation("first declaration cannot be inline".into()));
            }
            seen_decl = true;
        }
    }

    if decls.is_empty() {
        return Err(GenSpecError::Validation {
            line: text.lines().count().max(1),
            message: "generator declares no values".into(),
        });
    }
    Ok(GeneratorSpec { multi_case, decls })
}

fn lookup_len(ints: &[(String, IntRange)], name: &str, line: usize) -> Result<IntRange, GenSpecError> {
    let range = ints
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, r)| *r)
        .ok_or_else(|| GenSpecError::Validation {
            line,
            message: format!("unknown length reference {name}"),
        })?;
    if range.min < 0 {
        return Err(GenSpecError::Validation {
            line,
            message: format!("length reference {name} must have min >= 0"),
        });
    }
    Ok(range)
}
