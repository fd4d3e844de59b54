use std::collections::HashSet;

use depro::testgen::{DeclKind, GeneratorSpec, Layout};

// Independent re-reader: walks the declarations over the raw text line by
// line and checks every value against its declaration. Trailing empty
// lines vanish under newline normalization, so missing lines read as empty.
pub fn verify(spec: &GeneratorSpec, input: &str) -> Result<(), String> {
    let body = input.strip_suffix('\n').ok_or("no trailing newline")?;
    if body.ends_with('\n') {
        return Err("more than one trailing newline".into());
    }
    let lines: Vec<Vec<&str>> = body.split('\n').map(|l| l.split(' ').filter(|t| !t.is_empty()).collect()).collect();
    let mut line = 0usize;
    let mut col = 0usize;
    let mut started = false;

    let mut take = |n: usize, own_line: bool| -> Result<Vec<String>, String> {
        if own_line || !started {
            if started {
                if col != lines.get(line).map_or(0, Vec::len) {
                    return Err(format!("line {} has extra tokens", line + 1));
                }
                line += 1;
            }
            started = true;
            col = 0;
        }
        let l: &[&str] = lines.get(line).map_or(&[], Vec::as_slice);
        if col + n > l.len() {
            return Err(format!("line {} is short", line + 1));
        }
        let out = l[col..col + n].iter().map(|s| s.to_string()).collect();
        col += n;
        Ok(out)
    };
    let int = |s: &str| s.parse::<i64>().map_err(|_| format!("not an integer: {s}"));

    let blocks = match &spec.multi_case {
        Some(mc) => {
            let t = int(&take(1, true)?[0])?;
            if t < mc.count.min || t > mc.count.effective_max() {
                return Err(format!("case count {t} out of range"));
            }
            t as usize
        }
        None => 1,
    };
    for _ in 0..blocks {
        let mut ints: Vec<(String, i64)> = Vec::new();
        for decl in &spec.decls {
            let own = decl.layout == Layout::OwnLine;
            let len_of = |name: &str| ints.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v);
            match &decl.kind {
                DeclKind::Int(r) => {
                    let v = int(&take(1, own)?[0])?;
                    if v < r.min || v > r.effective_max() {
                        return Err(format!("{v} outside [{}, {}]", r.min, r.effective_max()));
                    }
                    ints.push((decl.name.clone().unwrap(), v));
                }
                DeclKind::Array { len_ref, elems, sorted, distinct } => {
                    let n = len_of(len_ref).ok_or("length read before its variable")? as usize;
                    let xs = take(n, own)?.iter().map(|s| int(s)).collect::<Result<Vec<_>, _>>()?;
                    if let Some(x) = xs.iter().find(|&&x| x < elems.min || x > elems.effective_max()) {
                        return Err(format!("element {x} out of range"));
                    }
                    if *sorted && xs.windows(2).any(|w| w[0] > w[1]) {
                        return Err("array not sorted".into());
                    }
                    if *distinct && xs.iter().collect::<HashSet<_>>().len() != xs.len() {
                        return Err("array not distinct".into());
                    }
                }
                DeclKind::Str { len_ref, alphabet } => {
                    let n = len_of(len_ref).ok_or("length read before its variable")? as usize;
                    let s = if n == 0 { take(0, own)?; String::new() } else { take(1, own)?.remove(0) };
                    if s.chars().count() != n {
                        return Err(format!("string length {} != {n}", s.chars().count()));
                    }
                    if let Some(c) = s.chars().find(|c| !alphabet.contains(c)) {
                        return Err(format!("character {c:?} outside alphabet"));
                    }
                }
                DeclKind::Literal(text) => {
                    let want: Vec<&str> = text.split_whitespace().collect();
                    let got = take(want.len(), own)?;
                    if got != want {
                        return Err(format!("literal {got:?} != {want:?}"));
                    }
                }
            }
        }
    }
    if col != lines.get(line).map_or(0, Vec::len) || line + 1 < lines.len() {
        return Err("trailing content".into());
    }
    Ok(())
}
