use super::LlmError;
use crate::sandbox::{ArtifactOrigin, Language, Role, SolutionArtifact};

struct Block {
    tag: String,
    body: String,
}

fn fence_len(line: &str) -> usize {
    line.chars().take_while(|&c| c == '`').count()
}

fn blocks(response: &str) -> Vec<Block> {
    let mut out = Vec::new();
    let mut open: Option<(usize, String, String)> = None;
    for raw in response.split_inclusive('\n') {
        let line = raw.strip_suffix('\n').unwrap_or(raw);
        let trimmed = line.trim_start();
        match &mut open {
            None => {
                let n = fence_len(trimmed);
                if n >= 3 {
                    let tag = trimmed[n..].trim().to_string();
                    if !tag.contains('`') {
                        open = Some((n, tag, String::new()));
                    }
                }
            }
            Some((n, _, body)) => {
                let t = line.trim();
                if fence_len(t) >= *n && t.chars().all(|c| c == '`') {
                    let (_, tag, body) = open.take().unwrap();
                    out.push(Block { tag, body });
                } else {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
    }
    out
}

fn language_from_tag(tag: &str) -> Option<Language> {
    // Tags like "cpp title=main.cpp" carry the language first.
    let word = tag.split_whitespace().next()?;
    Some(Language::from_name(word.trim_start_matches('.')))
}

/// Source of the last fenced code block in `response`. The fence tag picks
/// the language; without one, `language_hint` is used.
pub fn extract_code(
    response: &str,
    language_hint: &Language,
    role: Role,
    origin: ArtifactOrigin,
) -> Result<SolutionArtifact, LlmError> {
    let block = blocks(response)
        .into_iter()
        .rfind(|b| !b.body.trim().is_empty())
        .ok_or(LlmError::NoCodeBlock)?;
    let language = language_from_tag(&block.tag).unwrap_or_else(|| language_hint.clone());
    Ok(SolutionArtifact::new(block.body, language, role, origin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(r: &str) -> Result<SolutionArtifact, LlmError> {
        extract_code(r, &Language::Python, Role::Candidate, ArtifactOrigin::Llm { iteration: 1 })
    }

    #[test]
    fn single_block() {
        let a = extract("Here you go:\n```cpp\nint main() {}\n```\n").unwrap();
        assert_eq!(a.source, "int main() {}\n");
        assert_eq!(a.language, Language::Cpp);
    }

    #[test]
    fn last_block_wins() {
        let r = "First try:\n```cpp\nint a;\n```\nActually:\n```c++\nint b;\n```\nDone.";
        assert_eq!(extract(r).unwrap().source, "int b;\n");
    }

    #[test]
    fn prose_only_is_an_error() {
        assert!(matches!(extract("Just change line 3."), Err(LlmError::NoCodeBlock)));
    }

    #[test]
    fn untagged_block_uses_hint() {
        let a = extract("```\nprint(1)\n```").unwrap();
        assert_eq!(a.language, Language::Python);
    }

    #[test]
    fn unclosed_block_is_ignored() {
        assert!(matches!(extract("```cpp\nint main() {"), Err(LlmError::NoCodeBlock)));
    }

    #[test]
    fn longer_fence_allows_inner_backticks() {
        let a = extract("````python\ns = '```'\n````\n").unwrap();
        assert_eq!(a.source, "s = '```'\n");
    }

    #[test]
    fn carriage_returns_are_kept() {
        let a = extract("```cpp\r\nint x;\r\n```\r\n").unwrap();
        assert_eq!(a.source, "int x;\r\n");
    }
}
