use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Language, SandboxError};

/// Overrides the root under which work directories are created.
pub const WORK_ROOT_ENV: &str = "DEPRO_WORK_ROOT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toolchain {
    /// Source file extension without the dot.
    pub extension: String,
    /// Build command; `{src}` and `{bin}` are replaced by file names inside
    /// the work directory. Absent for languages that need no build step.
    #[serde(default)]
    pub compile_cmd: Option<String>,
    pub run_cmd: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolConfig {
    #[serde(default)]
    pub work_root: Option<PathBuf>,
    #[serde(default = "default_compile_timeout_ms")]
    pub compile_timeout_ms: u64,
    #[serde(default)]
    pub languages: BTreeMap<String, Toolchain>,
}

fn default_compile_timeout_ms() -> u64 {
    60_000
}

impl Default for ToolConfig {
    fn default() -> Self {
        let mut languages = BTreeMap::new();
        languages.insert(
            "cpp".to_string(),
            Toolchain {
                extension: "cpp".into(),
                compile_cmd: Some("g++ -std=c++17 -O2 -pipe -o {bin} {src}".into()),
                run_cmd: "{bin}".into(),
            },
        );
        languages.insert(
            "python".to_string(),
            Toolchain {
                extension: "py".into(),
                compile_cmd: Some("python3 -m py_compile {src}".into()),
                run_cmd: "python3 {src}".into(),
            },
        );
        Self {
            work_root: None,
            compile_timeout_ms: default_compile_timeout_ms(),
            languages,
        }
    }
}

impl ToolConfig {
    /// Reads a config file; languages it names replace the defaults of the
    /// same name, other defaults stay.
    pub fn load(path: &Path) -> Result<Self, SandboxError> {
        let text = fs::read_to_string(path).map_err(|e| SandboxError::Config(format!("{}: {e}", path.display())))?;
        let parsed: ToolConfig =
            toml::from_str(&text).map_err(|e| SandboxError::Config(format!("{}: {}", path.display(), e.message())))?;
        let mut languages = ToolConfig::default().languages;
        languages.extend(parsed.languages);
        Ok(ToolConfig { languages, ..parsed })
    }

    pub fn toolchain(&self, language: &Language) -> Result<&Toolchain, SandboxError> {
        self.languages
            .get(language.name())
            .ok_or_else(|| SandboxError::Config(format!("no toolchain configured for language {}", language.name())))
    }

    /// The environment variable wins over the file setting; falls back to the
    /// system temp dir.
    pub fn resolved_work_root(&self) -> PathBuf {
        std::env::var_os(WORK_ROOT_ENV)
            .map(PathBuf::from)
            .or_else(|| self.work_root.clone())
            .unwrap_or_else(std::env::temp_dir)
    }

    /// Language for a source file, by extension.
    pub fn language_for_path(&self, path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?;
        match ext {
            "cpp" | "cc" | "cxx" | "c++" => return Some(Language::Cpp),
            "py" => return Some(Language::Python),
            _ => {}
        }
        self.languages
            .iter()
            .find(|(_, t)| t.extension == ext)
            .map(|(name, _)| Language::from_name(name))
    }
}

/// Splits a command template on whitespace and substitutes placeholders.
pub(crate) fn expand(template: &str, src: &str, bin: &str) -> Vec<String> {
    template
        .split_whitespace()
        .map(|tok| tok.replace("{src}", src).replace("{bin}", bin))
        .collect()
}
