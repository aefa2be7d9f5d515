//! Code specification files.
//!
//! Flat `key = value` lines; `#` starts a comment. Kernels are listed in
//! product order `K_1, ..., K_m`, one `kernel` line each:
//!
//! ```text
//! kernel = arikan 4 pattern C000   # F_4 (16x16) shortened at {14, 15}
//! kernel = file k16.txt            # path relative to this file
//! kernel = rows 10 11              # inline 0/1 rows
//! k = 112
//! frozen = frozen.txt              # newline-separated indices
//! design_snr = 2.0                 # or construct the frozen set
//! construct_budget = 10000
//! construct_seed = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::Kernel;
use crate::exec::Execution;
use crate::gf2::{parse_kernel_text, BitMatrix};
use crate::shortening::{shorten, ShorteningPattern};

use super::construct::construct_frozen_with;
use super::{CodeError, CodeSpec, Stage};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    Arikan(u32),
    File(PathBuf),
    Inline(BitMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEntry {
    pub source: KernelSource,
    pub pattern: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub kernels: Vec<KernelEntry>,
    pub k: Option<usize>,
    pub frozen_file: Option<PathBuf>,
    pub design_snr_db: Option<f64>,
    pub construct_budget: u64,
    pub construct_seed: u64,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> CodeError {
    CodeError::Spec(format!("line {line}: {msg}"))
}

fn number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, CodeError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{key} expects a number, got {value:?}")))
}

/// Parses spec text; relative paths resolve against `base`.
pub fn parse_spec_text(text: &str, base: &Path) -> Result<SpecFile, CodeError> {
    let mut spec = SpecFile {
        kernels: Vec::new(),
        k: None,
        frozen_file: None,
        design_snr_db: None,
        construct_budget: 10_000,
        construct_seed: 1,
    };
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "kernel" => spec.kernels.push(parse_kernel_entry(line, value, base)?),
            "k" => spec.k = Some(number(line, key, value)?),
            "frozen" => spec.frozen_file = Some(base.join(value)),
            "design_snr" => spec.design_snr_db = Some(number(line, key, value)?),
            "construct_budget" => spec.construct_budget = number(line, key, value)?,
            "construct_seed" => spec.construct_seed = number(line, key, value)?,
            other => return Err(parse_err(line, format!("unknown key {other:?}"))),
        }
    }
    if spec.kernels.is_empty() {
        return Err(CodeError::Spec("no kernel lines".into()));
    }
    Ok(spec)
}

fn parse_kernel_entry(line: usize, value: &str, base: &Path) -> Result<KernelEntry, CodeError> {
    let mut words: Vec<&str> = value.split_whitespace().collect();
    let mut pattern = None;
    if let Some(pos) = words.iter().position(|w| *w == "pattern") {
        let hex = words
            .get(pos + 1)
            .ok_or_else(|| parse_err(line, "pattern needs a hex value"))?;
        pattern = Some(hex.to_string());
        words.truncate(pos);
    }
    let source = match words.as_slice() {
        ["arikan", t] => {
            let t: u32 = number(line, "arikan", t)?;
            if !(1..=6).contains(&t) {
                return Err(parse_err(line, "arikan stages must be in 1..=6"));
            }
            KernelSource::Arikan(t)
        }
        ["file", path] => KernelSource::File(base.join(path)),
        ["rows", rows @ ..] if !rows.is_empty() => {
            let text = format!("{}\n{}", rows.len(), rows.join("\n"));
            KernelSource::Inline(parse_kernel_text(&text).map_err(|e| parse_err(line, e))?)
        }
        _ => return Err(parse_err(line, format!("cannot read kernel {value:?}"))),
    };
    Ok(KernelEntry { source, pattern })
}

fn read(path: &Path) -> Result<String, CodeError> {
    fs::read_to_string(path).map_err(|e| CodeError::Spec(format!("{}: {e}", path.display())))
}

/// Reads a kernel file in the `l` + rows text format.
pub fn load_kernel_file(path: &Path) -> Result<Kernel, CodeError> {
    let m = parse_kernel_text(&read(path)?).map_err(|e| CodeError::Spec(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map_or_else(|| "kernel".into(), |s| s.to_string_lossy().into_owned());
    Kernel::new(m, name).map_err(|e| CodeError::Spec(format!("{}: {e}", path.display())))
}

/// Reads newline-separated frozen indices.
pub fn load_frozen_file(path: &Path) -> Result<Vec<usize>, CodeError> {
    read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse()
                .map_err(|_| CodeError::Spec(format!("{}: bad index {l:?}", path.display())))
        })
        .collect()
}

impl KernelEntry {
    pub fn stage(&self) -> Result<Stage, CodeError> {
        let kernel = match &self.source {
            KernelSource::Arikan(t) => Kernel::arikan(*t),
            KernelSource::File(p) => load_kernel_file(p)?,
            KernelSource::Inline(m) => {
                Kernel::new(m.clone(), "inline").map_err(|e| CodeError::Spec(e.to_string()))?
            }
        };
        match &self.pattern {
            None => Stage::new(kernel),
            Some(hex) => {
                let p = ShorteningPattern::parse_hex(hex, kernel.size()).map_err(|e| CodeError::Spec(e.to_string()))?;
                Stage::shortened(&kernel, &shorten(&kernel, &p))
            }
        }
    }
}

impl SpecFile {
    /// Kernels only, every input unfrozen.
    pub fn open_code(&self) -> Result<CodeSpec, CodeError> {
        let stages = self.kernels.iter().map(KernelEntry::stage).collect::<Result<_, _>>()?;
        CodeSpec::new(stages, &[])
    }

    /// The full code: frozen set from the file, or constructed.
    pub fn build(&self, exec: Execution) -> Result<CodeSpec, CodeError> {
        let open = self.open_code()?;
        let n = open.n();
        let frozen = match (&self.frozen_file, self.k) {
            (Some(path), k) => {
                let frozen = load_frozen_file(path)?;
                if let Some(k) = k {
                    if frozen.len() + k != n {
                        return Err(CodeError::Spec(format!(
                            "frozen file has {} indices but n - k = {}",
                            frozen.len(),
                            n.saturating_sub(k)
                        )));
                    }
                }
                frozen
            }
            (None, Some(k)) => {
                let snr = self
                    .design_snr_db
                    .ok_or_else(|| CodeError::Spec("design_snr is required to construct the frozen set".into()))?;
                let rel = construct_frozen_with(&open, k, snr, self.construct_budget, self.construct_seed, exec)?;
                let mut f = rel.ranking()[..n - k].to_vec();
                f.sort_unstable();
                f
            }
            (None, None) => return Err(CodeError::Spec("either k or a frozen file is required".into())),
        };
        open.with_frozen(&frozen)
    }
}

/// Parses and builds the code described by the file at `path`.
pub fn load_spec_file(path: &Path, exec: Execution) -> Result<CodeSpec, CodeError> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_spec_text(&read(path)?, base)?.build(exec)
}
