use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use supraseg::emissions::{EmissionFormat, EmissionMatrix};
use supraseg::vocab::{LoadOptions, SchemeTag, Vocabulary};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn tokens(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

pub fn read_vocab(path: &Path, strip_specials: bool) -> Result<Vocabulary> {
    let opts = LoadOptions {
        strip_fairseq_specials: strip_specials,
    };
    Vocabulary::parse_with(&read_text(path)?, SchemeTag::Merged, opts)
        .with_context(|| format!("{}", path.display()))
}

pub fn read_emissions(path: &Path) -> Result<EmissionMatrix> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    EmissionMatrix::read(&bytes).with_context(|| format!("{}", path.display()))
}

pub fn emission_format_for(path: &Path) -> EmissionFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => EmissionFormat::Tsv,
        _ => EmissionFormat::Binary,
    }
}

/// Writes the result text to stdout.
pub fn emit(out: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(out.as_bytes())?;
    stdout.flush()?;
    Ok(())
}
