//! File helpers with path-carrying I/O errors (exit code 2) and the
//! transcript and label formats shared by several subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::anyhow;

use crate::CliError;

pub fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn open_buffered(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    Ok(BufReader::new(
        fs::File::open(path).map_err(|e| io_err(path, e))?,
    ))
}

pub fn file_size(path: &Path) -> Result<u64, CliError> {
    Ok(fs::metadata(path).map_err(|e| io_err(path, e))?.len())
}

/// One transcript row: `<utt-id> <words...>`.
#[derive(Debug, Clone)]
pub struct Transcript {
    /// 1-based line number in the source file.
    pub line: usize,
    pub utt_id: String,
    pub words: Vec<String>,
}

/// Transcripts: `<utt-id> <words...>` per line, blank lines skipped.
/// Utterance ids must be unique; words may be empty.
pub fn read_transcripts(path: &Path) -> Result<Vec<Transcript>, CliError> {
    let text = read_to_string(path)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else { continue };
        if !seen.insert(id.to_string()) {
            return Err(anyhow!(
                "{}: line {}: duplicate utterance id {id:?}",
                path.display(),
                idx + 1
            )
            .into());
        }
        out.push(Transcript {
            line: idx + 1,
            utt_id: id.to_string(),
            words: fields.map(str::to_string).collect(),
        });
    }
    Ok(out)
}

pub fn write_transcripts(path: &Path, rows: &[(String, Vec<String>)]) -> Result<(), CliError> {
    let mut text = String::new();
    for (id, words) in rows {
        text.push_str(id);
        for w in words {
            text.push(' ');
            text.push_str(w);
        }
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

/// Labels: `<utt-id> <language-index>` per line.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, usize>, CliError> {
    let text = read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(anyhow!(
                "{}: line {}: expected '<utt-id> <language-index>'",
                path.display(),
                idx + 1
            )
            .into());
        }
        let label: usize = fields[1].parse().map_err(|_| {
            anyhow!(
                "{}: line {}: non-numeric language index {:?}",
                path.display(),
                idx + 1,
                fields[1]
            )
        })?;
        out.insert(fields[0].to_string(), label);
    }
    Ok(out)
}

/// One word per line, blank lines skipped.
pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>, CliError> {
    let text = read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}
