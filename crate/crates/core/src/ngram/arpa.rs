//! ARPA text format: `\data\` header with per-order counts, one section of
//! `logprob w1 .. wk [backoff]` lines per order, `\end\` marker.
//! Probabilities are written with 7 significant digits, log base 10.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{LanguageModel, NGramEntry};
use crate::vocab::{Vocabulary, WordId};

#[derive(Debug, Error)]
pub enum ArpaError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn err(line: usize, msg: impl Into<String>) -> ArpaError {
    ArpaError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Format with 7 significant digits, plain decimal notation.
fn sig7(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (6 - magnitude).clamp(0, 17) as usize;
    format!("{:.*}", decimals, x)
}

/// Write a model in ARPA layout. Entries are sorted by their token
/// sequence, so identical models produce identical bytes.
pub fn write_arpa<W: Write>(lm: &LanguageModel, out: &mut W) -> io::Result<()> {
    writeln!(out, "\\data\\")?;
    for k in 1..=lm.order() {
        writeln!(out, "ngram {}={}", k, lm.entry_count(k))?;
    }
    for k in 1..=lm.order() {
        writeln!(out)?;
        writeln!(out, "\\{}-grams:", k)?;
        let mut entries: Vec<(Vec<&str>, &NGramEntry)> = lm
            .table(k)
            .iter()
            .map(|(key, e)| (lm.key_tokens(key), e))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (tokens, entry) in entries {
            write!(out, "{}\t{}", sig7(entry.log_prob), tokens.join(" "))?;
            if let Some(bow) = entry.backoff {
                write!(out, "\t{}", sig7(bow))?;
            }
            writeln!(out)?;
        }
    }
    writeln!(out)?;
    writeln!(out, "\\end\\")?;
    Ok(())
}

/// Parse an ARPA file. Reports malformed headers, declared/actual count
/// mismatches, non-numeric fields, and a missing end marker, each with the
/// offending line number.
pub fn read_arpa<R: BufRead>(reader: R, name: &str) -> Result<LanguageModel, ArpaError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    let mut pos = 0usize;

    let skip_blanks = |pos: &mut usize, lines: &[String]| {
        while *pos < lines.len() && lines[*pos].trim().is_empty() {
            *pos += 1;
        }
    };

    skip_blanks(&mut pos, &lines);
    if pos >= lines.len() || lines[pos].trim() != "\\data\\" {
        return Err(err(pos + 1, "expected \\data\\ header"));
    }
    pos += 1;

    // Count declarations: "ngram K=N" for K = 1..=order.
    let mut declared: Vec<(usize, usize)> = Vec::new();
    while pos < lines.len() {
        let line = lines[pos].trim();
        if line.is_empty() {
            break;
        }
        let rest = line
            .strip_prefix("ngram ")
            .ok_or_else(|| err(pos + 1, format!("expected 'ngram K=N', found {line:?}")))?;
        let (k_str, n_str) = rest
            .split_once('=')
            .ok_or_else(|| err(pos + 1, format!("expected 'ngram K=N', found {line:?}")))?;
        let k: usize = k_str
            .trim()
            .parse()
            .map_err(|_| err(pos + 1, format!("non-numeric order {k_str:?}")))?;
        let n: usize = n_str
            .trim()
            .parse()
            .map_err(|_| err(pos + 1, format!("non-numeric count {n_str:?}")))?;
        declared.push((k, n));
        pos += 1;
    }
    if declared.is_empty() {
        return Err(err(pos + 1, "no n-gram counts declared"));
    }
    for (i, &(k, _)) in declared.iter().enumerate() {
        if k != i + 1 {
            return Err(err(
                pos + 1,
                format!(
                    "n-gram counts must cover orders 1..: missing order {}",
                    i + 1
                ),
            ));
        }
    }
    let order = declared.len();

    let mut vocab = Vocabulary::new();
    let mut tables: Vec<HashMap<Box<[WordId]>, NGramEntry>> =
        (0..order).map(|_| HashMap::new()).collect();

    for &(k, n) in &declared {
        skip_blanks(&mut pos, &lines);
        let header = format!("\\{}-grams:", k);
        if pos >= lines.len() || lines[pos].trim() != header {
            if n == 0 {
                continue; // empty sections may be omitted
            }
            let found = lines.get(pos).map(|l| l.trim()).unwrap_or("end of file");
            return Err(err(pos + 1, format!("expected {header}, found {found:?}")));
        }
        pos += 1;
        let mut count = 0usize;
        while pos < lines.len() {
            let line = lines[pos].trim();
            if line.is_empty() || line.starts_with('\\') {
                break;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != k + 1 && fields.len() != k + 2 {
                return Err(err(
                    pos + 1,
                    format!(
                        "expected {} or {} fields in \\{}-grams: entry, found {}",
                        k + 1,
                        k + 2,
                        k,
                        fields.len()
                    ),
                ));
            }
            let log_prob: f64 = fields[0].parse().map_err(|_| {
                err(
                    pos + 1,
                    format!("non-numeric log probability {:?}", fields[0]),
                )
            })?;
            if !log_prob.is_finite() {
                return Err(err(
                    pos + 1,
                    format!("non-finite log probability {:?}", fields[0]),
                ));
            }
            let backoff = if fields.len() == k + 2 {
                let bow: f64 = fields[k + 1].parse().map_err(|_| {
                    err(
                        pos + 1,
                        format!("non-numeric backoff weight {:?}", fields[k + 1]),
                    )
                })?;
                if !bow.is_finite() {
                    return Err(err(
                        pos + 1,
                        format!("non-finite backoff weight {:?}", fields[k + 1]),
                    ));
                }
                Some(bow)
            } else {
                None
            };
            let key: Vec<WordId> = fields[1..=k].iter().map(|w| vocab.insert(w)).collect();
            if tables[k - 1]
                .insert(key.into_boxed_slice(), NGramEntry { log_prob, backoff })
                .is_some()
            {
                return Err(err(
                    pos + 1,
                    format!("duplicate {k}-gram {:?}", fields[1..=k].join(" ")),
                ));
            }
            count += 1;
            pos += 1;
        }
        if count != n {
            return Err(err(
                pos,
                format!("\\{k}-grams: section declared {n} entries but lists {count}"),
            ));
        }
    }

    skip_blanks(&mut pos, &lines);
    if pos >= lines.len() || lines[pos].trim() != "\\end\\" {
        return Err(err(pos + 1, "missing \\end\\ marker"));
    }

    Ok(LanguageModel::from_parts(
        name.to_string(),
        order,
        vocab,
        tables,
    ))
}

impl LanguageModel {
    /// Serialize to an ARPA string.
    pub fn to_arpa_string(&self) -> String {
        let mut buf = Vec::new();
        write_arpa(self, &mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("ARPA output is UTF-8")
    }

    /// Parse a model from ARPA text.
    pub fn from_arpa_str(text: &str, name: &str) -> Result<LanguageModel, ArpaError> {
        read_arpa(text.as_bytes(), name)
    }
}
