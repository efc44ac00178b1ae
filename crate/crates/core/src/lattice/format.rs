//! Text lattice format, one record per utterance:
//!
//! ```text
//! LATTICE <utt-id> <num-nodes> <start-node>
//! A <from> <to> <word> <am_log10> <lm_log10>
//! F <node>
//! .
//! ```
//!
//! Fields are space-separated, scores written with 6 decimals.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{Lattice, NodeId};

#[derive(Debug, Error)]
pub enum LatticeFormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn err(line: usize, msg: impl Into<String>) -> LatticeFormatError {
    LatticeFormatError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Write records in input order; arcs in arc-id order, finals ascending.
pub fn write_lattices<W: Write>(lattices: &[Lattice], out: &mut W) -> io::Result<()> {
    for lat in lattices {
        writeln!(
            out,
            "LATTICE {} {} {}",
            lat.utt_id(),
            lat.num_nodes(),
            lat.start()
        )?;
        for arc in lat.arcs() {
            writeln!(
                out,
                "A {} {} {} {:.6} {:.6}",
                arc.from, arc.to, arc.word, arc.am_score, arc.lm_score
            )?;
        }
        for f in lat.finals() {
            writeln!(out, "F {}", f)?;
        }
        writeln!(out, ".")?;
    }
    Ok(())
}

/// Parse every record in the stream. Malformed records are rejected with
/// their line number.
pub fn read_lattices<R: BufRead>(reader: R) -> Result<Vec<Lattice>, LatticeFormatError> {
    let mut lattices = Vec::new();
    let mut current: Option<Lattice> = None;
    let mut header_line = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if current.is_some() {
                return Err(err(lineno, "blank line inside a lattice record"));
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match (fields[0], &mut current) {
            ("LATTICE", Some(_)) => {
                return Err(err(
                    lineno,
                    format!("record starting at line {header_line} is missing its '.' terminator"),
                ));
            }
            ("LATTICE", cur @ None) => {
                if fields.len() != 4 {
                    return Err(err(
                        lineno,
                        "expected: LATTICE <utt-id> <num-nodes> <start-node>",
                    ));
                }
                let num_nodes: usize = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, format!("non-numeric node count {:?}", fields[2])))?;
                let start = parse_node(fields[3], num_nodes, lineno)?;
                *cur = Some(Lattice::new(fields[1], num_nodes, start));
                header_line = lineno;
            }
            ("A", Some(lat)) => {
                if fields.len() != 6 {
                    return Err(err(lineno, "expected: A <from> <to> <word> <am> <lm>"));
                }
                let from = parse_node(fields[1], lat.num_nodes(), lineno)?;
                let to = parse_node(fields[2], lat.num_nodes(), lineno)?;
                let am = parse_score(fields[4], lineno)?;
                let lm = parse_score(fields[5], lineno)?;
                lat.add_arc(from, to, fields[3], am, lm);
            }
            ("F", Some(lat)) => {
                if fields.len() != 2 {
                    return Err(err(lineno, "expected: F <node>"));
                }
                let node = parse_node(fields[1], lat.num_nodes(), lineno)?;
                lat.set_final(node);
            }
            (".", cur @ Some(_)) => {
                lattices.push(cur.take().expect("record in progress"));
            }
            (kind, Some(_)) => {
                return Err(err(lineno, format!("unknown record line {kind:?}")));
            }
            (_, None) => {
                return Err(err(lineno, "expected a LATTICE header"));
            }
        }
    }
    if current.is_some() {
        return Err(err(
            header_line,
            "record is missing its '.' terminator at end of file",
        ));
    }
    Ok(lattices)
}

fn parse_node(field: &str, num_nodes: usize, lineno: usize) -> Result<NodeId, LatticeFormatError> {
    let n: usize = field
        .parse()
        .map_err(|_| err(lineno, format!("non-numeric node id {field:?}")))?;
    if n >= num_nodes {
        return Err(err(
            lineno,
            format!("node id {n} out of range (num-nodes = {num_nodes})"),
        ));
    }
    Ok(NodeId(n as u32))
}

fn parse_score(field: &str, lineno: usize) -> Result<f64, LatticeFormatError> {
    let x: f64 = field
        .parse()
        .map_err(|_| err(lineno, format!("non-numeric score {field:?}")))?;
    if !x.is_finite() {
        return Err(err(lineno, format!("non-finite score {field:?}")));
    }
    Ok(x)
}
