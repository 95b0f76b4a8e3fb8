//! Plain-text sequence files.
//!
//! ```text
//! # comment lines start with '#'
//! p=3
//! 1
//! 2
//! 4
//! ```
//!
//! The `p=<int>` line is optional and must be the first non-comment line.
//! Terms follow one per line, strictly increasing.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::set::{check_element, IntegerSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFile {
    pub p: Option<usize>,
    pub set: IntegerSet,
}

pub fn parse_sequence(text: &str) -> Result<SequenceFile> {
    let mut p = None;
    let mut seen_content = false;
    let mut elements: Vec<u64> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p=") {
            if seen_content {
                return Err(Error::Parse { line: line_no, message: "p= metadata must precede all terms".into() });
            }
            let value: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid p value '{}'", rest.trim()) })?;
            p = Some(value);
            seen_content = true;
            continue;
        }
        seen_content = true;
        let value: u128 = line.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("expected a positive integer, found '{line}'"),
        })?;
        let value = check_element(value).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        if let Some(&prev) = elements.last() {
            if value <= prev {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("term {value} does not exceed previous term {prev}"),
                });
            }
        }
        elements.push(value);
    }
    Ok(SequenceFile { p, set: IntegerSet::new(elements)? })
}

pub fn format_sequence(set: &IntegerSet, p: Option<usize>, comment: Option<&str>) -> String {
    let mut out = String::with_capacity(set.len() * 8 + 32);
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    if let Some(p) = p {
        let _ = writeln!(out, "p={p}");
    }
    for e in set.iter() {
        let _ = writeln!(out, "{e}");
    }
    out
}

pub fn read_sequence_file(path: &std::path::Path) -> std::io::Result<Result<SequenceFile>> {
    Ok(parse_sequence(&std::fs::read_to_string(path)?))
}
