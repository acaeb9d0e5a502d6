//! Character decomposition tables (strokes or constructive parts) and the
//! expansion of character counts into part counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TokenCounts;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate character {character:?}")]
    DuplicateCharacter { line: usize, character: String },
    #[error("line {line}: empty part sequence for {character:?}")]
    EmptyParts { line: usize, character: String },
    #[error("missing #kind directive")]
    MissingKind,
    #[error("character {0:?} has no decomposition")]
    Unmapped(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Strokes,
    Parts,
}

impl FromStr for TableKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strokes" => Ok(TableKind::Strokes),
            "parts" => Ok(TableKind::Parts),
            other => Err(format!("unknown table kind {other:?}")),
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::Strokes => "strokes",
            TableKind::Parts => "parts",
        })
    }
}

/// What to do with a character the table does not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Error,
    Skip,
    /// Count the character as a single part equal to itself.
    #[serde(rename = "self")]
    SelfPart,
}

impl FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(MissingPolicy::Error),
            "skip" => Ok(MissingPolicy::Skip),
            "self" => Ok(MissingPolicy::SelfPart),
            other => Err(format!(
                "unknown missing policy {other:?} (expected error, skip or self)"
            )),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::Error => "error",
            MissingPolicy::Skip => "skip",
            MissingPolicy::SelfPart => "self",
        })
    }
}

/// Flat mapping character → ordered, non-empty part sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionTable {
    kind: TableKind,
    name: String,
    entries: BTreeMap<String, Vec<String>>,
    inventory: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub entries: usize,
    pub inventory: usize,
    pub mean_parts: f64,
}

impl DecompositionTable {
    pub fn new(kind: TableKind, name: impl Into<String>) -> Self {
        Self {
            kind,
            name: name.into(),
            entries: BTreeMap::new(),
            inventory: BTreeSet::new(),
        }
    }

    /// Adds an entry; `false` if the character is already present or the sequence is empty.
    pub fn insert(&mut self, character: impl Into<String>, parts: Vec<String>) -> bool {
        let character = character.into();
        if parts.is_empty() || self.entries.contains_key(&character) {
            return false;
        }
        self.inventory.extend(parts.iter().cloned());
        self.entries.insert(character, parts);
        true
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, character: &str) -> Option<&[String]> {
        self.entries.get(character).map(Vec::as_slice)
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn stats(&self) -> TableStats {
        table_stats(self)
    }
}

/// Parses the tab-separated table format.
///
/// ```text
/// #kind: parts
/// #name: sample
/// 暗	日 立 日
/// ```
///
/// Other lines starting with `#` and blank lines are ignored.
pub fn load_table<R: Read>(reader: R) -> Result<DecompositionTable, DecompositionError> {
    let mut kind = None;
    let mut name = String::new();
    let mut rows: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        let line = if line_no == 1 {
            line.trim_start_matches('\u{FEFF}')
        } else {
            line
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            if let Some(value) = directive.strip_prefix("kind:") {
                kind = Some(value.trim().parse::<TableKind>().map_err(|message| {
                    DecompositionError::Malformed {
                        line: line_no,
                        message,
                    }
                })?);
            } else if let Some(value) = directive.strip_prefix("name:") {
                name = value.trim().to_string();
            }
            continue;
        }
        let (character, parts) =
            line.split_once('\t')
                .ok_or_else(|| DecompositionError::Malformed {
                    line: line_no,
                    message: "expected character<TAB>parts".into(),
                })?;
        let mut chars = character.chars();
        if chars.next().is_none() || chars.next().is_some() {
            return Err(DecompositionError::Malformed {
                line: line_no,
                message: format!("expected a single character, found {character:?}"),
            });
        }
        let parts: Vec<String> = parts.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(DecompositionError::EmptyParts {
                line: line_no,
                character: character.into(),
            });
        }
        rows.push((line_no, character.to_string(), parts));
    }
    let mut table = DecompositionTable::new(kind.ok_or(DecompositionError::MissingKind)?, name);
    for (line, character, parts) in rows {
        if table.entries.contains_key(&character) {
            return Err(DecompositionError::DuplicateCharacter { line, character });
        }
        table.insert(character, parts);
    }
    Ok(table)
}

/// Expands character counts into part counts with multiplicity: a part that
/// occurs `k` times in a character with count `c` contributes `k·c`.
pub fn decompose_counts(
    tc: &TokenCounts,
    table: &DecompositionTable,
    policy: MissingPolicy,
) -> Result<TokenCounts, DecompositionError> {
    let mut out = TokenCounts::new(tc.source());
    for (character, count) in tc.iter() {
        match table.get(character) {
            Some(parts) => {
                for part in parts {
                    out.add(part.as_str(), count);
                }
            }
            None => match policy {
                MissingPolicy::Error => return Err(DecompositionError::Unmapped(character.into())),
                MissingPolicy::Skip => {}
                MissingPolicy::SelfPart => out.add(character, count),
            },
        }
    }
    Ok(out)
}

pub fn table_stats(table: &DecompositionTable) -> TableStats {
    let parts: usize = table.entries.values().map(Vec::len).sum();
    let entries = table.entries.len();
    TableStats {
        entries,
        inventory: table.inventory.len(),
        mean_parts: if entries == 0 {
            0.0
        } else {
            parts as f64 / entries as f64
        },
    }
}
