//! Corpus ingestion: filtering raw text into writing units and counting them,
//! plus loading pre-tabulated relative-frequency tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, Read};
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{DistributionError, RankedDistribution};
use crate::scalar::Scalar;

/// Label of the pooled pseudo-unit for letters outside the configured alphabet.
pub const OTHERS: &str = "others";

/// CJK Unified Ideographs: the base block and extensions A through I.
const HAN_BLOCKS: &[RangeInclusive<u32>] = &[
    0x3400..=0x4DBF,   // Extension A
    0x4E00..=0x9FFF,   // base block
    0x20000..=0x2A6DF, // Extension B
    0x2A700..=0x2B73F, // Extension C
    0x2B740..=0x2B81F, // Extension D
    0x2B820..=0x2CEAF, // Extension E
    0x2CEB0..=0x2EBEF, // Extension F
    0x2EBF0..=0x2EE5F, // Extension I
    0x30000..=0x3134F, // Extension G
    0x31350..=0x323AF, // Extension H
];

/// CJK Compatibility Ideographs and their supplement, for use as extra ranges.
pub const COMPATIBILITY_IDEOGRAPHS: &[RangeInclusive<char>] =
    &['\u{F900}'..='\u{FAFF}', '\u{2F800}'..='\u{2FA1F}'];

/// True for code points in the CJK Unified Ideographs blocks.
pub fn is_han(c: char) -> bool {
    let cp = c as u32;
    HAN_BLOCKS.iter().any(|r| r.contains(&cp))
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: negative percentage {value} for ({language}, {unit})")]
    NegativePercent {
        line: u64,
        language: String,
        unit: String,
        value: f64,
    },
    #[error("line {line}: duplicate entry ({language}, {unit})")]
    Duplicate {
        line: u64,
        language: String,
        unit: String,
    },
    #[error("column {0:?} has no non-zero entries")]
    EmptyColumn(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FilterMode {
    /// Keep CJK Unified Ideographs only.
    #[default]
    #[serde(rename = "han")]
    HanOnly,
    /// Keep alphabetic letters only (ideographs excluded).
    #[serde(rename = "letters")]
    LettersOnly,
    /// Count every character.
    #[serde(rename = "none")]
    Passthrough,
}

impl FilterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterMode::HanOnly => "han",
            FilterMode::LettersOnly => "letters",
            FilterMode::Passthrough => "none",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "han" => Ok(FilterMode::HanOnly),
            "letters" => Ok(FilterMode::LettersOnly),
            "none" => Ok(FilterMode::Passthrough),
            other => Err(format!(
                "unknown filter {other:?} (expected han, letters or none)"
            )),
        }
    }
}

/// Decides which characters of a text become counted units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextFilter {
    pub mode: FilterMode,
    /// Unit labels kept regardless of mode.
    pub extra_units: BTreeSet<String>,
    /// Extra code-point ranges accepted in han-only mode.
    pub extra_ranges: Vec<RangeInclusive<char>>,
    /// Letters-only: lower-case before counting.
    pub case_fold: bool,
    /// Letters-only: restrict counting to this alphabet. `None` keeps every letter.
    pub alphabet: Option<BTreeSet<char>>,
    /// Letters-only: pool letters outside `alphabet` into [`OTHERS`] instead of dropping them.
    pub pool_others: bool,
}

impl TextFilter {
    fn with_mode(mode: FilterMode) -> Self {
        Self {
            mode,
            extra_units: BTreeSet::new(),
            extra_ranges: Vec::new(),
            case_fold: false,
            alphabet: None,
            pool_others: false,
        }
    }

    /// The default filter for a mode; letters are case-folded.
    pub fn for_mode(mode: FilterMode) -> Self {
        match mode {
            FilterMode::HanOnly => Self::han_only(),
            FilterMode::LettersOnly => Self::letters_only(),
            FilterMode::Passthrough => Self::passthrough(),
        }
    }

    pub fn han_only() -> Self {
        Self::with_mode(FilterMode::HanOnly)
    }

    /// Letters-only, case-folded, every letter its own unit.
    pub fn letters_only() -> Self {
        Self {
            case_fold: true,
            ..Self::with_mode(FilterMode::LettersOnly)
        }
    }

    /// Letters-only over the 26 Latin letters with everything else pooled
    /// into [`OTHERS`], the layout of the bundled letter-frequency table.
    pub fn latin_with_others() -> Self {
        Self {
            alphabet: Some(('a'..='z').collect()),
            pool_others: true,
            ..Self::letters_only()
        }
    }

    pub fn passthrough() -> Self {
        Self::with_mode(FilterMode::Passthrough)
    }

    pub fn with_compatibility_ideographs(mut self) -> Self {
        self.extra_ranges
            .extend(COMPATIBILITY_IDEOGRAPHS.iter().cloned());
        self
    }

    /// The unit label `c` counts as, or `None` if it is filtered out.
    pub fn classify(&self, c: char) -> Option<String> {
        if !self.extra_units.is_empty() {
            let mut buf = [0u8; 4];
            if self.extra_units.contains(&*c.encode_utf8(&mut buf)) {
                return Some(c.to_string());
            }
        }
        match self.mode {
            FilterMode::Passthrough => Some(c.to_string()),
            FilterMode::HanOnly => {
                if is_han(c) || self.extra_ranges.iter().any(|r| r.contains(&c)) {
                    Some(c.to_string())
                } else {
                    None
                }
            }
            FilterMode::LettersOnly => {
                if !c.is_alphabetic() || is_han(c) {
                    return None;
                }
                let unit: String = if self.case_fold {
                    c.to_lowercase().collect()
                } else {
                    c.to_string()
                };
                match &self.alphabet {
                    None => Some(unit),
                    Some(alphabet) => {
                        let mut chars = unit.chars();
                        let inside = matches!(
                            (chars.next(), chars.next()),
                            (Some(u), None) if alphabet.contains(&u)
                        );
                        if inside {
                            Some(unit)
                        } else if self.pool_others {
                            Some(OTHERS.to_string())
                        } else {
                            None
                        }
                    }
                }
            }
        }
    }
}

/// Multiset of writing units with provenance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountsDoc")]
pub struct TokenCounts {
    source: String,
    total: u64,
    counts: BTreeMap<String, u64>,
}

#[derive(Deserialize)]
struct CountsDoc {
    source: String,
    total: u64,
    counts: BTreeMap<String, u64>,
}

impl TryFrom<CountsDoc> for TokenCounts {
    type Error = String;

    fn try_from(doc: CountsDoc) -> Result<Self, Self::Error> {
        if doc.counts.values().any(|&c| c == 0) {
            return Err("counts must be positive".into());
        }
        let sum = doc
            .counts
            .values()
            .try_fold(0u64, |acc, &c| acc.checked_add(c));
        if sum != Some(doc.total) {
            return Err(format!("total {} does not match the counts", doc.total));
        }
        Ok(Self {
            source: doc.source,
            total: doc.total,
            counts: doc.counts,
        })
    }
}

impl TokenCounts {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    /// Builds counts from `(unit, count)` pairs; repeated units accumulate and
    /// zero counts are dropped.
    pub fn from_pairs<I, S>(source: impl Into<String>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut tc = Self::new(source);
        for (unit, count) in pairs {
            tc.add(unit, count);
        }
        tc
    }

    pub fn add(&mut self, unit: impl Into<String>, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(unit.into()).or_insert(0) += count;
        self.total += count;
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn set_source(&mut self, source: impl Into<String>) {
        self.source = source.into();
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn type_count(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn get(&self, unit: &str) -> u64 {
        self.counts.get(unit).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// Iterates `(unit, count)` in code-point order of the unit label.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Equality of the multisets, ignoring provenance.
    pub fn same_counts(&self, other: &Self) -> bool {
        self.total == other.total && self.counts == other.counts
    }
}

/// Pointwise sum of two count multisets.
///
/// Provenance strings are merged as a sorted set of `"; "`-separated parts,
/// so merging is commutative and associative including the source field.
pub fn merge_counts(a: &TokenCounts, b: &TokenCounts) -> TokenCounts {
    let mut out = a.clone();
    for (unit, count) in b.iter() {
        out.add(unit, count);
    }
    out.source = merge_sources(&a.source, &b.source);
    out
}

fn merge_sources(a: &str, b: &str) -> String {
    let parts: BTreeSet<&str> = a
        .split("; ")
        .chain(b.split("; "))
        .filter(|s| !s.is_empty())
        .collect();
    parts.into_iter().collect::<Vec<_>>().join("; ")
}

/// Counts the units of `text` accepted by `filter`.
pub fn ingest_str(text: &str, filter: &TextFilter) -> TokenCounts {
    let mut tally: HashMap<String, u64> = HashMap::new();
    for c in text.chars() {
        if let Some(unit) = filter.classify(c) {
            *tally.entry(unit).or_insert(0) += 1;
        }
    }
    TokenCounts::from_pairs("", tally)
}

/// Like [`ingest_str`] but validates the encoding first.
pub fn ingest_bytes(bytes: &[u8], filter: &TextFilter) -> Result<TokenCounts, CorpusError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => Ok(ingest_str(text, filter)),
        Err(e) => Err(CorpusError::Encoding {
            offset: e.valid_up_to() as u64,
        }),
    }
}

/// Streams a UTF-8 source through `filter` in fixed-size chunks.
///
/// Multi-byte sequences split across chunk boundaries are carried over;
/// encoding errors report the absolute byte offset of the first bad byte.
pub fn ingest_reader<R: Read>(
    mut reader: R,
    filter: &TextFilter,
) -> Result<TokenCounts, CorpusError> {
    const CHUNK: usize = 1 << 16;
    let mut out = TokenCounts::default();
    let mut buf = vec![0u8; CHUNK + 4];
    let mut carry = 0usize;
    let mut consumed: u64 = 0;
    loop {
        let read = match reader.read(&mut buf[carry..carry + CHUNK]) {
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        let filled = carry + read;
        let valid = match std::str::from_utf8(&buf[..filled]) {
            Ok(_) => filled,
            Err(e) => {
                // An incomplete trailing sequence is fine unless the stream ended.
                if e.error_len().is_some() || read == 0 {
                    return Err(CorpusError::Encoding {
                        offset: consumed + e.valid_up_to() as u64,
                    });
                }
                e.valid_up_to()
            }
        };
        let text = std::str::from_utf8(&buf[..valid]).expect("validated prefix");
        out = merge_counts(&out, &ingest_str(text, filter));
        consumed += valid as u64;
        buf.copy_within(valid..filled, 0);
        carry = filled - valid;
        if read == 0 {
            return Ok(out);
        }
    }
}

/// Loads a `language,unit,percent` table into one ranked distribution per
/// language, in order of first appearance.
///
/// Zero entries are dropped (the unit does not occur in that language) and
/// each column is renormalized to unit mass.
pub fn load_frequency_table<T: Scalar, R: Read>(
    reader: R,
) -> Result<Vec<RankedDistribution<T>>, CorpusError> {
    Ok(load_frequency_columns(reader)?
        .into_iter()
        .map(|c| c.distribution)
        .collect())
}

/// One language column of a frequency table.
#[derive(Debug, Clone)]
pub struct FrequencyColumn<T: Scalar> {
    pub distribution: RankedDistribution<T>,
    /// Sum of the column's printed percentages before renormalization.
    pub percent_sum: f64,
}

pub fn load_frequency_columns<T: Scalar, R: Read>(
    reader: R,
) -> Result<Vec<FrequencyColumn<T>>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["language", "unit", "percent"] {
        return Err(CorpusError::Malformed {
            line: 1,
            message: format!("expected header language,unit,percent, found {:?}", headers),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut columns: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(CorpusError::Malformed {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let (language, unit, percent) = (&record[0], &record[1], &record[2]);
        if language.is_empty() || unit.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: "empty language or unit".into(),
            });
        }
        let value: f64 = percent.parse().map_err(|_| CorpusError::Malformed {
            line,
            message: format!("unparseable percent {percent:?}"),
        })?;
        if !value.is_finite() {
            return Err(CorpusError::Malformed {
                line,
                message: format!("non-finite percent {percent:?}"),
            });
        }
        if value < 0.0 {
            return Err(CorpusError::NegativePercent {
                line,
                language: language.into(),
                unit: unit.into(),
                value,
            });
        }
        if !seen.insert((language.to_string(), unit.to_string())) {
            return Err(CorpusError::Duplicate {
                line,
                language: language.into(),
                unit: unit.into(),
            });
        }
        if !columns.contains_key(language) {
            order.push(language.to_string());
        }
        columns
            .entry(language.to_string())
            .or_default()
            .push((unit.to_string(), value));
    }
    order
        .into_iter()
        .map(|language| {
            let entries = columns.remove(&language).unwrap_or_default();
            let percent_sum: f64 = entries.iter().map(|(_, v)| v).sum();
            let kept: Vec<(String, T)> = entries
                .into_iter()
                .filter(|(_, v)| *v > 0.0)
                .map(|(u, v)| (u, T::lit(v)))
                .collect();
            if kept.is_empty() {
                return Err(CorpusError::EmptyColumn(language));
            }
            let distribution = RankedDistribution::from_weights(language, kept)?;
            Ok(FrequencyColumn {
                distribution,
                percent_sum,
            })
        })
        .collect()
}

/// Loads a `corpus,rank,unit,count,percent` rank table (the layout of the
/// bundled constructive-part excerpt) into one count multiset per corpus.
///
/// Glyph labels that repeat within a corpus (distinct parts rendered with
/// the same character) are disambiguated as `unit@rank`.
pub fn load_count_table<R: Read>(reader: R) -> Result<Vec<TokenCounts>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["corpus", "rank", "unit", "count", "percent"] {
        return Err(CorpusError::Malformed {
            line: 1,
            message: format!(
                "expected header corpus,rank,unit,count,percent, found {:?}",
                headers
            ),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut tables: HashMap<String, TokenCounts> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CorpusError::Malformed { line, message };
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        let corpus = &record[0];
        let rank: u64 = record[1]
            .parse()
            .map_err(|_| bad(format!("bad rank {:?}", &record[1])))?;
        let count: u64 = record[3]
            .parse()
            .map_err(|_| bad(format!("bad count {:?}", &record[3])))?;
        let tc = tables.entry(corpus.to_string()).or_insert_with(|| {
            order.push(corpus.to_string());
            TokenCounts::new(corpus)
        });
        let unit = if tc.get(&record[2]) > 0 {
            format!("{}@{}", &record[2], rank)
        } else {
            record[2].to_string()
        };
        if tc.get(&unit) > 0 {
            return Err(CorpusError::Duplicate {
                line,
                language: corpus.into(),
                unit,
            });
        }
        tc.add(unit, count);
    }
    Ok(order
        .into_iter()
        .map(|c| tables.remove(&c).expect("corpus recorded"))
        .collect())
}

fn csv_error(e: csv::Error) -> CorpusError {
    let line = e.position().map_or(0, |p| p.line());
    CorpusError::Malformed {
        line,
        message: e.to_string(),
    }
}
