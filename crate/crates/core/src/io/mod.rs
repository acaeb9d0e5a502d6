//! Reading and writing artifacts: counts, distributions, distance matrices
//! and fit reports, each as CSV and JSON.
//!
//! JSON artifacts round-trip exactly. CSV distribution files keep the
//! shortest round-trip representation of every probability; matrix and fit
//! CSVs are report tables printed with six significant digits
//! ([`format_g6`]).

pub mod float;

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{load_count_table, load_frequency_table, CorpusError, TokenCounts};
use crate::distribution::{rank, DistanceMatrix, DistributionError, KsMode, RankedDistribution};
use crate::fitting::{FitReport, FitResult, ModelFamily};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("unrecognized table header {0:?}")]
    UnknownHeader(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Formats with six significant digits, rounding ties to even, in the
/// style of C's `%g`: fixed notation for exponents `-4..6`, otherwise
/// scientific; trailing zeros are dropped.
pub fn format_g6<T: Scalar>(x: T) -> String {
    let x = x.to_f64().unwrap_or(f64::NAN);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", strip_zeros(mantissa));
    }
    strip_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let wrap = |source| IoError::File {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        wrap(e)
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize + ?Sized>(value: &S) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<D: DeserializeOwned, R: Read>(reader: R) -> Result<D, IoError> {
    Ok(serde_json::from_reader(reader)?)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("fields are UTF-8")
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().from_reader(reader)
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), IoError> {
    let headers = rdr.headers()?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IoError::Format {
            line: 1,
            message: format!(
                "expected header {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

fn parse_field<V: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    what: &str,
) -> Result<V, IoError> {
    let line = record.position().map_or(0, |p| p.line());
    record[i].parse().map_err(|_| IoError::Format {
        line,
        message: format!("bad {what} {:?}", &record[i]),
    })
}

// Counts.

pub fn counts_to_csv(tc: &TokenCounts) -> String {
    let mut w = csv_writer();
    w.write_record(["unit", "count"]).expect("in-memory write");
    for (unit, count) in tc.iter() {
        w.write_record([unit, &count.to_string()])
            .expect("in-memory write");
    }
    finish(w)
}

pub fn counts_from_csv<R: Read>(reader: R, source: &str) -> Result<TokenCounts, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["unit", "count"])?;
    let mut tc = TokenCounts::new(source);
    for record in rdr.records() {
        let record = record?;
        let count: u64 = parse_field(&record, 1, "count")?;
        if tc.get(&record[0]) > 0 || count == 0 {
            return Err(IoError::Format {
                line: record.position().map_or(0, |p| p.line()),
                message: format!("duplicate or zero count for {:?}", &record[0]),
            });
        }
        tc.add(&record[0], count);
    }
    Ok(tc)
}

// Distributions.

pub const DISTRIBUTION_HEADER: [&str; 4] = ["label", "rank", "unit", "probability"];

/// `label,rank,unit,probability`, one row per unit, several distributions per file allowed.
pub fn distributions_to_csv<T: Scalar>(dists: &[RankedDistribution<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(DISTRIBUTION_HEADER)
        .expect("in-memory write");
    for d in dists {
        for (i, (unit, p)) in d.units_iter().enumerate() {
            w.write_record([d.label(), &(i + 1).to_string(), unit, &p.to_string()])
                .expect("in-memory write");
        }
    }
    finish(w)
}

pub fn distributions_from_csv<T: Scalar, R: Read>(
    reader: R,
) -> Result<Vec<RankedDistribution<T>>, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &DISTRIBUTION_HEADER)?;
    let mut groups: Vec<(String, Vec<(String, T)>)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let rank: usize = parse_field(&record, 1, "rank")?;
        let p: T = parse_field(&record, 3, "probability")?;
        let label = &record[0];
        if groups.last().is_none_or(|(l, _)| l != label) {
            if groups.iter().any(|(l, _)| l == label) {
                return Err(IoError::Format {
                    line: record.position().map_or(0, |p| p.line()),
                    message: format!("rows for {label:?} are not contiguous"),
                });
            }
            groups.push((label.to_string(), Vec::new()));
        }
        let units = &mut groups.last_mut().expect("pushed above").1;
        if rank != units.len() + 1 {
            return Err(IoError::Format {
                line: record.position().map_or(0, |p| p.line()),
                message: format!("expected rank {}, found {rank}", units.len() + 1),
            });
        }
        units.push((record[2].to_string(), p));
    }
    groups
        .into_iter()
        .map(|(label, units)| Ok(RankedDistribution::new(label, units)?))
        .collect()
}

/// A single distribution in the unlabelled `rank,unit,probability` layout.
pub fn distribution_from_csv<T: Scalar, R: Read>(
    reader: R,
    label: impl Into<String>,
) -> Result<RankedDistribution<T>, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &DISTRIBUTION_HEADER[1..])?;
    let mut units = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let rank: usize = parse_field(&record, 0, "rank")?;
        if rank != units.len() + 1 {
            return Err(IoError::Format {
                line: record.position().map_or(0, |p| p.line()),
                message: format!("expected rank {}, found {rank}", units.len() + 1),
            });
        }
        units.push((
            record[1].to_string(),
            parse_field(&record, 2, "probability")?,
        ));
    }
    Ok(RankedDistribution::new(label, units)?)
}

// Distance matrices.

pub fn matrix_to_csv<T: Scalar>(m: &DistanceMatrix<T>) -> String {
    let mut w = csv_writer();
    let mut header = vec!["label".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (label, row) in m.labels.iter().zip(&m.values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|&v| format_g6(v)));
        w.write_record(&rec).expect("in-memory write");
    }
    finish(w)
}

pub fn matrix_from_csv<T: Scalar, R: Read>(
    reader: R,
    mode: KsMode,
) -> Result<DistanceMatrix<T>, IoError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("label") {
        return Err(IoError::Format {
            line: 1,
            message: "matrix header must start with label".into(),
        });
    }
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::with_capacity(labels.len());
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if labels.get(i).map(String::as_str) != Some(&record[0]) {
            return Err(IoError::Format {
                line,
                message: format!("row label {:?} does not match the header", &record[0]),
            });
        }
        let row = (1..record.len())
            .map(|j| parse_field(&record, j, "distance"))
            .collect::<Result<Vec<T>, _>>()?;
        values.push(row);
    }
    if values.len() != labels.len() {
        return Err(IoError::Format {
            line: 1,
            message: format!("{} labels but {} rows", labels.len(), values.len()),
        });
    }
    Ok(DistanceMatrix::from_values(mode, labels, values)?)
}

// Fit reports.

pub const FIT_HEADER: [&str; 18] = [
    "label",
    "id",
    "family",
    "A",
    "a",
    "b",
    "se_A",
    "se_a",
    "se_b",
    "r_squared",
    "rss",
    "aicc",
    "n",
    "k",
    "converged",
    "iterations",
    "clamped",
    "diagnostic",
];

pub fn fits_to_csv<T: Scalar>(reports: &[FitReport<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(FIT_HEADER).expect("in-memory write");
    let three = |v: Option<&[T]>| -> Vec<String> {
        (0..3)
            .map(|i| {
                v.and_then(|v| v.get(i))
                    .map_or(String::new(), |&x| format_g6(x))
            })
            .collect()
    };
    for report in reports {
        for r in &report.results {
            let mut rec = vec![
                report.label.clone(),
                r.family.id().to_string(),
                r.family.name().to_string(),
            ];
            rec.extend(three(Some(&r.params)));
            rec.extend(three(r.std_errors.as_deref()));
            rec.extend([format_g6(r.r_squared), format_g6(r.rss), format_g6(r.aicc)]);
            rec.extend([
                r.n.to_string(),
                r.k().to_string(),
                r.converged.to_string(),
                r.iterations.to_string(),
                r.clamped.to_string(),
                r.diagnostic.clone().unwrap_or_default(),
            ]);
            w.write_record(&rec).expect("in-memory write");
        }
    }
    finish(w)
}

pub fn fits_from_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<FitReport<T>>, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &FIT_HEADER)?;
    let mut reports: Vec<FitReport<T>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let family: ModelFamily = record[2]
            .parse()
            .map_err(|message| IoError::Format { line, message })?;
        let k = family.param_count();
        let floats = |from: usize| -> Result<Vec<T>, IoError> {
            (from..from + k)
                .map(|i| parse_field(&record, i, "parameter"))
                .collect()
        };
        let params = floats(3)?;
        let std_errors = if record[6].is_empty() {
            None
        } else {
            Some(floats(6)?)
        };
        let result = FitResult {
            family,
            params,
            std_errors,
            r_squared: parse_field(&record, 9, "r_squared")?,
            rss: parse_field(&record, 10, "rss")?,
            aicc: parse_field(&record, 11, "aicc")?,
            n: parse_field(&record, 12, "n")?,
            converged: parse_field(&record, 14, "converged")?,
            iterations: parse_field(&record, 15, "iterations")?,
            clamped: parse_field(&record, 16, "clamped")?,
            diagnostic: Some(record[17].to_string()).filter(|s| !s.is_empty()),
        };
        match reports.last_mut() {
            Some(r) if r.label == record[0] => r.results.push(result),
            _ => reports.push(FitReport {
                label: record[0].to_string(),
                results: vec![result],
            }),
        }
    }
    Ok(reports)
}

// Format detection.

fn label_from_path(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

/// Reads ranked distributions from any supported input, detected by content:
/// JSON (distribution list, single distribution or counts), distribution
/// CSV, a `language,unit,percent` table, a `corpus,rank,unit,count,percent`
/// table or a `unit,count` file. Count-based inputs are ranked; a single
/// counts file takes its label from the file name.
pub fn read_distributions<T: Scalar>(path: &Path) -> Result<Vec<RankedDistribution<T>>, IoError> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CorpusError::Encoding {
        offset: e.valid_up_to() as u64,
    })?;
    let text = text.trim_start_matches('\u{FEFF}');
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim();
    if first.starts_with('[') || first.starts_with('{') {
        return read_json_distributions(text, &label_from_path(path));
    }
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    match header.as_slice() {
        ["label", "rank", "unit", "probability"] => distributions_from_csv(text.as_bytes()),
        ["rank", "unit", "probability"] => Ok(vec![distribution_from_csv(
            text.as_bytes(),
            label_from_path(path),
        )?]),
        ["language", "unit", "percent"] => Ok(load_frequency_table(text.as_bytes())?),
        ["corpus", "rank", "unit", "count", "percent"] => load_count_table(text.as_bytes())?
            .iter()
            .map(|tc| Ok(rank(tc, tc.source())?))
            .collect(),
        ["unit", "count"] => {
            let label = label_from_path(path);
            let tc = counts_from_csv(text.as_bytes(), &label)?;
            Ok(vec![rank(&tc, label)?])
        }
        _ => Err(IoError::UnknownHeader(first.to_string())),
    }
}

fn read_json_distributions<T: Scalar>(
    text: &str,
    fallback: &str,
) -> Result<Vec<RankedDistribution<T>>, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.is_array() {
        if let Ok(list) = serde_json::from_value::<Vec<RankedDistribution<T>>>(value.clone()) {
            return Ok(list);
        }
        let counts: Vec<TokenCounts> = serde_json::from_value(value)?;
        return counts
            .iter()
            .map(|tc| Ok(rank(tc, counts_label(tc, fallback))?))
            .collect();
    }
    if value.get("units").is_some() {
        return Ok(vec![serde_json::from_value(value)?]);
    }
    let tc: TokenCounts = serde_json::from_value(value)?;
    Ok(vec![rank(&tc, counts_label(&tc, fallback))?])
}

fn counts_label(tc: &TokenCounts, fallback: &str) -> String {
    if tc.source().is_empty() {
        fallback.to_string()
    } else {
        tc.source().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_formatting() {
        let cases: [(f64, &str); 12] = [
            (0.142485, "0.142485"),
            (0.1424855919, "0.142486"),
            (-220.0887, "-220.089"),
            (1234565.0, "1.23456e6"),
            (1234575.0, "1.23458e6"),
            (0.125, "0.125"),
            (2.5e-5, "2.5e-5"),
            (0.0001, "0.0001"),
            (100000.0, "100000"),
            (1.0, "1"),
            (0.0, "0"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g6(x), want, "{x}");
        }
        assert_eq!(format_g6(f64::NAN), "nan");
    }

    #[test]
    fn g6_is_idempotent_through_parse() {
        for x in [
            0.1f64,
            1.0 / 3.0,
            2.0f64.sqrt() * 1e-7,
            -987654321.0,
            0.0046,
        ] {
            let once = format_g6(x);
            let back: f64 = once.parse().unwrap();
            assert_eq!(format_g6(back), once);
        }
    }

    #[test]
    fn counts_csv_round_trip() {
        let tc = TokenCounts::from_pairs("s", [("世", 2), ("界", 1), ("a,b", 4)]);
        let csv = counts_to_csv(&tc);
        assert_eq!(counts_from_csv(csv.as_bytes(), "s").unwrap(), tc);
        assert!(counts_from_csv("unit,count\nx,0\n".as_bytes(), "").is_err());
        assert!(counts_from_csv("unit,n\n".as_bytes(), "").is_err());
    }

    #[test]
    fn counts_json_validates_total() {
        let tc = TokenCounts::from_pairs("s", [("a", 2)]);
        let json = to_json(&tc).unwrap();
        assert_eq!(from_json::<TokenCounts, _>(json.as_bytes()).unwrap(), tc);
        let bad = r#"{"source":"s","total":3,"counts":{"a":2}}"#;
        assert!(from_json::<TokenCounts, _>(bad.as_bytes()).is_err());
    }

    #[test]
    fn distribution_csv_round_trip() {
        let a = RankedDistribution::from_weights(
            "x",
            vec![("p".into(), 3.0), ("q".into(), 1.0), ("r".into(), 1.0)],
        )
        .unwrap();
        let b = RankedDistribution::new("y", vec![("p".into(), 0.7), ("q".into(), 0.3)]).unwrap();
        let csv = distributions_to_csv(&[a.clone(), b.clone()]);
        assert_eq!(
            distributions_from_csv::<f64, _>(csv.as_bytes()).unwrap(),
            vec![a, b]
        );
        let gap = "label,rank,unit,probability\nx,1,p,0.5\nx,3,q,0.5\n";
        assert!(matches!(
            distributions_from_csv::<f64, _>(gap.as_bytes()),
            Err(IoError::Format { line: 3, .. })
        ));
    }

    #[test]
    fn f32_distribution_round_trip() {
        let d = RankedDistribution::<f32>::from_weights(
            "x",
            vec![("p".into(), 2.0), ("q".into(), 1.0)],
        )
        .unwrap();
        let csv = distributions_to_csv(std::slice::from_ref(&d));
        assert_eq!(
            distributions_from_csv::<f32, _>(csv.as_bytes()).unwrap(),
            vec![d.clone()]
        );
        let json = to_json(&d).unwrap();
        assert_eq!(
            from_json::<RankedDistribution<f32>, _>(json.as_bytes()).unwrap(),
            d
        );
    }
}
