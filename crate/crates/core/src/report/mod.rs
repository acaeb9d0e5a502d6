//! End-to-end runs driven by a flat TOML configuration: count, decompose,
//! rank, group, compare, fit and plot, with a manifest of everything
//! written.

mod plot;
mod synth;

pub use plot::{render_svg, series_for, PlotError, PlotKind, PlotSpec, Series};
pub use synth::{synth_distribution, synth_values, SynthError, SyntheticSpec};

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest_reader, merge_counts, FilterMode, TextFilter, TokenCounts};
use crate::decomposition::{decompose_counts, load_table, MissingPolicy};
use crate::distribution::{distance_matrix, group, rank, KsMode, RankedDistribution};
use crate::fitting::{fit_families, FitConfig, FitReport, ModelFamily};
use crate::io::{self, IoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Parses family selections: each item is `all` or a comma-separated list
/// of names or ids. Duplicates are removed, first occurrence wins.
pub fn parse_families<S: AsRef<str>>(items: &[S]) -> Result<Vec<ModelFamily>, String> {
    let mut out = Vec::new();
    for item in items {
        for part in item
            .as_ref()
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
        {
            let chosen: Vec<ModelFamily> = if part == "all" {
                ModelFamily::ALL.to_vec()
            } else {
                vec![part.parse()?]
            };
            for f in chosen {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
    }
    Ok(out)
}

fn default_families() -> Vec<String> {
    vec!["all".into()]
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_label() -> String {
    "corpus".into()
}

/// Run configuration; every key mirrors a command-line flag. Relative paths
/// resolve against the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Raw text files, counted and merged into one corpus.
    #[serde(default)]
    pub corpora: Vec<PathBuf>,
    /// Label of the merged corpus.
    #[serde(default = "default_label")]
    pub label: String,
    /// Prepared inputs in any format `read_distributions` accepts.
    #[serde(default)]
    pub distributions: Vec<PathBuf>,
    /// Keep only these labels (all when empty).
    #[serde(default)]
    pub select: Vec<String>,
    #[serde(default)]
    pub filter: FilterMode,
    /// Decomposition table applied to the corpus counts.
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default)]
    pub ks_mode: KsMode,
    /// Group size for sequential rank binning.
    #[serde(default)]
    pub group: Option<usize>,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub plots: Vec<PlotKind>,
    /// Rank window of the dashed EXP guide on semi-log plots.
    #[serde(default)]
    pub exp_guide: Option<(usize, usize)>,
    /// Inclusive `A` range of the NHG search.
    #[serde(default)]
    pub nhg_total: Option<(u64, u64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every key has a default")
    }
}

impl RunConfig {
    /// Reads a TOML file; returns the configuration and the directory its
    /// relative paths resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), ReportError> {
        let bytes = io::read_file(path).map_err(|e| ReportError::new("config", e))?;
        let text = String::from_utf8(bytes).map_err(|e| ReportError::new("config", e))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| ReportError::new("config", e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    pub fn fit_config(&self) -> FitConfig {
        let mut cfg = FitConfig::default();
        cfg.nhg.total = self.nhg_total;
        cfg
    }
}

#[derive(Debug)]
pub struct ReportError {
    pub stage: &'static str,
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl ReportError {
    pub fn new(
        stage: &'static str,
        source: impl Into<Box<dyn std::error::Error + Send + Sync>>,
    ) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for ReportError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(self.source.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub stage: String,
    /// Relative to the output directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub config: RunConfig,
    pub outputs: Vec<OutputEntry>,
}

struct Writer<'a> {
    dir: PathBuf,
    formats: &'a [Format],
    outputs: Vec<OutputEntry>,
}

impl Writer<'_> {
    fn put(&mut self, stage: &'static str, name: &str, bytes: &[u8]) -> Result<(), ReportError> {
        io::write_atomic(&self.dir.join(name), bytes).map_err(|e| ReportError::new(stage, e))?;
        self.outputs.push(OutputEntry {
            stage: stage.into(),
            path: name.into(),
        });
        Ok(())
    }

    fn both(
        &mut self,
        stage: &'static str,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> Result<String, IoError>,
    ) -> Result<(), ReportError> {
        if self.formats.contains(&Format::Csv) {
            self.put(stage, &format!("{stem}.csv"), csv().as_bytes())?;
        }
        if self.formats.contains(&Format::Json) {
            let text = json().map_err(|e| ReportError::new(stage, e))?;
            self.put(stage, &format!("{stem}.json"), text.as_bytes())?;
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Runs every configured stage and writes `manifest.json` last. Inputs are
/// checked before anything is written; a failing stage aborts the run.
pub fn run_report(config: &RunConfig, base: &Path) -> Result<Manifest, ReportError> {
    let families = parse_families(&config.families).map_err(|e| ReportError::new("config", e))?;
    let inputs: Vec<&PathBuf> = config
        .corpora
        .iter()
        .chain(&config.distributions)
        .chain(config.table.iter())
        .collect();
    if config.corpora.is_empty() && config.distributions.is_empty() {
        return Err(ReportError::new(
            "config",
            "no corpora or distributions given",
        ));
    }
    if config.table.is_some() && config.corpora.is_empty() {
        return Err(ReportError::new(
            "config",
            "a decomposition table needs corpora",
        ));
    }
    for p in inputs {
        let full = resolve(base, p);
        if !full.is_file() {
            return Err(ReportError::new(
                "config",
                format!("input {} does not exist", full.display()),
            ));
        }
    }

    let mut w = Writer {
        dir: resolve(base, &config.out),
        formats: &config.formats,
        outputs: Vec::new(),
    };
    let mut dists: Vec<RankedDistribution> = Vec::new();

    if !config.corpora.is_empty() {
        let filter = TextFilter::for_mode(config.filter);
        let mut counts = TokenCounts::default();
        for p in &config.corpora {
            let full = resolve(base, p);
            let file = File::open(&full).map_err(|e| ReportError::new("freq", e))?;
            let mut tc = ingest_reader(file, &filter).map_err(|e| ReportError::new("freq", e))?;
            tc.set_source(p.display().to_string());
            counts = merge_counts(&counts, &tc);
        }
        w.both(
            "freq",
            "counts",
            || io::counts_to_csv(&counts),
            || io::to_json(&counts),
        )?;
        if let Some(table) = &config.table {
            let file =
                File::open(resolve(base, table)).map_err(|e| ReportError::new("decompose", e))?;
            let table = load_table(file).map_err(|e| ReportError::new("decompose", e))?;
            counts = decompose_counts(&counts, &table, config.missing)
                .map_err(|e| ReportError::new("decompose", e))?;
            w.both(
                "decompose",
                "parts",
                || io::counts_to_csv(&counts),
                || io::to_json(&counts),
            )?;
        }
        dists.push(rank(&counts, config.label.clone()).map_err(|e| ReportError::new("rank", e))?);
    }
    for p in &config.distributions {
        dists.extend(
            io::read_distributions(&resolve(base, p)).map_err(|e| ReportError::new("rank", e))?,
        );
    }
    if !config.select.is_empty() {
        for label in &config.select {
            if !dists.iter().any(|d| d.label() == label) {
                return Err(ReportError::new(
                    "rank",
                    format!("selected label {label:?} not found"),
                ));
            }
        }
        dists.retain(|d| config.select.iter().any(|l| l == d.label()));
    }
    w.both(
        "rank",
        "distributions",
        || io::distributions_to_csv(&dists),
        || io::to_json(&dists),
    )?;

    if let Some(m) = config.group {
        dists = dists
            .iter()
            .map(|d| group(d, m))
            .collect::<Result<_, _>>()
            .map_err(|e| ReportError::new("group", e))?;
        w.both(
            "group",
            "grouped",
            || io::distributions_to_csv(&dists),
            || io::to_json(&dists),
        )?;
    }

    if dists.len() >= 2 {
        let matrix =
            distance_matrix(&dists, config.ks_mode).map_err(|e| ReportError::new("ks", e))?;
        w.both(
            "ks",
            "matrix",
            || io::matrix_to_csv(&matrix),
            || io::to_json(&matrix),
        )?;
    }

    if !families.is_empty() {
        let fit_config = config.fit_config();
        let reports: Vec<FitReport> = dists
            .iter()
            .map(|d| FitReport {
                label: d.label().to_string(),
                results: fit_families(d, &families, &fit_config),
            })
            .collect();
        w.both(
            "fit",
            "fits",
            || io::fits_to_csv(&reports),
            || io::to_json(&reports),
        )?;
    }

    for &kind in &config.plots {
        let mut spec = PlotSpec::from_distributions(kind, &dists);
        if let (Some((lo, hi)), PlotKind::SemilogRank) = (config.exp_guide, kind) {
            for d in &dists {
                spec = spec
                    .with_exp_guide(d, lo, hi)
                    .map_err(|e| ReportError::new("plot", e))?;
            }
        }
        let svg = render_svg(&spec).map_err(|e| ReportError::new("plot", e))?;
        w.put("plot", &format!("plot_{kind}.svg"), svg.as_bytes())?;
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        created: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        config: config.clone(),
        outputs: w.outputs.clone(),
    };
    let text = io::to_json(&manifest).map_err(|e| ReportError::new("manifest", e))?;
    io::write_atomic(&w.dir.join("manifest.json"), text.as_bytes())
        .map_err(|e| ReportError::new("manifest", e))?;
    Ok(manifest)
}
