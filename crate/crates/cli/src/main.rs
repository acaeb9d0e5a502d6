use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use letterfreq::corpus::{ingest_reader, merge_counts, FilterMode, TextFilter, TokenCounts};
use letterfreq::decomposition::{decompose_counts, load_table, MissingPolicy};
use letterfreq::distribution::{distance_matrix, group, KsMode, RankedDistribution};
use letterfreq::fitting::{fit_families, FitConfig, FitReport, ModelFamily};
use letterfreq::io;
use letterfreq::report::{
    parse_families, render_svg, run_report, synth_distribution, Format, PlotKind, PlotSpec,
    RunConfig, SyntheticSpec,
};

/// Rank-frequency analysis of letters, characters, strokes and character parts.
#[derive(Parser)]
#[command(name = "letterfreq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count units in text files.
    Freq(FreqArgs),
    /// Pairwise KS distances between distributions.
    Ks(KsArgs),
    /// Fit rank-distribution families.
    Fit(FitArgs),
    /// Plot rank curves as SVG.
    Plot(PlotArgs),
    /// Run a configured pipeline and write a manifest.
    Report(ReportArgs),
    /// Generate a noisy distribution from a model family.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Output {
    /// Output formats; the first goes to stdout when --out is absent.
    #[arg(long, value_delimiter = ',')]
    format: Vec<Format>,
    /// Directory for output files instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    /// Writes `stem.<ext>` for every format, or the first format to stdout.
    fn emit(
        &self,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> Result<String>,
    ) -> Result<()> {
        let Some(dir) = &self.out else {
            let text = match self.format.first().copied().unwrap_or(Format::Csv) {
                Format::Csv => csv(),
                Format::Json => json()?,
            };
            std::io::stdout().write_all(text.as_bytes())?;
            return Ok(());
        };
        let formats = if self.format.is_empty() {
            vec![Format::Csv, Format::Json]
        } else {
            self.format.clone()
        };
        let (mut csv, mut json) = (Some(csv), Some(json));
        for f in formats {
            let text = match f {
                Format::Csv => match csv.take() {
                    Some(c) => c(),
                    None => continue,
                },
                Format::Json => match json.take() {
                    Some(j) => j()?,
                    None => continue,
                },
            };
            let path = dir.join(format!("{stem}.{f}"));
            io::write_atomic(&path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Args)]
struct Inputs {
    /// Distribution inputs (distribution CSV/JSON, letter table, count table, unit,count CSV).
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Keep only these labels.
    #[arg(long, value_delimiter = ',')]
    select: Vec<String>,
    /// Bin consecutive ranks into groups of this size.
    #[arg(long)]
    group: Option<usize>,
}

impl Inputs {
    /// Loads every input; repeated labels get a ` #k` suffix so the same
    /// file can be compared with itself.
    fn load(&self) -> Result<Vec<RankedDistribution>> {
        let mut dists = Vec::new();
        for p in &self.paths {
            dists.extend(
                io::read_distributions(p).with_context(|| format!("reading {}", p.display()))?,
            );
        }
        if !self.select.is_empty() {
            for label in &self.select {
                if !dists.iter().any(|d| d.label() == label) {
                    bail!("selected label {label:?} not found");
                }
            }
            dists.retain(|d| self.select.iter().any(|l| l == d.label()));
        }
        let mut seen: HashMap<String, usize> = HashMap::new();
        let dists = dists
            .into_iter()
            .map(|d| {
                let k = seen.entry(d.label().to_string()).or_insert(0);
                *k += 1;
                if *k > 1 {
                    let label = format!("{} #{k}", d.label());
                    d.with_label(label)
                } else {
                    d
                }
            })
            .collect::<Vec<_>>();
        match self.group {
            Some(m) => dists.iter().map(|d| Ok(group(d, m)?)).collect(),
            None => Ok(dists),
        }
    }
}

#[derive(Args)]
struct FreqArgs {
    /// Text files; counts are merged across files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, default_value = "han")]
    filter: FilterMode,
    /// Decomposition table (TSV) applied after counting.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value = "error")]
    missing: MissingPolicy,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct KsArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value = "rank_share")]
    ks_mode: KsMode,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Families to fit: `all` or a comma-separated list of names or ids.
    #[arg(long, default_value = "all")]
    families: String,
    /// Inclusive A range of the NHG search, e.g. 26,1040.
    #[arg(long, value_parser = parse_pair::<u64>)]
    nhg_total: Option<(u64, u64)>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    kind: PlotKind,
    /// Rank window of a dashed EXP guide, e.g. 3,25.
    #[arg(long, value_parser = parse_pair::<usize>)]
    exp_guide: Option<(usize, usize)>,
    /// Directory for the SVG instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory (relative to the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    family: ModelFamily,
    #[arg(long, value_delimiter = ',', required = true)]
    params: Vec<f64>,
    #[arg(long, default_value_t = 26)]
    n: usize,
    #[arg(long, default_value_t = 1e-4)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    label: String,
    #[command(flatten)]
    output: Output,
}

/// `lo,hi` with `lo ≤ hi`.
fn parse_pair<T: FromStr + PartialOrd>(s: &str) -> Result<(T, T), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or("expected two comma-separated values")?;
    let parse = |v: &str| {
        v.trim()
            .parse::<T>()
            .map_err(|_| format!("invalid value {v:?}"))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err("the first value must not exceed the second".into());
    }
    Ok((lo, hi))
}

fn freq(args: &FreqArgs) -> Result<()> {
    let filter = TextFilter::for_mode(args.filter);
    let mut counts = TokenCounts::default();
    for p in &args.paths {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let mut tc =
            ingest_reader(file, &filter).with_context(|| format!("reading {}", p.display()))?;
        tc.set_source(p.display().to_string());
        counts = merge_counts(&counts, &tc);
    }
    if let Some(table) = &args.table {
        let file = File::open(table).with_context(|| format!("opening {}", table.display()))?;
        let table = load_table(file).with_context(|| format!("reading {}", table.display()))?;
        counts = decompose_counts(&counts, &table, args.missing)?;
    }
    if counts.is_empty() {
        eprintln!("warning: no units counted");
    }
    eprintln!("total {}, types {}", counts.total(), counts.type_count());
    args.output.emit(
        "counts",
        || io::counts_to_csv(&counts),
        || Ok(io::to_json(&counts)?),
    )
}

fn ks(args: &KsArgs) -> Result<()> {
    let dists = args.inputs.load()?;
    if dists.len() < 2 {
        bail!("need at least two distributions, got {}", dists.len());
    }
    let m = distance_matrix(&dists, args.ks_mode)?;
    let s = &m.summary;
    eprintln!(
        "mean {}, min {} ({} / {}), max {} ({} / {})",
        io::format_g6(s.mean),
        io::format_g6(s.min_pair.value),
        s.min_pair.a,
        s.min_pair.b,
        io::format_g6(s.max_pair.value),
        s.max_pair.a,
        s.max_pair.b
    );
    args.output
        .emit("matrix", || io::matrix_to_csv(&m), || Ok(io::to_json(&m)?))
}

fn fit(args: &FitArgs) -> Result<()> {
    let families = parse_families(&[args.families.as_str()]).map_err(anyhow::Error::msg)?;
    let dists = args.inputs.load()?;
    let mut config = FitConfig::default();
    config.nhg.total = args.nhg_total;
    let reports: Vec<FitReport> = dists
        .iter()
        .map(|d| FitReport {
            label: d.label().to_string(),
            results: fit_families(d, &families, &config),
        })
        .collect();
    for report in &reports {
        for r in report.results.iter().filter(|r| !r.converged) {
            eprintln!(
                "warning: {} {} did not converge: {}",
                report.label,
                r.family,
                r.diagnostic.as_deref().unwrap_or("no diagnostic")
            );
        }
    }
    args.output.emit(
        "fits",
        || io::fits_to_csv(&reports),
        || Ok(io::to_json(&reports)?),
    )
}

fn plot(args: &PlotArgs) -> Result<()> {
    let dists = args.inputs.load()?;
    let mut spec = PlotSpec::from_distributions(args.kind, &dists);
    if let Some((lo, hi)) = args.exp_guide {
        for d in &dists {
            spec = spec.with_exp_guide(d, lo, hi)?;
        }
    }
    let svg = render_svg(&spec)?;
    match &args.out {
        Some(dir) => {
            let path = dir.join(format!("plot_{}.svg", args.kind));
            io::write_atomic(&path, svg.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(svg.as_bytes())?,
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let (mut config, base) = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.out = std::env::current_dir()?.join(out);
    }
    let manifest = run_report(&config, &base)?;
    let dir = if config.out.is_absolute() {
        config.out.clone()
    } else {
        base.join(&config.out)
    };
    for o in &manifest.outputs {
        eprintln!("{}: {}", o.stage, dir.join(&o.path).display());
    }
    println!("{}", dir.join("manifest.json").display());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        family: args.family,
        params: args.params.clone(),
        n: args.n,
        sigma: args.sigma,
        seed: args.seed,
    };
    let d = synth_distribution(&spec, &args.label)?;
    let dists = [d];
    args.output.emit(
        "synthetic",
        || io::distributions_to_csv(&dists),
        || Ok(io::to_json(&dists)?),
    )
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Freq(a) => freq(a),
        Command::Ks(a) => ks(a),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
