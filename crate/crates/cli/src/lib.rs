//! Argument handling and subcommands for the `twonn` binary.
//!
//! [`run`] takes argv and output streams and returns the exit code: 0 on
//! success, 1 for usage errors, 2 for data or validation errors. Every error
//! is reported as one line on the error stream.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use twonn::generators::{generate, GeneratorKind, GeneratorSpec};
use twonn::io::{self, FitExport, TableFormat};
use twonn::reproduce;
use twonn::scan::default_block_sizes;
use twonn::{
    compute_mu, detect_plateau, empirical_cdf, estimate_id, scan, two_nearest,
    two_nearest_from_matrix, DistanceMatrix, EstimatorOptions, Method, Metric, NeighborInfo,
    PointSet, ScanInput, Search,
};

#[derive(Debug, Parser)]
#[command(
    name = "twonn",
    version,
    about = "Intrinsic dimension from first and second nearest-neighbor distances"
)]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the intrinsic dimension and print it as JSON.
    Estimate(EstimateArgs),
    /// Estimate on disjoint blocks of decreasing size and write the curve.
    Scan(ScanArgs),
    /// Write a synthetic dataset as a points table.
    Generate(GenerateArgs),
    /// Regenerate the data behind the benchmark figures.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Cdf,
    Mle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cdf => Method::CdfFit,
            MethodArg::Mle => Method::Mle,
        }
    }
}

/// `euclidean`, `pbc=L1,L2,...` (one length is broadcast) or `precomputed`.
#[derive(Debug, Clone, PartialEq)]
enum MetricArg {
    Euclidean,
    Pbc(Vec<f64>),
    Precomputed,
}

impl FromStr for MetricArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(MetricArg::Euclidean),
            "precomputed" => Ok(MetricArg::Precomputed),
            _ => {
                let lengths = s.strip_prefix("pbc=").ok_or_else(|| {
                    format!(
                        "unknown metric `{s}` (expected euclidean, pbc=L1,L2,... or precomputed)"
                    )
                })?;
                lengths
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| format!("bad box length `{v}`"))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(MetricArg::Pbc)
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
struct GenArgs {
    /// Generator kind (hypercube, gaussian, cauchy_norm, hypersphere,
    /// swiss_roll, noisy_plane, noisy_gauss_roll).
    #[arg(long, value_name = "KIND")]
    kind: Option<GeneratorKind>,
    /// Intrinsic dimension of the generated data.
    #[arg(long, value_name = "D")]
    dim: Option<u32>,
    /// Number of generated points.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Periodic boundaries (hypercube only).
    #[arg(long)]
    pbc: bool,
    /// Standard deviation of the noise coordinates (noisy kinds).
    #[arg(long, value_name = "SIGMA", default_value_t = 0.0)]
    noise_sigma: f64,
    /// Number of noise coordinates (noisy kinds).
    #[arg(long, value_name = "COUNT", default_value_t = 0)]
    noise_dims: usize,
}

impl GenArgs {
    fn spec(&self, seed: u64) -> Result<Option<GeneratorSpec>, Failure> {
        let Some(kind) = self.kind else {
            if self.dim.is_some()
                || self.n.is_some()
                || self.pbc
                || self.noise_dims > 0
                || self.noise_sigma != 0.0
            {
                return Err(Failure::Usage("generator options need --kind".into()));
            }
            return Ok(None);
        };
        let n = self
            .n
            .ok_or_else(|| Failure::Usage("--kind needs --n".into()))?;
        let d = match (self.dim, kind) {
            (Some(d), _) => d,
            (
                None,
                GeneratorKind::SwissRoll
                | GeneratorKind::NoisyPlane
                | GeneratorKind::NoisyGaussRoll,
            ) => 2,
            (None, _) => return Err(Failure::Usage(format!("--kind {kind} needs --dim"))),
        };
        let mut spec = GeneratorSpec::new(kind, d, n, seed).with_pbc(self.pbc);
        if self.noise_dims > 0 || self.noise_sigma != 0.0 {
            spec = spec.with_noise(self.noise_sigma, self.noise_dims);
        }
        Ok(Some(spec))
    }
}

#[derive(Debug, Clone, Args)]
struct SourceArgs {
    /// Points table, one point per row.
    #[arg(long, value_name = "PATH", conflicts_with = "matrix")]
    input: Option<PathBuf>,
    /// Square distance matrix.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
    /// Table format of the input (csv, tsv; default from the extension).
    #[arg(long, value_name = "FORMAT")]
    format: Option<TableFormat>,
    /// Distance: euclidean, pbc=L1,L2,... or precomputed.
    #[arg(long, value_name = "METRIC")]
    metric: Option<MetricArg>,
    /// Drop repeated points (or zero-distance matrix rows) instead of failing.
    #[arg(long)]
    drop_duplicates: bool,
    /// Seed for the generator and for block shuffling.
    #[arg(long, value_name = "UINT64", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    generator: GenArgs,
}

#[derive(Debug, Clone, Args)]
struct EstimatorArgs {
    /// Fraction of the largest ratios to discard.
    #[arg(long, value_name = "FRACTION", default_value_t = 0.1)]
    discard: f64,
    /// cdf (line fit to the empirical CDF) or mle.
    #[arg(long, value_enum, default_value = "cdf")]
    method: MethodArg,
}

impl EstimatorArgs {
    fn options(&self) -> EstimatorOptions {
        EstimatorOptions::default()
            .with_discard(self.discard)
            .with_method(self.method.into())
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Write the CDF points, kept flags and slope as TSV.
    #[arg(long, value_name = "PATH")]
    export_fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Comma-separated block sizes, or `auto` for n, n/2, n/4, ...
    #[arg(long, value_name = "LIST|auto", default_value = "auto")]
    blocks: String,
    /// Smallest block size of the automatic grid.
    #[arg(long, value_name = "SIZE", default_value_t = 20)]
    min_block: usize,
    /// Curve output (TSV); standard output when absent.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Also detect a plateau and write it as JSON.
    #[arg(long, value_name = "PATH")]
    plateau: Option<PathBuf>,
    /// Plateau tolerance on (max - min) / mean.
    #[arg(long, value_name = "TOL", default_value_t = 0.05)]
    rel_tol: f64,
    /// Fewest curve points in a plateau.
    #[arg(long, value_name = "COUNT", default_value_t = 3)]
    min_points: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GenArgs,
    #[arg(long, value_name = "UINT64", default_value_t = 0)]
    seed: u64,
    /// Output table format.
    #[arg(long, value_name = "FORMAT", default_value = "csv")]
    format: TableFormat,
    /// Output path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    figure: Figure,
    /// Directory for the output tables (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, value_name = "UINT64", default_value_t = 1)]
    seed: u64,
    /// Fresh datasets per cell of the convergence table.
    #[arg(long, value_name = "COUNT", default_value_t = 20)]
    instances: usize,
    /// Comma-separated sample sizes for the convergence table.
    #[arg(long, value_name = "LIST")]
    sizes: Option<String>,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<twonn::Error> for Failure {
    fn from(e: twonn::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn write_failed(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("cannot write {}: {e}", path.display()))
}

fn stdout_failed(e: std::io::Error) -> Failure {
    Failure::Data(format!("cannot write output: {e}"))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{line}");
            return 1;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, stdout, stderr)),
            Err(e) => Err(Failure::Data(format!("cannot start worker threads: {e}"))),
        },
        None => dispatch(cli.command, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
    }
}

fn dispatch(
    command: Command,
    stdout: &mut (dyn Write + Send),
    stderr: &mut (dyn Write + Send),
) -> Result<(), Failure> {
    match command {
        Command::Estimate(a) => cmd_estimate(&a, stdout, stderr),
        Command::Scan(a) => cmd_scan(&a, stdout, stderr),
        Command::Generate(a) => cmd_generate(&a, stdout),
        Command::Benchmark(a) => cmd_benchmark(&a, stdout),
    }
}

/// Loaded input: coordinates with their metric, or a distance matrix.
enum Data {
    Points(PointSet, Metric),
    Matrix(DistanceMatrix),
}

impl Data {
    fn neighbors(&self) -> twonn::Result<Vec<NeighborInfo>> {
        match self {
            Data::Points(ps, metric) => two_nearest(ps, metric, Search::Auto),
            Data::Matrix(dm) => two_nearest_from_matrix(dm),
        }
    }

    fn scan_input(&self) -> ScanInput<'_> {
        match self {
            Data::Points(points, metric) => ScanInput::Points { points, metric },
            Data::Matrix(dm) => ScanInput::Matrix(dm),
        }
    }

    fn n(&self) -> usize {
        match self {
            Data::Points(ps, _) => ps.n(),
            Data::Matrix(dm) => dm.n(),
        }
    }
}

fn coordinate_metric(
    arg: Option<&MetricArg>,
    dim: usize,
    fallback: Metric,
) -> Result<Metric, Failure> {
    match arg {
        None => Ok(fallback),
        Some(MetricArg::Euclidean) => Ok(Metric::Euclidean),
        Some(MetricArg::Pbc(l)) => {
            let lengths = if l.len() == 1 {
                vec![l[0]; dim]
            } else {
                l.clone()
            };
            Ok(Metric::periodic(lengths)?)
        }
        Some(MetricArg::Precomputed) => {
            Err(Failure::Usage("--metric precomputed needs --matrix".into()))
        }
    }
}

fn load(src: &SourceArgs, stderr: &mut dyn Write) -> Result<Data, Failure> {
    let spec = src.generator.spec(src.seed)?;
    let sources = usize::from(src.input.is_some())
        + usize::from(src.matrix.is_some())
        + usize::from(spec.is_some());
    if sources != 1 {
        return Err(Failure::Usage(
            "give exactly one of --input, --matrix or --kind".into(),
        ));
    }
    let data = if let Some(path) = &src.matrix {
        if matches!(src.metric, Some(MetricArg::Euclidean | MetricArg::Pbc(_))) {
            return Err(Failure::Usage(
                "--matrix only works with --metric precomputed".into(),
            ));
        }
        let format = src.format.unwrap_or_else(|| TableFormat::from_path(path));
        Data::Matrix(io::load_distance_matrix(path, format)?)
    } else if let Some(path) = &src.input {
        let format = src.format.unwrap_or_else(|| TableFormat::from_path(path));
        let ps = io::load_points(path, format)?;
        let metric = coordinate_metric(src.metric.as_ref(), ps.dim(), Metric::Euclidean)?;
        Data::Points(ps, metric)
    } else {
        let g = generate(&spec.expect("one source"))?;
        let metric = coordinate_metric(src.metric.as_ref(), g.points.dim(), g.metric)?;
        Data::Points(g.points, metric)
    };
    if !src.drop_duplicates {
        return Ok(data);
    }
    let before = data.n();
    let (data, kept) = match data {
        Data::Points(ps, metric) => {
            let (ps, kept) = ps.without_duplicates()?;
            (Data::Points(ps, metric), kept)
        }
        Data::Matrix(dm) => {
            let (dm, kept) = dm.without_duplicates()?;
            (Data::Matrix(dm), kept)
        }
    };
    let dropped = before - kept.len();
    if dropped > 0 {
        let _ = writeln!(stderr, "dropped {dropped} duplicate points");
    }
    Ok(data)
}

#[derive(Serialize)]
struct EstimateJson {
    d_hat: f64,
    method: Method,
    n_total: usize,
    n_used: usize,
    discard_fraction: f64,
    rms_residual: f64,
}

fn cmd_estimate(
    a: &EstimateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let data = load(&a.source, stderr)?;
    let ni = data.neighbors()?;
    let est = estimate_id(&ni, &a.estimator.options())?;
    if let Some(path) = &a.export_fit {
        let fit = FitExport::from_estimate(empirical_cdf(&compute_mu(&ni)), est.n_used, est.d_hat);
        io::export_fit(path, &fit)?;
    }
    let json = EstimateJson {
        d_hat: est.d_hat,
        method: est.method,
        n_total: est.n_total,
        n_used: est.n_used,
        discard_fraction: est.discard_fraction,
        rms_residual: est.rms_residual,
    };
    let text = serde_json::to_string(&json).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(stdout, "{text}").map_err(stdout_failed)
}

fn parse_list<T: FromStr>(flag: &str, s: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Failure::Usage(format!("{flag}: bad entry `{v}`")))
        })
        .collect()
}

fn cmd_scan(a: &ScanArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let data = load(&a.source, stderr)?;
    let sizes = if a.blocks == "auto" {
        default_block_sizes(data.n(), a.min_block)
    } else {
        let mut sizes: Vec<usize> = parse_list("--blocks", &a.blocks)?;
        sizes.sort_unstable();
        sizes
    };
    let curve = scan(
        data.scan_input(),
        &sizes,
        &a.estimator.options(),
        a.source.seed,
    )?;
    match &a.output {
        Some(path) => io::save_scan(path, &curve)?,
        None => io::write_scan(&mut *stdout, &curve).map_err(stdout_failed)?,
    }
    if let Some(path) = &a.plateau {
        let report = detect_plateau(&curve, a.rel_tol, a.min_points);
        let file = File::create(path).map_err(write_failed(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &report).map_err(|e| Failure::Data(e.to_string()))?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(write_failed(path))?;
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let spec = a
        .generator
        .spec(a.seed)?
        .ok_or_else(|| Failure::Usage("generate needs --kind".into()))?;
    let g = generate(&spec)?;
    match &a.output {
        Some(path) => io::save_points(path, &g.points, a.format)?,
        None => io::write_points(&mut *stdout, &g.points, a.format).map_err(stdout_failed)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct PanelJson {
    kind: GeneratorKind,
    d: u32,
    d_hat: f64,
    n_used: usize,
    file: PathBuf,
}

#[derive(Serialize)]
struct ScanJson {
    kind: GeneratorKind,
    noise_sigma: f64,
    plateau: twonn::PlateauReport,
    file: PathBuf,
}

fn print_json<T: Serialize>(stdout: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(stdout, "{text}").map_err(stdout_failed)
}

fn cmd_benchmark(a: &BenchmarkArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    std::fs::create_dir_all(&a.out).map_err(write_failed(&a.out))?;
    let opts = a.estimator.options();
    match a.figure {
        Figure::Fig1 => {
            let panels = reproduce::fig1(a.seed, &opts)?;
            let files = reproduce::save_panels(&a.out, "fig1", &panels)?;
            let summary: Vec<PanelJson> = panels
                .iter()
                .zip(files)
                .map(|(p, file)| PanelJson {
                    kind: p.spec.kind,
                    d: p.spec.d,
                    d_hat: p.estimate.d_hat,
                    n_used: p.estimate.n_used,
                    file,
                })
                .collect();
            print_json(stdout, &summary)
        }
        Figure::Fig2 => {
            if a.instances == 0 {
                return Err(Failure::Usage("--instances must be at least 1".into()));
            }
            let sizes = match &a.sizes {
                Some(s) => parse_list("--sizes", s)?,
                None => reproduce::FIG2_SIZES.to_vec(),
            };
            let rows = reproduce::fig2(
                &reproduce::FIG2_KINDS,
                &reproduce::FIG2_DIMS,
                &sizes,
                a.instances,
                a.seed,
                &opts,
            )?;
            let path = a.out.join("fig2_convergence.tsv");
            let file = File::create(&path).map_err(write_failed(&path))?;
            reproduce::write_convergence(BufWriter::new(file), &rows)
                .map_err(write_failed(&path))?;
            print_json(stdout, &rows)
        }
        Figure::Fig3 => {
            let curves = reproduce::fig3(a.seed, &opts)?;
            let mut summary = Vec::new();
            for (spec, curve) in &curves {
                let file = a.out.join(reproduce::scan_file_name("fig3", spec));
                io::save_scan(&file, curve)?;
                let plateau = detect_plateau(curve, 0.05, 3);
                summary.push(ScanJson {
                    kind: spec.kind,
                    noise_sigma: spec.noise_sigma,
                    plateau,
                    file,
                });
            }
            print_json(stdout, &summary)
        }
    }
}
