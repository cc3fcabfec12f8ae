//! Command-line front end: argument parsing, configuration layering,
//! command dispatch and atomic output.

pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use laakso::analytic::{required_depth, theorem_spectrum};
use laakso::compare::{match_spectra, multiplicity_histogram, undo_dispersion, Histogram};
use laakso::eigen::{solve_dense_with, solve_lanczos_with, DenseOptions, EigenResult, LanczosOptions};
use laakso::graph::build_graph_with_cap;
use laakso::{assemble_laplacian, symmetrize, Form, LaaksoGraph, MatrixFreeLaplacian};

use config::{parse_j_list, Coloring, RunConfig, Settings, MAX_VERTICES_ENV};
use plot::PlotOptions;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] laakso::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "laakso", version, about = "Spectra of quantum-graph approximations of Laakso spaces")]
pub struct Cli {
    /// key = value file supplying defaults for any flag
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for matrix-vector products
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

/// Parsed `--j` value; a newtype so that clap treats the list as one value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JList(pub Vec<u64>);

fn parse_j_arg(text: &str) -> Result<JList, String> {
    parse_j_list(text).map(JList)
}

#[derive(Debug, Args, Default, Clone)]
pub struct Common {
    /// j sequence, comma separated; a single value repeats at every level
    #[arg(long, value_parser = parse_j_arg)]
    pub j: Option<JList>,

    /// Output file (stdout when absent)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct Depth {
    /// Approximation depth n
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SolverArgs {
    /// Number of lowest eigenpairs
    #[arg(long)]
    pub num_eigs: Option<usize>,

    /// Use the dense solver regardless of size
    #[arg(long, conflicts_with = "matrix_free")]
    pub dense: bool,

    /// Use the iterative solver on an operator that stores no matrix
    #[arg(long)]
    pub matrix_free: bool,

    /// Largest dimension solved densely when neither --dense nor --matrix-free is given
    #[arg(long)]
    pub dense_threshold: Option<usize>,

    /// Residual tolerance relative to the spectral bound
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphEmit {
    Incidence,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Coordinate,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build F_n and print its incidence matrix or JSON description
    Graph {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depth: Depth,
        #[arg(long, value_enum, default_value = "incidence")]
        emit: GraphEmit,
    },
    /// Export the Laplacian of F_n
    Laplacian {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depth: Depth,
        /// Export the symmetric conjugate instead of the raw operator
        #[arg(long)]
        symmetrized: bool,
        #[arg(long, value_enum, default_value = "coordinate")]
        format: MatrixFormat,
    },
    /// Lowest eigenvalues of F_n as CSV (index, lambda, residual)
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depth: Depth,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Exact spectrum of the limit space up to a cutoff
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_max: Option<f64>,
        /// Deepest level used; defaults to the smallest sufficient level
        #[arg(long)]
        max_level: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: SpectrumFormat,
    },
    /// Match computed eigenvalues of F_n against the exact spectrum
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depth: Depth,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        lambda_max: Option<f64>,
    },
    /// SVG plots
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Debug, Args, Default, Clone)]
pub struct PlotArgs {
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, value_enum)]
    pub coloring: Option<Coloring>,
}

#[derive(Debug, Subcommand)]
pub enum PlotKind {
    /// One eigenfunction drawn over the sheets of F_n
    Eigenfunction {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depth: Depth,
        #[command(flatten)]
        solver: SolverArgs,
        /// Index of the eigenpair (0 is the lowest)
        #[arg(long, default_value_t = 1)]
        index: usize,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Multiplicity histogram, exact (with --lambda-max) or numeric (with --n)
    Histogram {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "n")]
        lambda_max: Option<f64>,
        #[command(flatten)]
        depth: Depth,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        plot: PlotArgs,
    },
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Errors are reported on stderr.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn settings(common: &Common, depth: Option<&Depth>, solver: Option<&SolverArgs>) -> Settings {
    Settings {
        j: common.j.clone().map(|l| l.0),
        out: common.out.clone(),
        n: depth.and_then(|d| d.n),
        num_eigs: solver.and_then(|s| s.num_eigs),
        dense_threshold: solver.and_then(|s| s.dense_threshold),
        tolerance: solver.and_then(|s| s.tolerance),
        ..Default::default()
    }
}

fn with_plot(s: Settings, p: &PlotArgs) -> Settings {
    Settings { width: p.width, height: p.height, coloring: p.coloring, ..s }
}

fn resolve(cli_threads: Option<usize>, config: Option<&Path>, flags: Settings) -> Result<RunConfig, CliError> {
    let flags = Settings { threads: cli_threads, ..flags };
    let merged = match config {
        Some(path) => flags.or(Settings::from_file(path)?),
        None => flags,
    };
    let cfg = RunConfig::resolve(merged, std::env::var(MAX_VERTICES_ENV).ok())?;
    if let Some(t) = cfg.threads {
        // the global pool can only be set once per process; later calls keep the first
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    let threads = cli.threads;
    match cli.command {
        Command::Graph { common, depth, emit } => {
            let cfg = resolve(threads, config, settings(&common, Some(&depth), None))?;
            let g = graph(&cfg)?;
            let text = match emit {
                GraphEmit::Incidence => g.incidence_matrix().to_text(),
                GraphEmit::Json => g.to_json() + "\n",
            };
            emit_output(cfg.out.as_deref(), &text)
        }
        Command::Laplacian { common, depth, symmetrized, format } => {
            let cfg = resolve(threads, config, settings(&common, Some(&depth), None))?;
            let g = graph(&cfg)?;
            let mut m = assemble_laplacian(&g);
            if symmetrized {
                m = symmetrize(&m);
            }
            let text = match format {
                MatrixFormat::Coordinate => m.to_coordinate_text(),
                MatrixFormat::Dense => m.to_dense_text()?,
            };
            emit_output(cfg.out.as_deref(), &text)
        }
        Command::Solve { common, depth, solver } => {
            let cfg = resolve(threads, config, settings(&common, Some(&depth), Some(&solver)))?;
            let g = graph(&cfg)?;
            let r = solve(&g, &cfg, &solver)?;
            emit_output(cfg.out.as_deref(), &r.to_csv())
        }
        Command::Spectrum { common, lambda_max, max_level, format } => {
            let flags = Settings { lambda_max, max_level, ..settings(&common, None, None) };
            let cfg = resolve(threads, config, flags)?;
            let lambda_max =
                cfg.lambda_max.ok_or_else(|| CliError::Usage("--lambda-max is required".into()))?;
            let level = match cfg.max_level {
                Some(l) => l,
                None => required_depth(&cfg.j, lambda_max)?,
            };
            let table = theorem_spectrum(&cfg.j, level, lambda_max)?;
            let text = match format {
                SpectrumFormat::Json => table.to_json() + "\n",
                SpectrumFormat::Csv => table.to_csv(),
            };
            emit_output(cfg.out.as_deref(), &text)
        }
        Command::Compare { common, depth, solver, lambda_max } => {
            let flags = Settings { lambda_max, ..settings(&common, Some(&depth), Some(&solver)) };
            let cfg = resolve(threads, config, flags)?;
            let g = graph(&cfg)?;
            let r = solve(&g, &cfg, &solver)?;
            let h = g.h();
            let lambda_max = cfg.lambda_max.unwrap_or_else(|| undo_dispersion(0.4 / (h * h), h));
            let table = theorem_spectrum(&cfg.j, required_depth(&cfg.j, lambda_max)?, lambda_max)?;
            let report = match_spectra(&r, &table, h)?;
            print!("{}", report.to_table());
            emit_output(cfg.out.as_deref(), &(report.to_json() + "\n"))
        }
        Command::Plot { kind: PlotKind::Eigenfunction { common, depth, solver, index, plot } } => {
            let flags = with_plot(settings(&common, Some(&depth), Some(&solver)), &plot);
            let mut cfg = resolve(threads, config, flags)?;
            cfg.num_eigs = cfg.num_eigs.max(index + 1);
            let g = graph(&cfg)?;
            let r = solve(&g, &cfg, &solver)?;
            if index >= r.len() {
                return Err(CliError::Usage(format!("--index {index} exceeds the {} computed eigenpairs", r.len())));
            }
            let weights: Vec<f64> = (0..g.vertex_count()).map(|u| g.degree(u) as f64).collect();
            let raw = r.raw_eigenvector(index, &weights);
            let svg = plot::eigenfunction_svg(&g, &raw, r.eigenvalues[index], &plot_options(&cfg))?;
            emit_output(cfg.out.as_deref(), &svg)
        }
        Command::Plot { kind: PlotKind::Histogram { common, lambda_max, depth, solver, plot } } => {
            let flags = with_plot(Settings { lambda_max, ..settings(&common, Some(&depth), Some(&solver)) }, &plot);
            let cfg = resolve(threads, config, flags)?;
            let (hist, title) = match (cfg.lambda_max, depth.n.is_some() || cfg.n > 0) {
                (Some(l), false) => {
                    let table = theorem_spectrum(&cfg.j, required_depth(&cfg.j, l)?, l)?;
                    (Histogram::from_spectrum(&table), format!("Exact multiplicities, λ ≤ {l:.2}"))
                }
                (None, true) => {
                    let g = graph(&cfg)?;
                    let r = solve(&g, &cfg, &solver)?;
                    (multiplicity_histogram(&r, 1e-6), format!("Multiplicities of the lowest {} eigenvalues", r.len()))
                }
                _ => return Err(CliError::Usage("plot histogram needs exactly one of --lambda-max or --n".into())),
            };
            let svg = plot::histogram_svg(&hist, &title, &plot_options(&cfg))?;
            emit_output(cfg.out.as_deref(), &svg)
        }
    }
}

fn plot_options(cfg: &RunConfig) -> PlotOptions {
    PlotOptions { width: cfg.width, height: cfg.height, coloring: cfg.coloring }
}

fn graph(cfg: &RunConfig) -> Result<LaaksoGraph, CliError> {
    Ok(build_graph_with_cap(&cfg.j, cfg.n, cfg.max_vertices)?)
}

fn solve(g: &LaaksoGraph, cfg: &RunConfig, args: &SolverArgs) -> Result<EigenResult, CliError> {
    let dim = g.vertex_count();
    let dense = args.dense || (!args.matrix_free && dim <= cfg.dense_threshold);
    if dense {
        let opts = DenseOptions { max_dim: dim.max(cfg.dense_threshold), ..Default::default() };
        let mut r = solve_dense_with(&symmetrize(&assemble_laplacian(g)), opts)?;
        let k = cfg.num_eigs.min(dim);
        r.eigenvalues.truncate(k);
        r.eigenvectors.truncate(k);
        r.residuals.truncate(k);
        r.converged.truncate(k);
        return Ok(r);
    }
    if cfg.num_eigs >= dim {
        return Err(CliError::Usage(format!(
            "--num-eigs {} must be below the dimension {dim} for the iterative solver; use --dense",
            cfg.num_eigs
        )));
    }
    let opts = LanczosOptions { tolerance: cfg.tolerance, ..Default::default() };
    let r = if args.matrix_free {
        solve_lanczos_with(&MatrixFreeLaplacian::new(g, Form::Symmetrized), cfg.num_eigs, opts)?
    } else {
        solve_lanczos_with(&symmetrize(&assemble_laplacian(g)), cfg.num_eigs, opts)?
    };
    Ok(r)
}

/// Writes to `path` through a temporary file in the same directory and a
/// rename, or to stdout when no path is given.
pub fn emit_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
        Some(path) => write_atomic(path, text.as_bytes()),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
