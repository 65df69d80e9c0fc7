//! `atomex` command-line front end.
//!
//! Every command writes CSV (header row, LF endings, 17 significant digits)
//! to `--out`, to `$ATOMEX_OUT_DIR/<default name>` when only the directory
//! is configured, or to stdout. Exit codes: 0 success, 2 usage, 3 numeric
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::asymptotics::{self, AsymptoticCoefficients};
use crate::dynamics::{self, Field, Propagator};
use crate::error::Error;
use crate::fock_single;
use crate::io;
use crate::optimizer::{self, OptimizationResult, ShapeFamily};
use crate::pulses::{cavity_filter_output, LossModel, PulseShape};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ATOMEX_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "atomex", version, about = "Excitation of a two-level atom by shaped few- and many-photon pulses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time trace of the excitation probability for one drive.
    Trace(TraceArgs),
    /// Optimize the pulse parameters for maximal peak excitation.
    Optimize(OptimizeArgs),
    /// Regenerate the data behind one of the four result figures.
    Figure(FigureArgs),
    /// First-order large-photon-number coefficients.
    Asymptote(AsymptoteArgs),
    /// Asymptotic versus integrated shortfall on a photon-number grid.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Square,
    Gaussian,
    #[value(name = "decayingexp")]
    DecayingExp,
    #[value(name = "risingexp")]
    RisingExp,
    /// Emission of an excited atom inside a single-sided cavity.
    Cavity,
    /// Gaussian reshaped by a cavity-with-atom filter.
    Filtered,
    /// No drive.
    None,
    /// Tabulated `t,f` samples read from `--file`.
    File,
}

impl ShapeArg {
    fn family(self) -> Option<ShapeFamily> {
        match self {
            ShapeArg::Square => Some(ShapeFamily::Square),
            ShapeArg::Gaussian => Some(ShapeFamily::Gaussian),
            ShapeArg::DecayingExp => Some(ShapeFamily::DecayingExp),
            ShapeArg::RisingExp => Some(ShapeFamily::RisingExp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Fock1,
    Coherent,
    Fock,
}

#[derive(Debug, Clone, Args)]
pub struct ShapeOpts {
    #[arg(long, value_enum, default_value = "square")]
    pub shape: ShapeArg,
    /// Pulse duration parameter.
    #[arg(long = "T")]
    pub duration: Option<f64>,
    /// Atom–cavity coupling.
    #[arg(long)]
    pub g: Option<f64>,
    /// Cavity decay rate.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// End point of a rising exponential.
    #[arg(long, default_value_t = 0.0)]
    pub anchor: f64,
    /// CSV file with a `t,f` header for `--shape file`.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldOpts {
    #[arg(long, value_enum, default_value = "fock1")]
    pub field: FieldArg,
    /// Mean photon number of a coherent state.
    #[arg(long, default_value_t = 1.0)]
    pub nbar: f64,
    /// Photon number of a Fock state.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
}

impl FieldOpts {
    fn field(&self) -> Field {
        match self.field {
            FieldArg::Fock1 => Field::Fock1,
            FieldArg::Coherent => Field::Coherent { nbar: self.nbar },
            FieldArg::Fock => Field::Fock { photons: self.n },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LossOpts {
    /// Decay rate into the pulse mode.
    #[arg(long, default_value_t = 1.0)]
    pub gp: f64,
    /// Decay rate into unobserved modes.
    #[arg(long, default_value_t = 0.0)]
    pub gb: f64,
}

impl LossOpts {
    fn loss(&self) -> Result<LossModel, Error> {
        LossModel::new(self.gp, self.gb)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutOpts {
    /// Output CSV path (relative paths resolve against $ATOMEX_OUT_DIR).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub shape: ShapeOpts,
    #[command(flatten)]
    pub field: FieldOpts,
    #[command(flatten)]
    pub loss: LossOpts,
    /// Number of output rows.
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub shape: ShapeOpts,
    #[command(flatten)]
    pub field: FieldOpts,
    #[command(flatten)]
    pub loss: LossOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number, 1–4.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    pub id: u8,
    /// Grid size (default 21 for figures 1–2, 13 for 3–4).
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub loss: LossOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct AsymptoteArgs {
    /// One family, or all four when omitted.
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    #[arg(long, value_enum, default_value = "coherent")]
    pub field: FieldArg,
    #[command(flatten)]
    pub loss: LossOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub shape: ShapeArg,
    #[arg(long, value_enum, default_value = "coherent")]
    pub field: FieldArg,
    /// Comma-separated n̄ (coherent) or N (Fock) values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Keep this duration fixed instead of optimizing it.
    #[arg(long = "T")]
    pub duration: Option<f64>,
    #[command(flatten)]
    pub loss: LossOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "invalid arguments: {msg}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("atomex: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `atomex help` for usage");
            }
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Trace(a) => cmd_trace(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Asymptote(a) => cmd_asymptote(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Where a command's CSV goes; `None` means stdout.
fn output_path(out: &OutOpts, default_name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match (&out.out, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(default_name)),
        (None, None) => None,
    }
}

/// Runs `write` against the selected destination. Returns whether stdout
/// was used.
fn emit<F>(out: &OutOpts, default_name: &str, write: F) -> CliResult<bool>
where
    F: FnOnce(&mut dyn Write) -> crate::Result<()>,
{
    match output_path(out, default_name) {
        Some(path) => {
            let mut f = io::create_file(&path)?;
            write(&mut f)?;
            f.flush().map_err(Error::from)?;
            Ok(false)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush().map_err(Error::from)?;
            Ok(true)
        }
    }
}

fn require(v: Option<f64>, flag: &str, shape: &str) -> CliResult<f64> {
    match v {
        Some(x) => Ok(x),
        None => usage(format!("--shape {shape} requires {flag}")),
    }
}

/// Pulse described by the shape flags; `None` for `--shape none`.
fn build_shape(o: &ShapeOpts) -> CliResult<Option<PulseShape>> {
    let shape = match o.shape {
        ShapeArg::Square => PulseShape::square(require(o.duration, "--T", "square")?)?,
        ShapeArg::Gaussian => PulseShape::gaussian(require(o.duration, "--T", "gaussian")?)?,
        ShapeArg::DecayingExp => PulseShape::decaying_exp(require(o.duration, "--T", "decayingexp")?)?,
        ShapeArg::RisingExp => PulseShape::rising_exp(require(o.duration, "--T", "risingexp")?, o.anchor)?,
        ShapeArg::Cavity => {
            PulseShape::atom_cavity_decay(require(o.g, "--g", "cavity")?, require(o.kappa, "--kappa", "cavity")?)?
        }
        ShapeArg::Filtered => {
            let inner = PulseShape::gaussian(require(o.duration, "--T", "filtered")?)?;
            cavity_filter_output(&inner, require(o.g, "--g", "filtered")?, require(o.kappa, "--kappa", "filtered")?)?
        }
        ShapeArg::None => return Ok(None),
        ShapeArg::File => match &o.file {
            Some(path) => io::read_tabulated_file(path)?,
            None => return usage("--shape file requires --file"),
        },
    };
    Ok(Some(shape))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

fn cmd_trace(a: &TraceArgs) -> CliResult<()> {
    if a.points < 2 {
        return usage("--points must be at least 2");
    }
    if !(a.rtol > 0.0 && a.atol > 0.0) {
        return usage("--rtol and --atol must be positive");
    }
    let loss = a.loss.loss()?;
    let field = a.field.field();
    field.validate()?;
    let shape = build_shape(&a.shape)?;
    let (t0, t1) = match &shape {
        Some(s) => s.integration_window(),
        None => (0.0, 10.0 / loss.gamma_total()),
    };
    let grid = linspace(t0, t1, a.points);
    match (&shape, field) {
        (Some(s), Field::Fock1) => {
            let res = fock_single::pe_trace_fock1(s, &loss, &grid)?;
            emit(&a.out, "trace.csv", |w| io::write_fock1(w, &res))?;
        }
        (Some(s), _) => {
            let trace = Propagator::new(s, loss, field)?.with_tolerances(a.rtol, a.atol).trace(&grid, field)?;
            emit(&a.out, "trace.csv", |w| io::write_trace(w, &trace))?;
        }
        (None, _) => {
            let trace = dynamics::integrate_free(&loss, field, &grid)?;
            emit(&a.out, "trace.csv", |w| io::write_trace(w, &trace))?;
        }
    }
    Ok(())
}

fn single_photon_only(field: Field, what: &str) -> CliResult<()> {
    if field == Field::Fock1 {
        Ok(())
    } else {
        usage(format!("{what} optimization is only available for --field fock1"))
    }
}

fn cmd_optimize(a: &OptimizeArgs) -> CliResult<()> {
    let loss = a.loss.loss()?;
    let field = a.field.field();
    field.validate()?;
    let res: OptimizationResult = match a.shape.shape {
        ShapeArg::Cavity => {
            single_photon_only(field, "cavity")?;
            optimizer::optimize_cavity_full(&loss)?
        }
        ShapeArg::Filtered => {
            single_photon_only(field, "filtered-pulse")?;
            optimizer::optimize_filtered_gaussian(&loss)?
        }
        other => match other.family() {
            Some(family) => optimizer::optimize_duration(family, &loss, field)?,
            None => return usage("--shape must name an optimizable pulse family"),
        },
    };
    let label = format!("{:?} pulse, {:?}", a.shape.shape, field).to_lowercase();
    let to_stdout = emit(&a.out, "optimize.csv", |w| io::write_optimization(w, &res))?;
    let summary = io::optimization_summary(&label, &res);
    if to_stdout {
        eprint!("{summary}");
    } else {
        print!("{summary}");
    }
    Ok(())
}

fn ratio_loss(base: &LossModel, ratio: f64) -> crate::Result<LossModel> {
    // keep Γ_P, add the bath rate that yields the requested Γ_P/Γ
    LossModel::new(base.gamma_p(), base.gamma_p() * (1.0 / ratio - 1.0))
}

fn cmd_figure(a: &FigureArgs) -> CliResult<()> {
    let base = a.loss.loss()?;
    let name = format!("figure{}.csv", a.id);
    match a.id {
        1 | 2 => {
            let n = a.points.unwrap_or(21);
            if n < 1 {
                return usage("--points must be at least 1");
            }
            let ratios = linspace(0.5, 1.0, n);
            let (header, rows) = if a.id == 1 { figure1(&base, &ratios)? } else { figure2(&base, &ratios)? };
            let mut columns = vec![ratios];
            columns.extend(rows);
            let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
            emit(&a.out, &name, |w| io::write_table(w, &header, &refs))?;
        }
        _ => {
            let n = a.points.unwrap_or(13);
            if n < 2 {
                return usage("--points must be at least 2");
            }
            let (header, columns) = if a.id == 3 { figure3(&base, n)? } else { figure4(&base, n)? };
            let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            emit(&a.out, &name, |w| io::write_table(w, &header, &refs))?;
        }
    }
    Ok(())
}

/// Evaluates `f` on every grid point in parallel and returns one column per
/// output slot, in grid order.
fn columns<F>(grid: &[f64], width: usize, f: F) -> CliResult<Vec<Vec<f64>>>
where
    F: Fn(f64) -> crate::Result<Vec<f64>> + Sync,
{
    let rows: Vec<Vec<f64>> = grid.par_iter().map(|&x| f(x)).collect::<crate::Result<_>>()?;
    Ok((0..width).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
}

fn figure1(base: &LossModel, ratios: &[f64]) -> CliResult<(Vec<&'static str>, Vec<Vec<f64>>)> {
    let header = vec!["coupling_ratio", "rising", "filtered", "square", "gaussian", "cavity", "decaying"];
    let cols = columns(ratios, 6, |r| {
        let loss = ratio_loss(base, r)?;
        let fam = |f| optimizer::optimize_duration(f, &loss, Field::Fock1).map(|o| o.pe_max);
        Ok(vec![
            fam(ShapeFamily::RisingExp)?,
            optimizer::optimize_filtered_gaussian(&loss)?.pe_max,
            fam(ShapeFamily::Square)?,
            fam(ShapeFamily::Gaussian)?,
            optimizer::optimize_cavity_full(&loss)?.pe_max,
            fam(ShapeFamily::DecayingExp)?,
        ])
    })?;
    Ok((header, cols))
}

fn figure2(base: &LossModel, ratios: &[f64]) -> CliResult<(Vec<&'static str>, Vec<Vec<f64>>)> {
    let header = vec!["coupling_ratio", "rising", "square", "gaussian", "decaying"];
    let families = [ShapeFamily::RisingExp, ShapeFamily::Square, ShapeFamily::Gaussian, ShapeFamily::DecayingExp];
    let cols = columns(ratios, 4, |r| {
        let loss = ratio_loss(base, r)?;
        families
            .iter()
            .map(|&f| optimizer::optimize_duration(f, &loss, Field::Coherent { nbar: 1.0 }).map(|o| o.pe_max))
            .collect()
    })?;
    Ok((header, cols))
}

const MANY_PHOTON_FAMILIES: [ShapeFamily; 4] =
    [ShapeFamily::RisingExp, ShapeFamily::Square, ShapeFamily::Gaussian, ShapeFamily::DecayingExp];

fn many_photon_header(x: &str) -> Vec<String> {
    let mut h = vec![x.to_string()];
    for f in MANY_PHOTON_FAMILIES {
        h.push(format!("{}_analytic", f.name()));
        h.push(format!("{}_ode", f.name()));
    }
    h
}

fn figure3(loss: &LossModel, n: usize) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let coeffs = coefficients(&MANY_PHOTON_FAMILIES, loss)?;
    let grid = logspace(1.0, 1e3, n);
    let mut cols = columns(&grid, 8, |nbar| {
        let mut row = Vec::with_capacity(8);
        for (f, c) in MANY_PHOTON_FAMILIES.iter().zip(&coeffs) {
            row.push(c.coherent_pe(nbar, loss));
            row.push(optimizer::optimize_duration(*f, loss, Field::Coherent { nbar })?.pe_max);
        }
        Ok(row)
    })?;
    cols.insert(0, grid);
    Ok((many_photon_header("nbar"), cols))
}

/// Distinct integers nearest to `n` log-spaced points in `[1, 1000]`.
fn photon_grid(n: usize) -> Vec<u32> {
    let mut g: Vec<u32> = logspace(1.0, 1e3, n).into_iter().map(|x| x.round() as u32).collect();
    g.dedup();
    g
}

fn figure4(loss: &LossModel, n: usize) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let coeffs = coefficients(&MANY_PHOTON_FAMILIES, loss)?;
    let grid: Vec<f64> = photon_grid(n).into_iter().map(f64::from).collect();
    let mut cols = columns(&grid, 8, |x| {
        let photons = x as u32;
        let mut row = Vec::with_capacity(8);
        for (f, c) in MANY_PHOTON_FAMILIES.iter().zip(&coeffs) {
            row.push(c.fock_pe(photons, loss));
            row.push(optimizer::optimize_duration(*f, loss, Field::Fock { photons })?.pe_max);
        }
        Ok(row)
    })?;
    cols.insert(0, grid);
    Ok((many_photon_header("photons"), cols))
}

fn coefficients(families: &[ShapeFamily], loss: &LossModel) -> CliResult<Vec<AsymptoticCoefficients>> {
    // the coefficients do not depend on the photon number
    Ok(families
        .par_iter()
        .map(|&f| asymptotics::optimize_deficit(f, 1.0, loss))
        .collect::<crate::Result<_>>()?)
}

fn families_for(shape: Option<ShapeArg>) -> CliResult<Vec<ShapeFamily>> {
    match shape {
        None => Ok(ShapeFamily::ALL.to_vec()),
        Some(s) => match s.family() {
            Some(f) => Ok(vec![f]),
            None => usage("asymptotic coefficients exist only for square, gaussian, decayingexp and risingexp"),
        },
    }
}

fn cmd_asymptote(a: &AsymptoteArgs) -> CliResult<()> {
    let loss = a.loss.loss()?;
    let rows = coefficients(&families_for(a.shape)?, &loss)?;
    let fock = a.field != FieldArg::Coherent;
    emit(&a.out, "asymptote.csv", |w| io::write_coefficients(w, &rows, fock))?;
    Ok(())
}

/// Published power-law fit of the Gaussian Fock-state shortfall, `0.269 N^{−0.973}`.
pub fn fit_deficit(photons: f64) -> f64 {
    0.269 * photons.powf(-0.973)
}

fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let loss = a.loss.loss()?;
    let family = match a.shape.family() {
        Some(f) => f,
        None => return usage("compare supports square, gaussian, decayingexp and risingexp"),
    };
    let fock = match a.field {
        FieldArg::Coherent => false,
        FieldArg::Fock => true,
        FieldArg::Fock1 => return usage("compare needs --field coherent or --field fock"),
    };
    let values = a.values.clone().unwrap_or_else(|| {
        if fock {
            vec![10.0, 20.0, 40.0, 80.0]
        } else {
            logspace(10.0, 1e3, 9)
        }
    });
    if values.is_empty() || values.iter().any(|&v| !(v >= 1.0 && v.is_finite())) {
        return usage("--values must be numbers >= 1");
    }
    if fock && values.iter().any(|v| v.fract() != 0.0) {
        return usage("Fock photon numbers must be integers");
    }
    let fixed = match a.duration {
        Some(t) => Some(family.build(t)?),
        None => None,
    };
    let coeffs = if fixed.is_none() { Some(asymptotics::optimize_deficit(family, 1.0, &loss)?) } else { None };
    let with_fit = fock && family == ShapeFamily::Gaussian && fixed.is_none() && loss.gamma_b() == 0.0;

    let width = if with_fit { 4 } else { 3 };
    let cols = columns(&values, width, |x| {
        let field = if fock { Field::Fock { photons: x as u32 } } else { Field::Coherent { nbar: x } };
        let (analytic, ode) = match &fixed {
            Some(shape) => {
                // θ = π shortfall at this duration; Fock states gain π²/16N at zeroth order
                let mut d = asymptotics::deficit_integral(shape, x, &loss)?;
                if fock {
                    d -= std::f64::consts::PI.powi(2) / (16.0 * x);
                }
                (d, 1.0 - optimizer::peak_excitation(shape, &loss, field)?.pe_max)
            }
            None => {
                let c = coeffs.as_ref().expect("set when not fixed");
                let pe = if fock { c.fock_pe(x as u32, &loss) } else { c.coherent_pe(x, &loss) };
                (1.0 - pe, 1.0 - optimizer::optimize_duration(family, &loss, field)?.pe_max)
            }
        };
        let mut row = vec![analytic, ode, (analytic - ode).abs() / ode.abs()];
        if with_fit {
            row.push(fit_deficit(x));
        }
        Ok(row)
    })?;

    let mut header = vec![if fock { "photons" } else { "nbar" }, "analytic_deficit", "ode_deficit", "relative_gap"];
    if with_fit {
        header.push("fit_deficit");
    }
    let mut all = vec![values];
    all.extend(cols);
    let refs: Vec<&[f64]> = all.iter().map(|c| c.as_slice()).collect();
    emit(&a.out, "compare.csv", |w| io::write_table(w, &header, &refs))?;
    Ok(())
}
