//! Command-line front end: `synth`, `fit`, `compare` and `roots-study`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::run_sparsity_study_with;
use crate::frf::{FrequencyGrid, FrfSet, ModalModel, inject_noise, synthesize_frf};
use crate::io::{self, FrfFormat};
use crate::lscf::assemble_normal_cache;
use crate::modal::{compare_modes, curve_fit_mse, estimate_mode_shapes, resynthesize};
use crate::stabilization::{
    DEFAULT_LAMBDA_RATIO, DEFAULT_MIN_STREAK, DEFAULT_THRESHOLD, Method, SweepOptions, extract_modes, sweep,
};
use crate::svg;

pub const THREADS_ENV: &str = "MODALSPARSE_THREADS";
const DEFAULT_ORDER: usize = 30;

#[derive(Parser, Debug)]
#[command(name = "modalsparse", version, about = "Sparse LSCF modal parameter estimation")]
pub struct Cli {
    /// TOML file with defaults for the fit and study options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize clean and noisy FRFs from a modal model.
    Synth(SynthArgs),
    /// Build stability diagrams and extract modes from an FRF file.
    Fit(FitArgs),
    /// Compare two modes files: frequency/damping errors and MAC.
    Compare(CompareArgs),
    /// Root placement study for random sparse polynomials.
    RootsStudy(RootsStudyArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Modal model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub f_start: f64,
    #[arg(long, default_value_t = 3000.0)]
    pub f_stop: f64,
    #[arg(long, default_value_t = 2048)]
    pub lines: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Conventional,
    Omp,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Conventional => vec![Method::Conventional],
            MethodChoice::Omp => vec![Method::Omp],
            MethodChoice::Both => vec![Method::Conventional, Method::Omp],
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// FRF file (CSV, or JSON by extension).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub order: Option<i64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_ratio: Option<f64>,
    #[arg(long)]
    pub min_streak: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Reference modes JSON.
    #[arg(long)]
    pub a: PathBuf,
    /// Modes JSON compared against the reference.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RootsStudyArgs {
    #[arg(long, default_value_t = 100)]
    pub degree: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 70, 30, 5])]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Real and imaginary parts are drawn from (-w, w).
    #[arg(long)]
    pub coeff_half_width: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Values read from `--config`; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub order: Option<i64>,
    pub method: Option<MethodChoice>,
    pub threshold: Option<f64>,
    pub lambda_ratio: Option<f64>,
    pub min_streak: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub coeff_half_width: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path)?;
        toml::from_str(&text).map_err(|e| {
            let loc = e.span().map_or_else(|| "file".to_string(), |s| format!("byte {}", s.start));
            Error::parse(path, loc, e.message().to_string())
        })
    }
}

/// Resolved options of a `fit` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: MethodChoice,
    pub n_p: usize,
    pub threshold_rel: f64,
    pub lambda_ratio: f64,
    pub min_streak: usize,
    pub seed: u64,
    pub input: PathBuf,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Flags override the config file, which overrides the defaults.
    pub fn resolve(args: &FitArgs, file: &ConfigFile) -> Result<Self> {
        let order = args.order.or(file.order).unwrap_or(DEFAULT_ORDER as i64);
        if order < 2 {
            return Err(Error::Invalid(format!("--order must be at least 2, got {order}")));
        }
        let cfg = RunConfig {
            method: args.method.or(file.method).unwrap_or(MethodChoice::Both),
            n_p: order as usize,
            threshold_rel: args.threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD),
            lambda_ratio: args.lambda_ratio.or(file.lambda_ratio).unwrap_or(DEFAULT_LAMBDA_RATIO),
            min_streak: args.min_streak.or(file.min_streak).unwrap_or(DEFAULT_MIN_STREAK),
            seed: file.seed.unwrap_or(0),
            input: args.input.clone(),
            out_dir: args.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from(".")),
        };
        if !(cfg.threshold_rel > 0.0) {
            return Err(Error::Invalid(format!("--threshold must be > 0, got {}", cfg.threshold_rel)));
        }
        if !(cfg.lambda_ratio > 0.0 && cfg.lambda_ratio < 1.0) {
            return Err(Error::Invalid(format!("--lambda-ratio must lie in (0, 1), got {}", cfg.lambda_ratio)));
        }
        if cfg.min_streak < 1 {
            return Err(Error::Invalid("--min-streak must be at least 1".into()));
        }
        Ok(cfg)
    }
}

/// Outcome of a subcommand: usage problems and runtime failures exit differently.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(msg) => Failure::Usage(msg),
            other => Failure::Run(other),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Run(e) => format!("error: {e}"),
        }
    }
}

fn thread_count() -> std::result::Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

/// Parses `args` and runs the selected subcommand; returns the process exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.message());
            f.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => ConfigFile::default(),
    };
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_count()? {
            builder = builder.num_threads(n);
        }
        builder.build().map_err(|e| Failure::Run(Error::Invalid(e.to_string())))?
    };
    pool.install(|| match &cli.command {
        Command::Synth(a) => cmd_synth(a, &file),
        Command::Fit(a) => cmd_fit(&RunConfig::resolve(a, &file)?),
        Command::Compare(a) => cmd_compare(a, &file),
        Command::RootsStudy(a) => cmd_roots_study(a, &file),
    })
    .map_err(Failure::from)
}

fn out_dir(flag: &Option<PathBuf>, file: &ConfigFile) -> PathBuf {
    flag.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."))
}

pub fn cmd_synth(args: &SynthArgs, file: &ConfigFile) -> Result<()> {
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.0);
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Invalid(format!("--alpha must be >= 0, got {alpha}")));
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let model: ModalModel = io::load_model(&args.model)?;
    let grid = FrequencyGrid::linspace(args.f_start, args.f_stop, args.lines)?;
    let clean = synthesize_frf(&model, &grid)?;
    let dir = out_dir(&args.out_dir, file);
    io::save_frf(&clean, &dir.join("frf_clean.csv"), FrfFormat::Csv)?;
    if alpha > 0.0 {
        let noisy = inject_noise(&clean, alpha, seed)?;
        io::save_frf(&noisy, &dir.join("frf_noisy.csv"), FrfFormat::Csv)?;
    }
    println!("wrote FRFs with {} lines to {}", grid.len(), dir.display());
    Ok(())
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let frf = io::load_frf(&cfg.input, FrfFormat::from_path(&cfg.input))?;
    let cache = assemble_normal_cache(&frf, cfg.n_p)?;
    let opts = SweepOptions {
        threshold_rel: cfg.threshold_rel,
        lambda_ratio: cfg.lambda_ratio,
    };
    let mut stats = Vec::new();
    let mut mse_csv = String::from("method,n_modes,mse\n");
    for method in cfg.method.methods() {
        let name = method.name();
        let diagram = sweep(&cache, &frf, method, opts)?;
        let modes = extract_modes(&diagram, cfg.min_streak);
        let model = if modes.is_empty() {
            ModalModel::default()
        } else {
            let poles: Vec<(f64, f64)> = modes.iter().map(|m| (m.f_hz, m.zeta.min(0.999))).collect();
            estimate_mode_shapes(&frf, &poles)?
        };
        let fitted = if model.modes.is_empty() {
            FrfSet::new(frf.grid().clone(), DMatrix::zeros(frf.n_outputs(), frf.n_lines()), None)?
        } else {
            resynthesize(&model, frf.grid())?
        };
        let mse = curve_fit_mse(&frf, &fitted)?;

        io::write_text(&cfg.out_dir.join(format!("diagram_{name}.csv")), &io::diagram_to_csv(&diagram))?;
        io::write_text(&cfg.out_dir.join(format!("diagram_{name}.svg")), &svg::stability_diagram_svg(&diagram, &frf))?;
        io::save_model(&model, &cfg.out_dir.join(format!("modes_{name}.json")))?;
        io::save_frf(&fitted, &cfg.out_dir.join(format!("resynth_{name}.csv")), FrfFormat::Csv)?;
        mse_csv.push_str(&format!("{name},{},{mse}\n", model.modes.len()));

        let s = diagram.stats();
        println!(
            "{name}: {} stable / {} unstable poles, {} spurious, {} modes, mse {mse:.3e}{}",
            s.n_stable,
            s.n_unstable,
            diagram.spurious_count(),
            model.modes.len(),
            diagram.sparsity.map_or_else(String::new, |k| format!(", sparsity {k}"))
        );
        for m in &model.modes {
            println!("  {:.3} Hz  zeta {:.5}", m.f_hz, m.zeta);
        }
        stats.push((name, s));
    }
    io::write_text(&cfg.out_dir.join("stats.csv"), &io::stats_to_csv(&stats))?;
    io::write_text(&cfg.out_dir.join("mse.csv"), &mse_csv)?;
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs, file: &ConfigFile) -> Result<()> {
    let a = io::load_model(&args.a)?;
    let b = io::load_model(&args.b)?;
    let cmp = compare_modes(&a, &b)?;
    let dir = out_dir(&args.out_dir, file);
    io::write_text(&dir.join("compare.csv"), &io::comparison_to_csv(&cmp))?;
    io::write_text(&dir.join("mac.csv"), &io::mac_to_csv(&cmp.mac))?;
    io::write_text(&dir.join("mac.svg"), &svg::mac_svg(&cmp.mac))?;
    println!(
        "compared {} vs {} modes, {} unmatched",
        a.modes.len(),
        b.modes.len(),
        cmp.unmatched()
    );
    Ok(())
}

pub fn cmd_roots_study(args: &RootsStudyArgs, file: &ConfigFile) -> Result<()> {
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let half_width = args.coeff_half_width.or(file.coeff_half_width).unwrap_or(1.0);
    let results = run_sparsity_study_with(args.degree, &args.counts, args.trials, seed, half_width)?;
    let dir = out_dir(&args.out_dir, file);
    io::write_text(&dir.join("roots_study.csv"), &io::study_to_csv(&results))?;
    io::write_text(&dir.join("roots_study.svg"), &svg::errorbar_svg(&results))?;
    for r in &results {
        println!(
            "{:>4} nonzero: {:6.2}% inside (std {:.2})",
            r.nonzero_count, r.pct_inside_mean, r.pct_inside_std
        );
    }
    Ok(())
}
