use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sublinear_spectrum::hadamard::NormMode;
use sublinear_spectrum::harness::{self, ExperimentConfig, MatrixSource, Method};
use sublinear_spectrum::matrix::{generate, io, MatrixKind, MATERIALIZATION_CAP};
use sublinear_spectrum::Error;

#[derive(Parser)]
#[command(
    name = "sublinspec",
    version,
    about = "Sublinear-query spectrum estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated matrix to a file (`.bin` for binary, else text).
    Gen(GenArgs),
    /// Estimate the spectrum over seeded trials and emit CSV.
    Estimate {
        #[arg(long, value_enum, default_value = "uniform")]
        method: SpectrumMethod,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Approximate the top eigenvector over seeded trials.
    Eigvec(CommonArgs),
    /// Check the subspace-embedding condition at level L.
    Check {
        #[arg(long)]
        level: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a grid over epsilon and sample sizes.
    Sweep {
        #[arg(long, value_enum, default_value = "uniform")]
        method: SweepMethod,
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        s_list: Vec<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumMethod {
    Uniform,
    Rownorm,
    Sketch,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMethod {
    Uniform,
    Rownorm,
    Sketch,
    Eigvec,
}

impl From<SpectrumMethod> for Method {
    fn from(m: SpectrumMethod) -> Self {
        match m {
            SpectrumMethod::Uniform => Method::Uniform,
            SpectrumMethod::Rownorm => Method::Rownorm,
            SpectrumMethod::Sketch => Method::Sketch,
        }
    }
}

impl From<SweepMethod> for Method {
    fn from(m: SweepMethod) -> Self {
        match m {
            SweepMethod::Uniform => Method::Uniform,
            SweepMethod::Rownorm => Method::Rownorm,
            SweepMethod::Sketch => Method::Sketch,
            SweepMethod::Eigvec => Method::Eigvec,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Flags shared by the experiment subcommands; they override `--config`.
#[derive(Args)]
struct CommonArgs {
    /// key=value experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the matrix from a file instead of generating it.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    matrix_seed: Option<u64>,
    /// Materialize generated matrices.
    #[arg(long)]
    dense: bool,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed sample size.
    #[arg(long)]
    s: Option<usize>,
    /// Base seed; trial t uses hash64(seed, t).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    c_sample: Option<f64>,
    #[arg(long)]
    c_rownorm: Option<f64>,
    #[arg(long)]
    c_log: Option<f64>,
    #[arg(long)]
    c_col: Option<f64>,
    #[arg(long)]
    c_flat: Option<f64>,
    #[arg(long)]
    norm_mode: Option<String>,
    /// Record wall-clock runtime (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn build(&self, method: Method) -> sublinear_spectrum::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.method = method;
        if let Some(p) = &self.matrix {
            cfg.source = MatrixSource::File(p.clone());
        } else if let MatrixSource::Generated {
            kind,
            n,
            seed,
            dense,
        } = &mut cfg.source
        {
            let (mut k, mut m) = match *kind {
                MatrixKind::PlantedRankK { k } => (k, 16),
                MatrixKind::PsdGram { m } => (2, m),
                _ => (2, 16),
            };
            k = self.k.unwrap_or(k);
            m = self.m.unwrap_or(m);
            let name = self.kind.clone().unwrap_or_else(|| kind.name().to_string());
            *kind = MatrixKind::parse(&name, k, m)?;
            *n = self.n.unwrap_or(*n);
            *seed = self.matrix_seed.unwrap_or(*seed);
            *dense |= self.dense;
        }
        let e = &mut cfg.estimator;
        e.epsilon = self.eps.unwrap_or(e.epsilon);
        e.delta = self.delta.unwrap_or(e.delta);
        e.s_override = self.s.or(e.s_override);
        e.c_sample = self.c_sample.unwrap_or(e.c_sample);
        e.c_rownorm = self.c_rownorm.unwrap_or(e.c_rownorm);
        e.c_log = self.c_log.unwrap_or(e.c_log);
        e.c_col = self.c_col.unwrap_or(e.c_col);
        cfg.c_flat = self.c_flat.unwrap_or(cfg.c_flat);
        cfg.base_seed = self.seed.unwrap_or(cfg.base_seed);
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        if let Some(mode) = &self.norm_mode {
            cfg.norm_mode = mode.parse::<NormMode>()?;
        }
        cfg.timing |= self.timing;
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &ExperimentConfig, csv: &str) -> sublinear_spectrum::Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_one(cfg: ExperimentConfig) -> sublinear_spectrum::Result<()> {
    let results = harness::run_experiment(&cfg)?;
    emit(&cfg, &results.to_csv())?;
    if let Some(f) = results.success_fraction() {
        eprintln!(
            "{} on {} n={}: {}/{} trials succeeded ({f:.2})",
            results.method,
            results.kind,
            results.n,
            results.successes(),
            results.rows.len()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> sublinear_spectrum::Result<()> {
    match cli.command {
        Command::Gen(g) => {
            let kind = MatrixKind::parse(&g.kind, g.k, g.m)?;
            let oracle = generate(kind, g.n, g.seed)?.to_dense(MATERIALIZATION_CAP)?;
            io::save(&oracle, &g.out, io::MatrixFormat::from_path(&g.out))
        }
        Command::Estimate { method, common } => run_one(common.build(method.into())?),
        Command::Eigvec(common) => run_one(common.build(Method::Eigvec)?),
        Command::Check { level, common } => {
            let mut cfg = common.build(Method::Check)?;
            cfg.level = level.or(cfg.level);
            cfg.validate()?;
            run_one(cfg)
        }
        Command::Sweep {
            method,
            eps_list,
            s_list,
            common,
        } => {
            let cfg = common.build(method.into())?;
            let csv = harness::sweep(&cfg, &eps_list, &s_list)?;
            emit(&cfg, &csv)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse(_) => 2,
        Error::Capacity { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
