//! Seeded multi-trial experiment driver with CSV output.
//!
//! Configs are flat `key=value` files (one pair per line, `#` comments). Trial
//! `t` draws from `hash64(base_seed, t)`, so a config fully determines its CSV
//! unless wall-clock timing is switched on.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::analysis::{check_assumption, split_outer_middle, two_sided_gap};
use crate::config::EstimatorConfig;
use crate::eigvec::top_eigenvector;
use crate::error::{Error, Result};
use crate::hadamard::{sketch_spectrum, NormMode};
use crate::matrix::spectrum_error;
use crate::matrix::{
    exact_spectrum_capped, generate, io, MatrixKind, SpectrumEstimate, SymmetricMatrixOracle,
};
use crate::par;
use crate::rng::{hash64, rng_from_seed};
use crate::rownorm::run_rownorm;
use crate::uniform::{draw_uniform, run_uniform};

/// Largest `n` for which a reference spectrum is computed by brute force.
pub const REFERENCE_CAP: usize = 4096;

pub const CSV_HEADER: &str = "experiment_id,method,kind,n,epsilon,s_effective,trial,seed,\
entry_queries,rownorm_queries,max_abs_error,normalized_error,runtime_ms,success";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniform,
    Rownorm,
    Sketch,
    Eigvec,
    Check,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Rownorm => "rownorm",
            Method::Sketch => "sketch",
            Method::Eigvec => "eigvec",
            Method::Check => "check",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Method::Uniform,
            "rownorm" => Method::Rownorm,
            "sketch" => Method::Sketch,
            "eigvec" => Method::Eigvec,
            "check" => Method::Check,
            other => return Err(Error::config("method", format!("unknown method {other:?}"))),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Generated {
        kind: MatrixKind,
        n: usize,
        seed: u64,
        /// Materialize instead of answering queries from the closed form.
        dense: bool,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: MatrixSource,
    pub method: Method,
    pub estimator: EstimatorConfig,
    pub trials: usize,
    pub base_seed: u64,
    pub norm_mode: NormMode,
    /// Outer/middle threshold for `check`; defaults to `epsilon * n`.
    pub level: Option<f64>,
    pub c_flat: f64,
    /// Record wall-clock `runtime_ms` (breaks byte-identical reruns).
    pub timing: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: MatrixSource::Generated {
                kind: MatrixKind::SignSymmetric,
                n: 512,
                seed: 0,
                dense: false,
            },
            method: Method::Uniform,
            estimator: EstimatorConfig::default(),
            trials: 20,
            base_seed: 0,
            norm_mode: NormMode::Exact,
            level: None,
            c_flat: 8.0,
            timing: false,
            out: None,
        }
    }
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected a boolean, got {value:?}"),
        )),
    }
}

impl ExperimentConfig {
    /// Parses the `key=value` format. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut kind = String::from("sign_symmetric");
        let (mut n, mut k, mut m, mut mseed) = (512usize, 2usize, 16usize, 0u64);
        let mut backend = String::from("implicit");
        let mut path: Option<PathBuf> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let est = &mut cfg.estimator;
            match key {
                "kind" => kind = value.to_string(),
                "n" => n = parse_field(key, value)?,
                "k" => k = parse_field(key, value)?,
                "m" => m = parse_field(key, value)?,
                "matrix_seed" => mseed = parse_field(key, value)?,
                "backend" => backend = value.to_string(),
                "matrix" => path = Some(PathBuf::from(value)),
                "method" => cfg.method = value.parse()?,
                "epsilon" => est.epsilon = parse_field(key, value)?,
                "delta" => est.delta = parse_field(key, value)?,
                "s" => est.s_override = Some(parse_field(key, value)?),
                "c_sample" => est.c_sample = parse_field(key, value)?,
                "c_rownorm" => est.c_rownorm = parse_field(key, value)?,
                "c_log" => est.c_log = parse_field(key, value)?,
                "c_col" => est.c_col = parse_field(key, value)?,
                "jl_dim" => est.jl_dim = parse_field(key, value)?,
                "c_flat" => cfg.c_flat = parse_field(key, value)?,
                "trials" => cfg.trials = parse_field(key, value)?,
                "base_seed" => cfg.base_seed = parse_field(key, value)?,
                "norm_mode" => cfg.norm_mode = value.parse()?,
                "level" => cfg.level = Some(parse_field(key, value)?),
                "timing" => cfg.timing = parse_bool(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                other => return Err(Error::config(other, "unknown key")),
            }
        }
        cfg.source = match path {
            Some(p) => MatrixSource::File(p),
            None => MatrixSource::Generated {
                kind: MatrixKind::parse(&kind, k, m)?,
                n,
                seed: mseed,
                dense: match backend.as_str() {
                    "implicit" => false,
                    "dense" => true,
                    _ => return Err(Error::config("backend", "expected implicit or dense")),
                },
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if let MatrixSource::Generated { n, .. } = self.source {
            if n == 0 {
                return Err(Error::config("n", "must be >= 1"));
            }
        }
        if let Some(l) = self.level {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config("level", "must be positive"));
            }
        }
        if !(self.c_flat > 0.0) {
            return Err(Error::config("c_flat", "must be positive"));
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; `parse(to_kv())` round-trips.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        match &self.source {
            MatrixSource::Generated {
                kind,
                n,
                seed,
                dense,
            } => {
                let _ = writeln!(s, "kind={}", kind.name());
                let _ = writeln!(s, "n={n}");
                match kind {
                    MatrixKind::PlantedRankK { k } => {
                        let _ = writeln!(s, "k={k}");
                    }
                    MatrixKind::PsdGram { m } => {
                        let _ = writeln!(s, "m={m}");
                    }
                    _ => {}
                }
                let _ = writeln!(s, "matrix_seed={seed}");
                let _ = writeln!(s, "backend={}", if *dense { "dense" } else { "implicit" });
            }
            MatrixSource::File(p) => {
                let _ = writeln!(s, "matrix={}", p.display());
            }
        }
        let e = &self.estimator;
        let _ = writeln!(s, "method={}", self.method);
        let _ = writeln!(s, "epsilon={}", e.epsilon);
        let _ = writeln!(s, "delta={}", e.delta);
        if let Some(v) = e.s_override {
            let _ = writeln!(s, "s={v}");
        }
        let _ = writeln!(s, "c_sample={}", e.c_sample);
        let _ = writeln!(s, "c_rownorm={}", e.c_rownorm);
        let _ = writeln!(s, "c_log={}", e.c_log);
        let _ = writeln!(s, "c_col={}", e.c_col);
        let _ = writeln!(s, "jl_dim={}", e.jl_dim);
        let _ = writeln!(s, "c_flat={}", self.c_flat);
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "base_seed={}", self.base_seed);
        let _ = writeln!(s, "norm_mode={}", self.norm_mode.name());
        if let Some(l) = self.level {
            let _ = writeln!(s, "level={l}");
        }
        let _ = writeln!(s, "timing={}", self.timing);
        if let Some(p) = &self.out {
            let _ = writeln!(s, "out={}", p.display());
        }
        s
    }

    /// Stable id: hash of the canonical config without output path and timing.
    pub fn experiment_id(&self) -> String {
        let canon = ExperimentConfig {
            out: None,
            timing: false,
            ..self.clone()
        }
        .to_kv();
        let h = canon
            .bytes()
            .fold(0x6a09_e667_f3bc_c908u64, |acc, b| hash64(acc, u64::from(b)));
        format!("{h:016x}")
    }

    pub fn load_matrix(&self) -> Result<SymmetricMatrixOracle> {
        match &self.source {
            MatrixSource::Generated {
                kind,
                n,
                seed,
                dense,
            } => {
                let oracle = generate(*kind, *n, *seed)?;
                if *dense {
                    oracle.to_dense(crate::matrix::MATERIALIZATION_CAP)
                } else {
                    Ok(oracle)
                }
            }
            MatrixSource::File(p) => io::load(p),
        }
    }

    fn kind_name(&self) -> String {
        match &self.source {
            MatrixSource::Generated { kind, .. } => kind.name().to_string(),
            MatrixSource::File(_) => "file".to_string(),
        }
    }
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub s_effective: usize,
    pub entry_queries: u64,
    pub rownorm_queries: u64,
    pub max_abs_error: Option<f64>,
    pub normalized_error: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub success: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub experiment_id: String,
    pub method: Method,
    pub kind: String,
    pub n: usize,
    pub epsilon: f64,
    pub rows: Vec<TrialRow>,
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    })
}

impl ExperimentResults {
    /// Fraction of trials with `success == true` among those that report one.
    pub fn success_fraction(&self) -> Option<f64> {
        let judged: Vec<bool> = self.rows.iter().filter_map(|r| r.success).collect();
        if judged.is_empty() {
            return None;
        }
        Some(judged.iter().filter(|&&b| b).count() as f64 / judged.len() as f64)
    }

    pub fn successes(&self) -> usize {
        self.rows.iter().filter(|r| r.success == Some(true)).count()
    }

    fn prefix(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.experiment_id, self.method, self.kind, self.n, self.epsilon
        )
    }

    /// Data rows plus the summary row, without the header.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            return out;
        }
        let p = self.prefix();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{p},{},{},{},{},{},{},{},{},{}",
                r.s_effective,
                r.trial,
                r.seed,
                r.entry_queries,
                r.rownorm_queries,
                opt(r.max_abs_error),
                opt(r.normalized_error),
                opt(r.runtime_ms),
                opt(r.success.map(u8::from)),
            );
        }
        let col =
            |f: &dyn Fn(&TrialRow) -> Option<f64>| median(self.rows.iter().filter_map(f).collect());
        let _ = writeln!(
            out,
            "{p},{},summary,,{},{},{},{},{},{}",
            opt(col(&|r| Some(r.s_effective as f64))),
            opt(col(&|r| Some(r.entry_queries as f64))),
            opt(col(&|r| Some(r.rownorm_queries as f64))),
            opt(col(&|r| r.max_abs_error)),
            opt(col(&|r| r.normalized_error)),
            opt(col(&|r| r.runtime_ms)),
            opt(self.success_fraction()),
        );
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_body())
    }
}

/// Reference spectrum: closed form when the matrix knows it, else brute force
/// up to [`REFERENCE_CAP`].
pub fn reference_spectrum(oracle: &SymmetricMatrixOracle) -> Option<SpectrumEstimate> {
    oracle
        .known_spectrum()
        .or_else(|| exact_spectrum_capped(oracle, REFERENCE_CAP).ok())
}

struct Outcome {
    s_effective: usize,
    max_abs_error: Option<f64>,
    normalized_error: Option<f64>,
    success: Option<bool>,
}

fn judged(err: Option<f64>, scale: f64, eps: f64) -> Outcome {
    let norm = err.map(|e| if scale > 0.0 { e / scale } else { e });
    Outcome {
        s_effective: 0,
        max_abs_error: err,
        normalized_error: norm,
        success: norm.map(|v| v <= eps),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    oracle: &SymmetricMatrixOracle,
    reference: Option<&SpectrumEstimate>,
    seed: u64,
) -> Result<Outcome> {
    let est = &cfg.estimator;
    let n = oracle.n();
    let mut rng = rng_from_seed(seed);
    let err_vs = |e: &SpectrumEstimate| -> Result<Option<f64>> {
        reference.map(|r| spectrum_error(e, r)).transpose()
    };
    Ok(match cfg.method {
        Method::Uniform => {
            let o = run_uniform(oracle, est, &mut rng)?;
            Outcome {
                s_effective: o.s,
                ..judged(err_vs(&o.estimate)?, n as f64, est.epsilon)
            }
        }
        Method::Rownorm => {
            let s = est.rownorm_sample_size(n);
            let o = run_rownorm(oracle, s, est.epsilon, est.c_log, &mut rng)?;
            Outcome {
                s_effective: s,
                ..judged(err_vs(&o.estimate)?, oracle.frobenius_norm(), est.epsilon)
            }
        }
        Method::Sketch => {
            let o = sketch_spectrum(oracle, est, &mut rng, cfg.norm_mode)?;
            Outcome {
                s_effective: o.k,
                ..judged(err_vs(&o.estimate)?, oracle.frobenius_norm(), est.epsilon)
            }
        }
        Method::Eigvec => {
            let o = top_eigenvector(oracle, est.epsilon, est.c_col, &mut rng)?;
            let gap = reference.and_then(|r| r.top()).map(|l1| l1 - o.rayleigh);
            Outcome {
                s_effective: o.sample.columns.len(),
                ..judged(gap, n as f64, est.epsilon)
            }
        }
        Method::Check => {
            let a = oracle.materialize(crate::analysis::ANALYSIS_CAP)?;
            let level = cfg.level.unwrap_or(est.epsilon * n as f64);
            let split = split_outer_middle(&a, level)?;
            let s = est.uniform_sample_size();
            let draw = draw_uniform(n, s, &mut rng);
            let report = check_assumption(&draw, &split.outer, level)?;
            let gap = two_sided_gap(&draw, &split.outer, level)?;
            Outcome {
                s_effective: s,
                max_abs_error: Some(gap.max_gap),
                normalized_error: Some(report.worst_ratio()),
                success: Some(report.passed),
            }
        }
    })
}

/// Runs all trials (in parallel when enabled), ordered by trial index.
/// The first failing trial's error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let oracle = cfg.load_matrix()?;
    run_experiment_on(cfg, &oracle)
}

/// Like [`run_experiment`] but with an already loaded matrix.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    oracle: &SymmetricMatrixOracle,
) -> Result<ExperimentResults> {
    cfg.validate()?;
    let reference = if cfg.trials == 0 {
        None
    } else {
        reference_spectrum(oracle)
    };
    let rows = par::map_range(cfg.trials, |t| -> Result<TrialRow> {
        let seed = hash64(cfg.base_seed, t as u64);
        let local = oracle.fork();
        let start = Instant::now();
        let out = run_trial(cfg, &local, reference.as_ref(), seed)?;
        let runtime_ms = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        let ledger = local.ledger().snapshot();
        Ok(TrialRow {
            trial: t,
            seed,
            s_effective: out.s_effective,
            entry_queries: ledger.entry_queries,
            rownorm_queries: ledger.row_norm_queries,
            max_abs_error: out.max_abs_error,
            normalized_error: out.normalized_error,
            runtime_ms,
            success: out.success,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults {
        experiment_id: cfg.experiment_id(),
        method: cfg.method,
        kind: cfg.kind_name(),
        n: oracle.n(),
        epsilon: cfg.estimator.epsilon,
        rows,
    })
}

/// Runs `cfg` for every `(epsilon, s)` pair and concatenates the CSVs under
/// one header. An empty `s_list` means the default sample-size formula.
pub fn sweep(cfg: &ExperimentConfig, eps_list: &[f64], s_list: &[usize]) -> Result<String> {
    if eps_list.is_empty() {
        return Err(Error::config("eps_list", "must not be empty"));
    }
    let oracle = cfg.load_matrix()?;
    let s_values: Vec<Option<usize>> = if s_list.is_empty() {
        vec![None]
    } else {
        s_list.iter().map(|&s| Some(s)).collect()
    };
    let mut out = format!("{CSV_HEADER}\n");
    for &eps in eps_list {
        for &s in &s_values {
            let mut c = cfg.clone();
            c.estimator.epsilon = eps;
            c.estimator.s_override = s;
            out.push_str(&run_experiment_on(&c, &oracle)?.csv_body());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn zero_trials_is_header_only() {
        let r = run_experiment(&cfg("kind=zero\nn=8\ntrials=0\n")).unwrap();
        assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn zero_matrix_has_zero_error() {
        let r = run_experiment(&cfg("kind=zero\nn=64\ntrials=3\n")).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.max_abs_error == Some(0.0)));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().last().unwrap().contains(",summary,"));
    }

    #[test]
    fn config_round_trip_and_errors() {
        let c = cfg("# comment\nkind=planted_rank_k\nk=3\nn=100\nmethod=eigvec\nepsilon=0.1\ns=40 # inline\n");
        assert_eq!(ExperimentConfig::parse(&c.to_kv()).unwrap(), c);
        for (text, field) in [
            ("epsilon=2", "epsilon"),
            ("bogus=1", "bogus"),
            ("method=nope", "method"),
            ("kind=nope", "kind"),
            ("n=abc", "n"),
        ] {
            match ExperimentConfig::parse(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn reruns_are_identical_and_ids_stable() {
        let c = cfg("kind=sign_symmetric\nn=128\ntrials=4\nbase_seed=9\n");
        let a = run_experiment(&c).unwrap().to_csv();
        let b = run_experiment(&c).unwrap().to_csv();
        assert_eq!(a, b);
        let other = cfg("kind=sign_symmetric\nn=128\ntrials=4\nbase_seed=10\n");
        assert_ne!(c.experiment_id(), other.experiment_id());
    }

    #[test]
    fn trial_seeds_follow_hash() {
        let r = run_experiment(&cfg("kind=identity\nn=16\ntrials=3\nbase_seed=5\n")).unwrap();
        for (t, row) in r.rows.iter().enumerate() {
            assert_eq!(row.trial, t);
            assert_eq!(row.seed, hash64(5, t as u64));
        }
    }

    #[test]
    fn sweep_has_one_header() {
        let c = cfg("kind=identity\nn=32\ntrials=2\n");
        let csv = sweep(&c, &[0.25, 0.5], &[4, 8]).unwrap();
        assert_eq!(csv.matches("experiment_id").count(), 1);
        assert_eq!(csv.lines().count(), 1 + 4 * 3);
    }

    #[test]
    fn check_method_runs() {
        let r = run_experiment(&cfg(
            "kind=planted_rank_k\nn=64\nmethod=check\ntrials=2\ns=64\n",
        ))
        .unwrap();
        assert!(r.rows.iter().all(|row| row.success.is_some()));
    }
}
