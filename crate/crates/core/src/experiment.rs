//! Corruption-sweep experiment harness.
//!
//! For every trial a world and a clean response set are drawn once; every
//! corruption level then overwrites only the leading `⌊α·m⌋` responses, so
//! honest data is shared across α (common random numbers). The three
//! estimators run on identical inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{
    covariance_diagnostic, naive_estimate, procrustes_only_estimate, robust_estimate,
    EstimateReport, PipelineConfig, DEFAULT_LAMBDA_UB,
};
use crate::robust_mean::{ProxyMode, RemovalMode};
use crate::seeding::{self, derive_seed};
use crate::synthetic::{
    apply_corruption, build_world, generate_responses, AdversaryStrategy, CorruptionSpec,
    Responses, SpectrumModel, WorldInstance,
};

pub const CSV_HEADER: [&str; 9] = [
    "alpha",
    "trial",
    "method",
    "dist",
    "raw_err",
    "removed_count",
    "realized_kappa",
    "seed",
    "wall_time_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// `ω = √(1/(m·n))`.
    #[default]
    SqrtInvMn,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub r: usize,
    /// `r★ = r_star_ratio · r`.
    pub r_star_ratio: f64,
    pub delta: f64,
    pub m: usize,
    /// `n = n_per_r · r` samples per node.
    pub n_per_r: usize,
    pub alpha_grid: Vec<f64>,
    pub trials: usize,
    pub p: f64,
    pub omega_rule: OmegaRule,
    pub lambda_ub: f64,
    pub removal_mode: RemovalMode,
    pub proxy_mode: ProxyMode,
    pub adversary: AdversaryStrategy,
    pub master_seed: u64,
    /// Record wall-clock times; off by default so output is reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 60,
            r: 5,
            r_star_ratio: 2.0,
            delta: 0.25,
            m: 150,
            n_per_r: 50,
            alpha_grid: default_alpha_grid(),
            trials: 10,
            p: 0.01,
            omega_rule: OmegaRule::SqrtInvMn,
            lambda_ub: DEFAULT_LAMBDA_UB,
            removal_mode: RemovalMode::DeterministicMax,
            proxy_mode: ProxyMode::Simplified,
            adversary: AdversaryStrategy::CollusionNearOrthogonal,
            master_seed: 20_240_601,
            record_timing: false,
        }
    }
}

/// `0, 0.05, …, 0.45`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..10).map(|k| k as f64 / 20.0).collect()
}

impl ExperimentConfig {
    /// Reads a flat TOML file, or JSON when the extension is `.json`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn n(&self) -> usize {
        self.n_per_r * self.r
    }

    pub fn spectrum(&self) -> Result<SpectrumModel> {
        SpectrumModel::new(self.d, self.r, self.r_star_ratio * self.r as f64, self.delta)
    }

    pub fn omega(&self) -> f64 {
        match self.omega_rule {
            OmegaRule::SqrtInvMn => PipelineConfig::omega_for_pca(self.m, self.n()),
            OmegaRule::Fixed(w) => w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spectrum()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if self.m < 3 {
            return Err(Error::invalid("m", format!("need m >= 3, got {}", self.m)));
        }
        if self.n() == 0 {
            return Err(Error::invalid("n_per_r", "need at least one sample per node"));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::invalid("alpha_grid", "empty"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(0.0..0.5).contains(*a)) {
            return Err(Error::invalid("alpha_grid", format!("alpha {a} outside [0, 0.5)")));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid("p", format!("need 0 < p < 1, got {}", self.p)));
        }
        if self.adversary == AdversaryStrategy::CollusionNearOrthogonal && self.d < 2 * self.r {
            return Err(Error::invalid("d", "collusion adversary needs d >= 2r"));
        }
        self.pipeline_config(0.0, 0).validate()
    }

    fn pipeline_config(&self, alpha: f64, filter_seed: u64) -> PipelineConfig {
        PipelineConfig {
            alpha,
            failure_prob: self.p,
            omega: self.omega(),
            lambda_ub: self.lambda_ub,
            removal_mode: self.removal_mode,
            proxy_mode: self.proxy_mode,
            rng_seed: filter_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Robust,
    Procrustes,
    Naive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Robust, Method::Procrustes, Method::Naive];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Robust => "Robust",
            Method::Procrustes => "Procrustes",
            Method::Naive => "Naive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

/// One estimator's result on one (α, trial). Failed trials carry NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub alpha: f64,
    pub trial: usize,
    pub method: Method,
    pub dist: f64,
    pub raw_err: f64,
    pub removed_count: usize,
    pub realized_kappa: f64,
    pub seed: u64,
    pub wall_time_ms: f64,
}

impl TrialRecord {
    pub fn is_failure(&self) -> bool {
        self.dist.is_nan()
    }

    fn sort_key(&self) -> (f64, usize, Method) {
        (self.alpha, self.trial, self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDiagnostic {
    pub alpha: f64,
    pub trial: usize,
    /// `‖Σ_good‖₂` over the robustly aligned honest responses.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub alpha: f64,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Sorted by (α, trial, method).
    pub records: Vec<TrialRecord>,
    pub diagnostics: Vec<TrialDiagnostic>,
    pub failures: Vec<TrialFailure>,
}

struct TrialContext {
    trial: usize,
    seed: u64,
    world: WorldInstance,
    clean: Responses,
}

fn prepare_trial(config: &ExperimentConfig, trial: usize) -> (u64, Result<TrialContext>) {
    let seed = derive_seed(&[config.master_seed, seeding::TRIAL, trial as u64]);
    let context = (|| {
        let world = build_world(&config.spectrum()?, derive_seed(&[seed, seeding::WORLD]))?;
        let clean = generate_responses(
            &world,
            config.m,
            config.n(),
            &CorruptionSpec::clean(),
            derive_seed(&[seed, seeding::RESPONSES]),
        )?;
        Ok(TrialContext {
            trial,
            seed,
            world,
            clean,
        })
    })();
    (seed, context)
}

struct CellResult {
    records: Vec<TrialRecord>,
    diagnostic: TrialDiagnostic,
}

fn timed<T>(enabled: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    let ms = if enabled {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok((value, ms))
}

fn run_cell(config: &ExperimentConfig, ctx: &TrialContext, alpha: f64) -> Result<CellResult> {
    let spec = CorruptionSpec::new(alpha, config.adversary)?;
    let responses_seed = derive_seed(&[ctx.seed, seeding::RESPONSES]);
    let responses = apply_corruption(&ctx.world, &ctx.clean, &spec, responses_seed)?;
    let frames = &responses.frames;
    let pipeline = config.pipeline_config(alpha, derive_seed(&[ctx.seed, seeding::FILTER]));
    let truth = &ctx.world.v_true;

    let timing = config.record_timing;
    let (robust, robust_ms) = timed(timing, || robust_estimate(frames, &pipeline))?;
    let (procrustes, procrustes_ms) = timed(timing, || procrustes_only_estimate(frames))?;
    let (naive, naive_ms) = timed(timing, || naive_estimate(frames))?;

    let record = |method, report: &EstimateReport, ms| -> Result<TrialRecord> {
        Ok(TrialRecord {
            alpha,
            trial: ctx.trial,
            method,
            dist: report.dist_to(truth)?,
            raw_err: report.raw_error_to(truth)?,
            removed_count: report.filter_outcome.removed.len(),
            realized_kappa: ctx.world.kappa,
            seed: ctx.seed,
            wall_time_ms: ms,
        })
    };
    let records = vec![
        record(Method::Robust, &robust, robust_ms)?,
        record(Method::Procrustes, &procrustes, procrustes_ms)?,
        record(Method::Naive, &naive, naive_ms)?,
    ];
    let diag = covariance_diagnostic(frames, &robust.aligned, truth, &responses.good_set)?;
    Ok(CellResult {
        records,
        diagnostic: TrialDiagnostic {
            alpha,
            trial: ctx.trial,
            lhs: diag.lhs,
            rhs: diag.rhs,
        },
    })
}

fn failure_records(alpha: f64, trial: usize, seed: u64) -> Vec<TrialRecord> {
    Method::ALL
        .into_iter()
        .map(|method| TrialRecord {
            alpha,
            trial,
            method,
            dist: f64::NAN,
            raw_err: f64::NAN,
            removed_count: 0,
            realized_kappa: f64::NAN,
            seed,
            wall_time_ms: 0.0,
        })
        .collect()
}

/// Runs every (α, trial) cell. Stage errors become failure rows rather than
/// aborting the sweep; only an invalid config is an error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let contexts: Vec<(usize, u64, Result<TrialContext>)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let (seed, ctx) = prepare_trial(config, trial);
            (trial, seed, ctx)
        })
        .collect();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = Vec::new();
    let mut ready = Vec::new();
    for (trial, seed, ctx) in contexts {
        match ctx {
            Ok(ctx) => ready.push(ctx),
            Err(e) => {
                for &alpha in &config.alpha_grid {
                    records.extend(failure_records(alpha, trial, seed));
                    failures.push(TrialFailure {
                        alpha,
                        trial,
                        message: e.to_string(),
                    });
                }
            }
        }
    }

    let cells: Vec<(&TrialContext, f64)> = ready
        .iter()
        .flat_map(|ctx| config.alpha_grid.iter().map(move |&a| (ctx, a)))
        .collect();
    let results: Vec<(f64, &TrialContext, Result<CellResult>)> = cells
        .into_par_iter()
        .map(|(ctx, alpha)| (alpha, ctx, run_cell(config, ctx, alpha)))
        .collect();
    for (alpha, ctx, result) in results {
        match result {
            Ok(cell) => {
                records.extend(cell.records);
                diagnostics.push(cell.diagnostic);
            }
            Err(e) => {
                records.extend(failure_records(alpha, ctx.trial, ctx.seed));
                failures.push(TrialFailure {
                    alpha,
                    trial: ctx.trial,
                    message: e.to_string(),
                });
            }
        }
    }

    records.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    });
    diagnostics.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.trial.cmp(&b.trial)));
    failures.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.trial.cmp(&b.trial)));
    Ok(ExperimentOutput {
        config: config.clone(),
        records,
        diagnostics,
        failures,
    })
}

fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the records as CSV: fixed header, LF line endings, floats with
/// 17 significant digits.
pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error(path))?;
    writer.write_record(CSV_HEADER).map_err(csv_error(path))?;
    for rec in records {
        writer
            .write_record([
                format_float(rec.alpha),
                rec.trial.to_string(),
                rec.method.to_string(),
                format_float(rec.dist),
                format_float(rec.raw_err),
                rec.removed_count.to_string(),
                format_float(rec.realized_kappa),
                rec.seed.to_string(),
                format_float(rec.wall_time_ms),
            ])
            .map_err(csv_error(path))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = reader.headers().map_err(csv_error(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>()
        )));
    }
    let bad = |field: &str, row: usize| {
        Error::Config(format!("{}: cannot parse `{field}` in row {row}", path.display()))
    };
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result.map_err(csv_error(path))?;
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i], row));
        let int = |i: usize| rec[i].parse::<u64>().map_err(|_| bad(CSV_HEADER[i], row));
        records.push(TrialRecord {
            alpha: float(0)?,
            trial: int(1)? as usize,
            method: rec[2].parse()?,
            dist: float(3)?,
            raw_err: float(4)?,
            removed_count: int(5)? as usize,
            realized_kappa: float(6)?,
            seed: int(7)?,
            wall_time_ms: float(8)?,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub alpha: f64,
    pub method: Method,
    pub count: usize,
    pub mean_dist: f64,
    /// Sample standard deviation (n − 1); 0 for a single trial.
    pub std_dist: f64,
    pub mean_raw_err: f64,
    pub mean_removed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen (negative when the bound always holds).
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub realized_kappa: Option<f64>,
    pub omega: f64,
    pub groups: Vec<GroupSummary>,
    pub covariance_bound: DiagnosticSummary,
    pub failures: Vec<TrialFailure>,
}

/// Mean and sample standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-(α, method) statistics over successful records, ordered by (α, method).
pub fn summarize_records(records: &[TrialRecord]) -> Vec<GroupSummary> {
    let mut keys: Vec<(f64, Method)> = records.iter().map(|r| (r.alpha, r.method)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(alpha, method)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.alpha == alpha && r.method == method && !r.is_failure())
                .collect();
            let dists: Vec<f64> = group.iter().map(|r| r.dist).collect();
            let (mean_dist, std_dist) = mean_and_std(&dists);
            let raw: Vec<f64> = group.iter().map(|r| r.raw_err).collect();
            let removed: Vec<f64> = group.iter().map(|r| r.removed_count as f64).collect();
            GroupSummary {
                alpha,
                method,
                count: group.len(),
                mean_dist,
                std_dist,
                mean_raw_err: mean_and_std(&raw).0,
                mean_removed: mean_and_std(&removed).0,
            }
        })
        .collect()
}

pub fn summarize(output: &ExperimentOutput, tol: f64) -> Summary {
    let kappa = output
        .records
        .iter()
        .find(|r| !r.is_failure())
        .map(|r| r.realized_kappa);
    let violations = output
        .diagnostics
        .iter()
        .filter(|d| d.lhs > d.rhs + tol)
        .count();
    let max_excess = output
        .diagnostics
        .iter()
        .map(|d| d.lhs - d.rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: output.config.clone(),
        realized_kappa: kappa,
        omega: output.config.omega(),
        groups: summarize_records(&output.records),
        covariance_bound: DiagnosticSummary {
            trials: output.diagnostics.len(),
            violations,
            max_excess,
        },
        failures: output.failures.clone(),
    }
}

pub fn write_summary_json(output: &ExperimentOutput, path: &Path) -> Result<()> {
    let summary = summarize(output, 1e-8);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `results.csv` and `summary.json` into `dir`, creating it if needed.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv_path = dir.join("results.csv");
    let json_path = dir.join("summary.json");
    write_csv(&output.records, &csv_path)?;
    write_summary_json(output, &json_path)?;
    Ok((csv_path, json_path))
}
