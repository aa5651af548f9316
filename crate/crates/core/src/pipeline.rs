//! Robust distributed eigenspace estimation and its two baselines.
//!
//! `robust_estimate`: robust reference → Procrustes fixing → adaptive filter.
//! `procrustes_only_estimate`: same without the robust mean.
//! `naive_estimate`: first response as reference, plain mean.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    polar_orthonormalize, procrustes_rotation_raw, spectral_norm, subspace_dist, OrthonormalFrame,
};
use crate::procrustes::procrustes_fixing;
use crate::reference::{robust_reference, ReferenceResult};
use crate::robust_mean::{
    adaptive_filter, empirical_covariance, empirical_mean, AdaptiveConfig, FilterConfig,
    FilterOutcome, MatrixSampleSet, ProxyMode, RemovalMode, Termination,
};

/// `λ_ub` handed to the adaptive filter.
pub const DEFAULT_LAMBDA_UB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub failure_prob: f64,
    /// Lower end of the adaptive grid.
    pub omega: f64,
    pub lambda_ub: f64,
    pub removal_mode: RemovalMode,
    pub proxy_mode: ProxyMode,
    pub rng_seed: u64,
}

impl PipelineConfig {
    pub fn new(alpha: f64, omega: f64) -> Self {
        Self {
            alpha,
            failure_prob: 0.01,
            omega,
            lambda_ub: DEFAULT_LAMBDA_UB,
            removal_mode: RemovalMode::default(),
            proxy_mode: ProxyMode::default(),
            rng_seed: 0,
        }
    }

    /// `ω = √(1/(m·n))`.
    pub fn omega_for_pca(m: usize, n: usize) -> f64 {
        (1.0 / (m as f64 * n as f64)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= self.lambda_ub) {
            return Err(Error::invalid(
                "omega",
                format!("need 0 < omega <= lambda_ub = {}, got {}", self.lambda_ub, self.omega),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// The unnormalized mean `V̄`.
    pub raw_mean: DMatrix<f64>,
    /// Polar factor of `raw_mean`.
    pub orthonormalized: OrthonormalFrame,
    pub reference: ReferenceResult,
    pub filter_outcome: FilterOutcome,
    /// Responses after alignment to `reference`.
    pub aligned: Vec<OrthonormalFrame>,
}

impl EstimateReport {
    fn from_outcome(
        reference: ReferenceResult,
        aligned: Vec<OrthonormalFrame>,
        filter_outcome: FilterOutcome,
    ) -> Result<Self> {
        let orthonormalized = polar_orthonormalize(&filter_outcome.mean)?;
        Ok(Self {
            raw_mean: filter_outcome.mean.clone(),
            orthonormalized,
            reference,
            filter_outcome,
            aligned,
        })
    }

    /// Subspace distance of the orthonormalized estimate to `truth`.
    pub fn dist_to(&self, truth: &OrthonormalFrame) -> Result<f64> {
        subspace_dist(&self.orthonormalized, truth)
    }

    /// `‖V̄ − V·Z*‖₂` with `Z*` the best orthogonal alignment of `V` to `V̄`.
    pub fn raw_error_to(&self, truth: &OrthonormalFrame) -> Result<f64> {
        let z = procrustes_rotation_raw(truth.as_matrix(), &self.raw_mean)?;
        Ok(spectral_norm(&(&self.raw_mean - truth.as_matrix() * z)))
    }
}

fn plain_mean_outcome(set: &MatrixSampleSet) -> Result<FilterOutcome> {
    let mean = empirical_mean(set);
    let cov = empirical_covariance(set);
    Ok(FilterOutcome {
        mean,
        removed: Vec::new(),
        final_top_eigenvalue: spectral_norm(cov.as_matrix()),
        terminated_by: Termination::ThresholdMet,
        lambda_ub: f64::INFINITY,
    })
}

fn require_nodes(responses: &[OrthonormalFrame], min: usize) -> Result<()> {
    if responses.is_empty() {
        return Err(Error::Empty("responses"));
    }
    if responses.len() < min {
        return Err(Error::invalid(
            "responses",
            format!("need at least {min} responses, got {}", responses.len()),
        ));
    }
    Ok(())
}

pub fn robust_estimate(responses: &[OrthonormalFrame], config: &PipelineConfig) -> Result<EstimateReport> {
    require_nodes(responses, 3)?;
    config.validate()?;
    let reference = robust_reference(responses)?;
    let aligned = procrustes_fixing(responses, &reference.frame)?;
    let set = MatrixSampleSet::from_frames(&aligned)?;
    let adaptive = AdaptiveConfig {
        lambda_lb: config.omega,
        lambda_ub: config.lambda_ub,
        failure_prob: config.failure_prob,
        alpha: config.alpha,
        proxy_mode: config.proxy_mode,
        m: responses.len(),
    };
    let template = FilterConfig::new(config.lambda_ub)
        .with_mode(config.removal_mode)
        .with_seed(config.rng_seed);
    let outcome = adaptive_filter(&set, &adaptive, &template)?;
    EstimateReport::from_outcome(reference, aligned, outcome)
}

pub fn procrustes_only_estimate(responses: &[OrthonormalFrame]) -> Result<EstimateReport> {
    require_nodes(responses, 3)?;
    let reference = robust_reference(responses)?;
    let aligned = procrustes_fixing(responses, &reference.frame)?;
    let outcome = plain_mean_outcome(&MatrixSampleSet::from_frames(&aligned)?)?;
    EstimateReport::from_outcome(reference, aligned, outcome)
}

pub fn naive_estimate(responses: &[OrthonormalFrame]) -> Result<EstimateReport> {
    require_nodes(responses, 1)?;
    let first = responses[0].clone();
    let aligned = procrustes_fixing(responses, &first)?;
    let outcome = plain_mean_outcome(&MatrixSampleSet::from_frames(&aligned)?)?;
    let reference = ReferenceResult {
        index: 0,
        frame: first,
        radius: f64::NAN,
    };
    EstimateReport::from_outcome(reference, aligned, outcome)
}

/// Both sides of the good-set covariance bound
/// `‖Σ_good‖₂ ≤ ‖avg V_iV_iᵀ − VVᵀ‖₂ + 2‖avg Ṽ_i − V‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDiagnostic {
    pub lhs: f64,
    pub rhs: f64,
}

impl CovarianceDiagnostic {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Evaluates the bound over the honest nodes `good_set`.
///
/// `responses` are the raw reports and `aligned` the same reports after
/// Procrustes fixing. The bound holds for every orthonormal basis of the
/// truth; the one closest to the aligned mean is used.
pub fn covariance_diagnostic(
    responses: &[OrthonormalFrame],
    aligned: &[OrthonormalFrame],
    truth: &OrthonormalFrame,
    good_set: &[usize],
) -> Result<CovarianceDiagnostic> {
    if good_set.is_empty() {
        return Err(Error::Empty("good set"));
    }
    if responses.len() != aligned.len() {
        return Err(Error::invalid(
            "aligned",
            format!("{} aligned frames for {} responses", aligned.len(), responses.len()),
        ));
    }
    if let Some(&i) = good_set.iter().find(|&&i| i >= responses.len()) {
        return Err(Error::invalid("good_set", format!("index {i} out of range")));
    }
    let samples: Vec<DMatrix<f64>> = aligned.iter().map(|f| f.as_matrix().clone()).collect();
    let set = MatrixSampleSet::with_active(samples, good_set.to_vec())?;
    let lhs = spectral_norm(empirical_covariance(&set).as_matrix());

    let d = truth.d();
    let count = good_set.len() as f64;
    let mut projector_mean = DMatrix::zeros(d, d);
    for &i in good_set {
        let v = responses[i].as_matrix();
        projector_mean += v * v.transpose();
    }
    projector_mean /= count;
    let v = truth.as_matrix();
    let projector_term = spectral_norm(&(projector_mean - v * v.transpose()));

    let aligned_mean = empirical_mean(&set);
    let z = procrustes_rotation_raw(v, &aligned_mean)?;
    let mean_term = spectral_norm(&(aligned_mean - v * z));
    Ok(CovarianceDiagnostic {
        lhs,
        rhs: projector_term + 2.0 * mean_term,
    })
}
