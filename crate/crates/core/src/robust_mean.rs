//! Robust mean estimation for matrix-valued samples.
//!
//! [`filter`] repeatedly removes one sample according to its projection onto
//! the top eigenvector of the empirical covariance until that eigenvalue
//! drops below `18·λ_ub`. [`adaptive_filter`] runs it over a dyadic grid of
//! `λ_ub` values and picks the smallest grid point whose estimate is
//! consistent with every coarser one.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{leading_eigenpair, spectral_norm, OrthonormalFrame, SymmetricMatrix};
use crate::seeding::{self, derive_seed, rng_from_seed};

/// Filtering stops once the top covariance eigenvalue is below this
/// multiple of `λ_ub`.
pub const THRESHOLD_FACTOR: f64 = 18.0;

/// A list of equally shaped d×r samples and the active subset `S`.
#[derive(Debug, Clone)]
pub struct MatrixSampleSet {
    samples: Vec<DMatrix<f64>>,
    active: Vec<usize>,
}

impl MatrixSampleSet {
    /// All samples active.
    pub fn new(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        let active = (0..samples.len()).collect();
        Self::with_active(samples, active)
    }

    pub fn with_active(samples: Vec<DMatrix<f64>>, mut active: Vec<usize>) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("sample set"))?;
        let shape = first.shape();
        if let Some(bad) = samples.iter().find(|s| s.shape() != shape) {
            return Err(Error::shape(shape, bad.shape()));
        }
        active.sort_unstable();
        active.dedup();
        if active.is_empty() {
            return Err(Error::Empty("active set"));
        }
        if let Some(&i) = active.iter().find(|&&i| i >= samples.len()) {
            return Err(Error::invalid(
                "active",
                format!("index {i} out of range for {} samples", samples.len()),
            ));
        }
        Ok(Self { samples, active })
    }

    pub fn from_frames(frames: &[OrthonormalFrame]) -> Result<Self> {
        Self::new(frames.iter().map(|f| f.as_matrix().clone()).collect())
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    /// Active indices, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Total number of samples `m`, active or not.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.samples[0].shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalMode {
    /// Remove sample `i` with probability `τ_i / Σ τ_j`.
    #[default]
    RandomizedProportional,
    /// Remove the largest score, lowest index on ties.
    DeterministicMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub lambda_ub: f64,
    pub removal_mode: RemovalMode,
    /// Filtering never shrinks the active set below `⌈fraction·m⌉`.
    pub min_active_fraction: f64,
    pub rng_seed: u64,
}

impl FilterConfig {
    pub fn new(lambda_ub: f64) -> Self {
        Self {
            lambda_ub,
            removal_mode: RemovalMode::default(),
            min_active_fraction: 0.5,
            rng_seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: RemovalMode) -> Self {
        self.removal_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_ub > 0.0 && self.lambda_ub.is_finite()) {
            return Err(Error::invalid("lambda_ub", format!("need > 0, got {}", self.lambda_ub)));
        }
        if !(self.min_active_fraction > 0.0 && self.min_active_fraction <= 1.0) {
            return Err(Error::invalid(
                "min_active_fraction",
                format!("need value in (0, 1], got {}", self.min_active_fraction),
            ));
        }
        Ok(())
    }

    fn floor(&self, m: usize) -> usize {
        ((self.min_active_fraction * m as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyMode {
    /// `18·√(5λ)·(α + 4·ln(1/p)/m)^{1/2}`.
    Theory,
    /// `√(λα)`.
    #[default]
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub lambda_lb: f64,
    pub lambda_ub: f64,
    pub failure_prob: f64,
    pub alpha: f64,
    pub proxy_mode: ProxyMode,
    pub m: usize,
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_lb > 0.0 && self.lambda_lb.is_finite()) {
            return Err(Error::invalid("lambda_lb", format!("need > 0, got {}", self.lambda_lb)));
        }
        if !(self.lambda_ub >= self.lambda_lb && self.lambda_ub.is_finite()) {
            return Err(Error::invalid(
                "lambda_ub",
                format!("need lambda_lb <= lambda_ub, got {} > {}", self.lambda_lb, self.lambda_ub),
            ));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::invalid(
                "failure_prob",
                format!("need 0 < p < 1, got {}", self.failure_prob),
            ));
        }
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(Error::invalid("alpha", format!("need 0 <= alpha < 0.5, got {}", self.alpha)));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "need at least one sample"));
        }
        Ok(())
    }

    /// Whether `α + 6·ln(1/p)/m < 1/12`, the regime covered by the error
    /// guarantees. Larger α is accepted; the guarantee just does not apply.
    pub fn within_guarantee_regime(&self) -> bool {
        self.alpha + 6.0 * (1.0 / self.failure_prob).ln() / (self.m as f64) < 1.0 / 12.0
    }

    /// Grid exponents `(j_lo, j_hi) = (⌊log₂ λ_lb⌋, ⌈log₂ λ_ub⌉)`.
    pub fn grid_exponents(&self) -> (i32, i32) {
        (
            self.lambda_lb.log2().floor() as i32,
            self.lambda_ub.log2().ceil() as i32,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ThresholdMet,
    FloorReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub mean: DMatrix<f64>,
    /// Sample indices in removal order.
    pub removed: Vec<usize>,
    pub final_top_eigenvalue: f64,
    pub terminated_by: Termination,
    /// The `λ_ub` this outcome was filtered at.
    pub lambda_ub: f64,
}

/// `θ_S = (1/|S|) Σ_{i∈S} X_i`.
pub fn empirical_mean(set: &MatrixSampleSet) -> DMatrix<f64> {
    mean_of(&set.samples, &set.active)
}

/// `Σ_S = (1/|S|) Σ_{i∈S} (X_i − θ_S)(X_i − θ_S)ᵀ`, a d×d PSD matrix.
pub fn empirical_covariance(set: &MatrixSampleSet) -> SymmetricMatrix {
    let theta = empirical_mean(set);
    covariance_of(&set.samples, &set.active, &theta)
}

fn mean_of(samples: &[DMatrix<f64>], active: &[usize]) -> DMatrix<f64> {
    let (d, r) = samples[active[0]].shape();
    let mut sum = DMatrix::zeros(d, r);
    for &i in active {
        sum += &samples[i];
    }
    sum / active.len() as f64
}

fn covariance_of(samples: &[DMatrix<f64>], active: &[usize], theta: &DMatrix<f64>) -> SymmetricMatrix {
    let (d, r) = theta.shape();
    // Deviations stacked side by side: Σ = D·Dᵀ / |S|.
    let mut stacked = DMatrix::zeros(d, r * active.len());
    for (slot, &i) in active.iter().enumerate() {
        stacked
            .columns_mut(slot * r, r)
            .copy_from(&(&samples[i] - theta));
    }
    let cov = (&stacked * stacked.transpose()) / active.len() as f64;
    SymmetricMatrix::symmetrize(cov)
}

/// Iterative spectral filtering at a fixed `λ_ub`.
pub fn filter(set: &MatrixSampleSet, config: &FilterConfig) -> Result<FilterOutcome> {
    config.validate()?;
    let samples = &set.samples;
    let threshold = THRESHOLD_FACTOR * config.lambda_ub;
    let floor = config.floor(samples.len());
    let mut rng = rng_from_seed(config.rng_seed);
    let mut active = set.active.clone();
    let mut removed = Vec::new();

    loop {
        let theta = mean_of(samples, &active);
        let cov = covariance_of(samples, &active, &theta);
        let (lambda, v) = leading_eigenpair(&cov)?;
        let outcome = |terminated_by, removed| FilterOutcome {
            mean: theta.clone(),
            removed,
            final_top_eigenvalue: lambda,
            terminated_by,
            lambda_ub: config.lambda_ub,
        };
        if lambda < threshold {
            return Ok(outcome(Termination::ThresholdMet, removed));
        }
        if active.len() <= floor {
            return Ok(outcome(Termination::FloorReached, removed));
        }

        let scores: Vec<f64> = active
            .iter()
            .map(|&i| ((&samples[i] - &theta).transpose() * &v).norm_squared())
            .collect();
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateScores { lambda });
        }
        let pos = match config.removal_mode {
            RemovalMode::DeterministicMax => argmax_first(&scores),
            RemovalMode::RandomizedProportional => sample_proportional(&scores, total, &mut rng),
        };
        removed.push(active.remove(pos));
    }
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn sample_proportional<R: Rng>(scores: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            last_positive = i;
            acc += s;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

/// Error proxy `f(λ)` used for the grid consistency check.
pub fn error_proxy(lambda: f64, config: &AdaptiveConfig) -> f64 {
    match config.proxy_mode {
        ProxyMode::Theory => {
            let slack = config.alpha + 4.0 * (1.0 / config.failure_prob).ln() / config.m as f64;
            THRESHOLD_FACTOR * (5.0 * lambda).sqrt() * slack.sqrt()
        }
        ProxyMode::Simplified => (lambda * config.alpha).sqrt(),
    }
}

/// Every grid evaluation made by [`adaptive_filter_detailed`].
#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub selected: FilterOutcome,
    /// Exponent `j` of the selected `λ = 2^j`.
    pub selected_exponent: i32,
    /// Exponent `j` where a consistency violation was detected, if any.
    pub violation_at: Option<i32>,
    /// Grid outcomes in visiting order (descending `j`), up to the stopping point.
    pub visited: Vec<(i32, FilterOutcome)>,
}

pub fn adaptive_filter(
    set: &MatrixSampleSet,
    config: &AdaptiveConfig,
    template: &FilterConfig,
) -> Result<FilterOutcome> {
    adaptive_filter_detailed(set, config, template).map(|out| out.selected)
}

/// Grid search over `λ = 2^j`, `j = j_hi, …, j_lo`.
///
/// At each `j` the estimate is checked against every coarser `k > j`; on
/// the first violation `‖θ_{2^j} − θ_{2^k}‖₂ > f(2^j) + f(2^k)` the estimate
/// at `j + 1` is returned. Grid point `j` filters with the seed
/// `[template.rng_seed, GRID, j]`.
pub fn adaptive_filter_detailed(
    set: &MatrixSampleSet,
    config: &AdaptiveConfig,
    template: &FilterConfig,
) -> Result<AdaptiveOutcome> {
    config.validate()?;
    template.validate()?;
    let (j_lo, j_hi) = config.grid_exponents();

    // Evaluated eagerly in parallel; errors only surface if the sequential
    // scan reaches them.
    let mut evaluations: Vec<(i32, Result<FilterOutcome>)> = (j_lo..=j_hi)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| {
            let cfg = FilterConfig {
                lambda_ub: 2f64.powi(j),
                rng_seed: derive_seed(&[template.rng_seed, seeding::GRID, j as i64 as u64]),
                ..*template
            };
            (j, filter(set, &cfg))
        })
        .collect();

    let mut visited: Vec<(i32, FilterOutcome)> = Vec::with_capacity(evaluations.len());
    for (j, evaluation) in evaluations.drain(..) {
        let outcome = evaluation?;
        let f_j = error_proxy(2f64.powi(j), config);
        let violated = visited.iter().any(|(k, coarse)| {
            let gap = spectral_norm(&(&outcome.mean - &coarse.mean));
            gap > f_j + error_proxy(2f64.powi(*k), config)
        });
        if violated {
            let (_, previous) = visited.last().expect("violation requires a coarser grid point");
            return Ok(AdaptiveOutcome {
                selected: previous.clone(),
                selected_exponent: j + 1,
                violation_at: Some(j),
                visited,
            });
        }
        visited.push((j, outcome));
    }
    let (_, last) = visited.last().expect("grid is never empty");
    Ok(AdaptiveOutcome {
        selected: last.clone(),
        selected_exponent: j_lo,
        violation_at: None,
        visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_samples(count: usize, d: usize, r: usize, seed: u64) -> Vec<DMatrix<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| crate::synthetic::standard_gaussian_matrix(d, r, &mut rng))
            .collect()
    }

    fn adaptive(lb: f64, ub: f64, alpha: f64, m: usize) -> AdaptiveConfig {
        AdaptiveConfig {
            lambda_lb: lb,
            lambda_ub: ub,
            failure_prob: 0.01,
            alpha,
            proxy_mode: ProxyMode::Simplified,
            m,
        }
    }

    #[test]
    fn sample_set_validation() {
        assert!(MatrixSampleSet::new(vec![]).is_err());
        assert!(MatrixSampleSet::new(vec![DMatrix::zeros(2, 1), DMatrix::zeros(3, 1)]).is_err());
        assert!(MatrixSampleSet::with_active(vec![DMatrix::zeros(2, 1)], vec![]).is_err());
        assert!(MatrixSampleSet::with_active(vec![DMatrix::zeros(2, 1)], vec![1]).is_err());
        let set = MatrixSampleSet::with_active(random_samples(4, 2, 1, 0), vec![3, 1, 1]).unwrap();
        assert_eq!(set.active(), &[1, 3]);
    }

    #[test]
    fn mean_examples() {
        let xs = random_samples(3, 4, 2, 1);
        let single = MatrixSampleSet::new(vec![xs[0].clone()]).unwrap();
        assert_eq!(empirical_mean(&single), xs[0]);

        let pm = MatrixSampleSet::new(vec![xs[0].clone(), -xs[0].clone()]).unwrap();
        assert_eq!(empirical_mean(&pm).amax(), 0.0);

        let set = MatrixSampleSet::new(xs.clone()).unwrap();
        let theta = empirical_mean(&set);
        for i in 0..4 {
            for j in 0..2 {
                let want = (xs[0][(i, j)] + xs[1][(i, j)] + xs[2][(i, j)]) / 3.0;
                assert!((theta[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_examples() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, -1.0, 0.0, 4.0]);
        let same = MatrixSampleSet::new(vec![x.clone(); 4]).unwrap();
        assert!(empirical_covariance(&same).as_matrix().amax() < 1e-28);

        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let pm = MatrixSampleSet::new(vec![e1.clone(), -e1.clone()]).unwrap();
        let cov = empirical_covariance(&pm);
        assert_eq!(cov.as_matrix(), &(&e1 * e1.transpose()));

        let xs = random_samples(5, 4, 3, 2);
        let set = MatrixSampleSet::new(xs.clone()).unwrap();
        let theta = empirical_mean(&set);
        let cov = empirical_covariance(&set);
        for a in 0..4 {
            for b in 0..4 {
                let mut want = 0.0;
                for x in &xs {
                    for c in 0..3 {
                        want += (x[(a, c)] - theta[(a, c)]) * (x[(b, c)] - theta[(b, c)]);
                    }
                }
                want /= 5.0;
                assert!((cov.as_matrix()[(a, b)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn filter_identical_samples_is_noop() {
        let x = random_samples(1, 5, 2, 3).remove(0);
        let set = MatrixSampleSet::new(vec![x.clone(); 8]).unwrap();
        for mode in [RemovalMode::DeterministicMax, RemovalMode::RandomizedProportional] {
            let out = filter(&set, &FilterConfig::new(1e-6).with_mode(mode)).unwrap();
            assert!(out.removed.is_empty());
            assert_eq!(out.terminated_by, Termination::ThresholdMet);
            assert!((&out.mean - &x).amax() < 1e-14);
        }
    }

    #[test]
    fn filter_single_active_returns_it() {
        let xs = random_samples(3, 4, 1, 4);
        let set = MatrixSampleSet::with_active(xs.clone(), vec![2]).unwrap();
        let out = filter(&set, &FilterConfig::new(1e-9)).unwrap();
        assert_eq!(out.mean, xs[2]);
        assert!(out.removed.is_empty());
    }

    #[test]
    fn filter_threshold_self_bound_is_noop() {
        let xs = random_samples(30, 6, 2, 5);
        let set = MatrixSampleSet::new(xs).unwrap();
        let lambda = spectral_norm(empirical_covariance(&set).as_matrix());
        let out = filter(&set, &FilterConfig::new(lambda)).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.mean, empirical_mean(&set));
        assert!(out.final_top_eigenvalue < THRESHOLD_FACTOR * lambda);
    }

    #[test]
    fn filter_removes_gross_outliers_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let center = crate::synthetic::standard_gaussian_matrix(5, 2, &mut rng);
        let mut xs: Vec<DMatrix<f64>> = (0..10)
            .map(|_| &center + crate::synthetic::standard_gaussian_matrix(5, 2, &mut rng) * 0.01)
            .collect();
        let inlier_mean = mean_of(&xs, &(0..10).collect::<Vec<_>>());
        let mut shift = DMatrix::zeros(5, 2);
        shift[(0, 0)] = 50.0;
        xs.push(&center + &shift);
        shift[(0, 0)] = 0.0;
        shift[(3, 1)] = -40.0;
        xs.push(&center + &shift);
        let set = MatrixSampleSet::new(xs).unwrap();
        let out = filter(
            &set,
            &FilterConfig::new(1e-3).with_mode(RemovalMode::DeterministicMax),
        )
        .unwrap();
        assert_eq!(out.removed, vec![10, 11]);
        assert_eq!(out.terminated_by, Termination::ThresholdMet);
        assert!((&out.mean - &inlier_mean).amax() < 1e-6);
    }

    #[test]
    fn filter_stops_at_floor() {
        let xs = random_samples(10, 3, 1, 7);
        let set = MatrixSampleSet::new(xs).unwrap();
        for mode in [RemovalMode::DeterministicMax, RemovalMode::RandomizedProportional] {
            let out = filter(&set, &FilterConfig::new(1e-12).with_mode(mode)).unwrap();
            assert_eq!(out.terminated_by, Termination::FloorReached);
            assert_eq!(out.removed.len(), 5);
            let mut sorted = out.removed.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 5);
        }
    }

    #[test]
    fn filter_rejects_bad_config() {
        let set = MatrixSampleSet::new(random_samples(3, 2, 1, 8)).unwrap();
        assert!(filter(&set, &FilterConfig::new(0.0)).is_err());
        let mut cfg = FilterConfig::new(1.0);
        cfg.min_active_fraction = 0.0;
        assert!(filter(&set, &cfg).is_err());
    }

    #[test]
    fn randomized_filter_is_seed_deterministic() {
        let set = MatrixSampleSet::new(random_samples(20, 4, 2, 9)).unwrap();
        let cfg = FilterConfig::new(1e-3).with_seed(44);
        assert_eq!(filter(&set, &cfg).unwrap(), filter(&set, &cfg).unwrap());
    }

    #[test]
    fn proportional_sampling_skips_zero_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let pick = sample_proportional(&[0.0, 2.0, 0.0, 1.0], 3.0, &mut rng);
            assert!(pick == 1 || pick == 3);
        }
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), 1);
    }

    #[test]
    fn proxy_examples() {
        let m = 40;
        let mut cfg = adaptive(0.1, 1.0, 0.0, m);
        cfg.proxy_mode = ProxyMode::Theory;
        cfg.failure_prob = (-(m as f64) / 4.0).exp();
        assert!((error_proxy(5.0, &cfg) - 90.0).abs() < 1e-10);

        let cfg = adaptive(0.1, 1.0, 0.25, m);
        assert!((error_proxy(4.0, &cfg) - 1.0).abs() < 1e-15);

        let mut cfg = adaptive(0.1, 1.0, 0.05, 150);
        cfg.proxy_mode = ProxyMode::Theory;
        // 18·√5·(0.05 + 4·ln(100)/150)^{1/2}, evaluated separately
        assert!((error_proxy(1.0, &cfg) - 16.731_507_763_339_37).abs() < 1e-9);
    }

    #[test]
    fn grid_exponents() {
        assert_eq!(adaptive(0.3, 6.0, 0.1, 10).grid_exponents(), (-2, 3));
        assert_eq!(adaptive(4.0, 4.0, 0.1, 10).grid_exponents(), (2, 2));
    }

    #[test]
    fn adaptive_config_validation() {
        assert!(adaptive(0.0, 1.0, 0.1, 10).validate().is_err());
        assert!(adaptive(2.0, 1.0, 0.1, 10).validate().is_err());
        assert!(adaptive(0.5, 1.0, 0.5, 10).validate().is_err());
        let mut cfg = adaptive(0.5, 1.0, 0.1, 10);
        cfg.failure_prob = 1.0;
        assert!(cfg.validate().is_err());
        assert!(!adaptive(0.5, 1.0, 0.45, 150).within_guarantee_regime());
        assert!(adaptive(0.5, 1.0, 0.0, 100_000).within_guarantee_regime());
    }

    #[test]
    fn adaptive_identical_samples() {
        let x = random_samples(1, 4, 2, 11).remove(0);
        let set = MatrixSampleSet::new(vec![x.clone(); 6]).unwrap();
        let out = adaptive_filter_detailed(&set, &adaptive(0.01, 6.0, 0.0, 6), &FilterConfig::new(1.0)).unwrap();
        assert_eq!(out.violation_at, None);
        assert_eq!(out.selected_exponent, -7);
        assert!((&out.selected.mean - &x).amax() < 1e-14);
        assert_eq!(out.visited.len(), 11);
    }

    #[test]
    fn adaptive_single_point_grid_is_one_filter_call() {
        let set = MatrixSampleSet::new(random_samples(12, 3, 2, 12)).unwrap();
        let template = FilterConfig::new(1.0).with_seed(5);
        let out = adaptive_filter(&set, &adaptive(0.0625, 0.0625, 0.1, 12), &template).unwrap();
        let direct = filter(
            &set,
            &FilterConfig {
                lambda_ub: 0.0625,
                rng_seed: derive_seed(&[5, seeding::GRID, (-4i64) as u64]),
                ..template
            },
        )
        .unwrap();
        assert_eq!(out, direct);
    }

    #[test]
    fn adaptive_violation_returns_coarser_estimate() {
        // A tight cluster plus a far block: coarse grid points keep the
        // block, fine ones strip it, and with α = 0 any change is a violation.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut xs: Vec<DMatrix<f64>> = (0..8)
            .map(|_| crate::synthetic::standard_gaussian_matrix(3, 1, &mut rng) * 0.01)
            .collect();
        xs.extend(std::iter::repeat(DMatrix::from_column_slice(3, 1, &[5.0, 0.0, 0.0])).take(2));
        let set = MatrixSampleSet::new(xs).unwrap();
        let out = adaptive_filter_detailed(
            &set,
            &adaptive(1e-4, 4.0, 0.0, 10),
            &FilterConfig::new(1.0).with_mode(RemovalMode::DeterministicMax),
        )
        .unwrap();
        let j = out.violation_at.expect("violation");
        assert_eq!(out.selected_exponent, j + 1);
        assert!(out.selected.removed.is_empty());
        assert_eq!(out.visited.last().unwrap().0, j + 1);
    }
}
