//! Shared helpers: an independent vector-valued filter and planted instances.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use robust_eig::linalg::OrthonormalFrame;
use robust_eig::robust_mean::{AdaptiveConfig, FilterConfig, ProxyMode, RemovalMode};
use robust_eig::seeding::{derive_seed, rng_from_seed, GRID};
use robust_eig::synthetic::haar_frame;

pub type Vector = Vec<f64>;

/// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix stored row-major.
/// Returns (largest eigenvalue, its unit eigenvector).
pub fn jacobi_top_eigenpair(a: &[Vec<f64>]) -> (f64, Vector) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let best = (0..n).fold(0, |b, i| if a[i][i] > a[b][b] { i } else { b });
    (a[best][best], (0..n).map(|k| v[k][best]).collect())
}

fn mean(xs: &[Vector], active: &[usize]) -> Vector {
    let d = xs[0].len();
    let mut out = vec![0.0; d];
    for &i in active {
        for k in 0..d {
            out[k] += xs[i][k];
        }
    }
    out.iter().map(|s| s / active.len() as f64).collect()
}

fn covariance(xs: &[Vector], active: &[usize], theta: &[f64]) -> Vec<Vec<f64>> {
    let d = theta.len();
    let mut c = vec![vec![0.0; d]; d];
    for &i in active {
        let dev: Vector = (0..d).map(|k| xs[i][k] - theta[k]).collect();
        for a in 0..d {
            for b in 0..d {
                c[a][b] += dev[a] * dev[b];
            }
        }
    }
    for row in &mut c {
        for x in row.iter_mut() {
            *x /= active.len() as f64;
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct VecOutcome {
    pub mean: Vector,
    pub removed: Vec<usize>,
    pub top: f64,
    pub floor_reached: bool,
}

pub fn vec_filter(xs: &[Vector], cfg: &FilterConfig) -> VecOutcome {
    let floor = ((cfg.min_active_fraction * xs.len() as f64).ceil() as usize).max(1);
    let mut rng: ChaCha8Rng = rng_from_seed(cfg.rng_seed);
    let mut active: Vec<usize> = (0..xs.len()).collect();
    let mut removed = Vec::new();
    loop {
        let theta = mean(xs, &active);
        let (lambda, v) = jacobi_top_eigenpair(&covariance(xs, &active, &theta));
        if lambda < 18.0 * cfg.lambda_ub || active.len() <= floor {
            return VecOutcome {
                mean: theta,
                removed,
                top: lambda,
                floor_reached: lambda >= 18.0 * cfg.lambda_ub,
            };
        }
        let scores: Vec<f64> = active
            .iter()
            .map(|&i| {
                let dot: f64 = (0..theta.len()).map(|k| (xs[i][k] - theta[k]) * v[k]).sum();
                dot * dot
            })
            .collect();
        let total: f64 = scores.iter().sum();
        let pos = match cfg.removal_mode {
            RemovalMode::DeterministicMax => {
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = i;
                    }
                }
                best
            }
            RemovalMode::RandomizedProportional => {
                let target = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = None;
                let mut last = 0;
                for (i, &s) in scores.iter().enumerate() {
                    if s > 0.0 {
                        last = i;
                        acc += s;
                        if acc > target {
                            pick = Some(i);
                            break;
                        }
                    }
                }
                pick.unwrap_or(last)
            }
        };
        removed.push(active.remove(pos));
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn vec_proxy(lambda: f64, cfg: &AdaptiveConfig) -> f64 {
    match cfg.proxy_mode {
        ProxyMode::Simplified => (lambda * cfg.alpha).sqrt(),
        ProxyMode::Theory => {
            18.0 * (5.0 * lambda).sqrt()
                * (cfg.alpha + 4.0 * (1.0 / cfg.failure_prob).ln() / cfg.m as f64).sqrt()
        }
    }
}

/// Sequential grid search with the violation rule, written without any caching tricks.
pub fn vec_adaptive(xs: &[Vector], cfg: &AdaptiveConfig, template: &FilterConfig) -> VecOutcome {
    let j_lo = cfg.lambda_lb.log2().floor() as i32;
    let j_hi = cfg.lambda_ub.log2().ceil() as i32;
    let mut history: Vec<(i32, VecOutcome)> = Vec::new();
    let mut j = j_hi;
    while j >= j_lo {
        let lam = 2f64.powi(j);
        let fc = FilterConfig {
            lambda_ub: lam,
            rng_seed: derive_seed(&[template.rng_seed, GRID, j as i64 as u64]),
            ..*template
        };
        let out = vec_filter(xs, &fc);
        for (k, prev) in &history {
            if euclid(&out.mean, &prev.mean) > vec_proxy(lam, cfg) + vec_proxy(2f64.powi(*k), cfg) {
                return history.last().unwrap().1.clone();
            }
        }
        history.push((j, out));
        j -= 1;
    }
    history.pop().unwrap().1
}

pub fn column(m: &DMatrix<f64>) -> Vector {
    m.column(0).iter().copied().collect()
}

/// `count` vectors in R^d: a clean Gaussian cloud with a planted far block.
pub fn planted_vectors(rng: &mut ChaCha8Rng, d: usize, clean: usize, bad: usize) -> Vec<DMatrix<f64>> {
    let center: Vector = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift: Vector = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let spread = rng.gen_range(0.05..0.5);
    let mut out = Vec::with_capacity(clean + bad);
    for i in 0..clean + bad {
        let base: Vector = if i < clean {
            center.clone()
        } else {
            center.iter().zip(&shift).map(|(c, s)| c + 3.0 * s).collect()
        };
        let x: Vector = base
            .iter()
            .map(|b| b + spread * rng.gen_range(-1.0..1.0))
            .collect();
        out.push(DMatrix::from_column_slice(d, 1, &x));
    }
    out
}

/// A frame at subspace distance exactly `sin(angle)` from `v`, obtained by
/// tilting every column of `v` towards an orthonormal complement direction.
pub fn tilted_frame(v: &OrthonormalFrame, angle: f64, rng: &mut ChaCha8Rng) -> OrthonormalFrame {
    let (d, r) = (v.d(), v.r());
    let vm = v.as_matrix();
    let g = robust_eig::synthetic::standard_gaussian_matrix(d, r, rng);
    let perp = &g - vm * (vm.transpose() * &g);
    let w = robust_eig::linalg::polar_orthonormalize(&perp).unwrap();
    let q = robust_eig::synthetic::haar_orthogonal(r, rng);
    let tilted = vm * angle.cos() + w.as_matrix() * angle.sin();
    OrthonormalFrame::new(tilted * q).unwrap()
}

pub fn random_frame(d: usize, r: usize, seed: u64) -> OrthonormalFrame {
    haar_frame(d, r, &mut rng_from_seed(seed)).unwrap()
}
