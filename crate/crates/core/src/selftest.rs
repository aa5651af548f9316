//! Quick built-in property checks, run by `robust-eig selftest`.

use nalgebra::DMatrix;

use crate::linalg::{orthonormality_drift, procrustes_rotation, subspace_dist, OrthonormalFrame};
use crate::reference::robust_reference;
use crate::robust_mean::{filter, FilterConfig, MatrixSampleSet, RemovalMode};
use crate::seeding::rng_from_seed;
use crate::synthetic::{haar_frame, haar_orthogonal};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

type Outcome = crate::Result<bool>;

fn dist_properties() -> Outcome {
    let mut rng = rng_from_seed(11);
    for _ in 0..20 {
        let a = haar_frame(12, 3, &mut rng)?;
        let b = haar_frame(12, 3, &mut rng)?;
        let c = haar_frame(12, 3, &mut rng)?;
        let ab = subspace_dist(&a, &b)?;
        if (ab - subspace_dist(&b, &a)?).abs() > 1e-10 {
            return Ok(false);
        }
        if ab > subspace_dist(&a, &c)? + subspace_dist(&c, &b)? + 1e-10 {
            return Ok(false);
        }
        let rotated = a.rotate(&haar_orthogonal(3, &mut rng))?;
        if subspace_dist(&rotated, &a)? > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn procrustes_recovers_rotation() -> Outcome {
    let mut rng = rng_from_seed(12);
    for _ in 0..20 {
        let y = haar_frame(10, 4, &mut rng)?;
        let q = haar_orthogonal(4, &mut rng);
        let target = y.rotate(&q)?;
        let z = procrustes_rotation(&y, &target)?;
        if (&z - &q).amax() > 1e-8 || orthonormality_drift(&z) > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reference_ignores_minority() -> Outcome {
    let mut rng = rng_from_seed(13);
    let truth = haar_frame(10, 2, &mut rng)?;
    let mut frames = vec![truth.clone(); 6];
    for _ in 0..5 {
        frames.push(haar_frame(10, 2, &mut rng)?);
    }
    let out = robust_reference(&frames)?;
    Ok(out.index < 6 && out.radius < 1e-10)
}

fn filter_removes_outliers() -> Outcome {
    let mut rng = rng_from_seed(14);
    let mut samples: Vec<DMatrix<f64>> = (0..45)
        .map(|_| haar_frame(8, 1, &mut rng).map(|f| f.into_matrix() * 0.1))
        .collect::<crate::Result<_>>()?;
    let spike = OrthonormalFrame::standard_basis(8, &[0])?.into_matrix() * 20.0;
    samples.extend(std::iter::repeat(spike).take(5));
    let set = MatrixSampleSet::new(samples)?;
    let out = filter(&set, &FilterConfig::new(0.05).with_mode(RemovalMode::DeterministicMax))?;
    Ok((45..50).all(|i| out.removed.contains(&i)))
}

/// Runs every check; a check that errors counts as failed.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Outcome); 4] = [
        ("subspace distance is a rotation-invariant metric", dist_properties),
        ("procrustes recovers a known rotation", procrustes_recovers_rotation),
        ("reference ignores a minority of outliers", reference_ignores_minority),
        ("filter removes gross outliers", filter_removes_outliers),
    ];
    checks
        .into_iter()
        .map(|(name, f)| Check {
            name,
            passed: f().unwrap_or(false),
        })
        .collect()
}
