//! Robust reference selection among candidate frames.
//!
//! For each candidate `i`, `ε_i` is the smallest radius whose closed
//! subspace-distance ball around `Y_i` holds strictly more than `m/2` of the
//! candidates (itself included). The candidate with the smallest `ε_i` is
//! returned. If a strict majority lies within `ε` of some frame `V`, the
//! winner lies within `3ε` of `V`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{subspace_dist, OrthonormalFrame};

#[derive(Debug, Clone)]
pub struct ReferenceResult {
    pub index: usize,
    pub frame: OrthonormalFrame,
    /// `ε` achieved by the winner.
    pub radius: f64,
}

/// Symmetric m×m matrix of pairwise subspace distances, zero diagonal.
pub fn pairwise_distances(frames: &[OrthonormalFrame]) -> Result<DMatrix<f64>> {
    let m = frames.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .map(|j| subspace_dist(&frames[i], &frames[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut dist = DMatrix::zeros(m, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, value) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            dist[(i, j)] = value;
            dist[(j, i)] = value;
        }
    }
    Ok(dist)
}

/// `ε_i` for every candidate: the `(⌊m/2⌋+1)`-th smallest entry of row `i`
/// (self-distance 0 included).
pub fn majority_radii(dist: &DMatrix<f64>) -> Vec<f64> {
    let m = dist.nrows();
    let rank = m / 2;
    (0..m)
        .map(|i| {
            let mut row: Vec<f64> = dist.row(i).iter().copied().collect();
            let (_, kth, _) = row.select_nth_unstable_by(rank, f64::total_cmp);
            *kth
        })
        .collect()
}

pub fn robust_reference(frames: &[OrthonormalFrame]) -> Result<ReferenceResult> {
    let (reference, _) = robust_reference_with_distances(frames)?;
    Ok(reference)
}

/// Same as [`robust_reference`], also handing back the distance matrix.
pub fn robust_reference_with_distances(
    frames: &[OrthonormalFrame],
) -> Result<(ReferenceResult, DMatrix<f64>)> {
    let first = frames.first().ok_or(Error::Empty("reference candidates"))?;
    if let Some(bad) = frames.iter().find(|f| f.as_matrix().shape() != first.as_matrix().shape()) {
        return Err(Error::shape(first.as_matrix().shape(), bad.as_matrix().shape()));
    }
    let dist = pairwise_distances(frames)?;
    let radii = majority_radii(&dist);
    // Strict `<` keeps the lowest index on ties.
    let mut index = 0;
    for (i, &eps) in radii.iter().enumerate() {
        if eps < radii[index] {
            index = i;
        }
    }
    let reference = ReferenceResult {
        index,
        frame: frames[index].clone(),
        radius: radii[index],
    };
    Ok((reference, dist))
}
