//! Procrustes fixing: rotate every response onto a common reference.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{procrustes_rotation, OrthonormalFrame};

/// `out[i] = frames[i] · argmin_Z ‖frames[i]·Z − reference‖_F`.
///
/// Applied to every frame, corrupted or not; spans are unchanged.
pub fn procrustes_fixing(
    frames: &[OrthonormalFrame],
    reference: &OrthonormalFrame,
) -> Result<Vec<OrthonormalFrame>> {
    frames
        .par_iter()
        .map(|frame| frame.rotate(&procrustes_rotation(frame, reference)?))
        .collect()
}
