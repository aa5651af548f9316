//! Dense symmetric linear algebra and subspace geometry.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (d up to a few hundred) so full dense decompositions are used throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Orthonormality drift accepted as-is on construction.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// Drift above [`ORTHONORMAL_TOL`] but below this is repaired by polar
/// orthonormalization; anything larger is rejected.
pub const ORTHONORMAL_REPAIR_TOL: f64 = 1e-4;

const SYMMETRY_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-12;

/// A d×r matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    data: DMatrix<f64>,
}

impl OrthonormalFrame {
    /// Wraps `data`, checking `‖UᵀU − I‖₂ ≤ 1e-8`.
    ///
    /// Small drift (up to [`ORTHONORMAL_REPAIR_TOL`]) is repaired with the
    /// polar factor; larger drift is an error.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (d, r) = data.shape();
        if r == 0 || r > d {
            return Err(Error::invalid(
                "frame",
                format!("need 1 <= r <= d, got d={d}, r={r}"),
            ));
        }
        let drift = orthonormality_drift(&data);
        if drift <= ORTHONORMAL_TOL {
            Ok(Self { data })
        } else if drift <= ORTHONORMAL_REPAIR_TOL {
            polar_orthonormalize(&data)
        } else {
            Err(Error::NotOrthonormal { drift })
        }
    }

    /// Leading `r` columns of a square orthogonal matrix.
    pub fn leading_columns(q: &DMatrix<f64>, r: usize) -> Result<Self> {
        if r > q.ncols() {
            return Err(Error::invalid(
                "r",
                format!("requested {r} columns of a matrix with {}", q.ncols()),
            ));
        }
        Self::new(q.columns(0, r).into_owned())
    }

    /// Standard basis vectors `e_{cols[0]}, e_{cols[1]}, …` in ℝᵈ.
    pub fn standard_basis(d: usize, cols: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(d, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            if c >= d {
                return Err(Error::invalid("cols", format!("index {c} out of range for d={d}")));
            }
            m[(c, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    pub fn r(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// `self · z` for an orthogonal r×r `z`.
    pub fn rotate(&self, z: &DMatrix<f64>) -> Result<Self> {
        if z.shape() != (self.r(), self.r()) {
            return Err(Error::shape((self.r(), self.r()), z.shape()));
        }
        Self::new(&self.data * z)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::shape(self.data.shape(), other.data.shape()));
        }
        Ok(())
    }
}

/// A real symmetric d×d matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Symmetrizes `data` as `(M + Mᵀ)/2`. Rejects non-square input and
    /// input whose asymmetry is beyond rounding (relative 1e-8).
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::shape((data.nrows(), data.nrows()), data.shape()));
        }
        let scale = data.amax().max(1.0);
        let asymmetry = (&data - data.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self::symmetrize(data))
    }

    pub(crate) fn symmetrize(data: DMatrix<f64>) -> Self {
        let sym = (&data + data.transpose()) * 0.5;
        Self { data: sym }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            data: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            data: DMatrix::identity(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// Eigendecomposition `M = QΛQᵀ` with eigenvalues sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn of(m: &SymmetricMatrix) -> Result<Self> {
        let d = m.dim();
        let eig = SymmetricEigen::try_new(m.data.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(d, d);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // Gram matrix on the smaller side keeps the eigenproblem small.
    let gram = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.max().max(0.0);
    if top > 1e-20 {
        top.sqrt()
    } else {
        // Squaring loses everything below ~1e-10; fall back to SVD.
        SVD::new(m.clone(), false, false).singular_values.max()
    }
}

/// `‖UᵀU − I‖₂`.
pub fn orthonormality_drift(u: &DMatrix<f64>) -> f64 {
    let r = u.ncols();
    let defect = u.transpose() * u - DMatrix::<f64>::identity(r, r);
    SymmetricEigen::new(defect).eigenvalues.amax()
}

/// Subspace distance `‖(I − UUᵀ)V‖₂`, the sine of the largest principal angle.
pub fn subspace_dist(u: &OrthonormalFrame, v: &OrthonormalFrame) -> Result<f64> {
    u.check_same_shape(v)?;
    let (u, v) = (&u.data, &v.data);
    let residual = v - u * (u.transpose() * v);
    let sigma = SVD::new(residual, false, false).singular_values.max();
    Ok(sigma.clamp(0.0, 1.0))
}

/// Orthogonal `Z = argmin_{Z ∈ O_r} ‖YZ − Y_ref‖_F` for arbitrary d×r matrices.
///
/// Closed form `Z = PQᵀ` where `YᵀY_ref = PΣQᵀ`. When `YᵀY_ref` is
/// singular the minimizer is not unique and whichever factors the SVD
/// returns are used.
pub fn procrustes_rotation_raw(y: &DMatrix<f64>, y_ref: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if y.shape() != y_ref.shape() {
        return Err(Error::shape(y_ref.shape(), y.shape()));
    }
    let cross = y.transpose() * y_ref;
    let svd = SVD::try_new(cross, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("SVD did not converge".into()))?;
    let (Some(p), Some(q_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Decomposition("SVD factors missing".into()));
    };
    Ok(p * q_t)
}

/// Orthogonal r×r rotation aligning `y` to `y_ref` in Frobenius norm.
pub fn procrustes_rotation(y: &OrthonormalFrame, y_ref: &OrthonormalFrame) -> Result<DMatrix<f64>> {
    y.check_same_shape(y_ref)?;
    procrustes_rotation_raw(&y.data, &y_ref.data)
}

/// Invariant subspace of the `r` algebraically largest eigenvalues.
pub fn top_r_eigenframe(m: &SymmetricMatrix, r: usize) -> Result<(OrthonormalFrame, Vec<f64>)> {
    let d = m.dim();
    if r == 0 || r > d {
        return Err(Error::invalid("r", format!("need 1 <= r <= {d}, got {r}")));
    }
    let decomposition = SpectralDecomposition::of(m)?;
    let frame = OrthonormalFrame::leading_columns(&decomposition.eigenvectors, r)?;
    let values = decomposition.eigenvalues.iter().take(r).copied().collect();
    Ok((frame, values))
}

/// Largest eigenvalue and a unit eigenvector for it.
pub fn leading_eigenpair(m: &SymmetricMatrix) -> Result<(f64, DVector<f64>)> {
    let decomposition = SpectralDecomposition::of(m)?;
    let v = decomposition.eigenvectors.column(0).into_owned();
    Ok((decomposition.eigenvalues[0], v))
}

/// Eigengap `δ_r = λ_r − λ_{r+1}` and normalized inverse eigengap `κ = λ₁/δ_r`.
///
/// `eigenvalues` must be sorted non-increasing with more than `r` entries.
pub fn eigengap_and_kappa(eigenvalues: &[f64], r: usize) -> Result<(f64, f64)> {
    if r == 0 || eigenvalues.len() <= r {
        return Err(Error::invalid(
            "r",
            format!("need 1 <= r < {}, got {r}", eigenvalues.len()),
        ));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("eigenvalues", "not sorted non-increasing"));
    }
    let gap = eigenvalues[r - 1] - eigenvalues[r];
    if gap <= 0.0 {
        return Err(Error::NoEigengap { gap });
    }
    Ok((gap, eigenvalues[0] / gap))
}

/// Nearest orthonormal frame to `m` in Frobenius norm (the polar factor).
pub fn polar_orthonormalize(m: &DMatrix<f64>) -> Result<OrthonormalFrame> {
    let (d, r) = m.shape();
    if r == 0 || r > d {
        return Err(Error::invalid("m", format!("need 1 <= r <= d, got {d}x{r}")));
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("SVD did not converge".into()))?;
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_min > RANK_TOL * sigma_max.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient { sigma_min });
    }
    let (Some(p), Some(q_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Decomposition("SVD factors missing".into()));
    };
    let polar = p * q_t;
    let drift = orthonormality_drift(&polar);
    if drift > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { drift });
    }
    Ok(OrthonormalFrame { data: polar })
}
