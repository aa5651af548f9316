//! Synthetic distributed-PCA world.
//!
//! Population covariance `A = VΛVᵀ + V_⊥Λ_⊥V_⊥ᵀ` with `Λ = I_r` and
//! `(Λ_⊥)_jj = (1−δ)ηʲ`, `η = 1 − (1−δ)/(r★ − r)`, in a Haar-random basis.
//! Honest nodes sample Gaussian data and report their top-r eigenframe;
//! corrupted nodes report whatever the adversary chooses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigengap_and_kappa, polar_orthonormalize, subspace_dist, top_r_eigenframe, OrthonormalFrame,
    SpectralDecomposition, SymmetricMatrix,
};
use crate::seeding::{self, derive_seed, rng_from_seed};

/// Minimum subspace distance between the adversarial frame and the truth.
pub const ADVERSARY_MIN_DIST: f64 = 0.99;
/// Weight of the random frame mixed into the adversary's complement block.
const ADVERSARY_MIX: f64 = 0.01;

/// `rows × cols` matrix of i.i.d. standard normals, filled column-major.
pub fn standard_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed d×d orthogonal matrix: QR of a Gaussian matrix with the
/// columns of Q sign-corrected so that R has a positive diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = standard_gaussian_matrix(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar-random d×r frame (leading columns of a Haar orthogonal matrix).
pub fn haar_frame<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Result<OrthonormalFrame> {
    OrthonormalFrame::leading_columns(&haar_orthogonal(d, rng), r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub d: usize,
    pub r: usize,
    pub r_star: f64,
    pub delta: f64,
}

impl SpectrumModel {
    pub fn new(d: usize, r: usize, r_star: f64, delta: f64) -> Result<Self> {
        let model = Self { d, r, r_star, delta };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r >= self.d {
            return Err(Error::invalid(
                "r",
                format!("need 1 <= r < d, got d={}, r={}", self.d, self.r),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("need 0 < delta < 1, got {}", self.delta)));
        }
        if !(self.r_star > self.r as f64) {
            return Err(Error::invalid(
                "r_star",
                format!("need r_star > r = {}, got {}", self.r, self.r_star),
            ));
        }
        let eta = self.eta();
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid(
                "r_star",
                format!("eta = {eta} is outside (0, 1); need r_star - r > 1 - delta"),
            ));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        1.0 - (1.0 - self.delta) / (self.r_star - self.r as f64)
    }

    /// Model eigenvalues, non-increasing: `r` ones then `(1−δ)ηʲ`, j = 1..d−r.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eta = self.eta();
        let tail = (1..=self.d - self.r).map(|j| (1.0 - self.delta) * eta.powi(j as i32));
        std::iter::repeat(1.0).take(self.r).chain(tail).collect()
    }

    /// `λ_r − λ_{r+1} = 1 − (1−δ)η`.
    pub fn gap(&self) -> f64 {
        1.0 - (1.0 - self.delta) * self.eta()
    }
}

/// A population covariance with its planted principal subspace.
#[derive(Debug, Clone)]
pub struct WorldInstance {
    pub covariance: SymmetricMatrix,
    pub v_true: OrthonormalFrame,
    /// Orthogonal `[V V_⊥]`, columns paired with `eigenvalues`.
    pub eigenbasis: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// `sqrt_factor · sqrt_factorᵀ = covariance`.
    pub sqrt_factor: DMatrix<f64>,
    pub gap: f64,
    pub kappa: f64,
}

impl WorldInstance {
    /// World from an explicit PSD covariance; the target is its top-r subspace.
    pub fn from_covariance(covariance: SymmetricMatrix, r: usize) -> Result<Self> {
        let dec = SpectralDecomposition::of(&covariance)?;
        if dec.eigenvalues.iter().any(|&l| l < -1e-10) {
            return Err(Error::invalid("covariance", "not positive semidefinite"));
        }
        let eigenvalues: Vec<f64> = dec.eigenvalues.iter().copied().collect();
        Self::assemble(dec.eigenvectors, eigenvalues, r)
    }

    fn assemble(eigenbasis: DMatrix<f64>, eigenvalues: Vec<f64>, r: usize) -> Result<Self> {
        let d = eigenvalues.len();
        if r == 0 || r >= d {
            return Err(Error::invalid("r", format!("need 1 <= r < d = {d}, got {r}")));
        }
        let (gap, kappa) = eigengap_and_kappa(&eigenvalues, r)?;
        let roots = DVector::from_iterator(d, eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
        let sqrt_factor = &eigenbasis * DMatrix::from_diagonal(&roots);
        let covariance = SymmetricMatrix::symmetrize(&sqrt_factor * sqrt_factor.transpose());
        let v_true = OrthonormalFrame::leading_columns(&eigenbasis, r)?;
        Ok(Self {
            covariance,
            v_true,
            eigenbasis,
            eigenvalues,
            sqrt_factor,
            gap,
            kappa,
        })
    }

    pub fn d(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn r(&self) -> usize {
        self.v_true.r()
    }
}

/// Draws a Haar basis and assembles the model covariance in it.
pub fn build_world(model: &SpectrumModel, seed: u64) -> Result<WorldInstance> {
    model.validate()?;
    let mut rng = rng_from_seed(seed);
    let basis = haar_orthogonal(model.d, &mut rng);
    WorldInstance::assemble(basis, model.eigenvalues(), model.r)
}

/// `A_i = (1/n) Σ x xᵀ` over `n` draws `x = sqrt_factor · z`, `z ~ N(0, I)`.
///
/// The `z` vectors are the columns of `standard_gaussian_matrix(d, n, rng)`
/// for `rng = rng_from_seed(seed)`.
pub fn sample_local_covariance(world: &WorldInstance, n: usize, seed: u64) -> Result<SymmetricMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let mut rng = rng_from_seed(seed);
    let z = standard_gaussian_matrix(world.d(), n, &mut rng);
    let x = &world.sqrt_factor * z;
    Ok(SymmetricMatrix::symmetrize((&x * x.transpose()) / n as f64))
}

/// Frame near-orthogonal to the truth: the leading r columns of `V_⊥` with
/// 1% of a random frame mixed in, re-orthonormalized.
pub fn adversarial_frame(world: &WorldInstance, seed: u64) -> Result<OrthonormalFrame> {
    let (d, r) = (world.d(), world.r());
    if d < 2 * r {
        return Err(Error::invalid(
            "d",
            format!("need d >= 2r for a near-orthogonal frame, got d={d}, r={r}"),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let noise = haar_frame(d, r, &mut rng)?;
    let complement = world.eigenbasis.columns(r, r);
    let mixed = complement * (1.0 - ADVERSARY_MIX) + noise.as_matrix() * ADVERSARY_MIX;
    let frame = polar_orthonormalize(&mixed)?;
    let dist = subspace_dist(&frame, &world.v_true)?;
    if dist < ADVERSARY_MIN_DIST {
        return Err(Error::invalid(
            "adversary",
            format!("constructed frame is only at distance {dist} from the truth"),
        ));
    }
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// Every corrupted node reports the same near-orthogonal frame.
    #[default]
    CollusionNearOrthogonal,
    /// Every corrupted node reports an independent Haar frame.
    RandomFrames,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub alpha: f64,
    pub strategy: AdversaryStrategy,
}

impl CorruptionSpec {
    pub fn new(alpha: f64, strategy: AdversaryStrategy) -> Result<Self> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::invalid("alpha", format!("need 0 <= alpha < 0.5, got {alpha}")));
        }
        Ok(Self { alpha, strategy })
    }

    pub fn clean() -> Self {
        Self {
            alpha: 0.0,
            strategy: AdversaryStrategy::None,
        }
    }

    /// `⌊α·m⌋`, with a 1e-9 slack so grid values like 0.1·150 floor to 15.
    pub fn corrupted_count(&self, m: usize) -> usize {
        if self.strategy == AdversaryStrategy::None {
            return 0;
        }
        (self.alpha * m as f64 + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone)]
pub struct Responses {
    pub frames: Vec<OrthonormalFrame>,
    /// Indices of honest nodes, ascending.
    pub good_set: Vec<usize>,
    /// Local covariances of honest nodes, aligned with `good_set`.
    pub local_covariances: Vec<SymmetricMatrix>,
}

/// Honest top-r responses for every node, with the first `⌊α·m⌋` replaced
/// per the corruption strategy.
///
/// Node `i`'s data is seeded by `[seed, NODE, i]` only, so honest data is
/// identical across corruption levels and across `m`.
pub fn generate_responses(
    world: &WorldInstance,
    m: usize,
    n: usize,
    corruption: &CorruptionSpec,
    seed: u64,
) -> Result<Responses> {
    let bad = checked_corrupted_count(corruption, m)?;
    let honest = honest_responses(world, bad..m, n, seed)?;
    let mut frames = corrupted_prefix(world, bad, corruption, seed)?;
    let mut local_covariances = Vec::with_capacity(m - bad);
    for (frame, local) in honest {
        frames.push(frame);
        local_covariances.push(local);
    }
    Ok(Responses {
        frames,
        good_set: (bad..m).collect(),
        local_covariances,
    })
}

/// Replaces the first `⌊α·m⌋` entries of an uncorrupted response set.
///
/// `apply_corruption(world, &generate_responses(.., clean, seed), spec, seed)`
/// equals `generate_responses(.., spec, seed)`.
pub fn apply_corruption(
    world: &WorldInstance,
    clean: &Responses,
    corruption: &CorruptionSpec,
    seed: u64,
) -> Result<Responses> {
    let m = clean.frames.len();
    if clean.good_set.len() != m {
        return Err(Error::invalid("clean", "response set is already corrupted"));
    }
    let bad = checked_corrupted_count(corruption, m)?;
    let mut frames = corrupted_prefix(world, bad, corruption, seed)?;
    frames.extend_from_slice(&clean.frames[bad..]);
    Ok(Responses {
        frames,
        good_set: (bad..m).collect(),
        local_covariances: clean.local_covariances[bad..].to_vec(),
    })
}

fn checked_corrupted_count(corruption: &CorruptionSpec, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::Empty("node count m"));
    }
    let bad = corruption.corrupted_count(m);
    if 2 * bad >= m {
        return Err(Error::invalid(
            "alpha",
            format!("{bad} corrupted of {m} nodes is not a minority"),
        ));
    }
    Ok(bad)
}

fn honest_responses(
    world: &WorldInstance,
    nodes: std::ops::Range<usize>,
    n: usize,
    seed: u64,
) -> Result<Vec<(OrthonormalFrame, SymmetricMatrix)>> {
    let r = world.r();
    nodes
        .into_par_iter()
        .map(|i| {
            let local = sample_local_covariance(world, n, derive_seed(&[seed, seeding::NODE, i as u64]))?;
            let (frame, _) = top_r_eigenframe(&local, r)?;
            Ok((frame, local))
        })
        .collect()
}

fn corrupted_prefix(
    world: &WorldInstance,
    bad: usize,
    corruption: &CorruptionSpec,
    seed: u64,
) -> Result<Vec<OrthonormalFrame>> {
    if bad == 0 {
        return Ok(Vec::new());
    }
    match corruption.strategy {
        AdversaryStrategy::CollusionNearOrthogonal => {
            let adv = adversarial_frame(world, derive_seed(&[seed, seeding::ADVERSARY]))?;
            Ok(vec![adv; bad])
        }
        AdversaryStrategy::RandomFrames => (0..bad)
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(&[seed, seeding::CORRUPT, i as u64]));
                haar_frame(world.d(), world.r(), &mut rng)
            })
            .collect(),
        AdversaryStrategy::None => Ok(Vec::new()),
    }
}
