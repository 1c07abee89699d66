//! Deterministic, seeded generators for the synthetic settings, plus the
//! fixed 3-feature worst-case instance.
//!
//! Randomness contract: every generator is a pure function of its parameters
//! and seed. The stream is ChaCha8 keyed by the seed with one stream id per
//! row (counter-based and splittable, so parallel generation reproduces the
//! sequential output). Normals come from a hand-rolled Box–Muller transform
//! and bounded integers from Lemire rejection sampling, so byte-stability
//! depends only on the fixed ChaCha8 cipher, never on distribution-crate
//! internals.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{Dataset, LabelEncoding, ParamVector, Support};
use crate::objective::sigmoid;

/// ChaCha8 keyed by `seed`, positioned on stream `stream`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent sub-seed: splitmix64 of `master ^ φ·tag`.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform in the open interval (0, 1): `(top 53 bits + 0.5) / 2^53`.
fn unit_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Uniform in [0, 1).
fn unit01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Unbiased integer in [0, n) via Lemire's widening-multiply rejection.
fn uniform_below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = u128::from(rng.next_u64()) * u128::from(n);
        if m as u64 >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Standard normals, two per Box–Muller draw.
struct NormalSource<'a> {
    rng: &'a mut ChaCha8Rng,
    spare: Option<f64>,
}

impl<'a> NormalSource<'a> {
    fn new(rng: &'a mut ChaCha8Rng) -> Self {
        NormalSource { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = unit_open01(self.rng.next_u64());
        let u2 = unit_open01(self.rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Design matrix whose rows are independent first-order AR processes:
/// `x₁ ~ N(0, σ²/(1−α²))` (stationary initialization), then
/// `x_{j+1} = α·x_j + N(0, σ²)`.
pub fn ar1_design(n: usize, p: usize, alpha: f64, sigma2: f64, seed: u64) -> Result<Array2<f64>> {
    if !(alpha.is_finite() && alpha.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "AR(1) coefficient must satisfy |alpha| < 1, got {alpha}"
        )));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "innovation variance must be > 0, got {sigma2}"
        )));
    }
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be >= 1".into()));
    }
    let sd_init = (sigma2 / (1.0 - alpha * alpha)).sqrt();
    let sd_innov = sigma2.sqrt();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let mut normals = NormalSource::new(&mut rng);
        let mut current = sd_init * normals.next();
        x[(i, 0)] = current;
        for j in 1..p {
            current = alpha * current + sd_innov * normals.next();
            x[(i, j)] = current;
        }
    }
    Ok(x)
}

/// `k` uniformly chosen indices carry ±1 values, then the vector is scaled so
/// `‖β‖₂² = norm2` (every nonzero has magnitude `sqrt(norm2/k)`).
pub fn rademacher_sparse_beta(p: usize, k: usize, norm2: f64, seed: u64) -> Result<ParamVector> {
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!(
            "sparsity k = {k} must satisfy 1 <= k <= p = {p}"
        )));
    }
    if !(norm2.is_finite() && norm2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "norm2 must be > 0, got {norm2}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    // Partial Fisher–Yates for the support.
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..k {
        let j = i + uniform_below(&mut rng, (p - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen: Vec<usize> = pool[..k].to_vec();
    chosen.sort_unstable();
    let magnitude = (norm2 / k as f64).sqrt();
    let mut beta = Array1::zeros(p);
    for &j in &chosen {
        let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        beta[j] = sign * magnitude;
    }
    ParamVector::new(beta, Support::new(chosen)?)
}

/// Bernoulli responses `y_i ~ Bernoulli(sigmoid(⟨x_i, β⟩))`, encoded {0, 1}.
pub fn logistic_responses(x: &Array2<f64>, beta: &ParamVector, seed: u64) -> Result<Array1<f64>> {
    if beta.p() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but the design has {} columns",
            beta.p(),
            x.ncols()
        )));
    }
    let margins = x.dot(beta.beta());
    let mut y = Array1::zeros(x.nrows());
    for i in 0..x.nrows() {
        let mut rng = stream_rng(seed, i as u64);
        let u = unit01(rng.next_u64());
        y[i] = if u < sigmoid(margins[i]) { 1.0 } else { 0.0 };
    }
    Ok(y)
}

/// `y = Xβ + w` with `w_i ~ N(0, sigma_noise²)` i.i.d.
pub fn linear_responses(
    x: &Array2<f64>,
    beta: &ParamVector,
    sigma_noise: f64,
    seed: u64,
) -> Result<Array1<f64>> {
    if beta.p() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but the design has {} columns",
            beta.p(),
            x.ncols()
        )));
    }
    if !(sigma_noise.is_finite() && sigma_noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation must be >= 0, got {sigma_noise}"
        )));
    }
    let mut y = x.dot(beta.beta());
    if sigma_noise > 0.0 {
        for i in 0..y.len() {
            let mut rng = stream_rng(seed, i as u64);
            let mut normals = NormalSource::new(&mut rng);
            y[i] += sigma_noise * normals.next();
        }
    }
    Ok(y)
}

/// Population covariance of a Gaussian design.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `Σ = I + 11ᵀ`.
    IdentityPlusOnes,
    /// Spiked identity `Σ = (1−a)I + a11ᵀ`, `0 ≤ a < 1`.
    Spiked(f64),
}

impl CovarianceModel {
    /// `(c, d)` such that `Σ = c·I + d·11ᵀ`.
    fn components(&self) -> Result<(f64, f64)> {
        match *self {
            CovarianceModel::IdentityPlusOnes => Ok((1.0, 1.0)),
            CovarianceModel::Spiked(a) => {
                if !(a.is_finite() && (0.0..1.0).contains(&a)) {
                    return Err(Error::InvalidParameter(format!(
                        "spike weight must satisfy 0 <= a < 1, got {a}"
                    )));
                }
                Ok((1.0 - a, a))
            }
        }
    }

    /// Dense `p×p` population matrix (used by the eigenvalue analysis).
    pub fn matrix(&self, p: usize) -> Result<Array2<f64>> {
        let (c, d) = self.components()?;
        let mut m = Array2::from_elem((p, p), d);
        for i in 0..p {
            m[(i, i)] += c;
        }
        Ok(m)
    }
}

/// Rows i.i.d. `N(0, Σ)` via the closed-form square root of `c·I + d·11ᵀ`:
/// `Σ^{1/2} = √c·I + ((√(c+dp) − √c)/p)·11ᵀ`.
pub fn gaussian_design(
    n: usize,
    p: usize,
    covariance: CovarianceModel,
    seed: u64,
) -> Result<Array2<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be >= 1".into()));
    }
    let (c, d) = covariance.components()?;
    let sqrt_c = c.sqrt();
    let shift = ((c + d * p as f64).sqrt() - sqrt_c) / p as f64;
    let mut x = Array2::zeros((n, p));
    let mut z = vec![0.0f64; p];
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let mut normals = NormalSource::new(&mut rng);
        let mut sum = 0.0;
        for zj in z.iter_mut() {
            *zj = normals.next();
            sum += *zj;
        }
        for j in 0..p {
            x[(i, j)] = sqrt_c * z[j] + shift * sum;
        }
    }
    Ok(x)
}

/// The exact 3-observation, 3-feature instance where greedy selection can be
/// arbitrarily far from the optimal pair:
/// `y = (1,0,0)`, `x₁ = (0,1,0)`, `x₂ = (z, √(1−z²), 0)`,
/// `x₃ = (2z, 0, √(1−4z²))`. All four vectors have unit norm; valid for
/// `0 < z < 0.5`.
pub fn appendix_a_instance(z: f64) -> Result<Dataset> {
    if !(z.is_finite() && z > 0.0 && z < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "z must lie in (0, 0.5), got {z}"
        )));
    }
    let x = ndarray::array![
        [0.0, z, 2.0 * z],
        [1.0, (1.0 - z * z).sqrt(), 0.0],
        [0.0, 0.0, (1.0 - 4.0 * z * z).sqrt()],
    ];
    let y = ndarray::array![1.0, 0.0, 0.0];
    Dataset::new(x, y, LabelEncoding::Real)
}
