//! The fixed real-valued MIMO channel `y = h·x + n`.
//!
//! Noise is i.i.d. standard normal per receive dimension (variance pinned to
//! 1), so the SNR is controlled entirely by the input power budget `P` and
//! reported in dB as `10·log10(P)`.  Everything downstream works in the
//! column space of `h`: the quantizer partition lives there, and receivers
//! project onto an orthonormal basis of it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::{self, streams};
use crate::Result;

/// Singular values below `RANK_TOL * sigma_max` are treated as zero when
/// deciding the numerical rank of a channel matrix.
pub const RANK_TOL: f64 = 1e-9;

/// How many redraws `ChannelModel::random` attempts before giving up on a
/// full-rank matrix (a single draw already succeeds with probability 1).
const RANDOM_RETRIES: u64 = 16;

/// A fixed MIMO channel: gain matrix, its image subspace, and the input
/// power budget.
///
/// Immutable after construction; safe to share across parallel workers.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    h: DMatrix<f64>,
    rank: usize,
    image_basis: DMatrix<f64>,
    pinv: DMatrix<f64>,
    power: f64,
}

impl ChannelModel {
    /// Builds a channel from an explicit gain matrix with power budget 1.
    ///
    /// Computes the numerical rank, an orthonormal basis of the column
    /// space, and the Moore–Penrose pseudo-inverse in one SVD.  Fails with
    /// [`Error::DegenerateChannel`] if `h` is (numerically) zero.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "channel matrix must be non-empty".into(),
            ));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "channel matrix entries must be finite".into(),
            ));
        }
        let (image_basis, rank) = image_basis(&h)?;
        let sigma_max = h.clone().svd(false, false).singular_values[0];
        let pinv = h
            .clone()
            .svd(true, true)
            .pseudo_inverse(RANK_TOL * sigma_max)
            .map_err(|e| Error::DegenerateChannel(e.to_string()))?;
        Ok(Self {
            h,
            rank,
            image_basis,
            pinv,
            power: 1.0,
        })
    }

    /// Draws an `n_r × n_t` matrix with i.i.d. standard normal entries,
    /// retrying (with fresh randomness) on the probability-zero event of a
    /// rank-deficient draw.
    pub fn random(n_t: usize, n_r: usize, seed: u64) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::InvalidArgument(
                "antenna counts must be positive".into(),
            ));
        }
        for retry in 0..RANDOM_RETRIES {
            let mut rng = rng::stream(seed, streams::CHANNEL + retry);
            let h = DMatrix::from_fn(n_r, n_t, |_, _| rng.sample(StandardNormal));
            let model = Self::new(h)?;
            if model.rank == n_t.min(n_r) {
                return Ok(model);
            }
        }
        Err(Error::DegenerateChannel(format!(
            "no full-rank {n_r}x{n_t} draw in {RANDOM_RETRIES} attempts"
        )))
    }

    /// Returns a copy with the given average input power budget `P > 0`.
    pub fn with_power(mut self, power: f64) -> Result<Self> {
        if !power.is_finite() || power <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "power budget must be positive and finite, got {power}"
            )));
        }
        self.power = power;
        Ok(self)
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Average input power budget `P` (linear scale; noise variance is 1,
    /// so this is also the SNR).
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Orthonormal `n_r × rank` basis of the column space of `h`.
    pub fn image_basis(&self) -> &DMatrix<f64> {
        &self.image_basis
    }

    /// Moore–Penrose pseudo-inverse `h⁺` (`n_t × n_r`).
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// One channel use: `h·x + noise`.
    pub fn apply(&self, x: &DVector<f64>, noise: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_t() {
            return Err(Error::DimensionMismatch(format!(
                "input length {} != n_t {}",
                x.len(),
                self.n_t()
            )));
        }
        if noise.len() != self.n_r() {
            return Err(Error::DimensionMismatch(format!(
                "noise length {} != n_r {}",
                noise.len(),
                self.n_r()
            )));
        }
        Ok(&self.h * x + noise)
    }

    /// The channel acting on an `ell`-use block: block-diagonal with `ell`
    /// copies of `h` under use-major stacking `(x₁; …; x_ℓ)`.
    pub fn block_matrix(&self, ell: usize) -> DMatrix<f64> {
        DMatrix::<f64>::identity(ell, ell).kronecker(&self.h)
    }

    /// Orthonormal basis of the block channel's image (`ℓn_r × ℓ·rank`):
    /// `ell` diagonal copies of the single-use basis.
    pub fn block_basis(&self, ell: usize) -> DMatrix<f64> {
        DMatrix::<f64>::identity(ell, ell).kronecker(&self.image_basis)
    }
}

/// Orthonormal basis of the column space of `h` plus the numerical rank.
///
/// Rank is decided by the relative singular-value cutoff [`RANK_TOL`];
/// an all-zero matrix is rejected as a degenerate channel.
pub fn image_basis(h: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let svd = h.clone().svd(true, false);
    let sigma_max = svd.singular_values[0];
    if sigma_max <= 0.0 {
        return Err(Error::DegenerateChannel(
            "channel matrix is numerically zero".into(),
        ));
    }
    let tol = RANK_TOL * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let u = svd.u.expect("u requested");
    Ok((u.columns(0, rank).into_owned(), rank))
}

/// An i.i.d. standard normal vector of the given length.
pub fn sample_noise<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Channel description as it appears in configs: an explicit row-major
/// matrix, or dimensions plus a seed for a random draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Explicit { h: Vec<Vec<f64>> },
    Random { n_t: usize, n_r: usize, seed: u64 },
}

impl ChannelSpec {
    /// Instantiates the channel this spec describes.
    pub fn build(&self) -> Result<ChannelModel> {
        match self {
            ChannelSpec::Explicit { h } => {
                let n_r = h.len();
                let n_t = h.first().map_or(0, Vec::len);
                if n_r == 0 || n_t == 0 {
                    return Err(Error::InvalidArgument("empty channel matrix".into()));
                }
                if h.iter().any(|row| row.len() != n_t) {
                    return Err(Error::InvalidArgument(
                        "channel matrix rows have unequal lengths".into(),
                    ));
                }
                let m = DMatrix::from_fn(n_r, n_t, |i, j| h[i][j]);
                ChannelModel::new(m)
            }
            ChannelSpec::Random { n_t, n_r, seed } => ChannelModel::random(*n_t, *n_r, *seed),
        }
    }
}

#[cfg(test)]
mod test {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn apply_zero_input_zero_noise() {
        let ch = ChannelModel::new(DMatrix::identity(2, 2)).unwrap();
        let y = ch.apply(&DVector::zeros(2), &DVector::zeros(2)).unwrap();
        assert_eq!(y, DVector::zeros(2));
    }

    #[test]
    fn apply_scalar_channel() {
        let ch = ChannelModel::new(DMatrix::from_element(1, 1, 2.0)).unwrap();
        let y = ch
            .apply(
                &DVector::from_element(1, 3.0),
                &DVector::from_element(1, 0.5),
            )
            .unwrap();
        assert_abs_diff_eq!(y[0], 6.5);
    }

    #[test]
    fn apply_hand_matrix() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let ch = ChannelModel::new(h).unwrap();
        let y = ch
            .apply(&DVector::from_vec(vec![1.0, 2.0]), &DVector::zeros(2))
            .unwrap();
        assert_abs_diff_eq!(y[0], 3.0);
        assert_abs_diff_eq!(y[1], -1.0);
    }

    #[test]
    fn apply_rejects_bad_dims() {
        let ch = ChannelModel::new(DMatrix::identity(2, 2)).unwrap();
        assert!(ch.apply(&DVector::zeros(3), &DVector::zeros(2)).is_err());
        assert!(ch.apply(&DVector::zeros(2), &DVector::zeros(1)).is_err());
    }

    #[test]
    fn image_basis_identity_full_rank() {
        let (basis, d) = image_basis(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(d, 2);
        // Orthonormal 2-frame in R^2 spans everything.
        let gram = basis.transpose() * &basis;
        assert_abs_diff_eq!(gram, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn image_basis_rank_one() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (basis, d) = image_basis(&h).unwrap();
        assert_eq!(d, 1);
        let dir = basis.column(0);
        assert_abs_diff_eq!(dir[0].abs(), 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(dir[1].abs(), 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(dir[0], dir[1], epsilon = 1e-12);
    }

    #[test]
    fn image_basis_random_full_rank_residuals() {
        let ch = ChannelModel::random(3, 4, 11).unwrap();
        assert_eq!(ch.rank(), 3);
        let basis = ch.image_basis();
        // Projecting each column of h onto the frame loses nothing.
        for j in 0..3 {
            let col = ch.h().column(j).into_owned();
            let resid = &col - basis * (basis.transpose() * &col);
            assert!(resid.norm() < 1e-10, "residual {}", resid.norm());
        }
    }

    #[test]
    fn image_basis_rejects_zero_matrix() {
        assert!(matches!(
            image_basis(&DMatrix::zeros(2, 2)),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn channel_output_lies_in_image_span() {
        let ch = ChannelModel::random(2, 4, 5).unwrap();
        let mut rng = rng::stream(99, 0);
        for _ in 0..32 {
            let x = sample_noise(2, &mut rng);
            let y = ch.apply(&x, &DVector::zeros(4)).unwrap();
            let basis = ch.image_basis();
            let resid = &y - basis * (basis.transpose() * &y);
            assert!(resid.norm() < 1e-10);
        }
    }

    #[test]
    fn noise_moments_at_large_dim() {
        let mut rng = rng::stream(1, 0);
        let n = sample_noise(1_000_000, &mut rng);
        let mean = n.mean();
        let var = n.map(|x| (x - mean) * (x - mean)).sum() / (n.len() as f64 - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((0.99..1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn noise_deterministic_and_degenerate() {
        let a = sample_noise(3, &mut rng::stream(42, 7));
        let b = sample_noise(3, &mut rng::stream(42, 7));
        assert_eq!(a, b);
        assert_eq!(sample_noise(0, &mut rng::stream(42, 7)).len(), 0);
    }

    #[test]
    fn block_rank_is_ell_times_rank() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, 1.0, 1.0]);
        let ch = ChannelModel::new(h).unwrap();
        for ell in 1..=3 {
            let (_, d) = image_basis(&ch.block_matrix(ell)).unwrap();
            assert_eq!(d, ell * ch.rank());
        }
    }

    #[test]
    fn block_basis_is_orthonormal_and_spans_block_image() {
        let ch = ChannelModel::random(2, 3, 8).unwrap();
        let ell = 3;
        let basis = ch.block_basis(ell);
        let gram = basis.transpose() * &basis;
        assert_abs_diff_eq!(
            gram,
            DMatrix::identity(ell * ch.rank(), ell * ch.rank()),
            epsilon = 1e-12
        );
        let hb = ch.block_matrix(ell);
        for j in 0..hb.ncols() {
            let col = hb.column(j).into_owned();
            let resid = &col - &basis * (basis.transpose() * &col);
            assert!(resid.norm() < 1e-10);
        }
    }

    #[test]
    fn spec_roundtrip_and_build() {
        let spec: ChannelSpec = serde_json::from_str(r#"{"h": [[1.0, 0.0], [0.0, 1.0]]}"#).unwrap();
        let ch = spec.build().unwrap();
        assert_eq!((ch.n_r(), ch.n_t(), ch.rank()), (2, 2, 2));

        let spec: ChannelSpec = serde_json::from_str(r#"{"n_t": 2, "n_r": 3, "seed": 4}"#).unwrap();
        let ch = spec.build().unwrap();
        assert_eq!((ch.n_r(), ch.n_t(), ch.rank()), (3, 2, 2));
        // Same seed, same matrix.
        assert_eq!(spec.build().unwrap().h(), ch.h());
    }

    #[test]
    fn pinv_solves_consistent_systems() {
        let ch = ChannelModel::random(2, 4, 21).unwrap();
        let x = DVector::from_vec(vec![1.5, -0.5]);
        let y = ch.h() * &x;
        let back = ch.pinv() * &y;
        assert_abs_diff_eq!(back, x, epsilon = 1e-10);
    }
}
