//! Sign-vector partitions of the channel image subspace.
//!
//! A bank of `m_q` one-bit threshold ADCs behind a linear combiner labels
//! every point `y` of the image subspace with the bit pattern
//! `j_i = 1{v_i·y + t_i ≥ 0}`.  The non-empty labels partition the subspace
//! into polyhedral regions; their number caps the rate any receiver built
//! this way can achieve.  This module enumerates the regions exactly
//! (incremental hyperplane insertion with strict-feasibility LP
//! certificates), evaluates the combinatorial maxima, constructs random
//! arrangements that attain them, and cross-checks counts with a brute-force
//! sampling oracle.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::binomial;
use crate::error::Error;
use crate::linprog::{max_margin_point, min_infinity_norm_point};
use crate::rng::{self, streams};
use crate::Result;
use num_bigint::BigUint;

/// One ADC output pattern; also the label of the partition region that
/// produces it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector(Vec<bool>);

impl SignVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// A combiner-plus-thresholds bank over the channel image subspace.
///
/// `v` holds the combiner rows in the ambient output space; `basis` maps
/// image coordinates (dimension `d`) into that space.  All geometry happens
/// on the composed normals `v·basis`, one per ADC.
#[derive(Debug, Clone)]
pub struct Arrangement {
    v: DMatrix<f64>,
    t: DVector<f64>,
    basis: DMatrix<f64>,
    normals: DMatrix<f64>,
    zero_threshold: bool,
}

/// Knobs for region enumeration; the defaults match the documented
/// guarantees (margin on interior certificates, bounding box, budgets).
#[derive(Debug, Clone)]
pub struct EnumerationConfig {
    /// Strict-feasibility margin required of interior certificates,
    /// measured after normalizing hyperplane normals to unit length.
    pub margin: f64,
    /// Half-width of the box that keeps feasibility LPs bounded.
    pub box_radius: f64,
    /// Maximum hyperplane count accepted before a resource-limit error.
    pub max_hyperplanes: usize,
    /// Maximum dimension accepted before a resource-limit error.
    pub max_dim: usize,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            margin: 1e-7,
            box_radius: 1e6,
            max_hyperplanes: 24,
            max_dim: 12,
        }
    }
}

/// One non-empty region: its label and an interior point certifying
/// non-emptiness with the enumeration margin.
#[derive(Debug, Clone)]
pub struct Region {
    pub sign: SignVector,
    pub interior_point: DVector<f64>,
}

/// Result of exact region enumeration.
#[derive(Debug, Clone)]
pub struct RegionEnumeration {
    pub regions: Vec<Region>,
    /// True when two ADC rows describe the same hyperplane (coincident up to
    /// sign); counts are still exact, but the arrangement cannot attain the
    /// general-position maxima.
    pub degenerate: bool,
}

impl RegionEnumeration {
    pub fn count(&self) -> usize {
        self.regions.len()
    }

    pub fn contains(&self, sign: &SignVector) -> bool {
        self.regions.iter().any(|r| &r.sign == sign)
    }
}

/// Serialized form of an arrangement, in image coordinates (the stored `v`
/// rows are the composed normals, so ambient arrangements round-trip their
/// geometry, not their basis).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrangementDoc {
    pub v: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub d: usize,
    pub zero_threshold: bool,
}

impl Arrangement {
    /// An arrangement given directly in image coordinates (`basis` =
    /// identity): `normals` is `m_q × d`, one ADC per row.
    pub fn in_image(normals: DMatrix<f64>, t: DVector<f64>) -> Result<Self> {
        let d = normals.ncols();
        Self::in_ambient(normals, t, DMatrix::identity(d, d))
    }

    /// An arrangement whose combiner rows `v` act on the ambient output
    /// space; `basis` (ambient × d, orthonormal columns) identifies the
    /// image subspace the partition lives in.
    pub fn in_ambient(v: DMatrix<f64>, t: DVector<f64>, basis: DMatrix<f64>) -> Result<Self> {
        if v.nrows() != t.len() {
            return Err(Error::DimensionMismatch(format!(
                "combiner has {} rows but threshold vector has {} entries",
                v.nrows(),
                t.len()
            )));
        }
        if v.ncols() != basis.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "combiner columns {} do not match basis ambient dimension {}",
                v.ncols(),
                basis.nrows()
            )));
        }
        let normals = &v * &basis;
        for i in 0..normals.nrows() {
            if normals.row(i).norm() < 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "combiner row {i} is zero after projecting onto the image subspace"
                )));
            }
        }
        let zero_threshold = t.iter().all(|&x| x == 0.0);
        Ok(Self {
            v,
            t,
            basis,
            normals,
            zero_threshold,
        })
    }

    /// Re-expresses an image-coordinate arrangement over an ambient space
    /// with the given orthonormal basis: the combiner rows become
    /// `normals·basisᵀ`, so they first project ambient points onto the image
    /// subspace and then apply the stored geometry.
    pub fn lift_to_ambient(&self, basis: &DMatrix<f64>) -> Result<Self> {
        if basis.ncols() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} columns, arrangement dimension is {}",
                basis.ncols(),
                self.d()
            )));
        }
        Self::in_ambient(
            &self.normals * basis.transpose(),
            self.t.clone(),
            basis.clone(),
        )
    }

    /// Same geometry with thresholds scaled by `gamma > 0`; regions scale by
    /// the same factor (`y ↦ γy` maps old regions onto new ones).
    pub fn with_scaled_thresholds(&self, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold scale must be positive and finite, got {gamma}"
            )));
        }
        Self::in_ambient(self.v.clone(), gamma * &self.t, self.basis.clone())
    }

    /// Number of ADCs / hyperplanes.
    pub fn m_q(&self) -> usize {
        self.normals.nrows()
    }

    /// Dimension of the image subspace the partition lives in.
    pub fn d(&self) -> usize {
        self.normals.ncols()
    }

    /// Combiner rows in the ambient output space (`m_q × ambient`).
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn thresholds(&self) -> &DVector<f64> {
        &self.t
    }

    /// Orthonormal map from image coordinates to the ambient space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Composed normals `v·basis` (`m_q × d`), the rows that cut the
    /// partition in image coordinates.
    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn zero_threshold(&self) -> bool {
        self.zero_threshold
    }

    /// ADC output pattern for a point in image coordinates; ties
    /// (`v·y + t = 0` exactly) quantize to bit 1.
    pub fn sign_vector(&self, y: &DVector<f64>) -> Result<SignVector> {
        if y.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "point has dimension {}, arrangement has {}",
                y.len(),
                self.d()
            )));
        }
        let w = &self.normals * y + &self.t;
        Ok(SignVector(w.iter().map(|&x| x >= 0.0).collect()))
    }

    /// Rows rescaled to unit normals (thresholds rescaled along), so LP
    /// margins are Euclidean distances.
    pub(crate) fn normalized_rows(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut n = self.normals.clone();
        let mut t = self.t.clone();
        for i in 0..n.nrows() {
            let s = n.row(i).norm();
            n.row_mut(i).unscale_mut(s);
            t[i] /= s;
        }
        (n, t)
    }

    /// True when some pair of rows describes the same hyperplane.
    fn has_coincident_rows(&self) -> bool {
        let (n, t) = self.normalized_rows();
        for i in 0..n.nrows() {
            for k in (i + 1)..n.nrows() {
                let same = (n.row(i) - n.row(k)).norm() < 1e-9 && (t[i] - t[k]).abs() < 1e-9;
                let flipped = (n.row(i) + n.row(k)).norm() < 1e-9 && (t[i] + t[k]).abs() < 1e-9;
                if same || flipped {
                    return true;
                }
            }
        }
        false
    }

    pub fn to_doc(&self) -> ArrangementDoc {
        ArrangementDoc {
            v: (0..self.m_q())
                .map(|i| self.normals.row(i).iter().copied().collect())
                .collect(),
            t: self.t.iter().copied().collect(),
            d: self.d(),
            zero_threshold: self.zero_threshold,
        }
    }

    pub fn from_doc(doc: &ArrangementDoc) -> Result<Self> {
        if doc.v.len() != doc.t.len() {
            return Err(Error::InvalidArgument(
                "arrangement document: v rows and t length disagree".into(),
            ));
        }
        if doc.v.iter().any(|row| row.len() != doc.d) {
            return Err(Error::InvalidArgument(
                "arrangement document: row length does not match d".into(),
            ));
        }
        let m_q = doc.v.len();
        let normals = DMatrix::from_fn(m_q, doc.d, |i, j| doc.v[i][j]);
        let t = DVector::from_vec(doc.t.clone());
        let arr = Self::in_image(normals, t)?;
        if arr.zero_threshold != doc.zero_threshold {
            return Err(Error::InvalidArgument(format!(
                "arrangement document: zero_threshold flag is {} but thresholds are {}",
                doc.zero_threshold,
                if arr.zero_threshold {
                    "all zero"
                } else {
                    "not all zero"
                }
            )));
        }
        Ok(arr)
    }
}

/// Exact enumeration of the non-empty regions, default configuration.
pub fn enumerate_regions(arr: &Arrangement) -> Result<RegionEnumeration> {
    enumerate_regions_with(arr, &EnumerationConfig::default())
}

/// Exact enumeration of the non-empty regions.
///
/// Hyperplanes are inserted one at a time; each existing region either stays
/// whole (its interior certificate clears the new hyperplane with margin) or
/// is split, in which case the unseen side must prove a strictly interior
/// point through the margin LP.  A region counts as non-empty exactly when
/// it has interior — boundary-only sign patterns carry no volume and are
/// charged to their neighbors by the `≥` tie rule.
pub fn enumerate_regions_with(
    arr: &Arrangement,
    cfg: &EnumerationConfig,
) -> Result<RegionEnumeration> {
    if arr.m_q() > cfg.max_hyperplanes {
        return Err(Error::ResourceLimit(format!(
            "{} hyperplanes exceed the enumeration budget of {}",
            arr.m_q(),
            cfg.max_hyperplanes
        )));
    }
    if arr.d() > cfg.max_dim {
        return Err(Error::ResourceLimit(format!(
            "dimension {} exceeds the enumeration budget of {}",
            arr.d(),
            cfg.max_dim
        )));
    }

    let (normals, offsets) = arr.normalized_rows();
    let d = arr.d();

    // Open with the whole box as the single region of the empty arrangement.
    let mut frontier: Vec<(Vec<bool>, DVector<f64>)> = vec![(Vec::new(), DVector::zeros(d))];

    for k in 0..arr.m_q() {
        let children: Vec<Vec<(Vec<bool>, DVector<f64>)>> = frontier
            .par_iter()
            .map(|(sign, cert)| -> Result<Vec<(Vec<bool>, DVector<f64>)>> {
                let w = normals.row(k).transpose().dot(cert) + offsets[k];
                let mut out = Vec::with_capacity(2);
                for side in [false, true] {
                    let cleared = if side {
                        w >= cfg.margin
                    } else {
                        w <= -cfg.margin
                    };
                    let mut child_sign = Vec::with_capacity(sign.len() + 1);
                    child_sign.extend_from_slice(sign);
                    child_sign.push(side);
                    if cleared {
                        out.push((child_sign, cert.clone()));
                    } else if let Some(pt) = interior_point(&normals, &offsets, &child_sign, cfg)? {
                        out.push((child_sign, pt));
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        frontier = children.into_iter().flatten().collect();
    }

    let regions = frontier
        .into_iter()
        .map(|(sign, interior_point)| Region {
            sign: SignVector(sign),
            interior_point,
        })
        .collect();
    Ok(RegionEnumeration {
        regions,
        degenerate: arr.has_coincident_rows(),
    })
}

/// Strictly interior point (margin ≥ `cfg.margin`) of the candidate region
/// with the given sign pattern over the first `sign.len()` rows, or `None`
/// if no such point exists within the bounding box.
fn interior_point(
    normals: &DMatrix<f64>,
    offsets: &DVector<f64>,
    sign: &[bool],
    cfg: &EnumerationConfig,
) -> Result<Option<DVector<f64>>> {
    let rows = sign.len();
    let d = normals.ncols();
    let mut signed_normals = DMatrix::zeros(rows, d);
    let mut signed_offsets = DVector::zeros(rows);
    for i in 0..rows {
        let s = if sign[i] { 1.0 } else { -1.0 };
        for j in 0..d {
            signed_normals[(i, j)] = s * normals[(i, j)];
        }
        signed_offsets[i] = s * offsets[i];
    }
    let (point, margin) = max_margin_point(&signed_normals, &signed_offsets, cfg.box_radius)?;
    Ok((margin >= cfg.margin).then_some(point))
}

/// Maximum number of non-empty regions `n_q` hyperplanes can cut in
/// `d`-space: `Σ_{i=0}^{d} C(n_q, i)`.
pub fn max_regions(n_q: u64, d: u64) -> BigUint {
    (0..=d).map(|i| binomial(n_q, i)).sum()
}

/// Maximum region count when all thresholds are zero (hyperplanes through
/// the origin): `2·Σ_{i=0}^{d−1} C(n_q−1, i)`.
pub fn max_regions_zero_threshold(n_q: u64, d: u64) -> BigUint {
    assert!(n_q >= 1 && d >= 1, "formula requires n_q ≥ 1 and d ≥ 1");
    let sum: BigUint = (0..d).map(|i| binomial(n_q - 1, i)).sum();
    2u32 * sum
}

/// Draws random arrangements until one attains the maximal region count.
///
/// Normals are i.i.d. standard normal, thresholds i.i.d. standard normal or
/// pinned to zero; each draw is verified by exact enumeration, and a miss
/// (probability zero in exact arithmetic) triggers a redraw.
pub fn general_position_arrangement(
    n_q: usize,
    d: usize,
    zero_threshold: bool,
    seed: u64,
) -> Result<Arrangement> {
    const RETRIES: u64 = 16;
    let target = if zero_threshold {
        max_regions_zero_threshold(n_q as u64, d as u64)
    } else {
        max_regions(n_q as u64, d as u64)
    };
    for retry in 0..RETRIES {
        let mut nrng = rng::stream(seed, streams::COMBINER + retry);
        let normals = DMatrix::from_fn(n_q, d, |_, _| nrng.sample(StandardNormal));
        let t = if zero_threshold {
            DVector::zeros(n_q)
        } else {
            let mut trng = rng::stream(seed, streams::THRESHOLD + retry);
            DVector::from_fn(n_q, |_, _| trng.sample(StandardNormal))
        };
        let arr = Arrangement::in_image(normals, t)?;
        let enumeration = enumerate_regions(&arr)?;
        if BigUint::from(enumeration.count()) == target {
            return Ok(arr);
        }
    }
    Err(Error::ConstructionFailure(format!(
        "no general-position arrangement with {target} regions found in {RETRIES} draws \
         (n_q={n_q}, d={d}, zero_threshold={zero_threshold})"
    )))
}

/// Brute-force region-count oracle: distinct sign vectors among points
/// drawn uniformly from the radius-ball in image coordinates.  Always a
/// lower bound on the true count; approaches it as `n_samples` grows.
pub fn sample_region_count(
    arr: &Arrangement,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<usize> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let d = arr.d();
    let mut rng = rng::stream(seed, streams::REGION_SAMPLE);
    let mut seen: HashSet<SignVector> = HashSet::new();
    for _ in 0..n_samples {
        // Uniform in the d-ball: normal direction, radius ~ U^{1/d}.
        let mut y = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = y.norm();
        if norm > 0.0 {
            let u: f64 = rng.gen::<f64>();
            y *= radius * u.powf(1.0 / d as f64) / norm;
        }
        seen.insert(arr.sign_vector(&y)?);
    }
    Ok(seen.len())
}

/// A ball radius whose ball is guaranteed to contain a strictly interior
/// point of every enumerated region.
///
/// Regions wedged between nearly parallel hyperplanes can begin arbitrarily
/// far from the origin even when all thresholds are small, so no formula in
/// the thresholds alone can bound where regions live.  This solves, per
/// region, a small LP for the interior point closest to the origin (in the
/// box norm, at half the enumeration margin), and returns the largest such
/// distance with 20% headroom.  Feeding the result to
/// [`sample_region_count`] makes every region reachable; keeping the radius
/// this tight also keeps small regions' hit probabilities workable.
pub fn covering_radius(arr: &Arrangement, enumeration: &RegionEnumeration) -> Result<f64> {
    let (normals, offsets) = arr.normalized_rows();
    let margin = EnumerationConfig::default().margin / 2.0;
    let rho = enumeration
        .regions
        .par_iter()
        .map(|region| {
            let rows = arr.m_q();
            let d = arr.d();
            let mut signed_normals = DMatrix::zeros(rows, d);
            let mut signed_offsets = DVector::zeros(rows);
            for i in 0..rows {
                let s = if region.sign.bits()[i] { 1.0 } else { -1.0 };
                for j in 0..d {
                    signed_normals[(i, j)] = s * normals[(i, j)];
                }
                signed_offsets[i] = s * offsets[i];
            }
            min_infinity_norm_point(&signed_normals, &signed_offsets, margin).map(|y| y.norm())
        })
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(1.2 * rho + 1.0)
}
