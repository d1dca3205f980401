//! The achievability construction: a finite constellation of region
//! representatives and the capacity of the channel it induces.
//!
//! For a blockwise receiver the transmitter picks, per message, one
//! partition region of the `ℓ`-block arrangement, sends the minimum-norm
//! input reproducing that region's representative point, and the receiver
//! observes which region the noisy output lands in.  That is a finite
//! discrete memoryless channel; Blahut–Arimoto gives its capacity (with an
//! optional average-cost constraint implementing the power budget).  At high
//! SNR the channel turns noiseless and the rate approaches
//! `log₂(#regions)/ℓ`, the exact combinatorial cap.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{enumerate_regions, Arrangement, SignVector};
use crate::channel::{sample_noise, ChannelModel};
use crate::error::Error;
use crate::linprog::max_margin_point;
use crate::rng::{self, streams};
use crate::Result;

/// Default Blahut–Arimoto stopping gap, bits.
pub const DEFAULT_BA_TOL: f64 = 1e-9;
/// Default Blahut–Arimoto iteration cap.
pub const DEFAULT_BA_MAX_ITER: usize = 10_000;
/// Representatives must clear every region wall by this margin (image
/// coordinates, unit normals) before power scaling.
const REP_MARGIN: f64 = 1e-7;
/// Relative residual above which a requested output is declared outside the
/// channel image.
const IMAGE_RESIDUAL_TOL: f64 = 1e-6;

/// Minimum-norm input solving `(blockwise h)·x = ŷ` for an ambient block
/// output `ŷ` of length `ℓ·n_r`.
///
/// The block channel is block-diagonal, so the solve decouples into `ℓ`
/// independent pseudo-inverse applications of the single-use `h`.  Errors
/// with [`Error::InfeasibleTarget`] when `ŷ` is not in the image (relative
/// residual above 1e-6).
pub fn min_norm_input(ch: &ChannelModel, ell: usize, y_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be positive".into()));
    }
    let n_r = ch.n_r();
    let n_t = ch.n_t();
    if y_hat.len() != ell * n_r {
        return Err(Error::DimensionMismatch(format!(
            "block output length {} != ell·n_r = {}",
            y_hat.len(),
            ell * n_r
        )));
    }
    let mut x = DVector::zeros(ell * n_t);
    let mut residual_sq = 0.0;
    for k in 0..ell {
        let y_k = y_hat.rows(k * n_r, n_r);
        let x_k = ch.pinv() * y_k;
        residual_sq += (ch.h() * &x_k - y_k).norm_squared();
        x.rows_mut(k * n_t, n_t).copy_from(&x_k);
    }
    let y_norm = y_hat.norm();
    if residual_sq.sqrt() > IMAGE_RESIDUAL_TOL * y_norm {
        return Err(Error::InfeasibleTarget(format!(
            "target output is outside the channel image (relative residual {:.3e})",
            residual_sq.sqrt() / y_norm
        )));
    }
    Ok(x)
}

/// The transmit codebook: one representative per partition region, its
/// minimum-norm input, and its cost, all scaled to the power budget.
///
/// The owned arrangement has its thresholds scaled by the same factor as the
/// representatives (scaling a threshold vector scales every region with it),
/// so `sign_vector(representative[j]) == regions[j]` holds by construction
/// at any power.
#[derive(Debug, Clone)]
pub struct Constellation {
    arrangement: Arrangement,
    block_basis: DMatrix<f64>,
    regions: Vec<SignVector>,
    representatives: Vec<DVector<f64>>,
    inputs: Vec<DVector<f64>>,
    costs: Vec<f64>,
    power_budget: f64,
    ell: usize,
    gamma: f64,
}

impl Constellation {
    /// Number of symbols (= regions).
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// The power-scaled arrangement the representatives live in.
    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    /// Orthonormal map from image coordinates to the ambient `ℓn_r` space.
    pub fn block_basis(&self) -> &DMatrix<f64> {
        &self.block_basis
    }

    pub fn regions(&self) -> &[SignVector] {
        &self.regions
    }

    /// Representatives in image coordinates (dimension `ℓ·rank`).
    pub fn representatives(&self) -> &[DVector<f64>] {
        &self.representatives
    }

    /// Minimum-norm block inputs, length `ℓ·n_t` each.
    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    /// Symbol costs `c(ŷ_j) = ‖x̂_j‖₂`.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Average-cost budget `ℓ·P`.
    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Scale factor applied to the reference-radius geometry to hit the
    /// power budget (`max_j cost_j = √(ℓP)`).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Index of a region label among the symbols.
    pub fn index_of(&self, sign: &SignVector) -> Option<usize> {
        self.regions.iter().position(|s| s == sign)
    }
}

/// Builds the constellation for a channel, an `ℓ`-block arrangement in
/// image coordinates (`arr.d() == ℓ·rank`), and an average power budget `P`.
///
/// Representatives are Chebyshev centers — deepest interior points — of each
/// region clipped to a reference box, then everything (points, inputs,
/// thresholds) is scaled together so the costliest symbol spends exactly
/// `√(ℓP)`, keeping every symbol individually inside the average budget
/// whenever `ℓP ≥ 1`.
pub fn build_constellation(
    ch: &ChannelModel,
    arr: &Arrangement,
    ell: usize,
    power: f64,
) -> Result<Constellation> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be positive".into()));
    }
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "power must be positive and finite, got {power}"
        )));
    }
    if arr.d() != ell * ch.rank() {
        return Err(Error::DimensionMismatch(format!(
            "arrangement dimension {} != ell·rank = {}",
            arr.d(),
            ell * ch.rank()
        )));
    }

    let enumeration = enumerate_regions(arr)?;
    if enumeration.regions.is_empty() {
        return Err(Error::InvalidArgument(
            "arrangement has no regions to represent".into(),
        ));
    }

    let (normals, offsets) = arr.normalized_rows();
    // Reference box: wide enough that every threshold hyperplane cuts well
    // inside it, so bounded cells keep their shape and unbounded cells get
    // room proportional to the threshold scale.
    let max_offset = offsets.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
    let rho0 = 1.0 + 2.0 * max_offset;

    let mut regions = Vec::with_capacity(enumeration.regions.len());
    let mut reps0 = Vec::with_capacity(enumeration.regions.len());
    for region in &enumeration.regions {
        let center = chebyshev_center(&normals, &offsets, region.sign.bits(), rho0)?;
        reps0.push(center);
        regions.push(region.sign.clone());
    }

    let block_basis = ch.block_basis(ell);
    let mut inputs0 = Vec::with_capacity(reps0.len());
    let mut costs0 = Vec::with_capacity(reps0.len());
    for rep in &reps0 {
        let ambient = &block_basis * rep;
        let x = min_norm_input(ch, ell, &ambient)?;
        costs0.push(x.norm());
        inputs0.push(x);
    }

    let budget = ell as f64 * power;
    let peak = budget.sqrt();
    let cost_max = costs0.iter().cloned().fold(0.0f64, f64::max);
    let gamma = if cost_max > 1e-12 {
        peak / cost_max
    } else {
        1.0
    };

    let arrangement = arr.with_scaled_thresholds(gamma)?;
    let representatives: Vec<DVector<f64>> = reps0.iter().map(|r| gamma * r).collect();
    let inputs: Vec<DVector<f64>> = inputs0.iter().map(|x| gamma * x).collect();
    let costs: Vec<f64> = costs0.iter().map(|c| gamma * c).collect();

    for (rep, sign) in representatives.iter().zip(&regions) {
        if &arrangement.sign_vector(rep)? != sign {
            return Err(Error::ConstructionFailure(format!(
                "representative of region {sign} left its region after power scaling"
            )));
        }
    }

    Ok(Constellation {
        arrangement,
        block_basis,
        regions,
        representatives,
        inputs,
        costs,
        power_budget: budget,
        ell,
        gamma,
    })
}

/// Chebyshev center of the region with the given sign pattern, clipped to a
/// box of half-width `rho`.  Regions lying entirely outside the box (possible
/// for far-out slivers) get the box doubled a few times before giving up.
fn chebyshev_center(
    normals: &DMatrix<f64>,
    offsets: &DVector<f64>,
    sign: &[bool],
    rho: f64,
) -> Result<DVector<f64>> {
    let m = normals.nrows();
    let d = normals.ncols();
    let mut signed_normals = DMatrix::zeros(m, d);
    let mut signed_offsets = DVector::zeros(m);
    for i in 0..m {
        let s = if sign[i] { 1.0 } else { -1.0 };
        for j in 0..d {
            signed_normals[(i, j)] = s * normals[(i, j)];
        }
        signed_offsets[i] = s * offsets[i];
    }
    let mut radius = rho;
    for _ in 0..16 {
        let (center, margin) = max_margin_point(&signed_normals, &signed_offsets, radius)?;
        if margin >= REP_MARGIN {
            return Ok(center);
        }
        radius *= 2.0;
    }
    let label: String = sign.iter().map(|&b| if b { '1' } else { '0' }).collect();
    Err(Error::ConstructionFailure(format!(
        "no interior representative found for region {label} within the box budget"
    )))
}

/// How a transition matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMethod {
    /// Closed-form Gaussian interval probabilities (1-D image space).
    ExactCdf,
    /// Monte Carlo estimation with per-row noise streams.
    MonteCarlo,
    /// Supplied directly by the caller.
    Provided,
}

/// The finite channel from transmitted representative to decoded region.
#[derive(Debug, Clone)]
pub struct InducedChannel {
    /// Row-stochastic `K×K`: entry `(j, k)` = P(land in region k | sent j).
    pub transition: DMatrix<f64>,
    /// Symbol costs, copied from the constellation.
    pub costs: Vec<f64>,
    /// Average-cost budget `ℓ·P`.
    pub power_budget: f64,
    pub ell: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub method: TransitionMethod,
    /// Fraction of samples whose sign pattern was not a constellation
    /// region (numerical boundary effects), folded to the nearest
    /// representative.
    pub folded_fraction: f64,
}

impl InducedChannel {
    /// Wraps an explicit transition matrix (row-stochastic, square) with
    /// symbol costs; used for oracle channels and tests.
    pub fn from_transition(transition: DMatrix<f64>, costs: Vec<f64>, ell: usize) -> Result<Self> {
        if transition.nrows() != transition.ncols() {
            return Err(Error::InvalidArgument(
                "transition matrix must be square".into(),
            ));
        }
        if costs.len() != transition.nrows() {
            return Err(Error::DimensionMismatch(
                "costs length must match transition size".into(),
            ));
        }
        if ell == 0 {
            return Err(Error::InvalidArgument("ell must be positive".into()));
        }
        let chan = Self {
            transition,
            costs,
            power_budget: f64::INFINITY,
            ell,
            mc_samples: 0,
            seed: 0,
            method: TransitionMethod::Provided,
            folded_fraction: 0.0,
        };
        chan.validate()?;
        Ok(chan)
    }

    /// Checks row-stochasticity (entries ≥ 0, rows summing to 1).
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.transition.nrows() {
            let mut sum = 0.0;
            for j in 0..self.transition.ncols() {
                let p = self.transition[(i, j)];
                if p < 0.0 || !p.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "transition entry ({i}, {j}) = {p} is not a probability"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "transition row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn num_symbols(&self) -> usize {
        self.transition.nrows()
    }
}

/// Transition probabilities of the constellation under unit Gaussian noise.
///
/// For a 1-D image space the row entries are exact Gaussian interval
/// probabilities; otherwise each row is estimated from `mc_samples` ambient
/// noise draws (its own deterministic stream, so rows parallelize without
/// changing results).  Sign patterns outside the constellation — possible
/// only through boundary effects — fold to the nearest representative.
pub fn induced_channel(
    cons: &Constellation,
    mc_samples: usize,
    seed: u64,
) -> Result<InducedChannel> {
    if mc_samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "mc_samples must be at least 1000, got {mc_samples}"
        )));
    }
    if cons.arrangement().d() == 1 {
        transition_exact_1d(cons, mc_samples, seed)
    } else {
        transition_monte_carlo(cons, mc_samples, seed)
    }
}

/// Monte Carlo transition estimation regardless of dimension; the exact
/// 1-D path's validation oracle.
pub fn induced_channel_monte_carlo(
    cons: &Constellation,
    mc_samples: usize,
    seed: u64,
) -> Result<InducedChannel> {
    if mc_samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "mc_samples must be at least 1000, got {mc_samples}"
        )));
    }
    transition_monte_carlo(cons, mc_samples, seed)
}

/// Bit pattern of `w ≥ 0` per coordinate, packed little-endian (enumeration
/// budgets keep `m_q ≤ 24`, so 32 bits suffice).
pub(crate) fn pattern_key_of(w: &DVector<f64>) -> u32 {
    w.iter()
        .enumerate()
        .fold(0u32, |acc, (i, &x)| acc | (u32::from(x >= 0.0) << i))
}

pub(crate) fn sign_key(sign: &SignVector) -> u32 {
    sign.bits()
        .iter()
        .enumerate()
        .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i))
}

fn transition_exact_1d(
    cons: &Constellation,
    mc_samples: usize,
    seed: u64,
) -> Result<InducedChannel> {
    let arr = cons.arrangement();
    let (normals, offsets) = arr.normalized_rows();
    let k = cons.len();

    // Each region is an interval: intersect the per-row half-lines.
    let mut intervals = Vec::with_capacity(k);
    for sign in cons.regions() {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (i, &bit) in sign.bits().iter().enumerate() {
            let a = normals[(i, 0)];
            let cut = -offsets[i] / a;
            let upward = if bit { a > 0.0 } else { a < 0.0 };
            if upward {
                lo = lo.max(cut);
            } else {
                hi = hi.min(cut);
            }
        }
        intervals.push((lo, hi));
    }

    let phi = |x: f64| 0.5 * libm::erfc(-x.clamp(-40.0, 40.0) / std::f64::consts::SQRT_2);
    let mut transition = DMatrix::zeros(k, k);
    let mut folded = 0.0f64;
    for (j, rep) in cons.representatives().iter().enumerate() {
        let y = rep[0];
        let mut row_sum = 0.0;
        for (kk, &(lo, hi)) in intervals.iter().enumerate() {
            let p = (phi(hi - y) - phi(lo - y)).max(0.0);
            transition[(j, kk)] = p;
            row_sum += p;
        }
        // Mass not covered by any listed region (slivers dropped by the
        // margin rule) is renormalized away and accounted as folded.
        folded += (1.0 - row_sum).max(0.0);
        for kk in 0..k {
            transition[(j, kk)] /= row_sum;
        }
    }

    let chan = InducedChannel {
        transition,
        costs: cons.costs().to_vec(),
        power_budget: cons.power_budget(),
        ell: cons.ell(),
        mc_samples,
        seed,
        method: TransitionMethod::ExactCdf,
        folded_fraction: folded / k as f64,
    };
    chan.validate()?;
    Ok(chan)
}

fn transition_monte_carlo(
    cons: &Constellation,
    mc_samples: usize,
    seed: u64,
) -> Result<InducedChannel> {
    let arr = cons.arrangement();
    let k = cons.len();
    let normals = arr.normals();
    let thresholds = arr.thresholds();
    let basis_t = cons.block_basis().transpose();
    let ambient_dim = cons.block_basis().nrows();
    let index: HashMap<u32, usize> = cons
        .regions()
        .iter()
        .enumerate()
        .map(|(i, s)| (sign_key(s), i))
        .collect();

    let rows: Vec<(Vec<u64>, u64)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, streams::TRANSITION + j as u64);
            let rep = &cons.representatives()[j];
            let mut counts = vec![0u64; k];
            let mut folds = 0u64;
            for _ in 0..mc_samples {
                let noise = sample_noise(ambient_dim, &mut rng);
                let z = rep + &basis_t * noise;
                let w = normals * &z + thresholds;
                match index.get(&pattern_key_of(&w)) {
                    Some(&target) => counts[target] += 1,
                    None => {
                        folds += 1;
                        let nearest = cons
                            .representatives()
                            .iter()
                            .enumerate()
                            .min_by(|(_, a), (_, b)| {
                                (z.clone() - *a)
                                    .norm()
                                    .partial_cmp(&(z.clone() - *b).norm())
                                    .expect("finite norms")
                            })
                            .map(|(i, _)| i)
                            .expect("non-empty constellation");
                        counts[nearest] += 1;
                    }
                }
            }
            (counts, folds)
        })
        .collect();

    let mut transition = DMatrix::zeros(k, k);
    let mut folded = 0u64;
    for (j, (counts, folds)) in rows.into_iter().enumerate() {
        folded += folds;
        for (kk, &c) in counts.iter().enumerate() {
            transition[(j, kk)] = c as f64 / mc_samples as f64;
        }
    }

    let chan = InducedChannel {
        transition,
        costs: cons.costs().to_vec(),
        power_budget: cons.power_budget(),
        ell: cons.ell(),
        mc_samples,
        seed,
        method: TransitionMethod::MonteCarlo,
        folded_fraction: folded as f64 / (k as f64 * mc_samples as f64),
    };
    chan.validate()?;
    Ok(chan)
}

/// Capacity (or capacity-cost) optimization result.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    /// Bits per `ℓ`-block.
    pub rate_bits_per_block: f64,
    /// Bits per channel use (`rate_bits_per_block / ℓ`).
    pub rate_bits_per_use: f64,
    pub input_distribution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Average symbol cost under the returned distribution.
    pub cost_used: f64,
}

/// Channel capacity of a finite channel by Blahut–Arimoto alternating
/// maximization.
///
/// Stops when the standard per-iteration bracket — `max_j D_j` above,
/// `Σ_j p_j D_j` below, with `D_j` the divergence of row `j` from the
/// current output marginal — closes to within `tol` bits.
pub fn blahut_arimoto(chan: &InducedChannel, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    ba_lagrangian(chan, 0.0, tol, max_iter)
}

/// Capacity under the average-cost constraint `E[c] ≤ budget`.
///
/// Runs unconstrained first (the constraint may be slack); otherwise
/// bisects the Lagrangian slope until the optimal distribution meets the
/// budget with complementary slackness.
pub fn blahut_arimoto_cost(
    chan: &InducedChannel,
    budget: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityResult> {
    chan.validate()?;
    let min_cost = chan.costs.iter().cloned().fold(f64::INFINITY, f64::min);
    if budget < min_cost - 1e-12 {
        return Err(Error::InfeasibleTarget(format!(
            "cost budget {budget} is below the cheapest symbol cost {min_cost}"
        )));
    }

    // Budget pinned at the cheapest cost: only min-cost symbols feasible.
    if budget <= min_cost + 1e-12 {
        return restricted_to_min_cost(chan, min_cost, tol, max_iter);
    }

    let unconstrained = blahut_arimoto(chan, tol, max_iter)?;
    if unconstrained.cost_used <= budget + tol {
        return Ok(unconstrained);
    }

    // E[c] under the slope-s optimum is nonincreasing in s; find the budget.
    let mut hi = 1.0;
    let mut hi_result = ba_lagrangian(chan, hi, tol, max_iter)?;
    let mut doublings = 0;
    while hi_result.cost_used > budget && doublings < 60 {
        hi *= 2.0;
        hi_result = ba_lagrangian(chan, hi, tol, max_iter)?;
        doublings += 1;
    }
    if hi_result.cost_used > budget {
        // Every slope keeps the average above budget: collapse to the
        // cheapest symbols (the feasible boundary).
        return restricted_to_min_cost(chan, min_cost, tol, max_iter);
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let mid_result = ba_lagrangian(chan, mid, tol, max_iter)?;
        if mid_result.cost_used > budget {
            lo = mid;
        } else {
            hi = mid;
            hi_result = mid_result;
        }
    }
    Ok(hi_result)
}

/// Unconstrained capacity over the sub-alphabet of minimum-cost symbols.
fn restricted_to_min_cost(
    chan: &InducedChannel,
    min_cost: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityResult> {
    let keep: Vec<usize> = (0..chan.num_symbols())
        .filter(|&j| chan.costs[j] <= min_cost + 1e-12)
        .collect();
    let k_out = chan.transition.ncols();
    let sub = DMatrix::from_fn(keep.len(), k_out, |i, j| chan.transition[(keep[i], j)]);
    let sub_chan = InducedChannel {
        transition: sub,
        costs: keep.iter().map(|&j| chan.costs[j]).collect(),
        power_budget: chan.power_budget,
        ell: chan.ell,
        mc_samples: chan.mc_samples,
        seed: chan.seed,
        method: chan.method,
        folded_fraction: chan.folded_fraction,
    };
    let inner = ba_iterate(&sub_chan.transition, &sub_chan.costs, 0.0, tol, max_iter);
    let mut p = vec![0.0; chan.num_symbols()];
    for (i, &j) in keep.iter().enumerate() {
        p[j] = inner.p[i];
    }
    Ok(finish(chan, p, inner))
}

/// Lagrangian Blahut–Arimoto: maximizes `I(p) − s·E_p[c]` and reports the
/// mutual information and cost of the optimizer.
fn ba_lagrangian(
    chan: &InducedChannel,
    s: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityResult> {
    chan.validate()?;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if chan.num_symbols() == 0 {
        return Err(Error::InvalidArgument("channel has no inputs".into()));
    }
    let inner = ba_iterate(&chan.transition, &chan.costs, s, tol, max_iter);
    let p = inner.p.clone();
    Ok(finish(chan, p, inner))
}

struct BaInner {
    p: Vec<f64>,
    rate_nats: f64,
    iterations: usize,
    converged: bool,
}

/// Core alternating-maximization loop, natural log internally.
fn ba_iterate(w: &DMatrix<f64>, costs: &[f64], s: f64, tol: f64, max_iter: usize) -> BaInner {
    let k_in = w.nrows();
    let k_out = w.ncols();
    let tol_nats = tol * std::f64::consts::LN_2;

    // Row entropies Σ_k W ln W are loop constants.
    let wlogw: Vec<f64> = (0..k_in)
        .map(|j| {
            (0..k_out)
                .map(|k| {
                    let p = w[(j, k)];
                    if p > 0.0 {
                        p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();

    let mut p = vec![1.0 / k_in as f64; k_in];
    let mut d = vec![0.0f64; k_in];
    let mut rate_nats = 0.0;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=max_iter {
        iterations = iter;
        // Output marginal.
        let mut r = vec![0.0f64; k_out];
        for j in 0..k_in {
            if p[j] > 0.0 {
                for k in 0..k_out {
                    r[k] += p[j] * w[(j, k)];
                }
            }
        }
        // Divergence of each row from the marginal, cost-tilted.
        for j in 0..k_in {
            let mut cross = 0.0;
            for k in 0..k_out {
                let wk = w[(j, k)];
                if wk > 0.0 {
                    cross += wk * r[k].ln();
                }
            }
            d[j] = wlogw[j] - cross - s * costs[j];
        }
        let lower: f64 = p.iter().zip(&d).map(|(&pj, &dj)| pj * dj).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Report the mutual-information part (cost term added back).
        rate_nats = lower + s * p.iter().zip(costs).map(|(&pj, &cj)| pj * cj).sum::<f64>();
        if upper - lower < tol_nats {
            converged = true;
            break;
        }
        // Multiplicative update, stabilized around the current value.
        let mut z = 0.0;
        for j in 0..k_in {
            p[j] *= (d[j] - lower).exp();
            z += p[j];
        }
        for pj in &mut p {
            *pj /= z;
        }
    }

    BaInner {
        p,
        rate_nats,
        iterations,
        converged,
    }
}

fn finish(chan: &InducedChannel, p: Vec<f64>, inner: BaInner) -> CapacityResult {
    let cost_used = p
        .iter()
        .zip(&chan.costs)
        .map(|(&pj, &cj)| pj * cj)
        .sum::<f64>();
    let rate_bits_per_block = (inner.rate_nats / std::f64::consts::LN_2).max(0.0);
    CapacityResult {
        rate_bits_per_block,
        rate_bits_per_use: rate_bits_per_block / chan.ell as f64,
        input_distribution: p,
        iterations: inner.iterations,
        converged: inner.converged,
        cost_used,
    }
}

/// Rebuilds the constellation along an increasing power sweep and reports
/// the induced-channel capacity at each point, under the block budget `ℓP`
/// (clamped up to the cheapest symbol cost in the deep low-power regime,
/// where the honest answer is a near-zero rate either way).
// One flat knob per pipeline stage: this signature mirrors the sweep's
// command-line surface, where grouping them would only add indirection.
#[allow(clippy::too_many_arguments)]
pub fn high_snr_capacity_check(
    ch: &ChannelModel,
    arr: &Arrangement,
    ell: usize,
    powers: &[f64],
    mc_samples: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<CapacityResult>> {
    if powers.is_empty() {
        return Err(Error::InvalidArgument("power sweep is empty".into()));
    }
    if powers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "power sweep must be strictly increasing".into(),
        ));
    }
    let mut out = Vec::with_capacity(powers.len());
    for &power in powers {
        let cons = build_constellation(ch, arr, ell, power)?;
        let chan = induced_channel(&cons, mc_samples, seed)?;
        let min_cost = chan.costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let budget = cons.power_budget().max(min_cost);
        out.push(blahut_arimoto_cost(&chan, budget, tol, max_iter)?);
    }
    Ok(out)
}
