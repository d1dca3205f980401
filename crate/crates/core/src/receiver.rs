//! Time-domain simulation of the delay-augmented receiver.
//!
//! The receive chain is simulated exactly as built: a delay network of `2ℓ`
//! analog delay elements stores incoming antenna vectors; once a full `ℓ`-use
//! batch has finished its residency the blockwise combiner reads it out,
//! one-bit ADCs with period-`ℓ` thresholds quantize the combined values, and
//! a decoder maps the bit pattern back to a message.  The simulator also
//! cross-checks every block against the geometric abstraction (sign vector of
//! the projected noisy block) — the two must agree bit-for-bit.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_noise, ChannelModel};
use crate::codec::{sign_key, Constellation, InducedChannel};
use crate::error::Error;
use crate::rng::{self, streams};
use crate::Result;

/// Blocks per parallel work unit; each unit runs its own delay network.
/// Results are invariant to this value because every block draws from its
/// own message and noise streams.
const CHUNK_BLOCKS: usize = 256;

/// A `2ℓ`-element analog delay line with the double-buffer read/write
/// discipline: while the batch for uses `(i−ℓ, i]` is being written, the
/// combiner reads the fully resident batch from uses `(i−2ℓ, i−ℓ]`.
#[derive(Debug, Clone)]
pub struct DelayNetwork {
    ell: usize,
    n_r: usize,
    buffer: Vec<DVector<f64>>,
    channel_use: usize,
}

impl DelayNetwork {
    pub fn new(ell: usize, n_r: usize) -> Result<Self> {
        if ell == 0 || n_r == 0 {
            return Err(Error::InvalidArgument(format!(
                "delay network needs ell ≥ 1 and n_r ≥ 1, got ell={ell}, n_r={n_r}"
            )));
        }
        Ok(Self {
            ell,
            n_r,
            buffer: vec![DVector::zeros(n_r); 2 * ell],
            channel_use: 0,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Channel uses consumed so far.
    pub fn channel_use(&self) -> usize {
        self.channel_use
    }

    /// Feeds one received vector; returns the concatenated `ℓ·n_r` batch
    /// when one completes its residency.
    ///
    /// The first batch emerges at use `2ℓ` (the pipeline latency), then one
    /// batch every `ℓ` uses: the batch emitted at use `i` holds the vectors
    /// received during uses `(i−2ℓ, i−ℓ]`, use-major.
    pub fn step(&mut self, y: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        if y.len() != self.n_r {
            return Err(Error::DimensionMismatch(format!(
                "received vector has length {}, expected n_r = {}",
                y.len(),
                self.n_r
            )));
        }
        let depth = 2 * self.ell;
        self.buffer[self.channel_use % depth] = y.clone();
        self.channel_use += 1;
        let i = self.channel_use;
        if i >= depth && i.is_multiple_of(self.ell) {
            let mut block = DVector::zeros(self.ell * self.n_r);
            for (slot, u) in (i - depth..i - self.ell).enumerate() {
                block
                    .rows_mut(slot * self.n_r, self.n_r)
                    .copy_from(&self.buffer[u % depth]);
            }
            Ok(Some(block))
        } else {
            Ok(None)
        }
    }
}

/// One-bit quantization of a combined block: bit `i` is `1{out_i + t_i ≥ 0}`
/// (ties quantize to 1, matching the arrangement's sign convention).
///
/// Lengths must match; this is the caller's contract.
pub fn quantize_block(combiner_out: &DVector<f64>, thresholds: &DVector<f64>) -> Vec<bool> {
    assert_eq!(
        combiner_out.len(),
        thresholds.len(),
        "combiner output and threshold lengths differ"
    );
    combiner_out
        .iter()
        .zip(thresholds.iter())
        .map(|(&w, &t)| w + t >= 0.0)
        .collect()
}

/// Threshold sub-vector applied by the ADC bank at global channel use `i`
/// (1-based): the block threshold vector splits into `ℓ` groups of `n_q`,
/// and use `i` selects group `k' = ((i−1) mod ℓ) + 1`, so uses `i` and
/// `i + ℓ` always see identical thresholds.
pub fn threshold_subvector(
    t_block: &DVector<f64>,
    n_q: usize,
    ell: usize,
    use_index: usize,
) -> Result<DVector<f64>> {
    if ell == 0 || n_q == 0 || use_index == 0 {
        return Err(Error::InvalidArgument(
            "need ell ≥ 1, n_q ≥ 1 and a 1-based use index".into(),
        ));
    }
    if t_block.len() != ell * n_q {
        return Err(Error::DimensionMismatch(format!(
            "block threshold length {} != ell·n_q = {}",
            t_block.len(),
            ell * n_q
        )));
    }
    let k = (use_index - 1) % ell; // zero-based group index
    Ok(t_block.rows(k * n_q, n_q).into_owned())
}

/// Message decoding rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Maximum likelihood over induced-channel rows: decode the message
    /// whose row gives the observed region the highest probability.
    Ml,
    /// Decode the observed region itself (exact sign-pattern match).
    Sign,
}

/// How block messages are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSource {
    /// Uniform over all regions.
    Uniform,
    /// Uniform over the support of a capacity-achieving input distribution
    /// (entries above 1e-9).
    SupportOf(Vec<f64>),
}

/// Link-simulation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_blocks: usize,
    /// SNR in dB; must match the power the constellation was built at
    /// (`P = 10^(snr_db/10)`).
    pub snr_db: f64,
    pub seed: u64,
    pub decoder: Decoder,
    pub source: MessageSource,
    /// Noise standard deviation; 1.0 is the physical channel, 0.0 is the
    /// noiseless test rig.
    pub noise_std: f64,
}

impl SimConfig {
    pub fn new(n_blocks: usize, snr_db: f64, seed: u64) -> Self {
        Self {
            n_blocks,
            snr_db,
            seed,
            decoder: Decoder::Ml,
            source: MessageSource::Uniform,
            noise_std: 1.0,
        }
    }
}

/// Outcome of a link simulation.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub message_errors: u64,
    pub blocks: u64,
    pub error_rate: f64,
    pub snr_db: f64,
    /// Pipeline delay from a block's first use to its decode: always `2ℓ`.
    pub latency_uses: u64,
    pub seed: u64,
    /// Blocks where the analog pipeline's bits differed from the geometric
    /// sign vector (must be zero).
    pub pipeline_mismatches: u64,
    /// Observed bit patterns that matched no constellation region and were
    /// folded to the nearest representative.
    pub folded_observations: u64,
    /// Plug-in mutual information of the (sent, observed-region) histogram,
    /// bits per channel use.
    pub empirical_rate_bits_per_use: f64,
}

struct ChunkStats {
    errors: u64,
    mismatches: u64,
    folds: u64,
    joint: Vec<u64>,
}

/// Simulates `n_blocks` message transmissions through the full time-domain
/// receive chain at the configured SNR.
///
/// Per block: a message is drawn, its minimum-norm input transmitted
/// column-by-column with fresh unit-variance noise, the delay network and
/// blockwise combiner run sample-by-sample, the ADC bits decoded, and the
/// result checked against the geometric model.  Blocks are simulated in
/// parallel chunks; every block has its own deterministic message and noise
/// streams, so reports depend only on the configuration.
pub fn simulate_link(
    ch: &ChannelModel,
    cons: &Constellation,
    chan: &InducedChannel,
    cfg: &SimConfig,
) -> Result<SimReport> {
    let ell = cons.ell();
    let n_r = ch.n_r();
    let n_t = ch.n_t();
    let k = cons.len();
    if cons.block_basis().nrows() != ell * n_r {
        return Err(Error::DimensionMismatch(format!(
            "constellation ambient dimension {} != ell·n_r = {}",
            cons.block_basis().nrows(),
            ell * n_r
        )));
    }
    if chan.num_symbols() != k {
        return Err(Error::DimensionMismatch(format!(
            "induced channel has {} symbols, constellation has {k}",
            chan.num_symbols()
        )));
    }
    if cfg.n_blocks == 0 {
        return Err(Error::InvalidArgument("n_blocks must be positive".into()));
    }
    if cfg.noise_std < 0.0 || !cfg.noise_std.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be finite and nonnegative, got {}",
            cfg.noise_std
        )));
    }
    let power = 10f64.powf(cfg.snr_db / 10.0);
    let budget = ell as f64 * power;
    if (cons.power_budget() - budget).abs() > 1e-6 * budget.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "constellation was built for budget {}, but snr_db={} implies {budget}",
            cons.power_budget(),
            cfg.snr_db
        )));
    }

    let support: Vec<usize> = match &cfg.source {
        MessageSource::Uniform => (0..k).collect(),
        MessageSource::SupportOf(p) => {
            if p.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "distribution length {} != constellation size {k}",
                    p.len()
                )));
            }
            let s: Vec<usize> = (0..k).filter(|&j| p[j] > 1e-9).collect();
            if s.is_empty() {
                return Err(Error::InvalidArgument(
                    "input distribution has empty support".into(),
                ));
            }
            s
        }
    };

    // Physical combiner rows over the raw antenna block, and the matching
    // image-coordinate geometry for the consistency check.
    let ambient = cons.arrangement().lift_to_ambient(cons.block_basis())?;
    let combiner = ambient.v().clone();
    let thresholds = ambient.thresholds().clone();
    let basis_t = cons.block_basis().transpose();
    let index: HashMap<u32, usize> = cons
        .regions()
        .iter()
        .enumerate()
        .map(|(i, s)| (sign_key(s), i))
        .collect();

    let n_chunks = cfg.n_blocks.div_ceil(CHUNK_BLOCKS);
    let stats: Vec<ChunkStats> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<ChunkStats> {
            let lo = c * CHUNK_BLOCKS;
            let hi = ((c + 1) * CHUNK_BLOCKS).min(cfg.n_blocks);
            let mut net = DelayNetwork::new(ell, n_r)?;
            let mut sent = Vec::with_capacity(hi - lo);
            let mut batches = Vec::with_capacity(hi - lo);
            for b in lo..hi {
                let mut rng_m = rng::stream(cfg.seed, streams::MESSAGE + b as u64);
                let j = support[rng_m.gen_range(0..support.len())];
                sent.push(j);
                let x = &cons.inputs()[j];
                let mut rng_n = rng::stream(cfg.seed, streams::NOISE + b as u64);
                for u in 0..ell {
                    let x_u = x.rows(u * n_t, n_t).into_owned();
                    let noise = cfg.noise_std * sample_noise(n_r, &mut rng_n);
                    let y = ch.apply(&x_u, &noise)?;
                    if let Some(batch) = net.step(&y)? {
                        batches.push(batch);
                    }
                }
            }
            // Flush the pipeline: the final batch's content is already
            // resident, the clock just has to advance past its residency.
            let silence = DVector::zeros(n_r);
            for _ in 0..ell {
                if let Some(batch) = net.step(&silence)? {
                    batches.push(batch);
                }
            }
            if batches.len() != sent.len() {
                return Err(Error::ConstructionFailure(format!(
                    "pipeline emitted {} batches for {} blocks",
                    batches.len(),
                    sent.len()
                )));
            }

            let mut stats = ChunkStats {
                errors: 0,
                mismatches: 0,
                folds: 0,
                joint: vec![0u64; k * k],
            };
            for (j_sent, batch) in sent.into_iter().zip(batches) {
                // Analog pipeline: combine, then quantize.
                let combined = &combiner * &batch;
                let bits = quantize_block(&combined, &thresholds);
                // Geometric abstraction: sign vector of the projected block.
                let z = &basis_t * &batch;
                let geometric = cons.arrangement().sign_vector(&z)?;
                if bits != geometric.bits() {
                    stats.mismatches += 1;
                }
                let key = bits
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
                let observed = match index.get(&key) {
                    Some(&idx) => idx,
                    None => {
                        stats.folds += 1;
                        nearest_representative(cons, &z)
                    }
                };
                let decoded = match cfg.decoder {
                    Decoder::Sign => observed,
                    Decoder::Ml => (0..k)
                        .max_by(|&a, &b| {
                            chan.transition[(a, observed)]
                                .partial_cmp(&chan.transition[(b, observed)])
                                .expect("finite probabilities")
                        })
                        .expect("non-empty alphabet"),
                };
                if decoded != j_sent {
                    stats.errors += 1;
                }
                stats.joint[j_sent * k + observed] += 1;
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors = 0u64;
    let mut mismatches = 0u64;
    let mut folds = 0u64;
    let mut joint = vec![0u64; k * k];
    for s in stats {
        errors += s.errors;
        mismatches += s.mismatches;
        folds += s.folds;
        for (tot, add) in joint.iter_mut().zip(&s.joint) {
            *tot += add;
        }
    }

    Ok(SimReport {
        message_errors: errors,
        blocks: cfg.n_blocks as u64,
        error_rate: errors as f64 / cfg.n_blocks as f64,
        snr_db: cfg.snr_db,
        latency_uses: 2 * ell as u64,
        seed: cfg.seed,
        pipeline_mismatches: mismatches,
        folded_observations: folds,
        empirical_rate_bits_per_use: plugin_mi_bits(&joint, k) / ell as f64,
    })
}

fn nearest_representative(cons: &Constellation, z: &DVector<f64>) -> usize {
    cons.representatives()
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (z - *a)
                .norm()
                .partial_cmp(&(z - *b).norm())
                .expect("finite norms")
        })
        .map(|(i, _)| i)
        .expect("non-empty constellation")
}

/// Plug-in mutual information (bits per block) of a joint count histogram.
fn plugin_mi_bits(joint: &[u64], k: usize) -> f64 {
    let total: u64 = joint.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut row = vec![0.0f64; k];
    let mut col = vec![0.0f64; k];
    for a in 0..k {
        for b in 0..k {
            let q = joint[a * k + b] as f64 / n;
            row[a] += q;
            col[b] += q;
        }
    }
    let mut mi = 0.0;
    for a in 0..k {
        for b in 0..k {
            let q = joint[a * k + b] as f64 / n;
            if q > 0.0 {
                mi += q * (q / (row[a] * col[b])).log2();
            }
        }
    }
    mi.max(0.0)
}
