//! Rate formulas: exact combinatorial caps and their large-blocklength
//! expansions.
//!
//! The receiver's high-SNR rate is governed by counts of the form
//! `Σ_{i≤d} C(m, i)` (number of quantizer regions); this module evaluates
//! their base-2 logarithms exactly (big-integer, or log-gamma with
//! compensated summation past the big-integer limit) and via Stirling-type
//! expansions, and assembles the capacity lower/upper bounds built from
//! them.  All reported rates are in bits.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// Largest `n` for which binomial sums run in exact big-integer arithmetic;
/// beyond it the log-gamma path takes over (and says so in its method flag).
pub const BIGINT_LIMIT: u64 = 4096;

/// Exact binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut r = BigUint::from(1u32);
    for i in 1..=k {
        // Exact at every step: i consecutive integers divide by i!.
        r = r * (n - k + i) / i;
    }
    r
}

/// `log₂` of a positive big integer, accurate to the f64 mantissa.
fn log2_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    assert!(bits > 0, "log of zero");
    if bits <= 53 {
        return (x.to_u64().expect("fits") as f64).log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_u64().expect("53 bits fit");
    (top as f64).log2() + shift as f64
}

/// Binary entropy in bits, with `0·log 0 ≡ 0`.
pub fn binary_entropy(lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "binary entropy needs λ in [0, 1], got {lambda}"
        )));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(lambda) + term(1.0 - lambda))
}

/// `log₂ C(n, k)` via log-gamma (no size limit).
fn log_binomial_lgamma(n: u64, k: u64) -> f64 {
    let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
    (lg(n) - lg(k) - lg(n - k)) / std::f64::consts::LN_2
}

/// `log₂ C(n, k)`: exact big-integer arithmetic for `n ≤ 1000`, log-gamma
/// beyond (the two agree to well under 1e-9 bits where both apply).
pub fn log_binomial_exact(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "binomial coefficient needs 0 ≤ k ≤ n, got k={k}, n={n}"
        )));
    }
    if n <= 1000 {
        Ok(log2_biguint(&binomial(n, k)))
    } else {
        Ok(log_binomial_lgamma(n, k))
    }
}

/// Open admissibility window `(lo, hi)` for the single-coefficient
/// expansion at blocklength `n`.
pub fn expansion_window(n: u64) -> (f64, f64) {
    let nf = n as f64;
    let lo = 0.5 * (1.0 - (1.0 - 1.0 / (3.0 * nf)).sqrt());
    let hi = 0.5 * (1.0 + (1.0 - 4.0 / (12.0 * nf + 1.0)).sqrt());
    (lo, hi)
}

/// Stirling-type expansion of `log₂ C(n, λn)`:
/// `n·h_b(λ) − ½log₂ n − ½log₂(2πλ(1−λ))`, the `O(1/n)` remainder dropped.
///
/// `λ` must lie strictly inside the admissibility window of
/// [`expansion_window`]; outside it the dropped remainder is not controlled
/// and the call is rejected.
pub fn log_binomial_expansion(n: u64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let (lo, hi) = expansion_window(n);
    if !(lambda > lo && lambda < hi) {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} outside the admissibility window ({lo:.6}, {hi:.6}) for n = {n}"
        )));
    }
    let nf = n as f64;
    Ok(nf * binary_entropy(lambda)?
        - 0.5 * nf.log2()
        - 0.5 * (2.0 * std::f64::consts::PI * lambda * (1.0 - lambda)).log2())
}

/// `log₂ Σ_{i=0}^{⌊λn⌋} C(n, i)`, the exact companion of
/// [`log_binomial_sum_expansion`].  Big-integer up to [`BIGINT_LIMIT`],
/// compensated log-gamma summation beyond.
pub fn log_binomial_sum_exact(n: u64, lambda: f64) -> Result<f64> {
    if n == 0 || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 1 and λ in [0, 1], got n={n}, λ={lambda}"
        )));
    }
    let k_max = ((lambda * n as f64).floor() as u64).min(n);
    Ok(log2_sum_binomials(n, k_max).0)
}

/// Expansion of the truncated binomial sum for `λ ∈ (0, ½)`:
/// `n·h_b(λ) − ½log₂ n − ½log₂(2πλ(1−2λ)²/(1−λ))`, `o(1)` remainder dropped.
pub fn log_binomial_sum_expansion(n: u64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "sum expansion needs λ in (0, ½) — the (1−2λ) factor vanishes at ½ — got {lambda}"
        )));
    }
    let nf = n as f64;
    let arg = 2.0 * std::f64::consts::PI * lambda * (1.0 - 2.0 * lambda).powi(2) / (1.0 - lambda);
    Ok(nf * binary_entropy(lambda)? - 0.5 * nf.log2() - 0.5 * arg.log2())
}

/// Which arithmetic produced an exact-rate value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    BigInteger,
    LogGamma,
}

impl std::fmt::Display for RateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateMethod::BigInteger => write!(f, "bigint"),
            RateMethod::LogGamma => write!(f, "lgamma"),
        }
    }
}

/// An exact rate value plus the flag saying how it was computed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactRate {
    pub bits_per_use: f64,
    pub method: RateMethod,
}

/// `log₂ Σ_{i=0}^{min(k_max, n)} C(n, i)` plus the method flag.
fn log2_sum_binomials(n: u64, k_max: u64) -> (f64, RateMethod) {
    let k_max = k_max.min(n);
    if n <= BIGINT_LIMIT {
        // Incremental ratio C(n,i+1) = C(n,i)·(n−i)/(i+1); the division is
        // always exact, so the whole sum stays integer.
        let mut term = BigUint::from(1u32);
        let mut sum = BigUint::from(1u32);
        for i in 0..k_max {
            term = term * (n - i) / (i + 1);
            sum += &term;
        }
        (log2_biguint(&sum), RateMethod::BigInteger)
    } else {
        // Log-sum-exp over log-gamma terms, compensated (Kahan) accumulation.
        let logs: Vec<f64> = (0..=k_max).map(|i| log_binomial_lgamma(n, i)).collect();
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for l in logs {
            let term = (l - peak).exp2();
            let y = term - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        (peak + sum.log2(), RateMethod::LogGamma)
    }
}

/// Exact high-SNR rate cap of the blockwise receiver, bits per channel use:
/// `(1/ℓ)·log₂ Σ_{i=0}^{ℓ·rank} C(ℓn_q, i)`, or with all-zero thresholds
/// `(1/ℓ)·log₂ [2·Σ_{i=0}^{ℓ·rank−1} C(ℓn_q−1, i)]` — the region counts the
/// quantizer can distinguish, amortized over the block.
pub fn high_snr_rate_exact(
    n_q: u64,
    rank: u64,
    ell: u64,
    zero_threshold: bool,
) -> Result<ExactRate> {
    if n_q == 0 || rank == 0 || ell == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n_q, rank, ell ≥ 1, got ({n_q}, {rank}, {ell})"
        )));
    }
    let m = ell * n_q;
    let (log2_count, method) = if zero_threshold {
        let (s, method) = log2_sum_binomials(m - 1, ell * rank - 1);
        (1.0 + s, method)
    } else {
        log2_sum_binomials(m, ell * rank)
    };
    Ok(ExactRate {
        bits_per_use: log2_count / ell as f64,
        method,
    })
}

/// Capacity bounds for the delay-`ℓ` receiver at high SNR.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateBounds {
    /// Achievable rate, bits per channel use (`o(1/ℓ)` remainder dropped).
    pub lower: f64,
    /// Converse, bits per channel use (`o(1/ℓ)` remainder dropped).
    pub upper: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_q: u64,
    pub rank: u64,
    pub n_r: u64,
    pub ell: u64,
    /// Both bounds drop an `o(1/ℓ)` remainder; this annotation travels with
    /// every emitted value.
    pub remainder_dropped: bool,
}

/// Bit-rate bound shared by both sides of [`high_snr_rate_bounds`]:
/// `n_q·h_b(λ) − (1/2ℓ)·log₂ ℓ − 1{λ≠½}·(1/2ℓ)·log₂(2πn_q·λ(1−2λ)²/(1−λ))`.
fn bound_term(n_q: u64, lambda: f64, ell: u64) -> Result<f64> {
    let nf = n_q as f64;
    let lf = ell as f64;
    let mut r = nf * binary_entropy(lambda)? - lf.log2() / (2.0 * lf);
    if lambda != 0.5 {
        let arg = 2.0 * std::f64::consts::PI * nf * lambda * (1.0 - 2.0 * lambda).powi(2)
            / (1.0 - lambda);
        r -= arg.log2() / (2.0 * lf);
    }
    Ok(r)
}

/// High-SNR capacity bounds at finite delay `ℓ`: the achievable side rates
/// `α = min(rank/n_q, ½)` worth of entropy per ADC, the converse
/// `β = min(n_r/n_q, ½)`.
pub fn high_snr_rate_bounds(n_q: u64, rank: u64, n_r: u64, ell: u64) -> Result<RateBounds> {
    if n_q == 0 || ell == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n_q ≥ 1 and ell ≥ 1, got n_q={n_q}, ell={ell}"
        )));
    }
    if !(1 <= rank && rank <= n_r) {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ rank ≤ n_r, got rank={rank}, n_r={n_r}"
        )));
    }
    let alpha = (rank as f64 / n_q as f64).min(0.5);
    let beta = (n_r as f64 / n_q as f64).min(0.5);
    Ok(RateBounds {
        lower: bound_term(n_q, alpha, ell)?,
        upper: bound_term(n_q, beta, ell)?,
        alpha,
        beta,
        n_q,
        rank,
        n_r,
        ell,
        remainder_dropped: true,
    })
}

/// The `ℓ → ∞` limit of either bound: `n_q·h_b(min(dims/n_q, ½))`, where
/// `dims` is `rank` for the achievable side and `n_r` for the converse.
pub fn asymptotic_rate_limit(n_q: u64, dims: u64) -> Result<f64> {
    if n_q == 0 {
        return Err(Error::InvalidArgument("n_q must be positive".into()));
    }
    let lambda = (dims as f64 / n_q as f64).min(0.5);
    Ok(n_q as f64 * binary_entropy(lambda)?)
}
