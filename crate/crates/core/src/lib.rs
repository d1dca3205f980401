//! Achievable rates of MIMO receivers built from one-bit threshold ADCs with
//! delay-based blockwise analog linear combining.
//!
//! The crate covers the full analysis pipeline for such receivers:
//!
//! * [`channel`] — the fixed real-valued MIMO channel, its image subspace,
//!   and Gaussian noise sampling.
//! * [`arrangement`] — the sign-vector partition of the image subspace cut
//!   out by linear combiners feeding one-bit ADCs, with exact region
//!   enumeration and the combinatorial region-count formulas.
//! * [`asymptotics`] — binary entropy, exact and Stirling-expanded binomial
//!   logarithms, capacity bounds, and exact per-delay rate caps.
//! * [`codec`] — the constellation of region representatives, the induced
//!   finite channel under Gaussian noise, and its capacity via
//!   Blahut–Arimoto (optionally cost-constrained).
//! * [`receiver`] — time-domain simulation of the delay-network receiver,
//!   measuring block error rates against SNR.

pub mod arrangement;
pub mod asymptotics;
pub mod channel;
pub mod codec;
pub mod error;
pub mod linprog;
pub mod receiver;
pub mod rng;

pub use arrangement::{
    covering_radius, enumerate_regions, enumerate_regions_with, general_position_arrangement,
    max_regions, max_regions_zero_threshold, sample_region_count, Arrangement, ArrangementDoc,
    EnumerationConfig, Region, RegionEnumeration, SignVector,
};
pub use asymptotics::{
    asymptotic_rate_limit, binary_entropy, binomial, expansion_window, high_snr_rate_bounds,
    high_snr_rate_exact, log_binomial_exact, log_binomial_expansion, log_binomial_sum_exact,
    log_binomial_sum_expansion, ExactRate, RateBounds, RateMethod,
};
pub use channel::{sample_noise, ChannelModel, ChannelSpec};
pub use codec::{
    blahut_arimoto, blahut_arimoto_cost, build_constellation, high_snr_capacity_check,
    induced_channel, induced_channel_monte_carlo, min_norm_input, CapacityResult, Constellation,
    InducedChannel, TransitionMethod,
};
pub use error::Error;
pub use receiver::{
    quantize_block, simulate_link, threshold_subvector, Decoder, DelayNetwork, MessageSource,
    SimConfig, SimReport,
};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
