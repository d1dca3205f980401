//! Study runners: resolve parameters (flags over config file), run the
//! library pipeline, and shape the results into tables.

use serde::Serialize;

use dqmimo::{
    asymptotic_rate_limit, blahut_arimoto, blahut_arimoto_cost, build_constellation,
    enumerate_regions, general_position_arrangement, high_snr_rate_bounds, high_snr_rate_exact,
    induced_channel, log_binomial_exact, log_binomial_expansion, log_binomial_sum_exact,
    log_binomial_sum_expansion, max_regions, max_regions_zero_threshold, sample_region_count,
    ChannelModel, ChannelSpec, Decoder, MessageSource, SimConfig,
};

use crate::args::{
    BoundsArgs, CapacityArgs, ChannelArgs, ConfigFile, CountRegionsArgs, ExpansionCheckArgs,
    Fig4Args, SimulateArgs, TradeoffArgs,
};
use crate::output::{Cell, Meta, Table};
use crate::CliError;

const DEFAULT_BA_TOL: f64 = 1e-9;
const DEFAULT_BA_MAX_ITER: usize = 10_000;
const DEFAULT_MC_SAMPLES: usize = 200_000;

fn require<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(format!("missing required parameter: {what}")))
}

/// Serializable name of an induced-channel transition method.
fn method_name<T: Serialize>(m: &T) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "unknown".into())
}

// ---------------------------------------------------------------- channel

/// Resolves the channel description: an explicit file, explicit dimensions,
/// or the same via config keys.
fn resolve_channel(
    args: &ChannelArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<ChannelSpec, CliError> {
    if let Some(path) = &args.channel {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("bad channel JSON in {}: {e}", path.display())));
    }
    let n_t = cfg.usize(args.n_t, "n_t")?;
    let n_r = cfg.usize(args.n_r, "n_r")?;
    if let (Some(n_t), Some(n_r)) = (n_t, n_r) {
        let seed = cfg.u64(args.channel_seed, "channel_seed")?.unwrap_or(seed);
        return Ok(ChannelSpec::Random { n_t, n_r, seed });
    }
    if let Some(spec) = cfg.channel("channel")? {
        return Ok(spec);
    }
    Err(CliError::config(
        "no channel given: pass --channel FILE or --n-t with --n-r",
    ))
}

// ----------------------------------------------------------- count-regions

#[derive(Serialize)]
struct CountRegionsParams {
    subcommand: &'static str,
    d: usize,
    n_q: usize,
    zero_threshold: bool,
    samples: u64,
    radius: Option<f64>,
    seed: u64,
}

pub fn count_regions(
    args: &CountRegionsArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<(Table, Meta), CliError> {
    let params = CountRegionsParams {
        subcommand: "count-regions",
        d: require(cfg.usize(args.d, "d")?, "--d")?,
        n_q: require(cfg.usize(args.n_q, "n_q")?, "--n-q")?,
        zero_threshold: cfg.bool(args.zero_threshold, "zero_threshold")?,
        samples: cfg.u64(args.samples, "samples")?.unwrap_or(100_000),
        radius: cfg.f64(args.radius, "radius")?,
        seed,
    };
    let meta = Meta::new(seed, &params)?;

    let arr = general_position_arrangement(params.n_q, params.d, params.zero_threshold, seed)?;
    let e = enumerate_regions(&arr)?;
    let formula = if params.zero_threshold {
        max_regions_zero_threshold(params.n_q as u64, params.d as u64)
    } else {
        max_regions(params.n_q as u64, params.d as u64)
    };
    let radius = match params.radius {
        Some(r) => r,
        None => dqmimo::covering_radius(&arr, &e)?,
    };
    let oracle = sample_region_count(&arr, params.samples as usize, radius, seed)?;

    let mut table = Table::new(
        "count-regions",
        vec![
            "d",
            "n_q",
            "zero_threshold",
            "exact",
            "formula_bound",
            "oracle",
            "oracle_samples",
            "oracle_radius",
            "degenerate",
        ],
    );
    table.push(vec![
        Cell::UInt(params.d as u64),
        Cell::UInt(params.n_q as u64),
        Cell::Bool(params.zero_threshold),
        Cell::UInt(e.count() as u64),
        Cell::Text(formula.to_string()),
        Cell::UInt(oracle as u64),
        Cell::UInt(params.samples),
        Cell::Float(radius),
        Cell::Bool(e.degenerate),
    ]);
    Ok((table, meta))
}

// ------------------------------------------------------------ bounds/fig4

#[derive(Serialize)]
struct BoundsParams {
    subcommand: &'static str,
    n_t: Vec<u64>,
    n_r: u64,
    n_q: Vec<u64>,
    ell_finite: Vec<u64>,
    ell_inf: bool,
    seed: u64,
}

fn rate_curve_table(params: &BoundsParams, schema: &'static str) -> Result<Table, CliError> {
    let mut table = Table::new(
        schema,
        vec![
            "curve",
            "n_t",
            "n_r",
            "rank",
            "n_q",
            "ell",
            "rate_bits_per_use",
            "bound_lower",
            "bound_upper",
            "method",
        ],
    );
    for &n_t in &params.n_t {
        let rank = n_t.min(params.n_r);
        for &n_q in &params.n_q {
            for &ell in &params.ell_finite {
                let exact = high_snr_rate_exact(n_q, rank, ell, false)?;
                let b = high_snr_rate_bounds(n_q, rank, params.n_r, ell)?;
                table.push(vec![
                    Cell::Text(format!("n_t={n_t}")),
                    Cell::UInt(n_t),
                    Cell::UInt(params.n_r),
                    Cell::UInt(rank),
                    Cell::UInt(n_q),
                    Cell::UInt(ell),
                    Cell::Float(exact.bits_per_use),
                    Cell::Float(b.lower),
                    Cell::Float(b.upper),
                    Cell::Text(exact.method.to_string()),
                ]);
            }
            if params.ell_inf {
                table.push(vec![
                    Cell::Text(format!("n_t={n_t}")),
                    Cell::UInt(n_t),
                    Cell::UInt(params.n_r),
                    Cell::UInt(rank),
                    Cell::UInt(n_q),
                    Cell::Text("inf".into()),
                    Cell::Float(asymptotic_rate_limit(n_q, rank)?),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Text("analytic".into()),
                ]);
            }
        }
    }
    if params.ell_inf {
        // Saturation reference: one bit per quantizer per use.
        for &n_q in &params.n_q {
            table.push(vec![
                Cell::Text("n_q".into()),
                Cell::Empty,
                Cell::UInt(params.n_r),
                Cell::Empty,
                Cell::UInt(n_q),
                Cell::Text("inf".into()),
                Cell::Float(n_q as f64),
                Cell::Empty,
                Cell::Empty,
                Cell::Text("analytic".into()),
            ]);
        }
    }
    Ok(table)
}

pub fn bounds(args: &BoundsArgs, cfg: &ConfigFile, seed: u64) -> Result<(Table, Meta), CliError> {
    let ell = require(cfg.ell_list(args.ell.as_deref(), "ell")?, "--ell")?;
    let params = BoundsParams {
        subcommand: "bounds",
        n_t: require(cfg.u64_list(args.n_t.as_deref(), "n_t")?, "--n-t")?,
        n_r: require(cfg.u64(args.n_r, "n_r")?, "--n-r")?,
        n_q: require(cfg.u64_list(args.n_q.as_deref(), "n_q")?, "--n-q")?,
        ell_finite: ell.finite,
        ell_inf: ell.inf,
        seed,
    };
    let meta = Meta::new(seed, &params)?;
    let table = rate_curve_table(&params, "bounds")?;
    Ok((table, meta))
}

pub fn fig4(args: &Fig4Args, cfg: &ConfigFile, seed: u64) -> Result<(Table, Meta), CliError> {
    let params = BoundsParams {
        subcommand: "fig4",
        n_t: cfg
            .u64_list(args.n_t.as_deref(), "n_t")?
            .unwrap_or_else(|| vec![2, 4, 6, 8]),
        n_r: cfg.u64(args.n_r, "n_r")?.unwrap_or(10),
        n_q: cfg
            .u64_list(args.n_q.as_deref(), "n_q")?
            .unwrap_or_else(|| (1..=40).collect()),
        ell_finite: Vec::new(),
        ell_inf: true,
        seed,
    };
    let meta = Meta::new(seed, &params)?;
    let table = rate_curve_table(&params, "fig4")?;
    Ok((table, meta))
}

// ---------------------------------------------------------------- tradeoff

#[derive(Serialize)]
struct TradeoffParams {
    subcommand: &'static str,
    n_q: u64,
    rank: u64,
    n_r: u64,
    ell: Vec<u64>,
    seed: u64,
}

pub fn tradeoff(
    args: &TradeoffArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<(Table, Meta), CliError> {
    let ell = require(cfg.ell_list(args.ell.as_deref(), "ell")?, "--ell")?;
    if ell.inf {
        return Err(CliError::config(
            "tradeoff needs a finite delay list; use bounds/fig4 for the analytic limit",
        ));
    }
    let rank = require(cfg.u64(args.rank, "rank")?, "--rank")?;
    let params = TradeoffParams {
        subcommand: "tradeoff",
        n_q: require(cfg.u64(args.n_q, "n_q")?, "--n-q")?,
        rank,
        n_r: cfg.u64(args.n_r, "n_r")?.unwrap_or(rank),
        ell: ell.finite,
        seed,
    };
    let meta = Meta::new(seed, &params)?;

    let mut table = Table::new(
        "tradeoff",
        vec![
            "ell",
            "rate_bits_per_use",
            "method",
            "rate_zero_threshold",
            "method_zero",
            "bound_lower",
            "bound_upper",
        ],
    );
    for &ell in &params.ell {
        let general = high_snr_rate_exact(params.n_q, params.rank, ell, false)?;
        let zero = high_snr_rate_exact(params.n_q, params.rank, ell, true)?;
        let b = high_snr_rate_bounds(params.n_q, params.rank, params.n_r, ell)?;
        table.push(vec![
            Cell::UInt(ell),
            Cell::Float(general.bits_per_use),
            Cell::Text(general.method.to_string()),
            Cell::Float(zero.bits_per_use),
            Cell::Text(zero.method.to_string()),
            Cell::Float(b.lower),
            Cell::Float(b.upper),
        ]);
    }
    Ok((table, meta))
}

// ---------------------------------------------------------------- capacity

#[derive(Serialize)]
struct CapacityParams {
    subcommand: &'static str,
    channel: ChannelSpec,
    n_q: usize,
    ell: usize,
    snr_db: Vec<f64>,
    mc_samples: usize,
    zero_threshold: bool,
    ba_tol: f64,
    ba_max_iter: usize,
    cost_constrained: bool,
    seed: u64,
}

/// Channel plus the blockwise combiner arrangement both capacity and
/// simulate operate on: `ℓ·n_q` quantizers over the `ℓ·rank`-dimensional
/// block image.
fn build_front_end(
    spec: &ChannelSpec,
    n_q: usize,
    ell: usize,
    zero_threshold: bool,
    seed: u64,
) -> Result<(ChannelModel, dqmimo::Arrangement), CliError> {
    let ch = spec.build()?;
    let arr = general_position_arrangement(ell * n_q, ell * ch.rank(), zero_threshold, seed)?;
    Ok((ch, arr))
}

pub fn capacity(
    args: &CapacityArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<(Table, Meta), CliError> {
    let params = CapacityParams {
        subcommand: "capacity",
        channel: resolve_channel(&args.channel, cfg, seed)?,
        n_q: require(cfg.usize(args.n_q, "n_q")?, "--n-q")?,
        ell: cfg.usize(args.ell, "ell")?.unwrap_or(1),
        snr_db: require(cfg.f64_list(args.snr_db.as_deref(), "snr_db")?, "--snr-db")?,
        mc_samples: cfg
            .usize(args.mc_samples, "mc_samples")?
            .unwrap_or(DEFAULT_MC_SAMPLES),
        zero_threshold: cfg.bool(args.zero_threshold, "zero_threshold")?,
        ba_tol: cfg.f64(args.ba_tol, "ba_tol")?.unwrap_or(DEFAULT_BA_TOL),
        ba_max_iter: cfg
            .usize(args.ba_max_iter, "ba_max_iter")?
            .unwrap_or(DEFAULT_BA_MAX_ITER),
        cost_constrained: !cfg.bool(args.no_cost_constraint, "no_cost_constraint")?,
        seed,
    };
    let meta = Meta::new(seed, &params)?;
    let (ch, arr) = build_front_end(
        &params.channel,
        params.n_q,
        params.ell,
        params.zero_threshold,
        seed,
    )?;

    let mut table = Table::new(
        "capacity",
        vec![
            "snr_db",
            "power",
            "symbols",
            "transition_method",
            "folded_fraction",
            "rate_bits_per_use",
            "rate_bits_per_block",
            "iterations",
            "converged",
            "cost_used",
            "cost_budget",
        ],
    );
    for &snr in &params.snr_db {
        let power = 10f64.powf(snr / 10.0);
        let cons = build_constellation(&ch, &arr, params.ell, power)?;
        let chan = induced_channel(&cons, params.mc_samples, seed)?;
        let (result, budget) = if params.cost_constrained {
            let min_cost = chan.costs.iter().cloned().fold(f64::INFINITY, f64::min);
            let budget = chan.power_budget.max(min_cost);
            (
                blahut_arimoto_cost(&chan, budget, params.ba_tol, params.ba_max_iter)?,
                Some(budget),
            )
        } else {
            (
                blahut_arimoto(&chan, params.ba_tol, params.ba_max_iter)?,
                None,
            )
        };
        table.push(vec![
            Cell::Float(snr),
            Cell::Float(power),
            Cell::UInt(chan.num_symbols() as u64),
            Cell::Text(method_name(&chan.method)),
            Cell::Float(chan.folded_fraction),
            Cell::Float(result.rate_bits_per_use),
            Cell::Float(result.rate_bits_per_block),
            Cell::UInt(result.iterations as u64),
            Cell::Bool(result.converged),
            Cell::Float(result.cost_used),
            budget.map_or(Cell::Empty, Cell::Float),
        ]);
    }
    Ok((table, meta))
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateParams {
    subcommand: &'static str,
    channel: ChannelSpec,
    n_q: usize,
    ell: usize,
    snr_db: Vec<f64>,
    blocks: usize,
    decoder: String,
    mc_samples: usize,
    noise_std: f64,
    zero_threshold: bool,
    seed: u64,
}

pub fn simulate(
    args: &SimulateArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<(Table, Meta), CliError> {
    let decoder_name = cfg
        .string(args.decoder.clone(), "decoder")?
        .unwrap_or_else(|| "ml".into());
    let decoder = match decoder_name.to_ascii_lowercase().as_str() {
        "ml" => Decoder::Ml,
        "sign" => Decoder::Sign,
        other => {
            return Err(CliError::config(format!(
                "unknown decoder {other:?} (expected ml or sign)"
            )))
        }
    };
    let params = SimulateParams {
        subcommand: "simulate",
        channel: resolve_channel(&args.channel, cfg, seed)?,
        n_q: require(cfg.usize(args.n_q, "n_q")?, "--n-q")?,
        ell: cfg.usize(args.ell, "ell")?.unwrap_or(1),
        snr_db: require(cfg.f64_list(args.snr_db.as_deref(), "snr_db")?, "--snr-db")?,
        blocks: cfg.usize(args.blocks, "blocks")?.unwrap_or(10_000),
        decoder: decoder_name,
        mc_samples: cfg
            .usize(args.mc_samples, "mc_samples")?
            .unwrap_or(DEFAULT_MC_SAMPLES),
        noise_std: cfg.f64(args.noise_std, "noise_std")?.unwrap_or(1.0),
        zero_threshold: cfg.bool(args.zero_threshold, "zero_threshold")?,
        seed,
    };
    let meta = Meta::new(seed, &params)?;
    let (ch, arr) = build_front_end(
        &params.channel,
        params.n_q,
        params.ell,
        params.zero_threshold,
        seed,
    )?;

    let mut table = Table::new(
        "simulate",
        vec![
            "snr_db",
            "blocks",
            "errors",
            "error_rate",
            "empirical_rate_bits_per_use",
            "latency_uses",
            "pipeline_mismatches",
            "folded_observations",
            "decoder",
        ],
    );
    for &snr in &params.snr_db {
        let power = 10f64.powf(snr / 10.0);
        let cons = build_constellation(&ch, &arr, params.ell, power)?;
        let chan = induced_channel(&cons, params.mc_samples, seed)?;
        let mut cfg_sim = SimConfig::new(params.blocks, snr, seed);
        cfg_sim.decoder = decoder;
        cfg_sim.source = MessageSource::Uniform;
        cfg_sim.noise_std = params.noise_std;
        let report = dqmimo::simulate_link(&ch, &cons, &chan, &cfg_sim)?;
        table.push(vec![
            Cell::Float(snr),
            Cell::UInt(report.blocks),
            Cell::UInt(report.message_errors),
            Cell::Float(report.error_rate),
            Cell::Float(report.empirical_rate_bits_per_use),
            Cell::UInt(report.latency_uses),
            Cell::UInt(report.pipeline_mismatches),
            Cell::UInt(report.folded_observations),
            Cell::Text(params.decoder.clone()),
        ]);
    }
    Ok((table, meta))
}

// ---------------------------------------------------------- expansion-check

#[derive(Serialize)]
struct ExpansionCheckParams {
    subcommand: &'static str,
    lambda: f64,
    sum_lambda: f64,
    n: Vec<u64>,
    seed: u64,
}

pub fn expansion_check(
    args: &ExpansionCheckArgs,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<(Table, Meta), CliError> {
    let params = ExpansionCheckParams {
        subcommand: "expansion-check",
        lambda: cfg.f64(args.lambda, "lambda")?.unwrap_or(0.3),
        sum_lambda: cfg.f64(args.sum_lambda, "sum_lambda")?.unwrap_or(0.25),
        n: cfg
            .u64_list(args.n.as_deref(), "n")?
            .unwrap_or_else(|| vec![100, 1_000, 10_000]),
        seed,
    };
    let meta = Meta::new(seed, &params)?;

    let mut table = Table::new(
        "expansion-check",
        vec![
            "n",
            "lambda",
            "k",
            "exact_bits",
            "expansion_bits",
            "abs_error",
            "sum_lambda",
            "sum_exact_bits",
            "sum_expansion_bits",
            "sum_abs_error",
        ],
    );
    for &n in &params.n {
        let k = (params.lambda * n as f64).round() as u64;
        let exact = log_binomial_exact(n, k)?;
        let exp = log_binomial_expansion(n, params.lambda)?;
        let sum_exact = log_binomial_sum_exact(n, params.sum_lambda)?;
        let sum_exp = log_binomial_sum_expansion(n, params.sum_lambda)?;
        table.push(vec![
            Cell::UInt(n),
            Cell::Float(params.lambda),
            Cell::UInt(k),
            Cell::Float(exact),
            Cell::Float(exp),
            Cell::Float((exp - exact).abs()),
            Cell::Float(params.sum_lambda),
            Cell::Float(sum_exact),
            Cell::Float(sum_exp),
            Cell::Float((sum_exp - sum_exact).abs()),
        ]);
    }
    Ok((table, meta))
}
