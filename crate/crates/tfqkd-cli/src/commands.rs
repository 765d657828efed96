//! Subcommand implementations shared by the binary and the integration
//! tests.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use tfqkd_core::channel::skc0;
use tfqkd_core::detect::simulate_session;
use tfqkd_core::phase::{auto_tune, run_dual_band_lock, DriftModel, LockReport, LoopConfig};
use tfqkd_core::twcc::{render_binary_map, twcc_round, xor_map, RawKeys, TwccRound};

use crate::cal;
use crate::config::Config;
use crate::counts::{format_sig, SessionCounts};
use crate::ledger::{read_ledger, write_ledger};
use crate::replay;
use crate::{CmdResult, Failure, FailureExt};

fn emit(out: &mut SessionCounts, name: &str, value: f64) {
    println!("{name} = {}", format_sig(value));
    out.insert(name, value);
}

/// Repeaterless capacity of the configured span at the nominal fibre loss.
fn capacity(cfg: &Config) -> f64 {
    let eta = 10f64.powf(-cfg.channel.loss_db_per_km * cfg.channel.length_km / 10.0);
    skc0(eta)
}

pub fn keyrate(
    config_path: &Path,
    counts_path: Option<&Path>,
    ledger_path: Option<&Path>,
    literal_leak: bool,
    out_path: Option<&Path>,
) -> CmdResult {
    let cfg = Config::load(config_path).or_usage()?;
    let mut out = SessionCounts::default();
    emit(&mut out, "skc0_per_pulse", capacity(&cfg));
    let rate = match cfg.protocol.kind.as_str() {
        "cal" => keyrate_cal(&cfg, &mut out)?,
        "sns" => {
            let eval = sns_eval(&cfg, counts_path, ledger_path)?;
            emit(&mut out, "y0_lower", eval.bounds.y0_lower);
            emit(&mut out, "y1_lower", eval.bounds.y1_lower);
            emit(&mut out, "e1ph_upper", eval.bounds.e1ph_upper);
            emit(&mut out, "q_z", eval.q_z);
            emit(&mut out, "z_error_rate", eval.e_z);
            emit(&mut out, "skr_per_pulse", eval.report.rate_per_pulse);
            emit(&mut out, "skr_bps", eval.report.rate_bps);
            eval.report.rate_per_pulse
        }
        "sns-twcc" => {
            let eval = twcc_eval(&cfg, counts_path, ledger_path, literal_leak)?;
            emit(&mut out, "n1_before", eval.n1_before);
            emit(&mut out, "n1_after", eval.stats.n1_kept);
            emit(&mut out, "e1ph_before", eval.e1ph_before);
            emit(&mut out, "e1ph_after", eval.stats.e1ph_kept);
            emit(&mut out, "z_error_rate_before", eval.ez_before);
            emit(&mut out, "z_error_rate_after", eval.ez_after);
            emit(&mut out, "odd_pairs", eval.stats.n_a);
            emit(&mut out, "even_pairs_00", eval.stats.n_b);
            emit(&mut out, "even_pairs_11", eval.stats.n_c);
            emit(&mut out, "error_rate_odd", eval.stats.e_a);
            emit(&mut out, "error_rate_even_00", eval.stats.e_b);
            emit(&mut out, "error_rate_even_11", eval.stats.e_c);
            emit(&mut out, "skr_per_pulse", eval.asymptotic.rate_per_pulse);
            emit(&mut out, "skr_bps", eval.asymptotic.rate_bps);
            if let Some(fin) = eval.finite {
                emit(&mut out, "secure_bits", fin.secret_bits);
                emit(&mut out, "finite_skr_per_pulse", fin.rate_per_pulse);
                emit(&mut out, "finite_skr_bps", fin.rate_bps);
                fin.rate_per_pulse
            } else {
                eval.asymptotic.rate_per_pulse
            }
        }
        other => return Err(Failure::Usage(anyhow!("unknown protocol kind {other:?}"))),
    };
    if let Some(path) = out_path {
        out.write(path).or_runtime()?;
    }
    if rate <= 0.0 {
        return Err(Failure::Runtime(anyhow!("no positive key rate at this configuration")));
    }
    Ok(())
}

fn keyrate_cal(cfg: &Config, out: &mut SessionCounts) -> Result<f64, Failure> {
    let eval = cal::evaluate(cfg).or_runtime()?;
    for d in 0..2 {
        emit(out, &format!("q_z_d{d}"), eval.qz[d]);
        emit(out, &format!("z_error_rate_d{d}"), eval.ez[d]);
        emit(out, &format!("e1ph_lp_d{d}"), eval.e1ph_lp[d]);
        emit(out, &format!("e1ph_analytic_d{d}"), eval.e1ph_analytic[d]);
    }
    emit(out, "skr_per_pulse", eval.report_lp.rate_per_pulse);
    emit(out, "skr_bps", eval.report_lp.rate_bps);
    emit(out, "skr_bps_analytic", eval.report_analytic.rate_bps);
    Ok(eval.report_lp.rate_per_pulse)
}

fn sns_eval(
    cfg: &Config,
    counts_path: Option<&Path>,
    ledger_path: Option<&Path>,
) -> Result<replay::SnsEvaluation, Failure> {
    match (counts_path, ledger_path) {
        (Some(path), None) => {
            let counts = SessionCounts::load(path).or_usage()?;
            replay::sns_from_counts(cfg, &counts).or_usage()
        }
        (None, Some(path)) => {
            let ledger = read_ledger(path).or_usage()?;
            replay::sns_from_ledger(cfg, &ledger).or_runtime()
        }
        _ => Err(Failure::Usage(anyhow!(
            "this protocol needs exactly one of --counts or --ledger"
        ))),
    }
}

fn twcc_eval(
    cfg: &Config,
    counts_path: Option<&Path>,
    ledger_path: Option<&Path>,
    literal_leak: bool,
) -> Result<replay::TwccEvaluation, Failure> {
    match (counts_path, ledger_path) {
        (Some(path), None) => {
            let counts = SessionCounts::load(path).or_usage()?;
            replay::twcc_from_counts(cfg, &counts, literal_leak).or_usage()
        }
        (None, Some(path)) => {
            let ledger = read_ledger(path).or_usage()?;
            replay::twcc_from_ledger(cfg, &ledger, literal_leak).or_runtime()
        }
        _ => Err(Failure::Usage(anyhow!(
            "this protocol needs exactly one of --counts or --ledger"
        ))),
    }
}

pub fn simulate(
    config_path: &Path,
    pairs: Option<u64>,
    seed: Option<u64>,
    out_path: &Path,
) -> CmdResult {
    let cfg = Config::load(config_path).or_usage()?;
    let params = cfg.protocol_params().or_usage()?;
    let channel = cfg.channel_params();
    let fluxes = cfg.effective_fluxes().or_usage()?;
    let n_pairs = pairs.unwrap_or(cfg.session.n0 as u64);
    let seed = seed.unwrap_or(cfg.session.seed);
    let ledger = simulate_session(
        &params,
        &channel,
        &fluxes,
        cfg.session.sigma_phase_rad,
        n_pairs,
        seed,
    );
    write_ledger(&ledger, out_path).or_runtime()?;
    let clicks: u64 = ledger.rows.values().map(|r| r.clicks[0] + r.clicks[1]).sum();
    println!("pairs = {n_pairs}");
    println!("rows = {}", ledger.rows.len());
    println!("clicks = {clicks}");
    println!("ledger = {}", out_path.display());
    Ok(())
}

/// Flags of the `stabilise` subcommand, mirroring the loop configuration.
#[derive(Debug, Clone, Copy)]
pub struct StabiliseArgs {
    pub drift_rad_per_sqrt_s: f64,
    pub linear_rad_per_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub fast_gain: f64,
    pub slow_gain: f64,
    pub photon_rate_at_d2: f64,
    pub dim_reference_fraction: f64,
    pub slow_window_fraction: f64,
    pub tune: bool,
}

pub fn stabilise(args: &StabiliseArgs) -> CmdResult {
    let model = DriftModel {
        wiener_rad_per_sqrt_s: args.drift_rad_per_sqrt_s,
        linear_rad_per_s: args.linear_rad_per_s,
        ..DriftModel::default()
    };
    let mut cfg = LoopConfig {
        photon_rate_at_d2: args.photon_rate_at_d2,
        dim_reference_fraction: args.dim_reference_fraction,
        slow_window_fraction: args.slow_window_fraction,
        fast_gain: args.fast_gain,
        slow_gain: args.slow_gain,
        ..LoopConfig::default()
    };
    if args.tune {
        cfg = auto_tune(&model, &cfg, (args.duration_s / 4.0).max(2.0), args.seed);
        println!("tuned_fast_gain = {}", format_sig(cfg.fast_gain));
        println!("tuned_slow_gain = {}", format_sig(cfg.slow_gain));
    }
    let report = run_dual_band_lock(&model, &cfg, args.duration_s, args.seed);
    print_lock_report(&report);
    Ok(())
}

pub fn print_lock_report(report: &LockReport) {
    println!("free_drift_rad_per_s = {}", format_sig(report.free_increment_std));
    println!("locked_drift_rad_per_s = {}", format_sig(report.locked_increment_std));
    println!("reduction_factor = {}", format_sig(report.reduction_factor));
    println!("fast_suppression = {}", format_sig(report.fast_suppression));
    println!("locking_error_rad = {}", format_sig(report.locking_error_rad));
    println!("residual_std_rad = {}", format_sig(report.residual_std));
    println!("qber = {}", format_sig(report.qber));
}

/// Rebuild the raw Z-Z keys a recorded session implies: one aligned bit pair
/// per detected event, scaled down by `scale`, with the disagreeing events
/// placed at the both-sent and both-off rows.
pub fn keys_from_counts(counts: &SessionCounts, scale: f64) -> Result<RawKeys> {
    if scale < 1.0 {
        bail!("scale must be at least 1");
    }
    let n = |bases: &str, ints: &str| -> Result<usize> {
        Ok((counts.detected(bases, ints)? / scale).round() as usize)
    };
    let mut keys = RawKeys::default();
    // sender bit: 1 when she sent; receiver bit: 1 when he did not send
    for (count, a, b) in [
        (n("zz", "ss")?, 1u8, 0u8),
        (n("zz", "sn")?, 1, 1),
        (n("zz", "ns")?, 0, 0),
        (n("zz", "nn")?, 0, 1),
    ] {
        keys.alice.extend(std::iter::repeat_n(a, count));
        keys.bob.extend(std::iter::repeat_n(b, count));
    }
    if keys.is_empty() {
        bail!("counts file holds no detected Z-Z events");
    }
    Ok(keys)
}

pub fn print_twcc_round(keys: &RawKeys, round: &TwccRound) {
    println!("raw_bits = {}", keys.len());
    println!("errors_before = {}", round.errors_before);
    println!(
        "qber_before = {}",
        format_sig(round.errors_before as f64 / keys.len() as f64)
    );
    println!("discarded_pairs = {}", round.discarded_pairs);
    println!("odd_pairs = {}", round.n_odd);
    println!("even_pairs_00 = {}", round.n_even_zero);
    println!("even_pairs_11 = {}", round.n_even_one);
    println!("kept_bits = {}", round.kept.len());
    println!("errors_after = {}", round.errors_after);
    println!(
        "qber_after = {}",
        format_sig(round.errors_after as f64 / round.kept.len().max(1) as f64)
    );
}

pub fn twcc(
    counts_path: &Path,
    scale: f64,
    seed: u64,
    map_dir: Option<&Path>,
    map_width: usize,
) -> CmdResult {
    let counts = SessionCounts::load(counts_path).or_usage()?;
    let keys = keys_from_counts(&counts, scale).or_usage()?;
    let round = twcc_round(&keys, seed);
    print_twcc_round(&keys, &round);
    if let Some(dir) = map_dir {
        write_maps(&round.kept, dir, map_width).or_runtime()?;
    }
    Ok(())
}

fn write_maps(kept: &RawKeys, dir: &Path, width: usize) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating map directory {}", dir.display()))?;
    let diff = xor_map(&kept.alice, &kept.bob);
    for (name, bits) in [
        ("key_a.pbm", &kept.alice),
        ("key_b.pbm", &kept.bob),
        ("key_diff.pbm", &diff),
    ] {
        let path: PathBuf = dir.join(name);
        std::fs::write(&path, render_binary_map(bits, width))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("map = {}", path.display());
    }
    Ok(())
}

pub fn print_config(config_path: &Path) -> CmdResult {
    let cfg = Config::load(config_path).or_usage()?;
    let text = toml::to_string_pretty(&cfg)
        .context("serialising config")
        .or_runtime()?;
    print!("{text}");
    Ok(())
}
