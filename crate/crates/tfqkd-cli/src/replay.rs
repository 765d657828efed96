//! Key-rate chains: drive the decoy bounds and rate formulas either from a
//! recorded session summary or from a simulated counts ledger.

use anyhow::{bail, Result};

use tfqkd_core::decoy::{sns_decoy_bounds, SnsBounds, SnsObservables};
use tfqkd_core::detect::{CountsLedger, RowKey, CLASS_DIRECT, CLASS_PI};
use tfqkd_core::keyrates::{
    skr_sns, skr_twcc_asymptotic, skr_twcc_finite, twcc_class_error_rates, twcc_error_after,
    twcc_survival, FiniteReport, KeyRateReport, TwccStats,
};
use tfqkd_core::pattern::{Basis, Intensity};

use crate::config::Config;
use crate::counts::SessionCounts;

/// Intermediate figures of one SNS rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsEvaluation {
    pub bounds: SnsBounds,
    pub q_z: f64,
    pub e_z: f64,
    pub report: KeyRateReport,
}

/// Per-user-slot probabilities derived from the protocol section.
struct SlotProbs {
    z_n: f64,
    x_u: f64,
    x_v: f64,
    x_w: f64,
}

fn slot_probs(cfg: &Config) -> SlotProbs {
    let p = &cfg.protocol;
    SlotProbs {
        z_n: p.p_z * (1.0 - p.p_send),
        x_u: p.p_x * p.p_u,
        x_v: p.p_x * p.p_v,
        x_w: p.p_x * p.p_w,
    }
}

/// SNS decoy observables from a recorded session summary. One-sided and
/// vacuum-like gains average the symmetric row placements.
fn sns_observables_from_counts(cfg: &Config, c: &SessionCounts, n0: f64) -> Result<SnsObservables> {
    let p = slot_probs(cfg);
    let q = |count: f64, pa: f64, pb: f64| count / (pa * pb * n0);
    let q_u = (q(c.detected("xz", "un")?, p.x_u, p.z_n)
        + q(c.detected("zx", "nu")?, p.z_n, p.x_u)
        + q(c.detected("xx", "uw")?, p.x_u, p.x_w)
        + q(c.detected("xx", "wu")?, p.x_w, p.x_u))
        / 4.0;
    let q_v = (q(c.detected("xz", "vn")?, p.x_v, p.z_n)
        + q(c.detected("zx", "nv")?, p.z_n, p.x_v)
        + q(c.detected("xx", "vw")?, p.x_v, p.x_w)
        + q(c.detected("xx", "wv")?, p.x_w, p.x_v))
        / 4.0;
    let y0 = (q(c.detected("zz", "nn")?, p.z_n, p.z_n)
        + q(c.detected("xz", "wn")?, p.x_w, p.z_n)
        + q(c.detected("zx", "nw")?, p.z_n, p.x_w)
        + q(c.detected("xx", "ww")?, p.x_w, p.x_w))
        / 4.0;
    Ok(SnsObservables {
        y0,
        q_u,
        q_v,
        q_vv: q(c.detected("xx", "vv")?, p.x_v, p.x_v),
        e_vv: c.get("xvv_error_rate")?,
        flux_u: cfg.protocol.flux_u,
        flux_v: cfg.protocol.flux_v,
    })
}

/// Z-basis coding statistics (gain and error rate conditioned on Z-Z pairs).
fn z_coding_from_counts(cfg: &Config, c: &SessionCounts, n0: f64) -> Result<(f64, f64, f64)> {
    let ss = c.detected("zz", "ss")?;
    let sn = c.detected("zz", "sn")?;
    let ns = c.detected("zz", "ns")?;
    let nn = c.detected("zz", "nn")?;
    let zz = ss + sn + ns + nn;
    let p_z = cfg.protocol.p_z;
    Ok((zz / (p_z * p_z * n0), (ss + nn) / zz, zz))
}

/// Asymptotic SNS rate from a recorded session summary.
pub fn sns_from_counts(cfg: &Config, c: &SessionCounts) -> Result<SnsEvaluation> {
    let n0 = c.try_get("total_pulse_pairs").unwrap_or(cfg.session.n0);
    let obs = sns_observables_from_counts(cfg, c, n0)?;
    let bounds = sns_decoy_bounds(&obs);
    let (q_z, e_z, _) = z_coding_from_counts(cfg, c, n0)?;
    let p = &cfg.protocol;
    let report = skr_sns(
        bounds.y0_lower,
        bounds.y1_lower,
        bounds.e1ph_upper,
        q_z,
        e_z,
        p.p_send,
        p.flux_s,
        p.flux_n,
        p.p_z,
        p.f_ec,
        cfg.channel.clock_hz,
    );
    Ok(SnsEvaluation { bounds, q_z, e_z, report })
}

/// Figures of one TWCC rate evaluation, including the pairing-step
/// predictions that a recorded session can be checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwccEvaluation {
    pub stats: TwccStats,
    pub n1_before: f64,
    pub e1ph_before: f64,
    pub ez_before: f64,
    /// Predicted Z error rate of the kept pairs: e^2 / (e^2 + (1-e)^2).
    pub ez_after: f64,
    pub asymptotic: KeyRateReport,
    pub finite: Option<FiniteReport>,
}

/// TWCC rates from a recorded session summary: the printed pre-pairing
/// single-photon figures feed the survival and leak formulas.
pub fn twcc_from_counts(cfg: &Config, c: &SessionCounts, literal_leak: bool) -> Result<TwccEvaluation> {
    let n0 = c.try_get("total_pulse_pairs").unwrap_or(cfg.session.n0);
    let ss = c.detected("zz", "ss")?;
    let sn = c.detected("zz", "sn")?;
    let ns = c.detected("zz", "ns")?;
    let nn = c.detected("zz", "nn")?;
    let n_t = ss + sn + ns + nn;
    let n1_before = c.get("n1_before")?;
    let e1ph_before = c.get("e1ph_before")?;
    let ez_before = (ss + nn) / n_t;
    let (e_a, e_b, e_c) = twcc_class_error_rates(ss, sn, ns, nn);
    let stats = TwccStats {
        n1_kept: twcc_survival(n1_before, n_t),
        e1ph_kept: twcc_error_after(e1ph_before),
        n_a: c.get("odd_pairs")?,
        n_b: c.get("even_pairs_00")?,
        n_c: c.get("even_pairs_11")?,
        e_a,
        e_b,
        e_c,
        n0,
        p_z: cfg.protocol.p_z,
    };
    finish_twcc(cfg, stats, n1_before, e1ph_before, ez_before, literal_leak)
}

fn finish_twcc(
    cfg: &Config,
    stats: TwccStats,
    n1_before: f64,
    e1ph_before: f64,
    ez_before: f64,
    literal_leak: bool,
) -> Result<TwccEvaluation> {
    let clock = cfg.channel.clock_hz;
    let asymptotic = skr_twcc_asymptotic(&stats, cfg.protocol.f_ec, literal_leak, clock);
    let finite = cfg
        .finite_params()
        .map(|fin| skr_twcc_finite(&stats, cfg.protocol.f_ec, literal_leak, &fin, clock));
    let e = ez_before;
    let ez_after = e * e / (e * e + (1.0 - e) * (1.0 - e));
    Ok(TwccEvaluation {
        stats,
        n1_before,
        e1ph_before,
        ez_before,
        ez_after,
        asymptotic,
        finite,
    })
}

fn row(ledger: &CountsLedger, ba: Basis, ia: Intensity, bb: Basis, ib: Intensity) -> (f64, f64) {
    let rc = ledger.row(&RowKey { basis_a: ba, int_a: ia, basis_b: bb, int_b: ib });
    ((rc.clicks[0] + rc.clicks[1]) as f64, rc.pairs as f64)
}

fn gain(ledger: &CountsLedger, ba: Basis, ia: Intensity, bb: Basis, ib: Intensity) -> Result<f64> {
    let (clicks, pairs) = row(ledger, ba, ia, bb, ib);
    if pairs == 0.0 {
        bail!("ledger has no {ba:?}{ia:?}-{bb:?}{ib:?} pairs; session too short for decoy bounds");
    }
    Ok(clicks / pairs)
}

/// SNS decoy observables from a simulated counts ledger; gains condition on
/// the realised row pair counts.
fn sns_observables_from_ledger(cfg: &Config, ledger: &CountsLedger) -> Result<SnsObservables> {
    use Basis::{X, Z};
    use Intensity::{N, U, V, W};
    let q_u = (gain(ledger, X, U, Z, N)?
        + gain(ledger, Z, N, X, U)?
        + gain(ledger, X, U, X, W)?
        + gain(ledger, X, W, X, U)?)
        / 4.0;
    let q_v = (gain(ledger, X, V, Z, N)?
        + gain(ledger, Z, N, X, V)?
        + gain(ledger, X, V, X, W)?
        + gain(ledger, X, W, X, V)?)
        / 4.0;
    let y0 = (gain(ledger, Z, N, Z, N)?
        + gain(ledger, X, W, Z, N)?
        + gain(ledger, Z, N, X, W)?
        + gain(ledger, X, W, X, W)?)
        / 4.0;
    let vv = ledger.row(&RowKey { basis_a: X, int_a: V, basis_b: X, int_b: V });
    let matched_clicks = (vv.matching(0) + vv.matching(1)) as f64;
    let wrong = (vv.matched_clicks[CLASS_DIRECT][1] + vv.matched_clicks[CLASS_PI][0]) as f64;
    if matched_clicks == 0.0 {
        bail!("no matched v-v detections; session too short for the phase-error estimate");
    }
    Ok(SnsObservables {
        y0,
        q_u,
        q_v,
        q_vv: gain(ledger, X, V, X, V)?,
        e_vv: wrong / matched_clicks,
        flux_u: cfg.protocol.flux_u,
        flux_v: cfg.protocol.flux_v,
    })
}

fn z_coding_from_ledger(ledger: &CountsLedger) -> Result<(f64, f64, f64)> {
    use Basis::Z;
    use Intensity::{N, S};
    let (c_ss, p_ss) = row(ledger, Z, S, Z, S);
    let (c_sn, p_sn) = row(ledger, Z, S, Z, N);
    let (c_ns, p_ns) = row(ledger, Z, N, Z, S);
    let (c_nn, p_nn) = row(ledger, Z, N, Z, N);
    let clicks = c_ss + c_sn + c_ns + c_nn;
    let pairs = p_ss + p_sn + p_ns + p_nn;
    if pairs == 0.0 || clicks == 0.0 {
        bail!("no Z-Z detections in the ledger");
    }
    Ok((clicks / pairs, (c_ss + c_nn) / clicks, clicks))
}

/// Asymptotic SNS rate from a simulated counts ledger.
pub fn sns_from_ledger(cfg: &Config, ledger: &CountsLedger) -> Result<SnsEvaluation> {
    let obs = sns_observables_from_ledger(cfg, ledger)?;
    let bounds = sns_decoy_bounds(&obs);
    let (q_z, e_z, _) = z_coding_from_ledger(ledger)?;
    let p = &cfg.protocol;
    let report = skr_sns(
        bounds.y0_lower,
        bounds.y1_lower,
        bounds.e1ph_upper,
        q_z,
        e_z,
        p.p_send,
        p.flux_s,
        p.flux_n,
        p.p_z,
        p.f_ec,
        cfg.channel.clock_hz,
    );
    Ok(SnsEvaluation { bounds, q_z, e_z, report })
}

/// TWCC rates from a simulated counts ledger: the single-photon figures come
/// from the decoy bounds, the class sizes from the pairing-step predictions
/// on the detected Z-Z rows.
pub fn twcc_from_ledger(cfg: &Config, ledger: &CountsLedger, literal_leak: bool) -> Result<TwccEvaluation> {
    use Basis::Z;
    use Intensity::{N, S};
    let obs = sns_observables_from_ledger(cfg, ledger)?;
    let bounds = sns_decoy_bounds(&obs);
    let p = &cfg.protocol;
    let (c_ss, _) = row(ledger, Z, S, Z, S);
    let (c_sn, _) = row(ledger, Z, S, Z, N);
    let (c_ns, _) = row(ledger, Z, N, Z, S);
    let (c_nn, _) = row(ledger, Z, N, Z, N);
    let n_t = c_ss + c_sn + c_ns + c_nn;
    if n_t == 0.0 {
        bail!("no Z-Z detections in the ledger");
    }
    let eps = p.p_send;
    let mu = p.flux_s + p.flux_n;
    let n_zz_pairs = row(ledger, Z, S, Z, S).1
        + row(ledger, Z, S, Z, N).1
        + row(ledger, Z, N, Z, S).1
        + row(ledger, Z, N, Z, N).1;
    // expected single-photon detections among the Z-Z rows
    let q1 = 2.0 * eps * (1.0 - eps) * mu * (-mu).exp() * bounds.y1_lower;
    let n1_before = q1 * n_zz_pairs;
    let e1ph_before = bounds.e1ph_upper;
    let ez_before = (c_ss + c_nn) / n_t;
    let (e_a, e_b, e_c) = twcc_class_error_rates(c_ss, c_sn, c_ns, c_nn);
    // pairing-step class expectations on the detected Z-Z events
    let p1 = (c_nn + c_sn) / n_t; // receiver bit 1
    let p0 = 1.0 - p1;
    let n_pairs = n_t / 2.0;
    let stats = TwccStats {
        n1_kept: twcc_survival(n1_before, n_t),
        e1ph_kept: twcc_error_after(e1ph_before),
        n_a: n_pairs * 2.0 * p0 * p1 * agreement_odd(c_ss, c_sn, c_ns, c_nn),
        n_b: n_pairs * p0 * p0 * agreement_even(c_ss, c_ns),
        n_c: n_pairs * p1 * p1 * agreement_even(c_nn, c_sn),
        e_a,
        e_b,
        e_c,
        n0: ledger.total_pairs as f64,
        p_z: p.p_z,
    };
    finish_twcc(cfg, stats, n1_before, e1ph_before, ez_before, literal_leak)
}

/// Probability an odd (receiver 0-1) pair survives the parity announcement:
/// both bits right or both wrong.
fn agreement_odd(ss: f64, sn: f64, ns: f64, nn: f64) -> f64 {
    let q0 = ss / (ss + ns);
    let q1 = nn / (nn + sn);
    q0 * q1 + (1.0 - q0) * (1.0 - q1)
}

fn agreement_even(err: f64, ok: f64) -> f64 {
    let q = err / (err + ok);
    q * q + (1.0 - q) * (1.0 - q)
}
