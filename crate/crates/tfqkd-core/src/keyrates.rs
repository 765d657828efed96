//! Secret key rates: the phase-matching (CAL) rate, the SNS rate, and the
//! asymptotic and finite-size rates after two-way classical post-processing.

use crate::math::binary_entropy;

/// Computed rate and the error figures that drove it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    /// Secret bits per transmitted pulse pair, normalisation included.
    pub rate_per_pulse: f64,
    /// Rate at the system clock (bit/s).
    pub rate_bps: f64,
    pub qber_z: f64,
    pub e1ph: f64,
}

/// Duty-cycle fraction of pulses usable for key after stabilisation overhead.
pub const DUTY_NORM: f64 = 0.999;

/// Phase-matching protocol rate. `qz`, `ez` and `e1ph` are per detector,
/// conditioned on coding (X-X) pairs; the duty-cycle normalisation replaces
/// the basis probability in the asymptotic limit.
pub fn skr_cal(
    qz: [f64; 2],
    ez: [f64; 2],
    e1ph: [f64; 2],
    p_x: f64,
    f_ec: f64,
    clock_hz: f64,
) -> KeyRateReport {
    let norm = (DUTY_NORM / p_x) * (DUTY_NORM / p_x);
    let mut cond = 0.0;
    for d in 0..2 {
        cond += qz[d] * (1.0 - f_ec * binary_entropy(ez[d]) - binary_entropy(e1ph[d])).max(0.0);
    }
    let per_pulse = norm * p_x * p_x * cond;
    let q = qz[0] + qz[1];
    KeyRateReport {
        rate_per_pulse: per_pulse,
        rate_bps: per_pulse * clock_hz,
        qber_z: if q > 0.0 { (qz[0] * ez[0] + qz[1] * ez[1]) / q } else { 0.0 },
        e1ph: if q > 0.0 { (qz[0] * e1ph[0] + qz[1] * e1ph[1]) / q } else { 0.0 },
    }
}

/// SNS rate from decoy bounds and the Z-basis coding statistics, all
/// conditioned on Z-Z pairs. `eps` is the send probability, `flux_s` /
/// `flux_n` the send and off fluxes.
#[allow(clippy::too_many_arguments)]
pub fn skr_sns(
    y0: f64,
    y1: f64,
    e1ph: f64,
    q_z: f64,
    e_z: f64,
    eps: f64,
    flux_s: f64,
    flux_n: f64,
    p_z: f64,
    f_ec: f64,
    clock_hz: f64,
) -> KeyRateReport {
    let mu = flux_s + flux_n;
    let q0 = 2.0 * eps * (1.0 - eps) * libm::exp(-mu) * y0;
    let q1 = 2.0 * eps * (1.0 - eps) * mu * libm::exp(-mu) * y1;
    let cond = q0 + q1 * (1.0 - binary_entropy(e1ph)) - f_ec * q_z * binary_entropy(e_z);
    let norm = (DUTY_NORM / p_z) * (DUTY_NORM / p_z);
    let per_pulse = (norm * p_z * p_z * cond).max(0.0);
    KeyRateReport {
        rate_per_pulse: per_pulse,
        rate_bps: per_pulse * clock_hz,
        qber_z: e_z,
        e1ph,
    }
}

/// Post-processing statistics feeding the TWCC rates, all after the pairing
/// step: `n1_kept` and `e1ph_kept` are the surviving single-photon count and
/// phase error, `n_a`/`n_b`/`n_c` the kept-pair class sizes with their error
/// rates, `n0` the session pulse count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwccStats {
    pub n1_kept: f64,
    pub e1ph_kept: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub e_a: f64,
    pub e_b: f64,
    pub e_c: f64,
    pub n0: f64,
    pub p_z: f64,
}

/// Single-photon events surviving random pairing: n1^2 / (2 n_total).
pub fn twcc_survival(n1: f64, n_total: f64) -> f64 {
    if n_total > 0.0 {
        n1 * n1 / (2.0 * n_total)
    } else {
        0.0
    }
}

/// Phase error after XOR of two independent bits: 2e(1-e).
pub fn twcc_error_after(e: f64) -> f64 {
    2.0 * e * (1.0 - e)
}

/// Per-class error rates of the kept pairs from the Z-Z detection rows,
/// assuming independent errors across the pair. Returns (E_a, E_b, E_c) for
/// the odd, even-both-off and even-both-on classes.
pub fn twcc_class_error_rates(
    zz_ss: f64,
    zz_sn: f64,
    zz_ns: f64,
    zz_nn: f64,
) -> (f64, f64, f64) {
    let q0 = zz_ss / (zz_ss + zz_ns); // error fraction among receiver-bit-0 events
    let q1 = zz_nn / (zz_nn + zz_sn); // error fraction among receiver-bit-1 events
    let e_a = q0 * q1 / (q0 * q1 + (1.0 - q0) * (1.0 - q1));
    let e_b = q0 * q0 / (q0 * q0 + (1.0 - q0) * (1.0 - q0));
    let e_c = q1 * q1 / (q1 * q1 + (1.0 - q1) * (1.0 - q1));
    (e_a, e_b, e_c)
}

fn twcc_leak(stats: &TwccStats, f_ec: f64, literal_leak: bool) -> f64 {
    // the even-both-off class is corrected at its own rate by default; the
    // literal variant charges it at the odd-class rate
    let hb = if literal_leak {
        binary_entropy(stats.e_a)
    } else {
        binary_entropy(stats.e_b)
    };
    f_ec
        * (stats.n_a * binary_entropy(stats.e_a)
            + stats.n_b * hb
            + stats.n_c * binary_entropy(stats.e_c))
}

/// Asymptotic TWCC rate per pulse (and at the clock).
pub fn skr_twcc_asymptotic(
    stats: &TwccStats,
    f_ec: f64,
    literal_leak: bool,
    clock_hz: f64,
) -> KeyRateReport {
    let n_sec = stats.n1_kept * (1.0 - binary_entropy(stats.e1ph_kept))
        - twcc_leak(stats, f_ec, literal_leak);
    let norm = (DUTY_NORM / stats.p_z) * (DUTY_NORM / stats.p_z);
    let per_pulse = (norm * n_sec / stats.n0).max(0.0);
    KeyRateReport {
        rate_per_pulse: per_pulse,
        rate_bps: per_pulse * clock_hz,
        qber_z: 0.0,
        e1ph: stats.e1ph_kept,
    }
}

/// Failure budgets of the finite-size analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeParams {
    pub eps_ec: f64,
    pub eps_pa: f64,
    pub eps_hat: f64,
}

impl Default for FiniteSizeParams {
    fn default() -> Self {
        FiniteSizeParams { eps_ec: 1e-10, eps_pa: 1e-10, eps_hat: 1e-10 }
    }
}

impl FiniteSizeParams {
    /// Fixed finite-size penalty in bits.
    pub fn delta_bits(&self) -> f64 {
        crate::math::log2(2.0 / self.eps_ec)
            - 2.0 * crate::math::log2(libm::sqrt(2.0) * self.eps_pa * self.eps_hat)
    }
}

/// Finite-size TWCC result: extractable secret bits and the session rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteReport {
    pub secret_bits: f64,
    pub rate_per_pulse: f64,
    pub rate_bps: f64,
}

/// Finite-size TWCC rate; no duty normalisation is applied, the session
/// counts already carry it.
pub fn skr_twcc_finite(
    stats: &TwccStats,
    f_ec: f64,
    literal_leak: bool,
    fin: &FiniteSizeParams,
    clock_hz: f64,
) -> FiniteReport {
    let n_sec = stats.n1_kept * (1.0 - binary_entropy(stats.e1ph_kept))
        - twcc_leak(stats, f_ec, literal_leak)
        - fin.delta_bits();
    let secret_bits = n_sec.max(0.0);
    let per_pulse = secret_bits / stats.n0;
    FiniteReport { secret_bits, rate_per_pulse: per_pulse, rate_bps: per_pulse * clock_hz }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoy::{sns_decoy_bounds, SnsObservables};

    #[test]
    fn finite_penalty_value() {
        let fin = FiniteSizeParams::default();
        assert!((fin.delta_bits() - 166.096).abs() < 0.01, "{}", fin.delta_bits());
    }

    #[test]
    fn survival_and_xor_error() {
        assert!((twcc_survival(100.0, 1000.0) - 5.0).abs() < 1e-12);
        assert!((twcc_error_after(0.1) - 0.18).abs() < 1e-15);
        assert_eq!(twcc_error_after(0.5), 0.5);
    }

    // 368.7 km asymptotic SNS session: recorded detection rows drive the
    // decoy bounds and the rate must land on the recorded 1.098e-6 bit/pulse
    #[test]
    fn sns_replay_368km() {
        let n0 = 2.066e11;
        let (p_z, p_x, eps) = (0.5, 0.5, 0.058);
        let (u, v) = (0.35, 0.035);
        let (p_u, p_w) = (1.0 / 3.0, 1.0 / 3.0);
        let p_v = 1.0 / 3.0;
        let (p_xu, p_xv, p_xw) = (p_x * p_u, p_x * p_v, p_x * p_w);
        let p_zn = p_z * (1.0 - eps);
        let q = |count: f64, pa: f64, pb: f64| count / (pa * pb * n0);
        let q_u = (q(1786996.0, p_xu, p_zn)
            + q(1729304.0, p_zn, p_xu)
            + q(643480.0, p_xu, p_xw)
            + q(628786.0, p_xw, p_xu))
            / 4.0;
        let q_v = (q(155240.0, p_xv, p_zn)
            + q(173107.0, p_zn, p_xv)
            + q(55695.0, p_xv, p_xw)
            + q(62043.0, p_xw, p_xv))
            / 4.0;
        let y0 = (q(4264.0, p_zn, p_zn)
            + q(1486.0, p_xw, p_zn)
            + q(1634.0, p_zn, p_xw)
            + q(552.0, p_xw, p_xw))
            / 4.0;
        let q_vv = q(115296.0, p_xv, p_xv);
        let obs = SnsObservables { y0, q_u, q_v, q_vv, e_vv: 0.0387, flux_u: u, flux_v: v };
        let b = sns_decoy_bounds(&obs);
        assert!((b.e1ph_upper - 0.0415).abs() < 0.003, "e1ph = {}", b.e1ph_upper);
        let zz = 39403.0 + 314309.0 + 304872.0 + 4264.0;
        let q_z = zz / (p_z * p_z * n0);
        let e_z = (39403.0 + 4264.0) / zz;
        assert!((e_z - 0.0659).abs() < 0.001);
        let r = skr_sns(b.y0_lower, b.y1_lower, b.e1ph_upper, q_z, e_z, eps, 0.35, 2e-4, p_z, 1.04, 5e8);
        assert!(
            (r.rate_per_pulse / 1.098e-6 - 1.0).abs() < 0.05,
            "rate = {}",
            r.rate_per_pulse
        );
    }

    // 522 km asymptotic TWCC session replay
    #[test]
    fn twcc_asymptotic_replay_522km() {
        let (zz_ss, zz_sn, zz_ns, zz_nn) = (27876.0, 91891.0, 91497.0, 2024.0);
        let (e_a, e_b, e_c) = twcc_class_error_rates(zz_ss, zz_sn, zz_ns, zz_nn);
        let stats = TwccStats {
            n1_kept: 3.685e4,
            e1ph_kept: 0.0715,
            n_a: 3.968e4,
            n_b: 2.162e4,
            n_c: 1.963e4,
            e_a,
            e_b,
            e_c,
            n0: 5.208e11,
            p_z: 0.5,
        };
        let r = skr_twcc_asymptotic(&stats, 1.04, false, 5e8);
        assert!(
            (r.rate_per_pulse / 8.557e-8 - 1.0).abs() < 0.05,
            "rate = {}",
            r.rate_per_pulse
        );
        // shrinkage consistency with the recorded pre-pairing count
        let n_t = zz_ss + zz_sn + zz_ns + zz_nn;
        let shrunk = twcc_survival(1.254e5, n_t);
        assert!((shrunk / 3.685e4 - 1.0).abs() < 0.01, "shrunk = {shrunk}");
        assert!((twcc_error_after(0.0371) / 0.0715 - 1.0).abs() < 0.01);
    }

    // 522 km finite-size session replay
    #[test]
    fn twcc_finite_replay_522km() {
        let (e_a, e_b, e_c) = twcc_class_error_rates(80689.0, 511622.0, 507468.0, 20176.0);
        let stats = TwccStats {
            n1_kept: 1.828e5,
            e1ph_kept: 0.138,
            n_a: 2.333e5,
            n_b: 1.198e5,
            n_c: 1.152e5,
            e_a,
            e_b,
            e_c,
            n0: 3.07e12,
            p_z: 0.5,
        };
        let fin = FiniteSizeParams::default();
        let r = skr_twcc_finite(&stats, 1.04, false, &fin, 5e8);
        assert!((r.secret_bits / 4.046e4 - 1.0).abs() < 0.02, "bits = {}", r.secret_bits);
        assert!((r.rate_per_pulse / 1.318e-8 - 1.0).abs() < 0.02);
    }

    #[test]
    fn literal_leak_variant_overestimates_the_rate() {
        let (e_a, e_b, e_c) = twcc_class_error_rates(27876.0, 91891.0, 91497.0, 2024.0);
        let stats = TwccStats {
            n1_kept: 3.685e4,
            e1ph_kept: 0.0715,
            n_a: 3.968e4,
            n_b: 2.162e4,
            n_c: 1.963e4,
            e_a,
            e_b,
            e_c,
            n0: 5.208e11,
            p_z: 0.5,
        };
        // the odd-class rate is far below the even-zero rate here, so
        // charging the even-zero class at it understates the leak
        let normal = skr_twcc_asymptotic(&stats, 1.04, false, 5e8);
        let literal = skr_twcc_asymptotic(&stats, 1.04, true, 5e8);
        assert!(literal.rate_per_pulse > normal.rate_per_pulse);
    }

    #[test]
    fn cal_rate_shape() {
        // zero errors: rate equals the duty-normalised total gain
        let r = skr_cal([0.01, 0.02], [0.0, 0.0], [0.0, 0.0], 0.5, 1.04, 5e8);
        assert!((r.rate_per_pulse - DUTY_NORM * DUTY_NORM * 0.25 * 0.03 / 0.25).abs() < 1e-12);
        // saturated phase error kills the rate
        let dead = skr_cal([0.01, 0.02], [0.0, 0.0], [0.5, 0.5], 0.5, 1.04, 5e8);
        assert_eq!(dead.rate_per_pulse, 0.0);
    }
}
