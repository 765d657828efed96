//! Optical channel and detector model: transmittance, first-order
//! interference click probabilities at the middle node, and the repeaterless
//! secret key capacity bound.

use crate::math::{bessel_i0, gauss_mean};

/// Static parameters of one symmetric TF-QKD link (two arms meeting at a
/// 50/50 beam splitter followed by two detectors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Fibre length per arm (km).
    pub length_km: f64,
    /// Nominal attenuation (dB/km).
    pub loss_db_per_km: f64,
    /// Per-arm excess loss (dB).
    pub arm_extra_db_a: f64,
    pub arm_extra_db_b: f64,
    /// Measured per-arm fibre loss (dB); overrides length x coefficient.
    pub measured_loss_db_a: Option<f64>,
    pub measured_loss_db_b: Option<f64>,
    /// Receiver transmission fraction per arm, detector efficiency excluded.
    pub charlie_transmission_a: f64,
    pub charlie_transmission_b: f64,
    /// Detector efficiencies.
    pub det_eff_0: f64,
    pub det_eff_1: f64,
    /// Dark counts per second per detector.
    pub dark_rate_hz: f64,
    /// Detection window (s).
    pub gate_s: f64,
    /// Quantum-signal clock (Hz).
    pub clock_hz: f64,
}

/// Which arm of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A,
    B,
}

/// One joint pulse pair: mean photon numbers at the transmitters and the
/// encoded optical phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAmplitudes {
    pub flux_a: f64,
    pub flux_b: f64,
    pub phase_a: f64,
    pub phase_b: f64,
}

impl ChannelParams {
    /// Dark-count probability per detection gate.
    pub fn dark_prob(&self) -> f64 {
        self.dark_rate_hz * self.gate_s
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let fracs = [
            self.charlie_transmission_a,
            self.charlie_transmission_b,
            self.det_eff_0,
            self.det_eff_1,
        ];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err("transmission fractions must lie in [0,1]");
        }
        if self.loss_db_per_km < 0.0 {
            return Err("loss coefficient must be non-negative");
        }
        if !(self.dark_prob() < 1.0) {
            return Err("dark probability per gate must be < 1");
        }
        Ok(())
    }
}

/// Arm transmittance: fibre plus receiver insertion loss, detector
/// efficiency excluded (applied at the click stage).
pub fn transmittance(channel: &ChannelParams, arm: Arm) -> f64 {
    let (fibre_db, extra_db, charlie) = match arm {
        Arm::A => (
            channel
                .measured_loss_db_a
                .unwrap_or(channel.length_km * channel.loss_db_per_km),
            channel.arm_extra_db_a,
            channel.charlie_transmission_a,
        ),
        Arm::B => (
            channel
                .measured_loss_db_b
                .unwrap_or(channel.length_km * channel.loss_db_per_km),
            channel.arm_extra_db_b,
            channel.charlie_transmission_b,
        ),
    };
    libm::pow(10.0, -(fibre_db + extra_db) / 10.0) * charlie
}

/// Repeaterless secret key capacity -log2(1 - eta) in bit/signal.
pub fn skc0(eta_total: f64) -> f64 {
    assert!((0.0..1.0).contains(&eta_total), "skc0: eta must be in [0,1)");
    -crate::math::log2(1.0 - eta_total)
}

/// Output mean photon numbers of the interfering pair for arm-attenuated
/// fluxes `fa`, `fb` and relative phase `dphi`: constructive port first.
pub fn output_photon_numbers(fa: f64, fb: f64, dphi: f64) -> (f64, f64) {
    let cross = 2.0 * libm::sqrt(fa * fb) * libm::cos(dphi);
    (((fa + fb) + cross) / 2.0, ((fa + fb) - cross) / 2.0)
}

/// Click probability of one detector given its mean photon number.
pub fn click_prob(n: f64, det_eff: f64, dark_prob: f64) -> f64 {
    1.0 - (1.0 - dark_prob) * libm::exp(-n * det_eff)
}

/// Click probabilities at (D0, D1) for arm-attenuated fluxes and a relative
/// phase; detectors fire independently.
pub fn clicks_at_charlie(fa: f64, fb: f64, dphi: f64, channel: &ChannelParams) -> (f64, f64) {
    let (n0, n1) = output_photon_numbers(fa, fb, dphi);
    let pd = channel.dark_prob();
    (
        click_prob(n0, channel.det_eff_0, pd),
        click_prob(n1, channel.det_eff_1, pd),
    )
}

/// Click probabilities for a transmitted pulse pair: applies each arm's
/// transmittance to the launch fluxes, then interferes.
pub fn click_probabilities(p: &PulseAmplitudes, channel: &ChannelParams) -> (f64, f64) {
    let fa = p.flux_a * transmittance(channel, Arm::A);
    let fb = p.flux_b * transmittance(channel, Arm::B);
    clicks_at_charlie(fa, fb, p.phase_a - p.phase_b, channel)
}

/// Phase-averaged click probabilities (uniform relative phase), per detector.
/// Closed form: E[exp(-d n(phi))] = exp(-d(fa+fb)/2) I0(d sqrt(fa fb)).
pub fn clicks_phase_averaged(fa: f64, fb: f64, channel: &ChannelParams) -> (f64, f64) {
    let pd = channel.dark_prob();
    let avg = |d: f64| {
        1.0 - (1.0 - pd) * libm::exp(-d * (fa + fb) / 2.0) * bessel_i0(d * libm::sqrt(fa * fb))
    };
    (avg(channel.det_eff_0), avg(channel.det_eff_1))
}

/// Click probabilities averaged over a Gaussian phase offset of std `sigma`
/// about the nominal relative phase `dphi`.
pub fn clicks_gauss_averaged(
    fa: f64,
    fb: f64,
    dphi: f64,
    sigma: f64,
    channel: &ChannelParams,
) -> (f64, f64) {
    let p0 = gauss_mean(sigma, |x| clicks_at_charlie(fa, fb, dphi + x, channel).0);
    let p1 = gauss_mean(sigma, |x| clicks_at_charlie(fa, fb, dphi + x, channel).1);
    (p0, p1)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn test_channel() -> ChannelParams {
        ChannelParams {
            length_km: 368.702 / 2.0,
            loss_db_per_km: 0.171,
            arm_extra_db_a: 0.0,
            arm_extra_db_b: 0.0,
            measured_loss_db_a: None,
            measured_loss_db_b: None,
            charlie_transmission_a: 0.6286,
            charlie_transmission_b: 0.5077,
            det_eff_0: 0.73,
            det_eff_1: 0.77,
            dark_rate_hz: 14.0,
            gate_s: 2e-9,
            clock_hz: 5e8,
        }
    }

    #[test]
    fn transmittance_identity_case() {
        let mut ch = test_channel();
        ch.length_km = 0.0;
        ch.charlie_transmission_a = 1.0;
        assert!((transmittance(&ch, Arm::A) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn measured_loss_overrides_nominal() {
        let mut ch = test_channel();
        ch.measured_loss_db_a = Some(13.30);
        let t = transmittance(&ch, Arm::A);
        assert!((t - libm::pow(10.0, -1.330) * 0.6286).abs() < 1e-12);
    }

    #[test]
    fn skc0_half_eta_is_one_bit() {
        assert!((skc0(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(skc0(0.0), 0.0);
    }

    #[test]
    fn skc0_long_distance_value() {
        // 368.702 km total at nominal loss, unit receiver transmission
        let eta = libm::pow(10.0, -368.702 * 0.171 / 10.0);
        let v = skc0(eta);
        assert!((v / 7.151e-7 - 1.0).abs() < 5e-3, "skc0 = {v}");
    }

    #[test]
    fn dark_only_when_no_light() {
        let ch = test_channel();
        let p = PulseAmplitudes { flux_a: 0.0, flux_b: 0.0, phase_a: 0.0, phase_b: 0.0 };
        let (p0, p1) = click_probabilities(&p, &ch);
        assert!((p0 - ch.dark_prob()).abs() < 1e-15);
        assert!((p1 - ch.dark_prob()).abs() < 1e-15);
    }

    #[test]
    fn constructive_port_takes_all_light() {
        let mut ch = test_channel();
        ch.dark_rate_hz = 0.0;
        let m = 0.01;
        let (n0, n1) = output_photon_numbers(m, m, 0.0);
        assert!((n0 - 2.0 * m).abs() < 1e-15 && n1.abs() < 1e-15);
        let (p0, p1) = clicks_at_charlie(m, m, 0.0, &ch);
        assert!((p0 - (1.0 - libm::exp(-2.0 * m * ch.det_eff_0))).abs() < 1e-15);
        assert!(p1.abs() < 1e-15);
    }

    #[test]
    fn pi_shift_swaps_outputs() {
        let (n0, n1) = output_photon_numbers(3e-4, 2e-4, 0.7);
        let (m0, m1) = output_photon_numbers(3e-4, 2e-4, 0.7 + core::f64::consts::PI);
        assert!((n0 - m1).abs() < 1e-18 && (n1 - m0).abs() < 1e-18);
    }

    #[test]
    fn energy_conservation() {
        for &(fa, fb, d) in &[(1e-4, 2e-4, 0.3), (0.5, 0.1, 2.0), (0.0, 1.0, 1.0)] {
            let (n0, n1) = output_photon_numbers(fa, fb, d);
            let total = fa + fb;
            if total > 0.0 {
                assert!(((n0 + n1) - total).abs() / total < 1e-12);
            }
        }
    }

    #[test]
    fn phase_average_matches_quadrature() {
        let ch = test_channel();
        let (fa, fb) = (1.5e-4, 1.4e-4);
        let n = 4096;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for i in 0..n {
            let phi = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
            let (p0, p1) = clicks_at_charlie(fa, fb, phi, &ch);
            s0 += p0;
            s1 += p1;
        }
        let (a0, a1) = clicks_phase_averaged(fa, fb, &ch);
        assert!((a0 - s0 / n as f64).abs() < 1e-14);
        assert!((a1 - s1 / n as f64).abs() < 1e-14);
    }
}
