//! TOML run configuration and conversion into the core parameter types.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

use tfqkd_core::channel::ChannelParams;
use tfqkd_core::detect::EffectiveFluxes;
use tfqkd_core::keyrates::FiniteSizeParams;
use tfqkd_core::pattern::{Intensity, Protocol, ProtocolParams};
use tfqkd_core::phase::{DriftModel, LoopConfig};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub protocol: ProtocolSection,
    pub channel: ChannelSection,
    pub session: SessionSection,
    #[serde(default)]
    pub finite: Option<FiniteSection>,
    /// Calibrated per-side, per-intensity flux x transmittance products at
    /// the middle node; overrides the launch-flux x channel model.
    #[serde(default)]
    pub effective_flux: Option<EffectiveFluxSection>,
    #[serde(default)]
    pub stabilisation: Option<StabilisationSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// "cal", "sns" or "sns-twcc".
    pub kind: String,
    pub flux_s: f64,
    pub flux_u: f64,
    pub flux_v: f64,
    pub flux_w: f64,
    pub flux_n: f64,
    pub p_z: f64,
    pub p_x: f64,
    #[serde(default)]
    pub p_send: f64,
    pub p_u: f64,
    pub p_v: f64,
    pub p_w: f64,
    #[serde(default = "default_phase_levels")]
    pub phase_levels: u32,
    /// Full width of the phase-match acceptance window (degrees).
    #[serde(default = "default_acceptance")]
    pub acceptance_deg: f64,
    #[serde(default = "default_f_ec")]
    pub f_ec: f64,
}

fn default_phase_levels() -> u32 {
    512
}

fn default_acceptance() -> f64 {
    22.5
}

fn default_f_ec() -> f64 {
    1.04
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub length_km: f64,
    #[serde(default = "default_loss")]
    pub loss_db_per_km: f64,
    #[serde(default)]
    pub arm_extra_db_a: f64,
    #[serde(default)]
    pub arm_extra_db_b: f64,
    #[serde(default)]
    pub measured_loss_db_a: Option<f64>,
    #[serde(default)]
    pub measured_loss_db_b: Option<f64>,
    pub charlie_transmission_a: f64,
    pub charlie_transmission_b: f64,
    pub det_eff_0: f64,
    pub det_eff_1: f64,
    pub dark_rate_hz: f64,
    pub gate_ns: f64,
    pub clock_hz: f64,
}

fn default_loss() -> f64 {
    0.171
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SessionSection {
    /// Total pulse pairs of the session.
    pub n0: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Residual interferometric phase noise seen by fixed-phase pulses (rad).
    pub sigma_phase_rad: f64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FiniteSection {
    #[serde(default = "default_eps")]
    pub eps_ec: f64,
    #[serde(default = "default_eps")]
    pub eps_pa: f64,
    #[serde(default = "default_eps")]
    pub eps_hat: f64,
}

fn default_eps() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EffectiveFluxSection {
    pub a: FluxRow,
    pub b: FluxRow,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FluxRow {
    pub s: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub n: f64,
}

impl FluxRow {
    fn as_array(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        out[Intensity::S.index()] = self.s;
        out[Intensity::U.index()] = self.u;
        out[Intensity::V.index()] = self.v;
        out[Intensity::W.index()] = self.w;
        out[Intensity::N.index()] = self.n;
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StabilisationSection {
    #[serde(default = "default_wiener")]
    pub wiener_rad_per_sqrt_s: f64,
    #[serde(default)]
    pub linear_rad_per_s: f64,
    #[serde(default = "default_lambda_q")]
    pub lambda_quantum_nm: f64,
    #[serde(default = "default_lambda_r")]
    pub lambda_reference_nm: f64,
    #[serde(default = "default_fast_rate")]
    pub fast_rate_hz: f64,
    #[serde(default = "default_slow_rate")]
    pub slow_rate_hz: f64,
    #[serde(default = "default_photon_rate")]
    pub photon_rate_at_d2: f64,
    #[serde(default = "default_dim_fraction")]
    pub dim_reference_fraction: f64,
    #[serde(default = "default_window")]
    pub slow_window_fraction: f64,
    #[serde(default = "default_gain")]
    pub fast_gain: f64,
    #[serde(default = "default_gain")]
    pub slow_gain: f64,
    #[serde(default)]
    pub setpoint_rad: f64,
}

fn default_wiener() -> f64 {
    8000.0
}
fn default_lambda_q() -> f64 {
    1550.12
}
fn default_lambda_r() -> f64 {
    1548.51
}
fn default_fast_rate() -> f64 {
    200_000.0
}
fn default_slow_rate() -> f64 {
    20.0
}
fn default_photon_rate() -> f64 {
    1.0e7
}
fn default_dim_fraction() -> f64 {
    0.05
}
fn default_window() -> f64 {
    0.2
}
fn default_gain() -> f64 {
    1.0
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol_params()?.validate().map_err(anyhow::Error::msg)?;
        self.channel_params().validate().map_err(anyhow::Error::msg)?;
        if self.session.n0 <= 0.0 {
            bail!("session.n0 must be positive");
        }
        if self.session.sigma_phase_rad < 0.0 {
            bail!("session.sigma_phase_rad must be non-negative");
        }
        Ok(())
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams> {
        let p = &self.protocol;
        let protocol = match p.kind.as_str() {
            "cal" => Protocol::Cal,
            "sns" => Protocol::Sns,
            "sns-twcc" => Protocol::SnsTwcc,
            other => bail!("unknown protocol kind {other:?} (expected cal, sns or sns-twcc)"),
        };
        Ok(ProtocolParams {
            protocol,
            flux_s: p.flux_s,
            flux_u: p.flux_u,
            flux_v: p.flux_v,
            flux_w: p.flux_w,
            flux_n: p.flux_n,
            p_z: p.p_z,
            p_x: p.p_x,
            p_s_given_z: p.p_send,
            p_u: p.p_u,
            p_v: p.p_v,
            p_w: p.p_w,
            phase_levels: p.phase_levels,
            delta_accept_rad: (p.acceptance_deg / 2.0).to_radians(),
            f_ec: p.f_ec,
        })
    }

    pub fn channel_params(&self) -> ChannelParams {
        let c = &self.channel;
        ChannelParams {
            // per-arm fibre: each user sits half the quoted span from the node
            length_km: c.length_km / 2.0,
            loss_db_per_km: c.loss_db_per_km,
            arm_extra_db_a: c.arm_extra_db_a,
            arm_extra_db_b: c.arm_extra_db_b,
            measured_loss_db_a: c.measured_loss_db_a,
            measured_loss_db_b: c.measured_loss_db_b,
            charlie_transmission_a: c.charlie_transmission_a,
            charlie_transmission_b: c.charlie_transmission_b,
            det_eff_0: c.det_eff_0,
            det_eff_1: c.det_eff_1,
            dark_rate_hz: c.dark_rate_hz,
            gate_s: c.gate_ns * 1e-9,
            clock_hz: c.clock_hz,
        }
    }

    pub fn effective_fluxes(&self) -> Result<EffectiveFluxes> {
        if let Some(eff) = &self.effective_flux {
            return Ok(EffectiveFluxes { a: eff.a.as_array(), b: eff.b.as_array() });
        }
        Ok(EffectiveFluxes::from_launch(&self.protocol_params()?, &self.channel_params()))
    }

    pub fn finite_params(&self) -> Option<FiniteSizeParams> {
        self.finite.as_ref().map(|f| FiniteSizeParams {
            eps_ec: f.eps_ec,
            eps_pa: f.eps_pa,
            eps_hat: f.eps_hat,
        })
    }

    pub fn drift_model(&self) -> DriftModel {
        match &self.stabilisation {
            Some(s) => DriftModel {
                wiener_rad_per_sqrt_s: s.wiener_rad_per_sqrt_s,
                linear_rad_per_s: s.linear_rad_per_s,
                lambda_quantum_nm: s.lambda_quantum_nm,
                lambda_reference_nm: s.lambda_reference_nm,
            },
            None => DriftModel::default(),
        }
    }

    pub fn loop_config(&self) -> LoopConfig {
        match &self.stabilisation {
            Some(s) => LoopConfig {
                fast_rate_hz: s.fast_rate_hz,
                slow_rate_hz: s.slow_rate_hz,
                photon_rate_at_d2: s.photon_rate_at_d2,
                dim_reference_fraction: s.dim_reference_fraction,
                slow_window_fraction: s.slow_window_fraction,
                fast_gain: s.fast_gain,
                slow_gain: s.slow_gain,
                setpoint_rad: s.setpoint_rad,
            },
            None => LoopConfig::default(),
        }
    }
}
