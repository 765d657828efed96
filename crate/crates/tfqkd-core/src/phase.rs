//! Dual-band phase stabilisation: free-running interferometric drift, the
//! fast lock on the reference wavelength (a common-phase actuator), the slow
//! quantum-band lock, and the QBER cost of the residual phase noise.

use alloc::vec::Vec;

use crate::rng::Rng;

/// Stochastic model of the interferometer phase. The fibre length drift is
/// expressed as the quantum-band phase `phi_1`; the reference band sees the
/// same length, so `phi_2 = phi_1 * lambda_1 / lambda_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    /// Wiener drift of the quantum-band phase (rad per sqrt second).
    pub wiener_rad_per_sqrt_s: f64,
    /// Deterministic drift component (rad/s).
    pub linear_rad_per_s: f64,
    pub lambda_quantum_nm: f64,
    pub lambda_reference_nm: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel {
            wiener_rad_per_sqrt_s: 8000.0,
            linear_rad_per_s: 0.0,
            lambda_quantum_nm: 1550.12,
            lambda_reference_nm: 1548.51,
        }
    }
}

impl DriftModel {
    /// Residual fraction of quantum-band drift left by an ideal fast lock:
    /// (lambda_2 - lambda_1) / lambda_2, about 1/962 for the C-band pair.
    pub fn dual_band_lever(&self) -> f64 {
        (self.lambda_reference_nm - self.lambda_quantum_nm) / self.lambda_reference_nm
    }
}

/// Free-running quantum-band phase trace sampled at `sample_rate_hz`.
pub fn simulate_free_drift(
    model: &DriftModel,
    duration_s: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Vec<f64> {
    let dt = 1.0 / sample_rate_hz;
    let n = (duration_s * sample_rate_hz) as usize;
    let step = model.wiener_rad_per_sqrt_s * libm::sqrt(dt);
    let mut rng = Rng::new(seed);
    let mut phi = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(phi);
    for _ in 0..n {
        phi += step * rng.standard_normal() + model.linear_rad_per_s * dt;
        out.push(phi);
    }
    out
}

/// Standard deviation of non-overlapping increments spanning
/// `samples_per_increment` samples.
pub fn increment_std(trace: &[f64], samples_per_increment: usize) -> f64 {
    let k = samples_per_increment;
    assert!(k > 0);
    if trace.len() <= k {
        return 0.0;
    }
    let incs: Vec<f64> = (0..(trace.len() - 1) / k)
        .map(|i| trace[(i + 1) * k] - trace[i * k])
        .collect();
    crate::math::std_dev(&incs)
}

/// Control-loop configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    /// Fast (reference-band) loop sample rate.
    pub fast_rate_hz: f64,
    /// Slow (quantum-band) loop correction rate.
    pub slow_rate_hz: f64,
    /// Reference photon rate at the monitoring detector (counts/s);
    /// non-positive selects an ideal noise-free error signal.
    pub photon_rate_at_d2: f64,
    /// Fraction of the reference rate available as dim quantum-band pulses
    /// for the slow loop.
    pub dim_reference_fraction: f64,
    /// Trailing fraction of each cycle averaged into the slow error signal;
    /// a short window tracks the boundary phase instead of the cycle mean.
    pub slow_window_fraction: f64,
    pub fast_gain: f64,
    pub slow_gain: f64,
    /// Quantum-band phase setpoint (rad).
    pub setpoint_rad: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            fast_rate_hz: 200_000.0,
            slow_rate_hz: 20.0,
            photon_rate_at_d2: 1.0e7,
            dim_reference_fraction: 0.05,
            slow_window_fraction: 0.2,
            fast_gain: 1.0,
            slow_gain: 1.0,
            setpoint_rad: 0.0,
        }
    }
}

/// Figures of merit of one locked run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockReport {
    /// Std of 1 s increments of the driving free drift.
    pub free_increment_std: f64,
    /// Std of 1 s increments of the locked quantum-band residual.
    pub locked_increment_std: f64,
    /// free / locked increment ratio.
    pub reduction_factor: f64,
    /// Drift suppression achieved by the fast loop alone.
    pub fast_suppression: f64,
    /// Std of the per-cycle mean residual about the setpoint: the phase
    /// error a quantum frame actually averages over.
    pub locking_error_rad: f64,
    /// Std of the residual trace about the setpoint.
    pub residual_std: f64,
    /// QBER contribution of the locking error.
    pub qber: f64,
}

/// Run both loops against the drift model for `duration_s`. The fast loop
/// measures the reference-band residual each sample and applies a common
/// phase correction; the slow loop averages dim quantum-band measurements
/// over each cycle and corrects the quantum band at cycle boundaries.
pub fn run_dual_band_lock(
    model: &DriftModel,
    cfg: &LoopConfig,
    duration_s: f64,
    seed: u64,
) -> LockReport {
    let dt = 1.0 / cfg.fast_rate_hz;
    let steps_per_cycle = (cfg.fast_rate_hz / cfg.slow_rate_hz) as usize;
    let steps_per_second = cfg.fast_rate_hz as usize;
    let n = (duration_s * cfg.fast_rate_hz) as usize;
    let wl_ratio = model.lambda_quantum_nm / model.lambda_reference_nm;
    let step_sd = model.wiener_rad_per_sqrt_s * libm::sqrt(dt);
    let ideal = cfg.photon_rate_at_d2 <= 0.0;
    let fast_counts_mean = cfg.photon_rate_at_d2 * dt;
    let dim_rate = cfg.photon_rate_at_d2 * cfg.dim_reference_fraction;

    let mut rng = Rng::new(seed);
    let mut phi1 = 0.0f64; // free-running quantum-band phase
    let mut c_fast = 0.0f64; // common actuator
    let mut c_slow = 0.0f64; // quantum-band-only actuator

    let mut free_samples = Vec::new();
    let mut locked_samples = Vec::new();
    let mut fast_only_samples = Vec::new();
    let mut cycle_means = Vec::new();
    let mut cycle_sum = 0.0f64;
    let mut slow_meas_sum = 0.0f64;
    let mut slow_meas_n = 0usize;
    let mut resid_sum = 0.0f64;
    let mut resid_sq = 0.0f64;
    let mut qber_sum = 0.0f64;
    free_samples.push(0.0);
    locked_samples.push(0.0);
    fast_only_samples.push(0.0);

    for k in 1..=n {
        phi1 += step_sd * rng.standard_normal() + model.linear_rad_per_s * dt;
        let phi2 = phi1 * wl_ratio;
        // fast loop: measure the reference-band residual, correct in-step
        let noise2 = if ideal {
            0.0
        } else {
            let cnt = rng.poisson(fast_counts_mean).max(1);
            rng.standard_normal() / libm::sqrt(cnt as f64)
        };
        let m2 = phi2 + c_fast + noise2;
        c_fast -= cfg.fast_gain * m2;
        let resid = phi1 + c_fast + c_slow;
        let err = resid - cfg.setpoint_rad;
        cycle_sum += err;
        resid_sum += err;
        resid_sq += err * err;
        let s = libm::sin(err / 2.0);
        qber_sum += s * s;
        // slow loop: accumulate dim-pulse measurements of the residual over
        // the trailing window of the cycle
        let in_window = (k - 1) % steps_per_cycle
            >= ((1.0 - cfg.slow_window_fraction) * steps_per_cycle as f64) as usize;
        if in_window {
            if !ideal {
                let cnt = rng.poisson(dim_rate * dt);
                if cnt > 0 {
                    slow_meas_sum += err + rng.standard_normal() / libm::sqrt(cnt as f64);
                    slow_meas_n += 1;
                }
            } else {
                slow_meas_sum += err;
                slow_meas_n += 1;
            }
        }
        if k % steps_per_cycle == 0 {
            cycle_means.push(cycle_sum / steps_per_cycle as f64);
            cycle_sum = 0.0;
            if slow_meas_n > 0 {
                c_slow -= cfg.slow_gain * slow_meas_sum / slow_meas_n as f64;
            }
            slow_meas_sum = 0.0;
            slow_meas_n = 0;
        }
        if k % steps_per_second == 0 {
            free_samples.push(phi1);
            locked_samples.push(resid);
            fast_only_samples.push(phi1 + c_fast);
        }
    }

    let free_inc = increment_std(&free_samples, 1);
    let locked_inc = increment_std(&locked_samples, 1);
    let fast_inc = increment_std(&fast_only_samples, 1);
    LockReport {
        free_increment_std: free_inc,
        locked_increment_std: locked_inc,
        reduction_factor: if locked_inc > 0.0 { free_inc / locked_inc } else { f64::INFINITY },
        fast_suppression: if fast_inc > 0.0 { free_inc / fast_inc } else { f64::INFINITY },
        locking_error_rad: crate::math::std_dev(&cycle_means),
        residual_std: {
            let mean = resid_sum / n as f64;
            libm::sqrt((resid_sq / n as f64 - mean * mean).max(0.0))
        },
        qber: qber_sum / n as f64,
    }
}

/// QBER induced by Gaussian phase noise of std `sigma_rad` about the
/// setpoint: E[sin^2(x/2)] = (1 - exp(-sigma^2/2)) / 2.
pub fn qber_from_phase_noise(sigma_rad: f64) -> f64 {
    0.5 * (1.0 - libm::exp(-sigma_rad * sigma_rad / 2.0))
}

/// Empirical QBER of a residual trace about `setpoint`.
pub fn qber_from_residual_trace(trace: &[f64], setpoint: f64) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for &r in trace {
        let x = libm::sin((r - setpoint) / 2.0);
        s += x * x;
    }
    s / trace.len() as f64
}

/// Grid-search the loop gains that minimise the locking error on a short
/// calibration run.
pub fn auto_tune(model: &DriftModel, base: &LoopConfig, duration_s: f64, seed: u64) -> LoopConfig {
    let grid = [0.4, 0.6, 0.8, 1.0, 1.2];
    let mut best = *base;
    let mut best_err = f64::INFINITY;
    for &fg in &grid {
        for &sg in &grid {
            let cfg = LoopConfig { fast_gain: fg, slow_gain: sg, ..*base };
            let rep = run_dual_band_lock(model, &cfg, duration_s, seed);
            if rep.locking_error_rad < best_err {
                best_err = rep.locking_error_rad;
                best = cfg;
            }
        }
    }
    best
}
