//! Detection simulation: per-row click expectations, an aggregated binomial
//! sampler for full-length sessions, a per-slot event sampler for
//! cross-validation, and the counts ledger both paths tally into.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::channel::{clicks_at_charlie, clicks_phase_averaged, transmittance, Arm, ChannelParams};
use crate::math::gauss_mean;
use crate::pattern::{
    largest_remainder, phase_bin, slot_phase, Basis, Intensity, MatchClass, PatternPair,
    ProtocolParams, SlotKind,
};
use crate::rng::Rng;

/// Joint pattern row: both users' basis and intensity. Ordered; Alice's
/// choice first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowKey {
    pub basis_a: Basis,
    pub int_a: Intensity,
    pub basis_b: Basis,
    pub int_b: Intensity,
}

/// Matched-pair phase classes: direct (difference near 0) and pi-shifted.
pub const CLASS_DIRECT: usize = 0;
pub const CLASS_PI: usize = 1;

/// Counts accumulated for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RowCounts {
    /// Pulse pairs of this row.
    pub pairs: u64,
    /// Clicks per detector over all pairs of the row.
    pub clicks: [u64; 2],
    /// Pairs falling in each matched phase class (X-X rows only).
    pub matched_pairs: [u64; 2],
    /// Clicks per [class][detector] among matched pairs.
    pub matched_clicks: [[u64; 2]; 2],
}

impl RowCounts {
    pub fn merge(&mut self, other: &RowCounts) {
        self.pairs += other.pairs;
        for d in 0..2 {
            self.clicks[d] += other.clicks[d];
            self.matched_pairs[d] += other.matched_pairs[d];
            for k in 0..2 {
                self.matched_clicks[d][k] += other.matched_clicks[d][k];
            }
        }
    }

    /// Clicks at detector `d` among matched pairs of both classes.
    pub fn matching(&self, d: usize) -> u64 {
        self.matched_clicks[CLASS_DIRECT][d] + self.matched_clicks[CLASS_PI][d]
    }

    /// Clicks at detector `d` in the class where `d` is the expected port:
    /// D0 for the direct class, D1 for the pi-shifted class.
    pub fn correct(&self, d: usize) -> u64 {
        self.matched_clicks[d][d]
    }
}

/// Session tally: per-row counts plus the total pulse-pair budget.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountsLedger {
    pub rows: BTreeMap<RowKey, RowCounts>,
    pub total_pairs: u64,
}

impl CountsLedger {
    pub fn row(&self, key: &RowKey) -> RowCounts {
        self.rows.get(key).copied().unwrap_or_default()
    }

    fn entry(&mut self, key: RowKey) -> &mut RowCounts {
        self.rows.entry(key).or_default()
    }

    /// Shard merge; associative and commutative by construction.
    pub fn merge(&mut self, other: &CountsLedger) {
        self.total_pairs += other.total_pairs;
        for (k, v) in &other.rows {
            self.entry(*k).merge(v);
        }
    }
}

/// Effective mean photon numbers arriving at the middle node per side and
/// intensity, i.e. launch flux times arm transmittance. Fixtures may carry
/// calibrated values that fold modulator extinction into the product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFluxes {
    pub a: [f64; 5],
    pub b: [f64; 5],
}

impl EffectiveFluxes {
    pub fn from_launch(params: &ProtocolParams, channel: &ChannelParams) -> Self {
        let ta = transmittance(channel, Arm::A);
        let tb = transmittance(channel, Arm::B);
        let mut a = [0.0; 5];
        let mut b = [0.0; 5];
        for i in Intensity::ALL {
            a[i.index()] = params.flux(i) * ta;
            b[i.index()] = params.flux(i) * tb;
        }
        EffectiveFluxes { a, b }
    }

    pub fn pair(&self, int_a: Intensity, int_b: Intensity) -> (f64, f64) {
        (self.a[int_a.index()], self.b[int_b.index()])
    }
}

/// Expected per-pair statistics of one row, matching what the samplers
/// realise: any-click probability per detector, the matched fraction per
/// phase class, and the click probability per detector within each class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowExpectation {
    pub p_click: [f64; 2],
    pub matched_fraction: [f64; 2],
    pub p_matched_click: [[f64; 2]; 2],
}

fn is_coding_row(params: &ProtocolParams, key: &RowKey) -> bool {
    use crate::pattern::Protocol::*;
    match params.protocol {
        Cal => key.basis_a == Basis::X && key.basis_b == Basis::X,
        Sns | SnsTwcc => false,
    }
}

fn is_matchable_row(key: &RowKey) -> bool {
    key.basis_a == Basis::X && key.basis_b == Basis::X
}

/// Grid phase differences (rad) whose class under [`phase_bin`] is `class`.
fn matched_grid_offsets(params: &ProtocolParams, class: usize) -> Vec<f64> {
    let levels = params.phase_levels as i64;
    let tau = 2.0 * core::f64::consts::PI;
    let want = if class == CLASS_DIRECT {
        MatchClass::MatchedDirect
    } else {
        MatchClass::MatchedPiShifted
    };
    let mut out = Vec::new();
    for d in 0..levels {
        let phi = tau * d as f64 / levels as f64;
        if phase_bin(phi, 0.0, params.delta_accept_rad) == want {
            out.push(phi);
        }
    }
    out
}

/// Compute the expectations the aggregated sampler draws from. `sigma` is
/// the residual interferometric phase noise (rad) seen by fixed-phase pairs;
/// phase-randomised gains are exact closed forms and independent of it.
pub fn expected_row(
    params: &ProtocolParams,
    channel: &ChannelParams,
    fluxes: &EffectiveFluxes,
    sigma: f64,
    key: &RowKey,
) -> RowExpectation {
    let (fa, fb) = fluxes.pair(key.int_a, key.int_b);
    let mut exp = RowExpectation::default();
    let noisy = |dphi: f64, det: usize| {
        gauss_mean(sigma, |x| {
            let (p0, p1) = clicks_at_charlie(fa, fb, dphi + x, channel);
            if det == 0 {
                p0
            } else {
                p1
            }
        })
    };
    if is_coding_row(params, key) {
        // two fixed code phases per user: the difference is 0 or pi, equal weight
        for class in 0..2 {
            let dphi = if class == CLASS_DIRECT { 0.0 } else { core::f64::consts::PI };
            exp.matched_fraction[class] = 0.5;
            for det in 0..2 {
                exp.p_matched_click[class][det] = noisy(dphi, det);
            }
        }
        for det in 0..2 {
            exp.p_click[det] = 0.5 * exp.p_matched_click[0][det] + 0.5 * exp.p_matched_click[1][det];
        }
        return exp;
    }
    let (p0, p1) = clicks_phase_averaged(fa, fb, channel);
    exp.p_click = [p0, p1];
    if is_matchable_row(key) {
        let levels = params.phase_levels as f64;
        for class in 0..2 {
            let offsets = matched_grid_offsets(params, class);
            exp.matched_fraction[class] = offsets.len() as f64 / levels;
            for det in 0..2 {
                let mut s = 0.0;
                for &phi in &offsets {
                    s += noisy(phi, det);
                }
                exp.p_matched_click[class][det] = s / offsets.len() as f64;
            }
        }
    }
    exp
}

/// Aggregated session sampler: exact fair-sampled pair counts per row, then
/// binomial click counts at the expected rates. Statistically equivalent to
/// the per-slot path at any session length, and fast enough for 1e11-pair
/// sessions.
pub fn simulate_session(
    params: &ProtocolParams,
    channel: &ChannelParams,
    fluxes: &EffectiveFluxes,
    sigma: f64,
    n_pairs: u64,
    seed: u64,
) -> CountsLedger {
    let types = params.user_slot_types();
    let mut keys = Vec::new();
    let mut probs = Vec::new();
    for &((ba, ia), pa) in &types {
        for &((bb, ib), pb) in &types {
            keys.push(RowKey { basis_a: ba, int_a: ia, basis_b: bb, int_b: ib });
            probs.push(pa * pb);
        }
    }
    // largest-remainder apportionment keeps every joint count within 1 of
    // its expectation even for astronomically long sessions
    let counts = apportion(&probs, n_pairs);
    let mut rng = Rng::new(seed);
    let mut ledger = CountsLedger { rows: BTreeMap::new(), total_pairs: n_pairs };
    for ((key, pairs), _) in keys.iter().zip(counts).zip(&probs) {
        let exp = expected_row(params, channel, fluxes, sigma, key);
        let rc = ledger.entry(*key);
        rc.pairs += pairs;
        if is_coding_row(params, key) || is_matchable_row(key) {
            // split into phase classes first, then sample clicks per class
            let m0 = rng.binomial(pairs, exp.matched_fraction[0]);
            let rest = pairs - m0;
            let m1 = rng.binomial(
                rest,
                exp.matched_fraction[1] / (1.0 - exp.matched_fraction[0]).max(1e-300),
            );
            let unmatched = rest - m1;
            rc.matched_pairs = [m0, m1];
            let mut total = [0u64; 2];
            for (class, m) in [(0usize, m0), (1usize, m1)] {
                for det in 0..2 {
                    let c = rng.binomial(m, exp.p_matched_click[class][det]);
                    rc.matched_clicks[class][det] += c;
                    total[det] += c;
                }
            }
            // unmatched remainder clicks at the complementary average rate
            for det in 0..2 {
                let p_un = if unmatched == 0 {
                    0.0
                } else {
                    let pm: f64 = (0..2)
                        .map(|c| exp.matched_fraction[c] * exp.p_matched_click[c][det])
                        .sum();
                    let f_un = 1.0 - exp.matched_fraction[0] - exp.matched_fraction[1];
                    ((exp.p_click[det] - pm) / f_un).clamp(0.0, 1.0)
                };
                total[det] += rng.binomial(unmatched, p_un);
            }
            rc.clicks[0] += total[0];
            rc.clicks[1] += total[1];
        } else {
            for det in 0..2 {
                rc.clicks[det] += rng.binomial(pairs, exp.p_click[det]);
            }
        }
    }
    ledger
}

fn apportion(probs: &[f64], total: u64) -> Vec<u64> {
    // exact largest-remainder split of a u64 total
    if total <= usize::MAX as u64 {
        return largest_remainder(probs, total as usize).iter().map(|&c| c as u64).collect();
    }
    // 32-bit targets cannot reach this branch; floor allocation suffices
    probs.iter().map(|p| (p * total as f64) as u64).collect()
}

/// Per-slot event sampler: walks the pattern, draws one Gaussian phase
/// offset and two Bernoulli clicks per quantum pair. Returns (D0, D1)
/// clicks for each slot (reference slots never click here; they belong to
/// the stabilisation subsystem).
pub fn simulate_events(
    params: &ProtocolParams,
    channel: &ChannelParams,
    fluxes: &EffectiveFluxes,
    sigma: f64,
    pattern: &PatternPair,
    seed: u64,
) -> Vec<(bool, bool)> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(pattern.len());
    for (a, b) in pattern.alice.iter().zip(&pattern.bob) {
        if a.kind != SlotKind::Quantum {
            out.push((false, false));
            continue;
        }
        let (fa, fb) = fluxes.pair(a.intensity, b.intensity);
        let dphi = slot_phase(a, params.phase_levels) - slot_phase(b, params.phase_levels)
            + sigma * rng.standard_normal();
        let (p0, p1) = clicks_at_charlie(fa, fb, dphi, channel);
        out.push((rng.bernoulli(p0), rng.bernoulli(p1)));
    }
    out
}

/// Fold per-slot clicks into a counts ledger using the announced pattern.
pub fn tally(
    params: &ProtocolParams,
    pattern: &PatternPair,
    clicks: &[(bool, bool)],
) -> CountsLedger {
    assert_eq!(clicks.len(), pattern.len());
    let mut ledger = CountsLedger::default();
    for ((a, b), &(c0, c1)) in pattern.alice.iter().zip(&pattern.bob).zip(clicks) {
        if a.kind != SlotKind::Quantum {
            continue;
        }
        ledger.total_pairs += 1;
        let key = RowKey { basis_a: a.basis, int_a: a.intensity, basis_b: b.basis, int_b: b.intensity };
        let rc = ledger.entry(key);
        rc.pairs += 1;
        rc.clicks[0] += c0 as u64;
        rc.clicks[1] += c1 as u64;
        if a.basis == Basis::X && b.basis == Basis::X {
            let pa = slot_phase(a, params.phase_levels);
            let pb = slot_phase(b, params.phase_levels);
            let class = match phase_bin(pa, pb, params.delta_accept_rad) {
                MatchClass::MatchedDirect => Some(CLASS_DIRECT),
                MatchClass::MatchedPiShifted => Some(CLASS_PI),
                MatchClass::Rejected => None,
            };
            if let Some(class) = class {
                rc.matched_pairs[class] += 1;
                rc.matched_clicks[class][0] += c0 as u64;
                rc.matched_clicks[class][1] += c1 as u64;
            }
        }
    }
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{build_pattern, Protocol};

    fn channel() -> ChannelParams {
        ChannelParams {
            length_km: 0.0,
            loss_db_per_km: 0.171,
            arm_extra_db_a: 0.0,
            arm_extra_db_b: 0.0,
            measured_loss_db_a: None,
            measured_loss_db_b: None,
            charlie_transmission_a: 1.0,
            charlie_transmission_b: 1.0,
            det_eff_0: 0.73,
            det_eff_1: 0.77,
            dark_rate_hz: 14.0,
            gate_s: 2e-9,
            clock_hz: 5e8,
        }
    }

    fn sns_params() -> ProtocolParams {
        ProtocolParams {
            protocol: Protocol::Sns,
            flux_s: 0.01,
            flux_u: 0.01,
            flux_v: 0.002,
            flux_w: 1e-5,
            flux_n: 1e-5,
            p_z: 0.6,
            p_x: 0.4,
            p_s_given_z: 0.075,
            p_u: 0.2,
            p_v: 0.6,
            p_w: 0.2,
            phase_levels: 512,
            delta_accept_rad: 11.25_f64.to_radians(),
            f_ec: 1.04,
        }
    }

    #[test]
    fn merge_is_associative_and_matches_single_run() {
        let params = sns_params();
        let ch = channel();
        let fx = EffectiveFluxes::from_launch(&params, &ch);
        let shards: Vec<CountsLedger> = (0..3)
            .map(|i| simulate_session(&params, &ch, &fx, 0.3, 10_000, 100 + i))
            .collect();
        let mut ab = shards[0].clone();
        ab.merge(&shards[1]);
        let mut ab_c = ab.clone();
        ab_c.merge(&shards[2]);
        let mut bc = shards[1].clone();
        bc.merge(&shards[2]);
        let mut a_bc = shards[0].clone();
        a_bc.merge(&bc);
        assert_eq!(ab_c, a_bc);
        assert_eq!(ab_c.total_pairs, 30_000);
    }

    #[test]
    fn aggregated_pair_counts_are_fair() {
        let params = sns_params();
        let ch = channel();
        let fx = EffectiveFluxes::from_launch(&params, &ch);
        let n = 123_457u64;
        let ledger = simulate_session(&params, &ch, &fx, 0.3, n, 7);
        let total: u64 = ledger.rows.values().map(|r| r.pairs).sum();
        assert_eq!(total, n);
        for (key, rc) in &ledger.rows {
            let types = params.user_slot_types();
            let pa = types.iter().find(|(t, _)| *t == (key.basis_a, key.int_a)).unwrap().1;
            let pb = types.iter().find(|(t, _)| *t == (key.basis_b, key.int_b)).unwrap().1;
            assert!(
                (rc.pairs as f64 - pa * pb * n as f64).abs() <= 1.0,
                "{key:?}: {} vs {}",
                rc.pairs,
                pa * pb * n as f64
            );
        }
    }

    #[test]
    fn event_path_agrees_with_expectations() {
        let mut params = sns_params();
        // brighten the link so 60k slots carry enough clicks to compare
        params.flux_s = 0.2;
        params.flux_u = 0.2;
        params.flux_v = 0.05;
        let ch = channel();
        let fx = EffectiveFluxes::from_launch(&params, &ch);
        let pattern = build_pattern(&params, 120_000, 5).unwrap();
        let clicks = simulate_events(&params, &ch, &fx, 0.3, &pattern, 6);
        let ledger = tally(&params, &pattern, &clicks);
        for (key, rc) in &ledger.rows {
            let exp = expected_row(&params, &ch, &fx, 0.3, key);
            for det in 0..2 {
                let mean = rc.pairs as f64 * exp.p_click[det];
                if mean < 20.0 {
                    continue;
                }
                let sd = libm::sqrt(mean * (1.0 - exp.p_click[det]));
                let got = rc.clicks[det] as f64;
                assert!(
                    (got - mean).abs() < 5.0 * sd,
                    "{key:?} det {det}: {got} vs {mean} +- {sd}"
                );
            }
            if key.basis_a == Basis::X && key.basis_b == Basis::X {
                for class in 0..2 {
                    let mean = rc.pairs as f64 * exp.matched_fraction[class];
                    if mean < 20.0 {
                        continue;
                    }
                    let sd = libm::sqrt(mean);
                    let got = rc.matched_pairs[class] as f64;
                    assert!((got - mean).abs() < 5.0 * sd, "{key:?} class {class}");
                }
            }
        }
    }

    #[test]
    fn cal_coding_row_splits_into_two_phase_classes() {
        let params = ProtocolParams {
            protocol: Protocol::Cal,
            flux_s: 0.015,
            flux_u: 0.1,
            flux_v: 0.015,
            flux_w: 2e-4,
            flux_n: 2e-4,
            p_z: 0.5,
            p_x: 0.5,
            p_s_given_z: 0.0,
            p_u: 1.0 / 3.0,
            p_v: 1.0 / 3.0,
            p_w: 1.0 / 3.0,
            phase_levels: 512,
            delta_accept_rad: 11.25_f64.to_radians(),
            f_ec: 1.04,
        };
        let ch = channel();
        let fx = EffectiveFluxes::from_launch(&params, &ch);
        let key = RowKey {
            basis_a: Basis::X,
            int_a: Intensity::S,
            basis_b: Basis::X,
            int_b: Intensity::S,
        };
        let exp = expected_row(&params, &ch, &fx, 0.0, &key);
        assert!((exp.matched_fraction[0] - 0.5).abs() < 1e-12);
        assert!((exp.matched_fraction[1] - 0.5).abs() < 1e-12);
        // at zero phase noise the direct class hits D0 essentially always
        assert!(exp.p_matched_click[CLASS_DIRECT][1] < 1e-6);
        assert!(exp.p_matched_click[CLASS_PI][0] < 1e-6);
        let ledger = simulate_session(&params, &ch, &fx, 0.0, 100_000, 3);
        let rc = ledger.row(&key);
        let m = rc.matched_pairs[0] + rc.matched_pairs[1];
        assert_eq!(m, rc.pairs);
    }

    #[test]
    fn matched_fraction_covers_the_window() {
        let params = sns_params();
        // the 22.5 degree full window holds 1/16 of the 512-level grid per
        // class, up to rounding at the boundary levels
        for class in [CLASS_DIRECT, CLASS_PI] {
            let offs = matched_grid_offsets(&params, class);
            let frac = offs.len() as f64 / 512.0;
            assert!((frac - 0.0625).abs() <= 1.5 / 512.0, "class {class}: {frac}");
        }
    }

    #[test]
    fn seed_determinism() {
        let params = sns_params();
        let ch = channel();
        let fx = EffectiveFluxes::from_launch(&params, &ch);
        let a = simulate_session(&params, &ch, &fx, 0.3, 50_000, 42);
        let b = simulate_session(&params, &ch, &fx, 0.3, 50_000, 42);
        assert_eq!(a, b);
    }
}
