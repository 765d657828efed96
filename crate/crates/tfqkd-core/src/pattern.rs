//! Pulse-pattern construction for the CAL, SNS and TWCC-SNS protocols:
//! fair-sampled intensity/basis assignment, phase grids, and the X-basis
//! phase-matching rule.

use alloc::vec::Vec;

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Phase-matching protocol: X basis codes with two fixed phases, Z basis
    /// carries phase-randomised decoys u, v, w.
    Cal,
    /// Sending-or-not-sending: Z basis codes by presence of flux s, X basis
    /// carries phase-randomised decoys.
    Sns,
    /// SNS followed by two-way classical post-processing (same encoding).
    SnsTwcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Intensity {
    S,
    U,
    V,
    W,
    /// "Not sending": nominal off level, modelled as a real small flux.
    N,
}

impl Intensity {
    pub const ALL: [Intensity; 5] = [Intensity::S, Intensity::U, Intensity::V, Intensity::W, Intensity::N];

    pub fn index(self) -> usize {
        match self {
            Intensity::S => 0,
            Intensity::U => 1,
            Intensity::V => 2,
            Intensity::W => 3,
            Intensity::N => 4,
        }
    }

    pub fn label(self) -> char {
        match self {
            Intensity::S => 's',
            Intensity::U => 'u',
            Intensity::V => 'v',
            Intensity::W => 'w',
            Intensity::N => 'n',
        }
    }
}

/// Protocol-level parameters: fluxes, probabilities, phase grid, acceptance
/// window and the error-correction efficiency used downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub protocol: Protocol,
    pub flux_s: f64,
    pub flux_u: f64,
    pub flux_v: f64,
    pub flux_w: f64,
    pub flux_n: f64,
    pub p_z: f64,
    pub p_x: f64,
    /// Send probability in the Z basis (SNS epsilon).
    pub p_s_given_z: f64,
    pub p_u: f64,
    pub p_v: f64,
    pub p_w: f64,
    pub phase_levels: u32,
    /// Phase-match half-window (rad); the acceptance window spans twice this.
    pub delta_accept_rad: f64,
    pub f_ec: f64,
}

impl ProtocolParams {
    pub fn flux(&self, i: Intensity) -> f64 {
        match i {
            Intensity::S => self.flux_s,
            Intensity::U => self.flux_u,
            Intensity::V => self.flux_v,
            Intensity::W => self.flux_w,
            Intensity::N => self.flux_n,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if (self.p_z + self.p_x - 1.0).abs() > 1e-9 {
            return Err("basis probabilities must sum to 1");
        }
        if (self.p_u + self.p_v + self.p_w - 1.0).abs() > 1e-9 {
            return Err("decoy probabilities must sum to 1");
        }
        if [self.flux_s, self.flux_u, self.flux_v, self.flux_w, self.flux_n]
            .iter()
            .any(|f| *f < 0.0)
        {
            return Err("fluxes must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.p_s_given_z) {
            return Err("send probability must lie in [0,1]");
        }
        if self.phase_levels == 0 {
            return Err("phase grid must be non-empty");
        }
        Ok(())
    }

    /// Per-user quantum-slot types and probabilities for this protocol.
    pub fn user_slot_types(&self) -> Vec<((Basis, Intensity), f64)> {
        let mut out = Vec::new();
        match self.protocol {
            Protocol::Cal => {
                // X basis codes at flux s; Z basis carries the decoys
                out.push(((Basis::X, Intensity::S), self.p_x));
                out.push(((Basis::Z, Intensity::U), self.p_z * self.p_u));
                out.push(((Basis::Z, Intensity::V), self.p_z * self.p_v));
                out.push(((Basis::Z, Intensity::W), self.p_z * self.p_w));
            }
            Protocol::Sns | Protocol::SnsTwcc => {
                out.push(((Basis::Z, Intensity::S), self.p_z * self.p_s_given_z));
                out.push(((Basis::Z, Intensity::N), self.p_z * (1.0 - self.p_s_given_z)));
                out.push(((Basis::X, Intensity::U), self.p_x * self.p_u));
                out.push(((Basis::X, Intensity::V), self.p_x * self.p_v));
                out.push(((Basis::X, Intensity::W), self.p_x * self.p_w));
            }
        }
        out.retain(|&(_, p)| p > 0.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Quantum,
    /// Unmodulated tracking pulse at the brightest decoy intensity.
    DimReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseSlot {
    pub kind: SlotKind,
    pub basis: Basis,
    pub intensity: Intensity,
    pub phase_index: u16,
    pub bit: Option<u8>,
}

/// Both users' synchronised pulse sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternPair {
    pub alice: Vec<PulseSlot>,
    pub bob: Vec<PulseSlot>,
}

impl PatternPair {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    /// Indices of the quantum (non-reference) slots.
    pub fn quantum_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.alice.len()).filter(|i| self.alice[*i].kind == SlotKind::Quantum)
    }
}

/// Largest-remainder apportionment of `total` slots to `probs`; deterministic
/// tie-break by list order.
pub fn largest_remainder(probs: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = probs.iter().map(|p| (p * total as f64) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut rema: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p * total as f64 - counts[i] as f64))
        .collect();
    rema.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(total - assigned) {
        counts[rema[k % rema.len()].0] += 1;
    }
    counts
}

/// Build the joint pseudo-random pattern: `length` slots per user, alternating
/// quantum and dim-reference, with exact (fair-sampled) joint type counts and
/// a seeded uniform order.
pub fn build_pattern(
    params: &ProtocolParams,
    length: usize,
    seed: u64,
) -> Result<PatternPair, &'static str> {
    params.validate()?;
    if length < 2 || length % 2 != 0 {
        return Err("pattern length must be even and at least 2");
    }
    let n_quantum = length / 2;
    let types = params.user_slot_types();
    let mut joint: Vec<((Basis, Intensity), (Basis, Intensity), f64)> = Vec::new();
    for &(ta, pa) in &types {
        for &(tb, pb) in &types {
            joint.push((ta, tb, pa * pb));
        }
    }
    let probs: Vec<f64> = joint.iter().map(|j| j.2).collect();
    let counts = largest_remainder(&probs, n_quantum);

    let mut assignment: Vec<usize> = Vec::with_capacity(n_quantum);
    for (idx, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            assignment.push(idx);
        }
    }
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut assignment);

    let dim_slot = PulseSlot {
        kind: SlotKind::DimReference,
        basis: Basis::X,
        intensity: Intensity::U,
        phase_index: 0,
        bit: None,
    };
    let mut alice = Vec::with_capacity(length);
    let mut bob = Vec::with_capacity(length);
    let levels = params.phase_levels;
    let quantum_slot = |(basis, intensity): (Basis, Intensity), rng: &mut Rng| {
        let (phase_index, bit) = match (params.protocol, basis) {
            (Protocol::Cal, Basis::X) => {
                // two fixed code phases +-pi/2 on the grid
                let b = (rng.next_u64() & 1) as u8;
                let idx = if b == 0 { levels / 4 } else { 3 * levels / 4 };
                (idx as u16, Some(b))
            }
            (Protocol::Sns | Protocol::SnsTwcc, Basis::Z) => {
                let bit = if intensity == Intensity::S { 1 } else { 0 };
                (rng.below(levels as u64) as u16, Some(bit))
            }
            _ => (rng.below(levels as u64) as u16, None),
        };
        PulseSlot { kind: SlotKind::Quantum, basis, intensity, phase_index, bit }
    };
    for &t in &assignment {
        let (ta, tb, _) = joint[t];
        alice.push(quantum_slot(ta, &mut rng));
        alice.push(dim_slot);
        bob.push(quantum_slot(tb, &mut rng));
        bob.push(dim_slot);
    }
    Ok(PatternPair { alice, bob })
}

/// Outcome of the phase-matching announcement for an X-basis pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchClass {
    MatchedDirect,
    MatchedPiShifted,
    Rejected,
}

/// Classify a pair of announced phases against the half-window `delta`
/// (boundary inclusive): matched directly, matched up to a pi shift, or
/// rejected.
pub fn phase_bin(phi_a: f64, phi_b: f64, delta: f64) -> MatchClass {
    let tau = 2.0 * core::f64::consts::PI;
    let d = ((phi_a - phi_b) % tau + tau) % tau;
    let dist0 = d.min(tau - d);
    let dist_pi = (d - core::f64::consts::PI).abs();
    if dist0 <= delta {
        MatchClass::MatchedDirect
    } else if dist_pi <= delta {
        MatchClass::MatchedPiShifted
    } else {
        MatchClass::Rejected
    }
}

/// Grid phase value of a slot in radians.
pub fn slot_phase(slot: &PulseSlot, levels: u32) -> f64 {
    2.0 * core::f64::consts::PI * slot.phase_index as f64 / levels as f64
}
