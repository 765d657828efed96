//! Two-way classical post-processing: raw key extraction from the tallied
//! session, the random-pairing parity round, and portable-bitmap rendering
//! of key material.

use alloc::vec::Vec;

use crate::pattern::{Basis, Intensity, PatternPair, SlotKind};
use crate::rng::Rng;

/// Aligned raw key bits of both users.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawKeys {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

impl RawKeys {
    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.alice.iter().zip(&self.bob).filter(|(a, b)| a != b).count()
    }
}

/// Sift the raw keys out of a session: Z-Z pulse pairs where the middle node
/// reported a detection. The sender-side bit conventions make a
/// one-user-sent event an agreement.
pub fn extract_raw_keys(pattern: &PatternPair, clicks: &[(bool, bool)]) -> RawKeys {
    assert_eq!(clicks.len(), pattern.len());
    let mut keys = RawKeys::default();
    for ((a, b), &(c0, c1)) in pattern.alice.iter().zip(&pattern.bob).zip(clicks) {
        if a.kind != SlotKind::Quantum || !(c0 || c1) {
            continue;
        }
        if a.basis != Basis::Z || b.basis != Basis::Z {
            continue;
        }
        keys.alice.push((a.intensity == Intensity::S) as u8);
        keys.bob.push((b.intensity != Intensity::S) as u8);
    }
    keys
}

/// Outcome of one parity-comparison round over randomly paired bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwccRound {
    pub kept: RawKeys,
    /// Kept pairs where the second user's two bits differed.
    pub n_odd: u64,
    /// Kept pairs where both of the second user's bits were 0.
    pub n_even_zero: u64,
    /// Kept pairs where both of the second user's bits were 1.
    pub n_even_one: u64,
    pub discarded_pairs: u64,
    pub errors_before: u64,
    pub errors_after: u64,
}

/// Randomly pair the raw bits (seeded Fisher-Yates), announce pair parities,
/// keep one bit of every agreeing pair. The surviving bit is the one at the
/// earlier original index; an odd leftover bit is dropped.
pub fn twcc_round(keys: &RawKeys, seed: u64) -> TwccRound {
    assert_eq!(keys.alice.len(), keys.bob.len());
    let n = keys.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut order);
    let mut out = TwccRound {
        kept: RawKeys::default(),
        n_odd: 0,
        n_even_zero: 0,
        n_even_one: 0,
        discarded_pairs: 0,
        errors_before: keys.errors() as u64,
        errors_after: 0,
    };
    for pair in order.chunks_exact(2) {
        let (i, j) = (pair[0] as usize, pair[1] as usize);
        let (ai, aj) = (keys.alice[i], keys.alice[j]);
        let (bi, bj) = (keys.bob[i], keys.bob[j]);
        if (ai ^ aj) != (bi ^ bj) {
            out.discarded_pairs += 1;
            continue;
        }
        match (bi, bj) {
            (0, 0) => out.n_even_zero += 1,
            (1, 1) => out.n_even_one += 1,
            _ => out.n_odd += 1,
        }
        let keep = if i < j { i } else { j };
        out.kept.alice.push(keys.alice[keep]);
        out.kept.bob.push(keys.bob[keep]);
        if keys.alice[keep] != keys.bob[keep] {
            out.errors_after += 1;
        }
    }
    out
}

/// Render key bits as a portable bitmap (P4): `width` pixels per row, bit 1
/// drawn black, bit 0 white, the final partial row padded white. Returns the
/// complete file contents.
pub fn render_binary_map(bits: &[u8], width: usize) -> Vec<u8> {
    assert!(width > 0);
    let height = bits.len().div_ceil(width);
    let mut out = Vec::new();
    out.extend_from_slice(b"P4\n");
    push_decimal(&mut out, width);
    out.push(b' ');
    push_decimal(&mut out, height);
    out.push(b'\n');
    let row_bytes = width.div_ceil(8);
    for r in 0..height {
        let mut row = alloc::vec![0u8; row_bytes];
        for c in 0..width {
            let idx = r * width + c;
            if idx < bits.len() && bits[idx] != 0 {
                row[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

fn push_decimal(out: &mut Vec<u8>, mut v: usize) {
    let mut digits = Vec::new();
    loop {
        digits.push(b'0' + (v % 10) as u8);
        v /= 10;
        if v == 0 {
            break;
        }
    }
    digits.reverse();
    out.extend_from_slice(&digits);
}

/// Bitwise XOR of two equal-length bit strings.
pub fn xor_map(a: &[u8], b: &[u8]) -> Vec<u8> {
    assert_eq!(a.len(), b.len(), "xor_map: length mismatch");
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
