//! Bell-state algebra and the entanglement-swapping outcome distribution.
//!
//! Two routes compute the joint outcome of Bell measurements on particles
//! (1,3) and (2,4) of the pairs (1,2) and (3,4):
//!
//! * [`swap_distribution_oracle`] builds the 16-amplitude product state and
//!   projects it onto every Bell ⊗ Bell basis state;
//! * [`swap_distribution_rule`] uses the closed form: the outcome labels XOR to
//!   the XOR of the initial labels, uniformly over the four such pairs.
//!
//! Qubit ordering: in a basis index, particle 1 is the most significant bit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-9;
/// Projected probabilities below this are reported as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// One of the four Bell states, labelled by two bits.
///
/// `bitflip` selects Φ (0) or Ψ (1); `phase` selects + (0) or − (1), so
/// Φ+ = 00, Φ− = 01, Ψ+ = 10, Ψ− = 11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellLabel {
    pub bitflip: bool,
    pub phase: bool,
}

impl BellLabel {
    pub const PHI_PLUS: BellLabel = BellLabel { bitflip: false, phase: false };
    pub const PHI_MINUS: BellLabel = BellLabel { bitflip: false, phase: true };
    pub const PSI_PLUS: BellLabel = BellLabel { bitflip: true, phase: false };
    pub const PSI_MINUS: BellLabel = BellLabel { bitflip: true, phase: true };

    /// All four labels in encoding order.
    pub const ALL: [BellLabel; 4] =
        [Self::PHI_PLUS, Self::PHI_MINUS, Self::PSI_PLUS, Self::PSI_MINUS];

    pub fn index(self) -> u8 {
        (u8::from(self.bitflip) << 1) | u8::from(self.phase)
    }

    pub fn from_index(index: u8) -> Result<Self> {
        if index > 3 {
            return Err(Error::InvalidBellLabel(index.to_string()));
        }
        Ok(BellLabel { bitflip: index & 2 != 0, phase: index & 1 != 0 })
    }

    /// The two-bit key fragment this outcome contributes.
    pub fn to_bits(self) -> Bits {
        Bits::from_u64(u64::from(self.index()), 2)
    }

    /// Componentwise XOR of the two-bit labels.
    pub fn xor(self, other: BellLabel) -> BellLabel {
        BellLabel { bitflip: self.bitflip ^ other.bitflip, phase: self.phase ^ other.phase }
    }

    /// Command-line token: `phi+`, `phi-`, `psi+` or `psi-`.
    pub fn token(self) -> &'static str {
        ["phi+", "phi-", "psi+", "psi-"][self.index() as usize]
    }

    pub fn symbol(self) -> &'static str {
        ["Φ+", "Φ−", "Ψ+", "Ψ−"][self.index() as usize]
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi+" | "00" => Ok(Self::PHI_PLUS),
            "phi-" | "01" => Ok(Self::PHI_MINUS),
            "psi+" | "10" => Ok(Self::PSI_PLUS),
            "psi-" | "11" => Ok(Self::PSI_MINUS),
            _ => Err(Error::InvalidBellLabel(s.to_string())),
        }
    }
}

impl Serialize for BellLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for BellLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Dense pure state over `n` qubits. Used only as a brute-force oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!("dimension {dim} is not a power of two")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { qubits: dim.trailing_zeros() as usize, amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `self ⊗ other`; the qubits of `self` come first.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        StateVector { qubits: self.qubits + other.qubits, amplitudes }
    }

    /// Reorders qubits so that new position `j` holds old qubit `order[j]`.
    pub fn permute(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.qubits;
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&q| q >= n || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::InvalidState(format!("{order:?} is not a permutation of {n} qubits")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (old, amp) in self.amplitudes.iter().enumerate() {
            let new = order.iter().enumerate().fold(0usize, |acc, (j, &q)| {
                let bit = (old >> (n - 1 - q)) & 1;
                acc | (bit << (n - 1 - j))
            });
            amplitudes[new] = *amp;
        }
        Ok(StateVector { qubits: n, amplitudes })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.qubits, other.qubits, "inner product of different dimensions");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// |Φ±⟩ = (|00⟩ ± |11⟩)/√2, |Ψ±⟩ = (|01⟩ ± |10⟩)/√2.
pub fn bell_state_vector(label: BellLabel) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if label.phase { -h } else { h };
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 4];
    let (first, second) = if label.bitflip { (0b01, 0b10) } else { (0b00, 0b11) };
    amplitudes[first] = Complex64::new(h, 0.0);
    amplitudes[second] = Complex64::new(sign, 0.0);
    StateVector { qubits: 2, amplitudes }
}

/// Qubit order taking particles (1,2,3,4) to the grouping (1,3),(2,4).
pub const SWAP_GROUPING: [usize; 4] = [0, 2, 1, 3];

/// Joint distribution of (outcome on particles 1,3; outcome on particles 2,4).
///
/// Only outcomes with nonzero probability are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDistribution {
    entries: BTreeMap<(BellLabel, BellLabel), f64>,
}

impl SwapDistribution {
    pub fn probability(&self, alice: BellLabel, bob: BellLabel) -> f64 {
        self.entries.get(&(alice, bob)).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (BellLabel, BellLabel)> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((BellLabel, BellLabel), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest entrywise difference over all 16 outcome pairs.
    pub fn max_abs_diff(&self, other: &SwapDistribution) -> f64 {
        let mut worst = 0.0f64;
        for a in BellLabel::ALL {
            for b in BellLabel::ALL {
                worst = worst.max((self.probability(a, b) - other.probability(a, b)).abs());
            }
        }
        worst
    }

    /// Lines of `label13 label24 probability`, sorted by label.
    pub fn dump(&self) -> String {
        self.entries
            .iter()
            .map(|((a, b), p)| format!("{} {} {p}\n", a.to_bits(), b.to_bits()))
            .collect()
    }
}

/// Brute-force route: project the product state onto the 16 Bell ⊗ Bell states.
pub fn swap_distribution_oracle(initial_12: BellLabel, initial_34: BellLabel) -> SwapDistribution {
    let product = bell_state_vector(initial_12).tensor(&bell_state_vector(initial_34));
    let grouped = product.permute(&SWAP_GROUPING).expect("fixed 4-qubit permutation");
    let mut entries = BTreeMap::new();
    for alice in BellLabel::ALL {
        for bob in BellLabel::ALL {
            let basis = bell_state_vector(alice).tensor(&bell_state_vector(bob));
            let p = basis.inner(&grouped).norm_sqr();
            if p >= PROBABILITY_FLOOR {
                entries.insert((alice, bob), p);
            }
        }
    }
    SwapDistribution { entries }
}

/// Closed-form route: uniform over outcome pairs whose labels XOR to the
/// XOR of the initial labels.
pub fn swap_distribution_rule(initial_12: BellLabel, initial_34: BellLabel) -> SwapDistribution {
    let parity = initial_12.xor(initial_34);
    let entries = BellLabel::ALL
        .into_iter()
        .map(|alice| ((alice, alice.xor(parity)), 0.25))
        .collect();
    SwapDistribution { entries }
}

/// The partner's outcome implied by one's own outcome and the public initial labels.
pub fn deduce_partner(initial: (BellLabel, BellLabel), own: BellLabel) -> BellLabel {
    own.xor(initial.0.xor(initial.1))
}

/// Draws one outcome pair by inverting the cumulative distribution.
pub fn sample_swap<R: Rng + ?Sized>(dist: &SwapDistribution, rng: &mut R) -> (BellLabel, BellLabel) {
    let u: f64 = rng.random::<f64>() * dist.total();
    let mut acc = 0.0;
    let mut last = None;
    for (outcome, p) in dist.iter() {
        acc += p;
        last = Some(outcome);
        if u < acc {
            return outcome;
        }
    }
    last.expect("swap distribution has nonempty support")
}
