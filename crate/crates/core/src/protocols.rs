//! Party/channel simulation of the three protocols under study.
//!
//! Every run records a [`Transcript`]. Events on the public channel are what
//! an eavesdropper sees; secure-primitive events model an ideal quantum
//! transmission and never reach her.

use std::fmt::{self, Write as _};

use rand::Rng;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::infotheory::{pairwise_xor, Distribution};
use crate::otp::{self, CipherBlock, Condition, KeyMaterial, KeyOrigin};
use crate::quantum::{deduce_partner, sample_swap, swap_distribution_oracle, BellLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Channel {
    PublicBroadcast,
    SecurePrimitive,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::PublicBroadcast => "PublicBroadcast",
            Channel::SecurePrimitive => "SecurePrimitive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub sender: String,
    pub channel: Channel,
    pub payload: Bits,
}

/// Append-only record of a protocol run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sender: &str, channel: Channel, payload: Bits) {
        self.events.push(Event { sender: sender.to_string(), channel, payload });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.events.iter().filter(|e| e.channel == channel).count()
    }

    /// One line per event: `sender channel payload`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{} {} {}", e.sender, e.channel, e.payload);
        }
        out
    }
}

/// Eve's view: the public payloads, in order.
pub fn eve_view(t: &Transcript) -> Vec<Bits> {
    t.events
        .iter()
        .filter(|e| e.channel == Channel::PublicBroadcast)
        .map(|e| e.payload.clone())
        .collect()
}

/// [`eve_view`] concatenated into one bitstring.
pub fn eve_view_bits(t: &Transcript) -> Bits {
    eve_view(t).iter().fold(Bits::new(), |acc, p| acc.concat(p))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Parties {
    pub sender: String,
    pub receivers: Vec<String>,
}

impl Default for Parties {
    fn default() -> Self {
        Self { sender: "alice".into(), receivers: vec!["bob".into(), "charlie".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XorChainRun {
    pub message: Bits,
    pub transcript: Transcript,
    pub receiver_outputs: Vec<(String, Bits)>,
    pub ghz_states_consumed: usize,
}

/// Odd-numbered bits go over the ideal GHZ primitive; each even-numbered bit
/// is published XORed with its odd predecessor.
pub fn run_xor_chain(message: &Bits, parties: &Parties) -> Result<XorChainRun> {
    let n = message.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::OddMessageLength(n));
    }
    let mut transcript = Transcript::new();
    let published = pairwise_xor(message);
    for i in 0..n / 2 {
        transcript.push(&parties.sender, Channel::SecurePrimitive, Bits::from_bools([message.get(2 * i)]));
        transcript.push(&parties.sender, Channel::PublicBroadcast, Bits::from_bools([published.get(i)]));
    }
    let output = reconstruct_xor_chain(&transcript);
    let receiver_outputs = parties.receivers.iter().map(|r| (r.clone(), output.clone())).collect();
    Ok(XorChainRun { message: message.clone(), transcript, receiver_outputs, ghz_states_consumed: n / 2 })
}

// A legitimate receiver sees both channels: a_{2i-1} secretly, then a'_i publicly.
fn reconstruct_xor_chain(t: &Transcript) -> Bits {
    let mut out = Bits::new();
    let mut last_secret = false;
    for e in t.events() {
        let bit = e.payload.get(0);
        match e.channel {
            Channel::SecurePrimitive => {
                last_secret = bit;
                out.push(bit);
            }
            Channel::PublicBroadcast => out.push(bit ^ last_secret),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EsQkdRun {
    pub initial_pairs: Vec<(BellLabel, BellLabel)>,
    pub alice_results: Vec<BellLabel>,
    pub bob_results: Vec<BellLabel>,
    pub key: Bits,
    pub bob_key: Bits,
    pub particles_consumed: usize,
    pub transcript: Transcript,
}

impl EsQkdRun {
    /// The derived key as a pad, marked as correlated.
    pub fn key_material(&self) -> KeyMaterial {
        KeyMaterial::new(self.key.clone(), KeyOrigin::DerivedCorrelated("entanglement-swapping outcomes".into()))
    }
}

/// Entanglement swapping between pairs (1,2) and (3,4): Alice measures (1,3),
/// Bob measures (2,4). Each derives the other's outcome from the public
/// initial labels and takes `label(alice) ∥ label(bob)` as a 4-bit key block.
pub fn run_es_qkd<R: Rng + ?Sized>(initial_pairs: &[(BellLabel, BellLabel)], rng: &mut R) -> Result<EsQkdRun> {
    if initial_pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut transcript = Transcript::new();
    let mut alice_results = Vec::with_capacity(initial_pairs.len());
    let mut bob_results = Vec::with_capacity(initial_pairs.len());
    let mut key = Bits::new();
    let mut bob_key = Bits::new();

    for &initial in initial_pairs {
        // the initial Bell states are public knowledge
        transcript.push("source", Channel::PublicBroadcast, initial.0.to_bits().concat(&initial.1.to_bits()));

        let (alice, bob) = sample_swap(&swap_distribution_oracle(initial.0, initial.1), rng);
        let bob_seen_by_alice = deduce_partner(initial, alice);
        let alice_seen_by_bob = deduce_partner(initial, bob);
        key.extend_from(&alice.to_bits().concat(&bob_seen_by_alice.to_bits()));
        bob_key.extend_from(&alice_seen_by_bob.to_bits().concat(&bob.to_bits()));
        alice_results.push(alice);
        bob_results.push(bob);
    }

    Ok(EsQkdRun {
        initial_pairs: initial_pairs.to_vec(),
        alice_results,
        bob_results,
        key,
        bob_key,
        particles_consumed: 4 * initial_pairs.len(),
        transcript,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpBaselineRun {
    pub transcript: Transcript,
    pub block: CipherBlock,
    pub bob_output: Bits,
}

/// Correct one-time pad: refuses unless all three perfect-secrecy conditions hold.
pub fn run_otp_baseline(
    plaintext: &Bits,
    key: &mut KeyMaterial,
    key_distribution: Option<&Distribution>,
) -> Result<OtpBaselineRun> {
    let audit = otp::shannon_audit(key, plaintext.len(), key_distribution);
    match audit.first_failure() {
        Some(Condition::NeverReused) => return Err(Error::ReuseViolation),
        Some(c) => return Err(Error::ConditionViolation(c)),
        None => {}
    }
    let block = otp::encrypt(plaintext, key)?;
    let mut transcript = Transcript::new();
    transcript.push("alice", Channel::PublicBroadcast, block.ciphertext.clone());
    let bob_output = otp::decrypt(&block, key)?;
    Ok(OtpBaselineRun { transcript, block, bob_output })
}
