//! One-time-pad encryption with a per-bit usage ledger, and an auditor for
//! the three perfect-secrecy conditions: a truly random key, a key at least
//! as long as the message, and no reuse.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::infotheory::Distribution;

const ENTROPY_TOLERANCE: f64 = 1e-9;

static NEXT_KEY_ID: AtomicU64 = AtomicU64::new(1);

/// Opaque pad identity. Only equality is observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyId(u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KeyOrigin {
    TrulyRandom,
    DerivedCorrelated(String),
}

/// A pad plus the ledger of which bits have been spent.
#[derive(Debug)]
pub struct KeyMaterial {
    id: KeyId,
    bits: Bits,
    origin: KeyOrigin,
    used: Vec<bool>,
    reuse_attempts: usize,
}

impl KeyMaterial {
    pub fn new(bits: Bits, origin: KeyOrigin) -> Self {
        let used = vec![false; bits.len()];
        Self {
            id: KeyId(NEXT_KEY_ID.fetch_add(1, Ordering::Relaxed)),
            bits,
            origin,
            used,
            reuse_attempts: 0,
        }
    }

    /// A fresh uniformly random pad drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::new(Bits::from_bools((0..len).map(|_| rng.random::<bool>())), KeyOrigin::TrulyRandom)
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn origin(&self) -> &KeyOrigin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_used(&self, i: usize) -> bool {
        self.used[i]
    }

    pub fn unused(&self) -> usize {
        self.used.iter().filter(|u| !**u).count()
    }

    pub fn reuse_attempts(&self) -> usize {
        self.reuse_attempts
    }

    // pads are consumed front to back, so the unused bits are a suffix
    fn cursor(&self) -> usize {
        self.used.iter().position(|u| !u).unwrap_or(self.used.len())
    }

    fn reserve(&mut self, n: usize) -> Result<usize> {
        let start = self.cursor();
        let available = self.len() - start;
        if available < n {
            if self.len() >= n {
                self.reuse_attempts += 1;
                return Err(Error::ReuseViolation);
            }
            return Err(Error::KeyExhausted { needed: n, available });
        }
        self.used[start..start + n].iter_mut().for_each(|u| *u = true);
        Ok(start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherBlock {
    pub ciphertext: Bits,
    key_id: KeyId,
    offset: usize,
}

impl CipherBlock {
    pub fn key_id(&self) -> KeyId {
        self.key_id
    }
}

/// `c_i = p_i ⊕ k_i` over the next unused pad bits, which are then marked used.
pub fn encrypt(plaintext: &Bits, key: &mut KeyMaterial) -> Result<CipherBlock> {
    let offset = key.reserve(plaintext.len())?;
    let pad = key.bits.slice(offset, offset + plaintext.len());
    Ok(CipherBlock { ciphertext: plaintext ^ &pad, key_id: key.id, offset })
}

pub fn decrypt(block: &CipherBlock, key: &KeyMaterial) -> Result<Bits> {
    if block.key_id != key.id {
        return Err(Error::KeyMismatch);
    }
    let pad = key.bits.slice(block.offset, block.offset + block.ciphertext.len());
    Ok(&block.ciphertext ^ &pad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    TrulyRandom,
    SufficientLength,
    NeverReused,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::TrulyRandom => "key is not truly random",
            Condition::SufficientLength => "key is shorter than the message",
            Condition::NeverReused => "key bits would be reused",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub condition: Condition,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub randomness: Verdict,
    pub length: Verdict,
    pub reuse: Verdict,
    /// Key length minus key entropy; zero when no distribution was supplied.
    pub randomness_deficiency_bits: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.randomness.passed && self.length.passed && self.reuse.passed
    }

    /// Reuse is reported ahead of the other conditions.
    pub fn first_failure(&self) -> Option<Condition> {
        [&self.reuse, &self.randomness, &self.length]
            .into_iter()
            .find(|v| !v.passed)
            .map(|v| v.condition)
    }
}

/// Checks the three perfect-secrecy conditions for sending
/// `intended_message_len` bits under `key`.
///
/// With `key_distribution` the randomness check is analytic: the generating
/// distribution must carry one full bit of entropy per key bit. Without it
/// the declared origin decides.
pub fn shannon_audit(
    key: &KeyMaterial,
    intended_message_len: usize,
    key_distribution: Option<&Distribution>,
) -> AuditReport {
    let (randomness, deficiency) = match key_distribution {
        Some(dist) => {
            let h = dist.entropy();
            let deficiency = (key.len() as f64 - h).max(0.0);
            let passed = (h - key.len() as f64).abs() <= ENTROPY_TOLERANCE;
            let detail = format!("key entropy {h} bits for a {}-bit key", key.len());
            (Verdict { condition: Condition::TrulyRandom, passed, detail }, deficiency)
        }
        None => {
            let passed = key.origin == KeyOrigin::TrulyRandom;
            let detail = format!("declared origin {:?}", key.origin);
            (Verdict { condition: Condition::TrulyRandom, passed, detail }, 0.0)
        }
    };

    let unused = key.unused();
    let length = Verdict {
        condition: Condition::SufficientLength,
        passed: unused >= intended_message_len,
        detail: format!("{unused} unused key bits for a {intended_message_len}-bit message"),
    };

    let spent = key.len() - unused;
    let would_reuse = unused < intended_message_len && key.len() >= intended_message_len;
    let reuse = Verdict {
        condition: Condition::NeverReused,
        passed: key.reuse_attempts == 0 && !would_reuse,
        detail: format!("{spent} bits spent, {} refused reuse attempts", key.reuse_attempts),
    };

    AuditReport { randomness, length, reuse, randomness_deficiency_bits: deficiency }
}

/// Monobit and serial statistics of a sampled key.
///
/// A heuristic diagnostic only: the flags use |z| > 3 for the monobit test
/// and χ² > 16.27 (3 degrees of freedom, p ≈ 0.001) for overlapping pairs.
/// The audit itself never relies on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDiagnostic {
    pub ones_fraction: f64,
    pub monobit_z: f64,
    pub serial_chi_square: f64,
    pub suspicious: bool,
}

pub fn empirical_diagnostic(bits: &Bits) -> EmpiricalDiagnostic {
    let n = bits.len();
    if n < 2 {
        return EmpiricalDiagnostic { ones_fraction: bits.count_ones() as f64, monobit_z: 0.0, serial_chi_square: 0.0, suspicious: false };
    }
    let ones = bits.count_ones() as f64;
    let nf = n as f64;
    let monobit_z = (2.0 * ones - nf) / nf.sqrt();

    let mut pairs = [0f64; 4];
    for i in 0..n - 1 {
        pairs[(usize::from(bits.get(i)) << 1) | usize::from(bits.get(i + 1))] += 1.0;
    }
    let expected = (nf - 1.0) / 4.0;
    let serial_chi_square = pairs.iter().map(|c| (c - expected).powi(2) / expected).sum::<f64>();

    EmpiricalDiagnostic {
        ones_fraction: ones / nf,
        monobit_z,
        serial_chi_square,
        suspicious: monobit_z.abs() > 3.0 || serial_chi_square > 16.27,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    fn key(s: &str) -> KeyMaterial {
        KeyMaterial::new(b(s), KeyOrigin::TrulyRandom)
    }

    #[test]
    fn encrypt_examples() {
        assert_eq!(encrypt(&b("10"), &mut key("11")).unwrap().ciphertext, b("01"));
        assert_eq!(encrypt(&b("0000"), &mut key("0000")).unwrap().ciphertext, b("0000"));
    }

    #[test]
    fn second_use_of_a_pad_is_refused() {
        let mut k = key("11");
        encrypt(&b("10"), &mut k).unwrap();
        assert_eq!(encrypt(&b("01"), &mut k), Err(Error::ReuseViolation));
        assert_eq!(k.reuse_attempts(), 1);
        assert!(k.is_used(0) && k.is_used(1));
    }

    #[test]
    fn short_key_is_exhausted() {
        let mut k = key("1");
        assert_eq!(encrypt(&b("10"), &mut k), Err(Error::KeyExhausted { needed: 2, available: 1 }));
        assert!(!k.is_used(0));
    }

    #[test]
    fn pad_is_consumed_in_order() {
        let mut k = key("1100");
        let first = encrypt(&b("11"), &mut k).unwrap();
        let second = encrypt(&b("11"), &mut k).unwrap();
        assert_eq!(first.ciphertext, b("00"));
        assert_eq!(second.ciphertext, b("11"));
        assert_eq!(decrypt(&second, &k).unwrap(), b("11"));
    }

    #[test]
    fn decrypt_examples() {
        let mut k = key("11");
        let block = encrypt(&b("10"), &mut k).unwrap();
        assert_eq!(block.ciphertext, b("01"));
        assert_eq!(decrypt(&block, &k).unwrap(), b("10"));

        let mut k = key("0110");
        let block = encrypt(&b("0000"), &mut k).unwrap();
        assert_eq!(block.ciphertext, *k.bits());
        assert_eq!(decrypt(&block, &k).unwrap(), b("0000"));
    }

    #[test]
    fn decrypt_rejects_foreign_key() {
        let mut k = key("11");
        let other = key("11");
        let block = encrypt(&b("10"), &mut k).unwrap();
        assert_ne!(block.key_id(), other.id());
        assert_eq!(decrypt(&block, &other), Err(Error::KeyMismatch));
    }

    #[test]
    fn audit_correlated_key_distribution() {
        let k = KeyMaterial::new(b("1000"), KeyOrigin::DerivedCorrelated("entanglement swapping".into()));
        let dist = Distribution::uniform_over([b("0010"), b("0111"), b("1000"), b("1101")]).unwrap();
        let report = shannon_audit(&k, 4, Some(&dist));
        assert!(!report.randomness.passed);
        assert!((report.randomness_deficiency_bits - 2.0).abs() < 1e-9);
        assert!(report.length.passed && report.reuse.passed);
        assert_eq!(report.first_failure(), Some(Condition::TrulyRandom));
    }

    #[test]
    fn audit_uniform_and_short_keys() {
        let k = key("1010");
        let report = shannon_audit(&k, 4, Some(&Distribution::uniform(4).unwrap()));
        assert!(report.passed());

        let report = shannon_audit(&key("10"), 4, None);
        assert!(!report.length.passed);
        assert!(report.reuse.passed);
        assert_eq!(report.first_failure(), Some(Condition::SufficientLength));

        let derived = KeyMaterial::new(b("10"), KeyOrigin::DerivedCorrelated("x".into()));
        assert!(!shannon_audit(&derived, 2, None).randomness.passed);
    }

    #[test]
    fn audit_flags_spent_pad_as_reuse() {
        let mut k = key("11");
        encrypt(&b("10"), &mut k).unwrap();
        let report = shannon_audit(&k, 2, None);
        assert!(!report.reuse.passed);
        assert_eq!(report.first_failure(), Some(Condition::NeverReused));
    }

    #[test]
    fn empirical_diagnostic_heuristics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let random = KeyMaterial::random(4096, &mut rng);
        assert!(!empirical_diagnostic(random.bits()).suspicious);
        assert!(empirical_diagnostic(&Bits::zeros(4096)).suspicious);
        let alternating = Bits::from_bools((0..4096).map(|i| i % 2 == 0));
        let d = empirical_diagnostic(&alternating);
        assert!(d.monobit_z.abs() < 1e-9 && d.suspicious);
    }

    proptest! {
        #[test]
        fn decrypt_inverts_encrypt(p in 0u64..1 << 16, seed in any::<u64>()) {
            let plaintext = Bits::from_u64(p, 16);
            let mut k = KeyMaterial::random(16, &mut ChaCha8Rng::seed_from_u64(seed));
            let block = encrypt(&plaintext, &mut k).unwrap();
            prop_assert_eq!(decrypt(&block, &k).unwrap(), plaintext);
        }

        #[test]
        fn ledger_is_monotone(lens in proptest::collection::vec(0usize..6, 1..8)) {
            let mut k = KeyMaterial::new(Bits::zeros(12), KeyOrigin::TrulyRandom);
            let mut before: Vec<bool> = (0..12).map(|i| k.is_used(i)).collect();
            for n in lens {
                let _ = encrypt(&Bits::zeros(n), &mut k);
                let after: Vec<bool> = (0..12).map(|i| k.is_used(i)).collect();
                for (a, b) in before.iter().zip(&after) {
                    prop_assert!(!*a || *b);
                }
                before = after;
            }
        }
    }
}
