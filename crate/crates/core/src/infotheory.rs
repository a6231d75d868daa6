//! Exact discrete distributions over bitstrings, and leakage by enumeration.
//!
//! Nothing here samples. Every joint distribution is built by walking all
//! (secret, internal randomness) combinations, so the reported entropies are
//! exact up to floating-point rounding. Logarithms are base 2 and `0·log 0 = 0`.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Largest number of (secret, randomness) combinations an enumeration may visit.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;

// secrets per parallel work unit; fixed so merge order never depends on thread count
const CHUNK: usize = 64;

// Fixed hasher keys: iteration order depends only on the insertion sequence,
// which keeps floating-point summation order reproducible across runs.
type FixedMap = HashMap<Bits, f64, BuildHasherDefault<DefaultHasher>>;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Probability distribution over equal-length bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    bit_len: usize,
    entries: BTreeMap<Bits, f64>,
}

impl Distribution {
    /// Duplicate outcomes are merged by summing their mass.
    pub fn new<I: IntoIterator<Item = (Bits, f64)>>(entries: I) -> Result<Self> {
        let dist = Self::collect(entries)?;
        let total = dist.total();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("total mass {total} is not 1")));
        }
        Ok(dist)
    }

    fn collect<I: IntoIterator<Item = (Bits, f64)>>(entries: I) -> Result<Self> {
        let mut map: BTreeMap<Bits, f64> = BTreeMap::new();
        let mut bit_len = None;
        for (outcome, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p} for {outcome}")));
            }
            match bit_len {
                None => bit_len = Some(outcome.len()),
                Some(n) if n != outcome.len() => {
                    return Err(Error::InvalidDistribution(format!(
                        "outcome {outcome} has {} bits, expected {n}",
                        outcome.len()
                    )))
                }
                _ => {}
            }
            *map.entry(outcome).or_insert(0.0) += p;
        }
        let bit_len =
            bit_len.ok_or_else(|| Error::InvalidDistribution("no outcomes".to_string()))?;
        Ok(Self { bit_len, entries: map })
    }

    /// Rescales nonnegative weights to total mass 1.
    pub fn from_weights<I: IntoIterator<Item = (Bits, f64)>>(weights: I) -> Result<Self> {
        let mut dist = Self::collect(weights)?;
        let total = dist.total();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".to_string()));
        }
        dist.entries.values_mut().for_each(|p| *p /= total);
        Ok(dist)
    }

    /// Uniform over all `2^bits` strings.
    pub fn uniform(bits: usize) -> Result<Self> {
        if bits as u32 > ENUMERATION_BUDGET.trailing_zeros() {
            return Err(Error::EnumerationBudget { needed: 1u128 << bits, budget: ENUMERATION_BUDGET });
        }
        let p = (-(bits as f64)).exp2();
        Self::new(Bits::all(bits).map(|b| (b, p)))
    }

    pub fn uniform_over<I: IntoIterator<Item = Bits>>(outcomes: I) -> Result<Self> {
        Self::from_weights(outcomes.into_iter().map(|b| (b, 1.0)))
    }

    pub fn point(outcome: Bits) -> Self {
        Self { bit_len: outcome.len(), entries: [(outcome, 1.0)].into() }
    }

    /// The point mass on the empty string: "no internal randomness".
    pub fn deterministic() -> Self {
        Self::point(Bits::new())
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn probability(&self, outcome: &Bits) -> f64 {
        self.entries.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bits, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    /// Outcomes with positive probability.
    pub fn support(&self) -> impl Iterator<Item = &Bits> + '_ {
        self.entries.iter().filter(|(_, p)| **p > 0.0).map(|(k, _)| k)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.entries.values().copied().map(plogp).sum()
    }

    /// Largest absolute probability difference over the union of outcomes.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Joint distribution of (secret, observation).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    entries: BTreeMap<(Bits, Bits), f64>,
}

impl JointDistribution {
    pub fn new<I: IntoIterator<Item = ((Bits, Bits), f64)>>(entries: I) -> Result<Self> {
        let mut map: BTreeMap<(Bits, Bits), f64> = BTreeMap::new();
        for (k, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p}")));
            }
            *map.entry(k).or_insert(0.0) += p;
        }
        let joint = Self { entries: map };
        // validates mass and equal lengths on both coordinates
        joint.secret_marginal()?;
        joint.observation_marginal()?;
        Ok(joint)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bits, &Bits, f64)> + '_ {
        self.entries.iter().map(|((s, o), p)| (s, o, *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn secret_marginal(&self) -> Result<Distribution> {
        Distribution::new(self.entries.iter().map(|((s, _), p)| (s.clone(), *p)))
    }

    pub fn observation_marginal(&self) -> Result<Distribution> {
        Distribution::new(self.entries.iter().map(|((_, o), p)| (o.clone(), *p)))
    }

    /// Bayes posterior over secrets given one observation.
    pub fn posterior(&self, observation: &Bits) -> Result<Distribution> {
        let weights: Vec<(Bits, f64)> = self
            .entries
            .iter()
            .filter(|((_, o), p)| o == observation && **p > 0.0)
            .map(|((s, _), p)| (s.clone(), *p))
            .collect();
        if weights.is_empty() {
            return Err(Error::ZeroProbabilityObservation(observation.to_string()));
        }
        Distribution::from_weights(weights)
    }

    /// H(secret | observation) = Σ_o p(o) · H(secret | o).
    pub fn conditional_entropy(&self) -> f64 {
        let mut by_obs: BTreeMap<&Bits, Vec<f64>> = BTreeMap::new();
        for ((_, o), p) in &self.entries {
            by_obs.entry(o).or_default().push(*p);
        }
        by_obs
            .values()
            .map(|masses| {
                let p_obs: f64 = masses.iter().sum();
                if p_obs <= 0.0 {
                    return 0.0;
                }
                p_obs * masses.iter().map(|m| plogp(m / p_obs)).sum::<f64>()
            })
            .sum()
    }

    /// I(secret; observation) = H(secret) − H(secret | observation), floored at 0.
    pub fn mutual_information(&self) -> f64 {
        let h_secret = self.secret_marginal().map(|d| d.entropy()).unwrap_or(0.0);
        (h_secret - self.conditional_entropy()).max(0.0)
    }
}

pub fn entropy(dist: &Distribution) -> f64 {
    dist.entropy()
}

pub fn posterior(joint: &JointDistribution, observation: &Bits) -> Result<Distribution> {
    joint.posterior(observation)
}

pub fn conditional_entropy(joint: &JointDistribution) -> f64 {
    joint.conditional_entropy()
}

pub fn mutual_information(joint: &JointDistribution) -> f64 {
    joint.mutual_information()
}

fn check_budget(prior: &Distribution, randomness: &Distribution) -> Result<()> {
    let needed = prior.entries.len() as u128 * randomness.entries.len() as u128;
    if needed > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget { needed, budget: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// Builds the exact joint of (secret, `view(secret, randomness)`).
///
/// `randomness` is the protocol's internal coin distribution; pass
/// [`Distribution::deterministic`] for a deterministic view.
pub fn enumerate_joint<F>(
    secret_prior: &Distribution,
    randomness: &Distribution,
    view: F,
) -> Result<JointDistribution>
where
    F: Fn(&Bits, &Bits) -> Bits,
{
    check_budget(secret_prior, randomness)?;
    let mut entries: BTreeMap<(Bits, Bits), f64> = BTreeMap::new();
    for (secret, ps) in secret_prior.iter() {
        for (coins, pr) in randomness.iter() {
            let mass = ps * pr;
            if mass > 0.0 {
                *entries.entry((secret.clone(), view(secret, coins))).or_insert(0.0) += mass;
            }
        }
    }
    JointDistribution::new(entries)
}

/// Entropies of an enumerated joint, computed without materializing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageSummary {
    pub secret_entropy: f64,
    pub observation_entropy: f64,
    pub joint_entropy: f64,
    pub mutual_information: f64,
}

impl LeakageSummary {
    pub fn conditional_entropy(&self) -> f64 {
        (self.joint_entropy - self.observation_entropy).max(0.0)
    }
}

/// Streaming counterpart of [`enumerate_joint`] followed by
/// [`JointDistribution::mutual_information`].
///
/// Memory is proportional to the number of distinct observations rather than
/// to the joint support, which is what makes 12-bit one-time-pad sweeps
/// (2^24 combinations) cheap. Work is split over fixed-size chunks of secrets
/// and merged in order, so results are reproducible bit for bit.
pub fn exact_leakage<F>(
    secret_prior: &Distribution,
    randomness: &Distribution,
    view: F,
) -> Result<LeakageSummary>
where
    F: Fn(&Bits, &Bits) -> Bits + Sync,
{
    check_budget(secret_prior, randomness)?;
    let secrets: Vec<(&Bits, f64)> = secret_prior.iter().filter(|(_, p)| *p > 0.0).collect();
    let coins: Vec<(&Bits, f64)> = randomness.iter().filter(|(_, p)| *p > 0.0).collect();

    let partials: Vec<(f64, FixedMap)> = secrets
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut joint_h = 0.0;
            let mut chunk_obs = FixedMap::default();
            let mut local = FixedMap::default();
            for (secret, ps) in chunk {
                local.clear();
                for (c, pr) in &coins {
                    *local.entry(view(secret, c)).or_insert(0.0) += ps * pr;
                }
                for (o, m) in local.drain() {
                    joint_h += plogp(m);
                    *chunk_obs.entry(o).or_insert(0.0) += m;
                }
            }
            (joint_h, chunk_obs)
        })
        .collect();

    let mut joint_entropy = 0.0;
    let mut observations: BTreeMap<Bits, f64> = BTreeMap::new();
    for (h, masses) in partials {
        joint_entropy += h;
        for (o, m) in masses {
            *observations.entry(o).or_insert(0.0) += m;
        }
    }
    let observation_dist = Distribution::new(observations)?;
    let secret_entropy = secret_prior.entropy();
    let observation_entropy = observation_dist.entropy();
    let mutual_information = (secret_entropy + observation_entropy - joint_entropy).max(0.0);
    Ok(LeakageSummary { secret_entropy, observation_entropy, joint_entropy, mutual_information })
}

/// Posterior over secrets for one observation, by enumeration without
/// materializing the joint.
pub fn exact_posterior<F>(
    secret_prior: &Distribution,
    randomness: &Distribution,
    view: F,
    observation: &Bits,
) -> Result<Distribution>
where
    F: Fn(&Bits, &Bits) -> Bits,
{
    check_budget(secret_prior, randomness)?;
    let mut weights = Vec::new();
    for (secret, ps) in secret_prior.iter() {
        let mass: f64 = randomness
            .iter()
            .filter(|(c, _)| &view(secret, c) == observation)
            .map(|(_, pr)| ps * pr)
            .sum();
        if mass > 0.0 {
            weights.push((secret.clone(), mass));
        }
    }
    if weights.is_empty() {
        return Err(Error::ZeroProbabilityObservation(observation.to_string()));
    }
    Distribution::from_weights(weights)
}

/// XOR of adjacent pairs: the public part of the XOR-chain scheme.
pub(crate) fn pairwise_xor(message: &Bits) -> Bits {
    Bits::from_bools((0..message.len() / 2).map(|i| message.get(2 * i) ^ message.get(2 * i + 1)))
}
