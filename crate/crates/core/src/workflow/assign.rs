use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric quality gates. Comparisons against the thresholds are strict:
/// a score equal to a threshold passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QcPolicy {
    /// Fraction of units shared between annotators.
    pub overlap_fraction: f64,
    /// Annotators per shared unit.
    pub overlap_arity: usize,
    pub batch_iaa_threshold: f64,
    pub tag_iaa_threshold: f64,
}

impl Default for QcPolicy {
    fn default() -> Self {
        QcPolicy {
            overlap_fraction: 0.10,
            overlap_arity: 2,
            batch_iaa_threshold: 0.90,
            tag_iaa_threshold: 0.80,
        }
    }
}

impl QcPolicy {
    pub fn validate(&self, annotators: usize) -> Result<()> {
        for (name, v) in [
            ("overlap_fraction", self.overlap_fraction),
            ("batch_iaa_threshold", self.batch_iaa_threshold),
            ("tag_iaa_threshold", self.tag_iaa_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.overlap_arity < 2 {
            return Err(Error::Config("overlap arity must be at least 2".into()));
        }
        if self.overlap_fraction > 0.0 && annotators < self.overlap_arity {
            return Err(Error::Config(format!(
                "overlap needs at least {} annotators, got {annotators}",
                self.overlap_arity
            )));
        }
        Ok(())
    }

    /// Number of shared units for a batch of `units`.
    pub fn overlap_count(&self, units: usize) -> usize {
        // tolerate representation error such as 0.1 * 30 = 3.0000000000000004
        let raw = self.overlap_fraction * units as f64;
        ((raw - 1e-9).ceil().max(0.0) as usize).min(units)
    }
}

/// Lead-visible record of which annotators share a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub unit_id: String,
    pub annotators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// annotator id -> shuffled unit ids
    pub loads: BTreeMap<String, Vec<String>>,
    pub manifest: Vec<OverlapEntry>,
}

/// Distributes units over annotators, sharing `⌈p·|units|⌉` of them among
/// `overlap_arity` annotators each.
///
/// Each unit goes to the least-loaded annotators, ties broken by a rotating
/// cursor so shared units cycle through annotator pairs. Loads stay within
/// one unit of each other. Each annotator's list is shuffled so shared units
/// sit at no predictable position.
pub fn assign_with_overlap(
    units: &[String],
    annotators: &[String],
    policy: &QcPolicy,
    seed: u64,
) -> Result<Assignment> {
    if units.is_empty() {
        return Err(Error::Config("nothing to assign".into()));
    }
    if annotators.is_empty() {
        return Err(Error::Config("no annotators".into()));
    }
    let mut distinct = annotators.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != annotators.len() {
        return Err(Error::Config("duplicate annotator ids".into()));
    }
    policy.validate(annotators.len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let overlap = policy.overlap_count(units.len());
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.shuffle(&mut rng);
    let mut shared = vec![false; units.len()];
    for &i in &order[..overlap] {
        shared[i] = true;
    }

    let k = annotators.len();
    let mut load = vec![0usize; k];
    let mut lists: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut manifest = Vec::new();
    // shared units first so they spread evenly before singles fill the gaps
    let sequence = order[..overlap].iter().chain(order[overlap..].iter());
    for (cursor, &i) in sequence.enumerate() {
        let arity = if shared[i] { policy.overlap_arity } else { 1 };
        let mut candidates: Vec<usize> = (0..k).collect();
        candidates.sort_by_key(|&a| (load[a], (a + k - cursor % k) % k));
        let picked: Vec<usize> = candidates[..arity].to_vec();
        for &a in &picked {
            load[a] += 1;
            lists[a].push(units[i].clone());
        }
        if shared[i] {
            let mut names: Vec<String> = picked.iter().map(|&a| annotators[a].clone()).collect();
            names.sort();
            manifest.push(OverlapEntry {
                unit_id: units[i].clone(),
                annotators: names,
            });
        }
    }
    for list in &mut lists {
        list.shuffle(&mut rng);
    }
    manifest.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    Ok(Assignment {
        loads: annotators.iter().cloned().zip(lists).collect(),
        manifest,
    })
}
