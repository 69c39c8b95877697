//! Gaussian mechanism and the composition ledger.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// An `(epsilon, delta)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    /// Requires `epsilon > 0` and `0 < delta < 1`. The stricter operating
    /// regime `epsilon < 1, delta < 1/n` is checked by [`PrivacyBudget::check_regime`].
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn half(self) -> Self {
        Self { epsilon: self.epsilon / 2.0, delta: self.delta / 2.0 }
    }

    /// The guarantees are stated for `epsilon in (0, 1)` and `delta in (0, 1/n)`.
    pub fn check_regime(&self, n: usize) -> Result<()> {
        if self.epsilon >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} is outside the supported range (0, 1)",
                self.epsilon
            )));
        }
        if self.delta * n as f64 >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "delta = {} must be below 1/n = {} for n = {n}",
                self.delta,
                1.0 / n as f64
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.epsilon, self.delta)
    }
}

/// Gaussian noise scale `Delta sqrt(2 ln(1.25/delta)) / epsilon`.
pub fn gaussian_sigma(sensitivity: f64, budget: PrivacyBudget) -> f64 {
    sensitivity * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon
}

/// `point + N(0, sigma^2 I)`; `sigma == 0` returns the point without drawing.
pub fn add_gaussian_noise<R: Rng + ?Sized>(point: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return point.to_vec();
    }
    point
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect()
}

/// Contiguous index range `[start, end)` of a named dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionId {
    pub dataset: String,
    pub start: usize,
    pub end: usize,
}

impl PartitionId {
    pub fn new(dataset: impl Into<String>, start: usize, end: usize) -> Self {
        Self { dataset: dataset.into(), start, end }
    }

    fn overlaps(&self, other: &PartitionId) -> bool {
        self.dataset == other.dataset && self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for PartitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{})", self.dataset, self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CompositionGroup {
    Sequential,
    /// Entries sharing a key operate on disjoint partitions.
    Parallel(String),
}

impl fmt::Display for CompositionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionGroup::Sequential => f.write_str("sequential"),
            CompositionGroup::Parallel(k) => write!(f, "parallel:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub mechanism: String,
    pub budget: PrivacyBudget,
    pub partition: PartitionId,
    pub group: CompositionGroup,
    /// False for no-noise test runs; such entries provide no guarantee.
    pub private: bool,
}

impl fmt::Display for LedgerEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "id={} epsilon={:?} delta={:?} group={} partition={} private={}",
            self.mechanism, self.budget.epsilon, self.budget.delta, self.group, self.partition, self.private
        )
    }
}

/// Append-only record of mechanism invocations.
///
/// The ledger records declared budgets and checks that declared parallel
/// partitions are disjoint; it cannot verify the sensitivity claims.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrivacyLedger {
    entries: Vec<LedgerEntry>,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends an entry, rejecting partitions that overlap another member of
    /// the same parallel group.
    pub fn record(&mut self, entry: LedgerEntry) -> Result<()> {
        if let CompositionGroup::Parallel(key) = &entry.group {
            for other in &self.entries {
                if other.group != entry.group {
                    continue;
                }
                if other.partition.dataset != entry.partition.dataset {
                    return Err(Error::LedgerViolation(format!(
                        "parallel group `{key}` mixes datasets `{}` and `{}`",
                        other.partition.dataset, entry.partition.dataset
                    )));
                }
                if other.partition.overlaps(&entry.partition) {
                    return Err(Error::LedgerViolation(format!(
                        "parallel group `{key}`: partitions {} and {} overlap",
                        other.partition, entry.partition
                    )));
                }
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Appends every entry of `other` (sequential composition of the two ledgers).
    pub fn absorb(&mut self, other: PrivacyLedger) -> Result<()> {
        for e in other.entries {
            self.record(e)?;
        }
        Ok(())
    }

    pub fn is_private(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.private)
    }

    /// One line per entry.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Composed budget: each parallel group contributes its maxima, and groups
/// and sequential entries add up.
pub fn ledger_total(ledger: &PrivacyLedger) -> Result<PrivacyBudget> {
    let mut groups: BTreeMap<&str, (Vec<&PartitionId>, f64, f64)> = BTreeMap::new();
    let mut order: Vec<Option<&str>> = Vec::new();
    for e in ledger.entries() {
        match &e.group {
            CompositionGroup::Sequential => order.push(None),
            CompositionGroup::Parallel(key) => {
                let slot = groups.entry(key.as_str()).or_insert_with(|| {
                    order.push(Some(key.as_str()));
                    (Vec::new(), 0.0, 0.0)
                });
                if slot.0.iter().any(|p| p.overlaps(&e.partition) || p.dataset != e.partition.dataset) {
                    return Err(Error::LedgerViolation(format!(
                        "parallel group `{key}` holds overlapping or mixed partitions"
                    )));
                }
                slot.0.push(&e.partition);
                slot.1 = slot.1.max(e.budget.epsilon);
                slot.2 = slot.2.max(e.budget.delta);
            }
        }
    }
    let (mut eps, mut delta) = (0.0, 0.0);
    let mut seq = ledger.entries().iter().filter(|e| e.group == CompositionGroup::Sequential);
    for slot in order {
        match slot {
            None => {
                let e = seq.next().expect("sequential entries counted above");
                eps += e.budget.epsilon;
                delta += e.budget.delta;
            }
            Some(key) => {
                let g = &groups[key];
                eps += g.1;
                delta += g.2;
            }
        }
    }
    Ok(PrivacyBudget { epsilon: eps, delta })
}
