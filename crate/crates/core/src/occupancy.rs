//! Occupancy tables and collision profiles.
//!
//! An [`OccupancyVector`] records how many particles sit on each of `n`
//! days; it is the unordered description of a configuration (one multiset
//! of size `k` drawn from `n` days, or equivalently one basis label of the
//! symmetric power). A [`CollisionProfile`] forgets *which* days are
//! occupied and keeps, for each multiplicity `j >= 1`, the number of days
//! holding exactly `j` particles.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Per-day particle counts: `counts[d]` particles on day `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OccupancyVector {
    counts: Vec<u64>,
}

impl OccupancyVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// Build from per-particle day labels (values in `0..n`).
    pub fn from_days(n: usize, days: &[u64]) -> Self {
        let mut counts = vec![0u64; n];
        for &d in days {
            counts[d as usize] += 1;
        }
        Self { counts }
    }

    /// Number of days (modes).
    pub fn num_days(&self) -> usize {
        self.counts.len()
    }

    /// Total number of particles.
    pub fn num_particles(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }

    /// True when no day holds two or more particles.
    pub fn all_distinct(&self) -> bool {
        self.counts.iter().all(|&c| c <= 1)
    }

    pub fn collision_profile(&self) -> CollisionProfile {
        CollisionProfile::of(self)
    }
}

impl fmt::Display for OccupancyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Counting mode for `j`-fold birthdays.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CountMode {
    Exactly,
    AtLeast,
}

/// For each multiplicity `j >= 1`, the number of days occupied by exactly
/// `j` particles. Days with zero particles are not recorded, so
/// `sum_j j * m[j] = k` and `sum_j m[j] <= n`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CollisionProfile {
    days_with: BTreeMap<u64, u64>,
}

impl CollisionProfile {
    pub fn of(occ: &OccupancyVector) -> Self {
        let mut days_with = BTreeMap::new();
        for &c in occ.counts() {
            if c > 0 {
                *days_with.entry(c).or_insert(0) += 1;
            }
        }
        Self { days_with }
    }

    /// Build from sorted per-particle day labels by counting runs of equal
    /// labels. Avoids materializing a length-`n` table when `n` is large.
    pub fn from_sorted_days(days: &[u64]) -> Self {
        debug_assert!(days.windows(2).all(|w| w[0] <= w[1]));
        let mut days_with = BTreeMap::new();
        let mut i = 0;
        while i < days.len() {
            let mut run = 1;
            while i + run < days.len() && days[i + run] == days[i] {
                run += 1;
            }
            *days_with.entry(run as u64).or_insert(0) += 1;
            i += run;
        }
        Self { days_with }
    }

    /// Number of days with the given occupancy, exact or at-least.
    pub fn count_j_fold(&self, j: u64, mode: CountMode) -> u64 {
        match mode {
            CountMode::Exactly => self.days_with.get(&j).copied().unwrap_or(0),
            CountMode::AtLeast => self
                .days_with
                .range(j..)
                .map(|(_, &days)| days)
                .sum(),
        }
    }

    /// Total particles reconstructed from the profile.
    pub fn total_particles(&self) -> u64 {
        self.days_with.iter().map(|(&j, &m)| j * m).sum()
    }

    /// Number of occupied days.
    pub fn occupied_days(&self) -> u64 {
        self.days_with.values().sum()
    }

    /// (multiplicity, number of days) pairs in increasing multiplicity order.
    pub fn multiplicities(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.days_with.iter().map(|(&j, &m)| (j, m))
    }

    pub fn is_empty(&self) -> bool {
        self.days_with.is_empty()
    }
}

impl fmt::Display for CollisionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .days_with
            .iter()
            .map(|(j, m)| format!("{j}x{m}"))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Iterate every occupancy vector of `k` particles on `n` days in
/// colexicographic order (compare at the last differing day; smaller count
/// first). The order is deterministic, which keeps enumeration-backed
/// results byte-stable.
pub fn occupancy_vectors(n: u64, k: u64) -> OccupancyIter {
    OccupancyIter::new(n, k)
}

pub struct OccupancyIter {
    counts: Vec<u64>,
    started: bool,
    exhausted: bool,
}

impl OccupancyIter {
    fn new(n: u64, k: u64) -> Self {
        let exhausted = n == 0 && k > 0;
        let mut counts = vec![0u64; n as usize];
        if n > 0 {
            counts[0] = k;
        }
        Self {
            counts,
            started: false,
            exhausted,
        }
    }

    /// Successor in colex order: find the first position `i >= 1` whose
    /// prefix still carries mass, move one unit onto it, and dump the rest
    /// of the prefix back onto position 0.
    fn advance(&mut self) -> bool {
        let n = self.counts.len();
        let mut prefix_sum = 0u64;
        for i in 1..n {
            prefix_sum += self.counts[i - 1];
            if prefix_sum > 0 {
                self.counts[i] += 1;
                for c in &mut self.counts[..i] {
                    *c = 0;
                }
                self.counts[0] = prefix_sum - 1;
                return true;
            }
        }
        false
    }
}

impl Iterator for OccupancyIter {
    type Item = OccupancyVector;

    fn next(&mut self) -> Option<OccupancyVector> {
        if self.exhausted {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(OccupancyVector::new(self.counts.clone()));
        }
        if self.advance() {
            Some(OccupancyVector::new(self.counts.clone()))
        } else {
            self.exhausted = true;
            None
        }
    }
}
