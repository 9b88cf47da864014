//! Seeded samplers for every particle model: uniform multisets (two
//! constructions), uniform-simplex points (three constructions), i.i.d.
//! categorical particles, the simplex-mixture composition, and exclusion
//! (fermion) samples.

use std::io;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::occupancy::OccupancyVector;
use crate::rng::RngStream;

/// Tolerance on the coordinate sum of a freshly built simplex point.
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector on `n` days (a point of the standard simplex).
#[derive(Clone, Debug, Serialize)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Normalize nonnegative finite weights into a probability vector.
    /// Coordinates are renormalized exactly once; afterwards they sum to
    /// one within [`SIMPLEX_SUM_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("simplex point needs at least one coordinate"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("simplex weights must be finite and nonnegative"));
        }
        let total = kahan_sum(&weights);
        if total <= 0.0 {
            return Err(Error::domain("simplex weights sum to zero"));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Cumulative sums with the last entry pinned to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

fn kahan_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &x in xs {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Uniform k-subset sampler over `{0, .., m-1}` by partial Fisher-Yates.
/// The scratch permutation is restored after every draw, so repeated draws
/// cost O(k) instead of O(m).
pub(crate) struct KSubsetSampler {
    slots: Vec<u64>,
    journal: Vec<usize>,
}

impl KSubsetSampler {
    pub fn new() -> Self {
        Self {
            slots: Vec::new(),
            journal: Vec::new(),
        }
    }

    pub fn sample_into(&mut self, m: usize, k: usize, rng: &mut RngStream, out: &mut Vec<u64>) {
        debug_assert!(k <= m);
        while self.slots.len() < m {
            self.slots.push(self.slots.len() as u64);
        }
        self.journal.clear();
        out.clear();
        for i in 0..k {
            let j = rng.random_range(i..m);
            self.slots.swap(i, j);
            self.journal.push(j);
        }
        out.extend_from_slice(&self.slots[..k]);
        for i in (0..k).rev() {
            self.slots.swap(i, self.journal[i]);
        }
    }
}

/// Sorted day labels of one uniform multiset draw. A uniform k-subset of
/// the n+k-1 star/bar positions is drawn and star `i` (in position order)
/// lands on day `position - i`.
pub(crate) fn boson_days_into(
    n: u64,
    k: u64,
    rng: &mut RngStream,
    subset: &mut KSubsetSampler,
    positions: &mut Vec<u64>,
    days: &mut Vec<u64>,
) {
    debug_assert!(n >= 1);
    let m = (n + k - 1) as usize;
    subset.sample_into(m, k as usize, rng, positions);
    positions.sort_unstable();
    days.clear();
    days.extend(
        positions
            .iter()
            .enumerate()
            .map(|(i, &p)| p - i as u64),
    );
}

/// Sorted day labels of `k` i.i.d. uniform draws on `n` days.
pub(crate) fn boltzmannon_uniform_days_into(
    n: u64,
    k: u64,
    rng: &mut RngStream,
    days: &mut Vec<u64>,
) {
    days.clear();
    days.extend((0..k).map(|_| rng.random_range(0..n)));
    days.sort_unstable();
}

/// Uniform draw over all C(n+k-1,k) occupancy vectors, via a uniform
/// k-subset of star/bar positions.
pub fn sample_boson_multiset(n: u64, k: u64, rng: &mut RngStream) -> OccupancyVector {
    assert!(n >= 1, "need at least one mode");
    let mut subset = KSubsetSampler::new();
    let mut positions = Vec::with_capacity(k as usize);
    let mut days = Vec::with_capacity(k as usize);
    boson_days_into(n, k, rng, &mut subset, &mut positions, &mut days);
    OccupancyVector::from_days(n as usize, &days)
}

/// The continuous stars-and-bars construction: n-1+k i.i.d. uniform points
/// on the unit interval, a uniformly chosen n-1 of them designated bars,
/// and the star count of each gap read off after sorting. Ties (a
/// measure-zero event) trigger a full re-draw.
pub fn sample_stars_bars_continuous(n: u64, k: u64, rng: &mut RngStream) -> OccupancyVector {
    assert!(n >= 1, "need at least one mode");
    let m = (n + k - 1) as usize;
    let n_bars = (n - 1) as usize;
    let mut subset = KSubsetSampler::new();
    let mut bar_positions = Vec::with_capacity(n_bars);
    loop {
        let mut points: Vec<(f64, bool)> = (0..m).map(|_| (rng.random::<f64>(), false)).collect();
        subset.sample_into(m, n_bars, rng, &mut bar_positions);
        for &b in &bar_positions {
            points[b as usize].1 = true;
        }
        points.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            continue;
        }
        let mut counts = vec![0u64; n as usize];
        let mut day = 0usize;
        for &(_, is_bar) in &points {
            if is_bar {
                day += 1;
            } else {
                counts[day] += 1;
            }
        }
        return OccupancyVector::new(counts);
    }
}

/// How to draw a uniform point of the simplex.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimplexMethod {
    /// Successive differences of n-1 sorted uniforms.
    Spacings,
    /// Normalized i.i.d. standard exponentials.
    Exponential,
}

/// Uniform point of the (n-1)-simplex.
pub fn sample_simplex_uniform(n: u64, rng: &mut RngStream, method: SimplexMethod) -> SimplexPoint {
    assert!(n >= 1, "need at least one coordinate");
    let n = n as usize;
    loop {
        let weights = match method {
            SimplexMethod::Spacings => {
                let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
                cuts.sort_unstable_by(f64::total_cmp);
                let mut spacings = Vec::with_capacity(n);
                let mut prev = 0.0;
                for &c in &cuts {
                    spacings.push(c - prev);
                    prev = c;
                }
                spacings.push(1.0 - prev);
                spacings
            }
            SimplexMethod::Exponential => {
                (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect()
            }
        };
        if let Ok(point) = SimplexPoint::new(weights) {
            return point;
        }
    }
}

/// Squared moduli of a normalized complex Gaussian vector; same law as
/// the uniform simplex point. A zero vector (measure zero) is re-drawn.
pub fn sample_haar_simplex(n: u64, rng: &mut RngStream) -> SimplexPoint {
    assert!(n >= 1, "need at least one coordinate");
    loop {
        let moduli: Vec<f64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                re * re + im * im
            })
            .collect();
        if let Ok(point) = SimplexPoint::new(moduli) {
            return point;
        }
    }
}

/// Occupancy table of `k` i.i.d. draws from the categorical distribution
/// `p`, via inverse-CDF with binary search.
pub fn sample_boltzmannon(n: u64, k: u64, p: &SimplexPoint, rng: &mut RngStream) -> OccupancyVector {
    assert_eq!(p.len(), n as usize, "simplex point has wrong dimension");
    let cdf = p.cumulative();
    let mut counts = vec![0u64; n as usize];
    for _ in 0..k {
        let u: f64 = rng.random();
        let day = cdf.partition_point(|&c| c <= u);
        counts[day.min(n as usize - 1)] += 1;
    }
    OccupancyVector::new(counts)
}

/// A uniform simplex point followed by `k` i.i.d. draws from it. The
/// resulting occupancy law is uniform over multisets.
pub fn sample_dirichlet_mixture(n: u64, k: u64, rng: &mut RngStream) -> OccupancyVector {
    let p = sample_simplex_uniform(n, rng, SimplexMethod::Spacings);
    sample_boltzmannon(n, k, &p, rng)
}

/// Uniform k-subset of the n modes; every count is 0 or 1.
pub fn sample_fermion(n: u64, k: u64, rng: &mut RngStream) -> Result<OccupancyVector> {
    if k > n {
        return Err(Error::domain(format!(
            "Pauli exclusion: {k} fermions cannot occupy {n} modes"
        )));
    }
    let mut subset = KSubsetSampler::new();
    let mut modes = Vec::with_capacity(k as usize);
    subset.sample_into(n as usize, k as usize, rng, &mut modes);
    let mut counts = vec![0u64; n as usize];
    for &m in &modes {
        counts[m as usize] = 1;
    }
    Ok(OccupancyVector::new(counts))
}

/// Write occupancy vectors in the dump format: a header line
/// `n=<n>,k=<k>,model=<name>,seed=<seed>` followed by one comma-separated
/// count vector per line.
pub fn write_sample_dump<W: io::Write>(
    w: &mut W,
    n: u64,
    k: u64,
    model: &str,
    seed: u64,
    samples: impl IntoIterator<Item = OccupancyVector>,
) -> io::Result<()> {
    writeln!(w, "n={n},k={k},model={model},seed={seed}")?;
    for occ in samples {
        writeln!(w, "{occ}")?;
    }
    Ok(())
}
