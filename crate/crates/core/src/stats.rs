//! Collision statistics: empirical moments, Poisson-limit diagnostics,
//! and sampler-equivalence hypothesis tests.
//!
//! Monte Carlo experiments fan trials out over fixed-size batches, one RNG
//! substream per batch, and merge integer histograms. Results therefore
//! depend only on `(seed, parameters)`, never on the worker count.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exact::{
    binomial, binomial_moment_at_least, multiset_coefficient, ratio_to_f64, ParticleModel,
};
use crate::occupancy::{occupancy_vectors, CollisionProfile, CountMode, OccupancyVector};
use crate::rng::RngStream;
use crate::sample::{
    boltzmannon_uniform_days_into, boson_days_into, sample_boltzmannon, sample_boson_multiset,
    sample_dirichlet_mixture, sample_stars_bars_continuous, KSubsetSampler, SimplexPoint,
};

/// Significance level used by the stock experiments.
pub const DEFAULT_ALPHA: f64 = 1e-3;

/// Trials per RNG substream in parallel experiments.
const TRIAL_BATCH: u64 = 4096;

/// Minimum expected count per chi-square cell after tail merging.
const MIN_EXPECTED_CELL: f64 = 5.0;

/// A Monte Carlo estimate with its normal-approximation standard error.
#[derive(Clone, Debug, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub sample_count: u64,
}

/// Outcome of a hypothesis test at a stated significance level.
#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    pub alpha: f64,
    pub pass: bool,
}

/// Mean and standard error of C(x, l) over the samples (the l-th binomial
/// moment; multiply by l! for the falling-factorial moment).
pub fn factorial_moment(samples: &[u64], l: u64) -> Result<MomentEstimate> {
    if samples.is_empty() {
        return Err(Error::domain("factorial moment of an empty sample"));
    }
    let values: Vec<f64> = samples.iter().map(|&x| binom_f64(x, l)).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let standard_error = if values.len() == 1 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(MomentEstimate {
        value: mean,
        standard_error,
        sample_count: samples.len() as u64,
    })
}

/// Same estimate computed from a histogram of sample values.
pub fn factorial_moment_from_histogram(hist: &[u64], l: u64) -> Result<MomentEstimate> {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return Err(Error::domain("factorial moment of an empty histogram"));
    }
    let nf = n as f64;
    let mut first = 0.0;
    let mut second = 0.0;
    for (x, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let v = binom_f64(x as u64, l);
        first += count as f64 * v;
        second += count as f64 * v * v;
    }
    let mean = first / nf;
    let standard_error = if n == 1 {
        0.0
    } else {
        let var = ((second - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    };
    Ok(MomentEstimate {
        value: mean,
        standard_error,
        sample_count: n,
    })
}

fn binom_f64(x: u64, l: u64) -> f64 {
    binomial(x, l).to_f64().unwrap_or(f64::INFINITY)
}

/// Poisson probability mass e^{-mean} mean^i / i!.
pub fn poisson_pmf(mean: f64, i: u64) -> f64 {
    assert!(mean >= 0.0 && mean.is_finite());
    if mean == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    (-mean + i as f64 * mean.ln() - ln_gamma(i as f64 + 1.0)).exp()
}

/// Total variation distance between two finite distributions on the same
/// indexed support.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::domain(format!(
            "mismatched supports: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Total variation between an empirical histogram and a distribution on
/// the nonnegative integers. Mass of the reference beyond the histogram's
/// range counts in full.
pub fn total_variation_hist_vs_pmf(hist: &[u64], pmf: impl Fn(u64) -> f64) -> f64 {
    let total: u64 = hist.iter().sum();
    let nf = total as f64;
    let mut accum = 0.0;
    let mut ref_mass = 0.0;
    for (i, &count) in hist.iter().enumerate() {
        let p = pmf(i as u64);
        ref_mass += p;
        accum += (count as f64 / nf - p).abs();
    }
    accum += (1.0 - ref_mass).max(0.0);
    0.5 * accum
}

/// Pearson goodness-of-fit test of observed counts against expected cell
/// probabilities. The upper tail is merged until every cell's expected
/// count reaches 5; degrees of freedom are cells minus one.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], alpha: f64) -> Result<TestResult> {
    if observed.len() != expected.len() {
        return Err(Error::domain("observed and expected lengths differ"));
    }
    if expected.iter().any(|q| !q.is_finite() || *q < 0.0) {
        return Err(Error::domain("expected probabilities must be finite and nonnegative"));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::Degenerate("no observations".into()));
    }
    let nf = n as f64;
    let q_total: f64 = expected.iter().sum();
    if q_total <= 0.0 {
        return Err(Error::domain("expected probabilities sum to zero"));
    }
    let q: Vec<f64> = expected.iter().map(|&v| v / q_total).collect();

    // First cell from the top whose expected count dips below the floor;
    // everything from there on is merged, widening downward if the merged
    // tail itself is still too thin.
    let mut cut = q.len();
    for (i, &qi) in q.iter().enumerate() {
        if nf * qi < MIN_EXPECTED_CELL {
            cut = i;
            break;
        }
    }
    while cut > 0 && cut < q.len() && nf * q[cut..].iter().sum::<f64>() < MIN_EXPECTED_CELL {
        cut -= 1;
    }
    let has_tail = cut < q.len();
    let cells = cut + usize::from(has_tail);
    if cells < 2 {
        return Err(Error::Degenerate(
            "all probability mass in one cell after tail merging".into(),
        ));
    }

    let mut statistic = 0.0;
    for i in 0..cut {
        let e = nf * q[i];
        let o = observed[i] as f64;
        statistic += (o - e).powi(2) / e;
    }
    if has_tail {
        let e = nf * q[cut..].iter().sum::<f64>();
        let o = observed[cut..].iter().sum::<u64>() as f64;
        statistic += (o - e).powi(2) / e;
    }
    let dof = cells - 1;
    let p_value = chi_square_upper_tail(statistic, dof);
    Ok(TestResult {
        statistic,
        p_value,
        dof,
        alpha,
        pass: p_value > alpha,
    })
}

/// Two-sample chi-square homogeneity test on aligned histograms. Cells
/// empty in both samples are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], alpha: f64) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::domain("histograms have different supports"));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Degenerate("a sample is empty".into()));
    }
    let (na, nb, total) = (na as f64, nb as f64, (na + nb) as f64);
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&ai, &bi) in a.iter().zip(b) {
        let pooled = (ai + bi) as f64;
        if pooled == 0.0 {
            continue;
        }
        cells += 1;
        let ea = na * pooled / total;
        let eb = nb * pooled / total;
        statistic += (ai as f64 - ea).powi(2) / ea + (bi as f64 - eb).powi(2) / eb;
    }
    if cells < 2 {
        return Err(Error::Degenerate(
            "all observations fall in one cell".into(),
        ));
    }
    let dof = cells - 1;
    let p_value = chi_square_upper_tail(statistic, dof);
    Ok(TestResult {
        statistic,
        p_value,
        dof,
        alpha,
        pass: p_value > alpha,
    })
}

fn chi_square_upper_tail(statistic: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0)
}

/// Two-sided one-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(Error::domain("KS test of an empty sample"));
    }
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    // Stephens' finite-sample adjustment of the asymptotic distribution.
    let t = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    let p_value = kolmogorov_upper_tail(t);
    Ok(TestResult {
        statistic: d,
        p_value,
        dof: samples.len(),
        alpha,
        pass: p_value > alpha,
    })
}

fn kolmogorov_upper_tail(t: f64) -> f64 {
    if t < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100u32 {
        let term = (-2.0 * (j as f64 * t).powi(2)).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn bump(hist: &mut Vec<u64>, value: u64) {
    let idx = value as usize;
    if hist.len() <= idx {
        hist.resize(idx + 1, 0);
    }
    hist[idx] += 1;
}

fn merge_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, v) in b.into_iter().enumerate() {
        a[i] += v;
    }
    a
}

fn batch_sizes(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(TRIAL_BATCH))
        .map(|b| (b, TRIAL_BATCH.min(total - b * TRIAL_BATCH)))
        .collect()
}

/// Parameters of a Poisson-limit run. `k` is derived as
/// round(c * n^((j-1)/j)).
#[derive(Clone, Debug, Serialize)]
pub struct PoissonLimitConfig {
    pub n: u64,
    pub j: u64,
    pub c: f64,
    pub model: ParticleModel,
    pub samples: u64,
    pub seed: u64,
}

/// One empirical binomial moment of the at-least-j day count next to its
/// exact finite-n value and the limiting Poisson value.
#[derive(Clone, Debug, Serialize)]
pub struct MomentComparison {
    pub order: u64,
    pub empirical: MomentEstimate,
    pub exact: f64,
    pub limit: f64,
    pub within_four_stderr: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoissonLimitReport {
    pub n: u64,
    pub j: u64,
    pub c: f64,
    pub model: ParticleModel,
    pub samples: u64,
    pub seed: u64,
    pub k: u64,
    /// Mean of the limiting Poisson law for the exactly-j day count.
    pub poisson_mean: f64,
    /// Histogram of the exactly-j day count over all trials.
    pub histogram: Vec<u64>,
    pub tv_to_poisson: f64,
    /// Binomial moments of the at-least-j day count, orders 1..=3.
    pub moments: Vec<MomentComparison>,
    /// Empirical mean number of days with at least j+1 occupants.
    pub mean_at_least_j_plus_1: f64,
}

/// Run `samples` seeded trials of the collision-count experiment and
/// compare the exactly-j day count with its limiting Poisson law.
pub fn poisson_limit_experiment(cfg: &PoissonLimitConfig) -> Result<PoissonLimitReport> {
    if cfg.n == 0 {
        return Err(Error::domain("need at least one mode"));
    }
    if cfg.j < 2 {
        return Err(Error::domain("collision multiplicity j must be at least 2"));
    }
    if !(cfg.c >= 0.0) || !cfg.c.is_finite() {
        return Err(Error::domain("c must be a finite nonnegative number"));
    }
    if cfg.samples == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let exponent = (cfg.j - 1) as f64 / cfg.j as f64;
    let k = (cfg.c * (cfg.n as f64).powf(exponent)).round() as u64;

    let (hist_x, hist_z, hist_y) = batch_sizes(cfg.samples)
        .into_par_iter()
        .map(|(batch, len)| {
            let mut rng = RngStream::substream(cfg.seed, batch);
            let mut subset = KSubsetSampler::new();
            let mut positions = Vec::with_capacity(k as usize);
            let mut days = Vec::with_capacity(k as usize);
            let mut hx = Vec::new();
            let mut hz = Vec::new();
            let mut hy = Vec::new();
            for _ in 0..len {
                match cfg.model {
                    ParticleModel::Boson => {
                        boson_days_into(cfg.n, k, &mut rng, &mut subset, &mut positions, &mut days)
                    }
                    ParticleModel::Boltzmannon => {
                        boltzmannon_uniform_days_into(cfg.n, k, &mut rng, &mut days)
                    }
                }
                let profile = CollisionProfile::from_sorted_days(&days);
                bump(&mut hx, profile.count_j_fold(cfg.j, CountMode::Exactly));
                bump(&mut hz, profile.count_j_fold(cfg.j, CountMode::AtLeast));
                bump(&mut hy, profile.count_j_fold(cfg.j + 1, CountMode::AtLeast));
            }
            (hx, hz, hy)
        })
        .reduce(
            || (Vec::new(), Vec::new(), Vec::new()),
            |a, b| (merge_hist(a.0, b.0), merge_hist(a.1, b.1), merge_hist(a.2, b.2)),
        );

    let poisson_mean = match cfg.model {
        ParticleModel::Boson => cfg.c.powi(cfg.j as i32),
        ParticleModel::Boltzmannon => {
            cfg.c.powi(cfg.j as i32) / (1..=cfg.j).map(|v| v as f64).product::<f64>()
        }
    };
    let tv_to_poisson = total_variation_hist_vs_pmf(&hist_x, |i| poisson_pmf(poisson_mean, i));

    let mut moments = Vec::new();
    for order in 1..=3u64 {
        let empirical = factorial_moment_from_histogram(&hist_z, order)?;
        let exact = match cfg.model {
            ParticleModel::Boson => {
                ratio_to_f64(&binomial_moment_at_least(cfg.n, k, cfg.j, order)?)
            }
            ParticleModel::Boltzmannon => {
                boltzmannon_binomial_moment_at_least(cfg.n, k, cfg.j, order)
            }
        };
        let limit = poisson_mean.powi(order as i32)
            / (1..=order).map(|v| v as f64).product::<f64>();
        let within_four_stderr =
            (empirical.value - exact).abs() <= 4.0 * empirical.standard_error.max(f64::EPSILON);
        moments.push(MomentComparison {
            order,
            empirical,
            exact,
            limit,
            within_four_stderr,
        });
    }

    let total: u64 = hist_y.iter().sum();
    let mean_at_least_j_plus_1 = hist_y
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum::<f64>()
        / total as f64;

    Ok(PoissonLimitReport {
        n: cfg.n,
        j: cfg.j,
        c: cfg.c,
        model: cfg.model,
        samples: cfg.samples,
        seed: cfg.seed,
        k,
        poisson_mean,
        histogram: hist_x,
        tv_to_poisson,
        moments,
        mean_at_least_j_plus_1,
    })
}

/// Exact l-th binomial moment of the number of days with at least j of
/// k i.i.d. uniform particles: C(n,l) * P(l fixed days each see >= j).
/// The per-day joint probability is an inclusion-style multinomial sum,
/// evaluated in doubles; used as the oracle for boltzmannon runs.
fn boltzmannon_binomial_moment_at_least(n: u64, k: u64, j: u64, l: u64) -> f64 {
    // P(each of l fixed days has >= j) computed by dynamic programming over
    // days: state = particles already committed to earlier fixed days.
    // f(d, used) = sum over m >= j of C(k-used, m) (1/n)^m ... cheaper as a
    // forward DP on counts with log-space binomials.
    if l == 0 {
        return 1.0;
    }
    let jl = j * l;
    if jl > k {
        return 0.0;
    }
    let ln_n = (n as f64).ln();
    // dp[used] = probability weight of committing `used` particles to the
    // fixed days processed so far, each day taking at least j.
    let mut dp = vec![0.0f64; k as usize + 1];
    dp[0] = 1.0;
    for _ in 0..l {
        let mut next = vec![0.0f64; k as usize + 1];
        for used in 0..=k {
            if dp[used as usize] == 0.0 {
                continue;
            }
            let remaining = k - used;
            for m in j..=remaining {
                // C(remaining, m) (1/n)^m contributes; the (1-1/n) factors
                // for the untouched particles are accounted at the end.
                let ln_term = ln_binom(remaining, m) - m as f64 * ln_n;
                next[(used + m) as usize] += dp[used as usize] * ln_term.exp();
            }
        }
        dp = next;
    }
    // Particles not on any fixed day live on the other n-l days.
    let mut p = 0.0;
    for used in jl..=k {
        let free = (k - used) as f64;
        let ln_rest = free * ((n - l) as f64 / n as f64).ln();
        p += dp[used as usize] * ln_rest.exp();
    }
    binom_f64(n, l) * p
}

fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Samplers that can face each other in an equivalence run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Discrete stars-and-bars (uniform position subset).
    Boson,
    /// Continuous stars-and-bars construction.
    StarsBars,
    /// Uniform simplex point, then i.i.d. draws from it.
    Dirichlet,
    /// i.i.d. uniform days (fixed uniform distribution, not a mixture).
    BoltzmannonUniform,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Boson => "boson",
            SamplerKind::StarsBars => "stars-bars",
            SamplerKind::Dirichlet => "dirichlet",
            SamplerKind::BoltzmannonUniform => "boltzmannon-uniform",
        }
    }

    pub fn draw(self, n: u64, k: u64, rng: &mut RngStream) -> OccupancyVector {
        match self {
            SamplerKind::Boson => sample_boson_multiset(n, k, rng),
            SamplerKind::StarsBars => sample_stars_bars_continuous(n, k, rng),
            SamplerKind::Dirichlet => sample_dirichlet_mixture(n, k, rng),
            SamplerKind::BoltzmannonUniform => {
                sample_boltzmannon(n, k, &SimplexPoint::uniform(n as usize), rng)
            }
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" => Ok(SamplerKind::Boson),
            "stars-bars" => Ok(SamplerKind::StarsBars),
            "dirichlet" => Ok(SamplerKind::Dirichlet),
            "boltzmannon-uniform" => Ok(SamplerKind::BoltzmannonUniform),
            other => Err(Error::domain(format!(
                "unknown sampler `{other}` (expected boson, stars-bars, dirichlet, or boltzmannon-uniform)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceConfig {
    pub sampler_a: SamplerKind,
    pub sampler_b: SamplerKind,
    pub n: u64,
    pub k: u64,
    pub samples: u64,
    pub seed: u64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub sampler_a: SamplerKind,
    pub sampler_b: SamplerKind,
    pub n: u64,
    pub k: u64,
    pub samples: u64,
    pub seed: u64,
    /// Number of occupancy tables, C(n+k-1,k).
    pub support: u64,
    /// Colex-ordered table labels, aligned with the count vectors.
    pub tables: Vec<String>,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    pub tv_a_to_uniform: f64,
    pub tv_b_to_uniform: f64,
    pub chi_square: TestResult,
}

/// Compare two samplers' occupancy-table distributions: total variation
/// of each against the exact uniform law, and a two-sample chi-square.
/// Each sampler runs on its own substreams, so `a == b` compares
/// independent runs of the same law.
pub fn equivalence_experiment(cfg: &EquivalenceConfig) -> Result<EquivalenceReport> {
    if cfg.n == 0 {
        return Err(Error::domain("need at least one mode"));
    }
    if cfg.samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let support_big = multiset_coefficient(cfg.n, cfg.k)?;
    let support = support_big.to_u64().filter(|&s| s <= 1_000_000).ok_or_else(|| {
        Error::size_cap(
            "equivalence support (too many occupancy tables; \
             compare collision-profile projections instead)",
            &support_big,
            1_000_000,
        )
    })?;
    if (cfg.samples as f64) / (support as f64) < MIN_EXPECTED_CELL {
        return Err(Error::size_cap(
            "equivalence support (expected cell counts fall below 5; raise --samples \
             or compare collision-profile projections instead)",
            support,
            (cfg.samples / MIN_EXPECTED_CELL as u64).max(1),
        ));
    }

    let tables: Vec<OccupancyVector> = occupancy_vectors(cfg.n, cfg.k).collect();
    let index: HashMap<&[u64], usize> = tables
        .iter()
        .enumerate()
        .map(|(i, t)| (t.counts(), i))
        .collect();

    let run_sampler = |kind: SamplerKind, stream_offset: u64| -> Vec<u64> {
        batch_sizes(cfg.samples)
            .into_par_iter()
            .map(|(batch, len)| {
                let mut rng = RngStream::substream(cfg.seed, 2 * batch + stream_offset);
                let mut counts = vec![0u64; tables.len()];
                for _ in 0..len {
                    let occ = kind.draw(cfg.n, cfg.k, &mut rng);
                    counts[index[occ.counts()]] += 1;
                }
                counts
            })
            .reduce(|| vec![0u64; tables.len()], merge_hist)
    };

    let counts_a = run_sampler(cfg.sampler_a, 0);
    let counts_b = run_sampler(cfg.sampler_b, 1);

    let nf = cfg.samples as f64;
    let uniform = 1.0 / support as f64;
    let tv_to_uniform = |counts: &[u64]| -> f64 {
        0.5 * counts
            .iter()
            .map(|&c| (c as f64 / nf - uniform).abs())
            .sum::<f64>()
    };
    let tv_a_to_uniform = tv_to_uniform(&counts_a);
    let tv_b_to_uniform = tv_to_uniform(&counts_b);
    let chi_square = chi_square_two_sample(&counts_a, &counts_b, cfg.alpha)?;

    Ok(EquivalenceReport {
        sampler_a: cfg.sampler_a,
        sampler_b: cfg.sampler_b,
        n: cfg.n,
        k: cfg.k,
        samples: cfg.samples,
        seed: cfg.seed,
        support,
        tables: tables.iter().map(|t| t.to_string()).collect(),
        counts_a,
        counts_b,
        tv_a_to_uniform,
        tv_b_to_uniform,
        chi_square,
    })
}
