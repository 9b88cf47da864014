//! Exact arbitrary-precision combinatorics: multiset coefficients, exact
//! collision probabilities, binomial moments of collision counts, and the
//! exact majority-probability threshold.
//!
//! Every probability here is a reduced [`BigRational`] with positive
//! denominator; no floating point enters any decision. Doubles appear only
//! in [`ratio_to_f64`], a display/diagnostic conversion.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::occupancy::{occupancy_vectors, CollisionProfile};

/// Default cap on the number of multisets an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Which statistics govern a particle family.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleModel {
    /// Unordered configurations: every multiset of days equally likely.
    Boson,
    /// Distinguishable particles with i.i.d. uniform days.
    Boltzmannon,
}

impl ParticleModel {
    pub fn name(self) -> &'static str {
        match self {
            ParticleModel::Boson => "boson",
            ParticleModel::Boltzmannon => "boltzmannon",
        }
    }
}

impl std::str::FromStr for ParticleModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" => Ok(ParticleModel::Boson),
            "boltzmannon" => Ok(ParticleModel::Boltzmannon),
            other => Err(Error::domain(format!(
                "unknown particle model `{other}` (expected boson or boltzmannon)"
            ))),
        }
    }
}

/// Binomial coefficient C(n, k) by the multiplicative formula. Each
/// intermediate division is exact, so nothing larger than the result is
/// ever held.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of size-`k` multisets on `n` symbols: C(n+k-1, k).
pub fn multiset_coefficient(n: u64, k: u64) -> Result<BigUint> {
    if n == 0 && k > 0 {
        return Err(Error::domain("no modes to occupy (n = 0 with k > 0)"));
    }
    if k == 0 {
        return Ok(BigUint::one());
    }
    Ok(binomial(n + k - 1, k))
}

fn require_modes(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::domain("need at least one mode (n >= 1)"))
    } else {
        Ok(())
    }
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Probability that `k` particles in the uniform unordered model occupy
/// `k` distinct days: C(n,k) / C(n+k-1,k). Zero when `k > n`.
pub fn prob_all_distinct_bosons(n: u64, k: u64) -> Result<BigRational> {
    require_modes(n)?;
    Ok(ratio(binomial(n, k), multiset_coefficient(n, k)?))
}

/// Telescoping-product route to the same probability:
/// prod_{a<k} (n-a)/(n+a). Kept independent of the binomial-ratio route so
/// the two can be checked against each other.
pub fn prob_all_distinct_bosons_product(n: u64, k: u64) -> Result<BigRational> {
    require_modes(n)?;
    if k > n {
        return Ok(BigRational::zero());
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for a in 0..k {
        num *= n - a;
        den *= n + a;
    }
    Ok(ratio(num, den))
}

/// Probability that `k` i.i.d. uniform particles occupy distinct days:
/// n(n-1)...(n-k+1) / n^k. Zero when `k > n`.
pub fn prob_all_distinct_boltzmannons(n: u64, k: u64) -> Result<BigRational> {
    require_modes(n)?;
    if k > n {
        return Ok(BigRational::zero());
    }
    let mut num = BigUint::one();
    for a in 0..k {
        num *= n - a;
    }
    let den = BigUint::from(n).pow(u32::try_from(k).map_err(|_| {
        Error::domain("k too large for an exact power computation")
    })?);
    Ok(ratio(num, den))
}

fn checked_jl(j: u64, l: u64) -> Result<Option<u64>> {
    if j == 0 {
        return Err(Error::domain("multiplicity j must be at least 1"));
    }
    Ok(j.checked_mul(l))
}

/// Probability, in the uniform unordered model, that each of `l` fixed
/// days holds at least `j` particles: C(n+k-jl-1, k-jl) / C(n+k-1, k),
/// and zero when `k < jl`.
pub fn prob_first_l_days_at_least_j(n: u64, k: u64, j: u64, l: u64) -> Result<BigRational> {
    require_modes(n)?;
    if l > n {
        return Err(Error::domain(format!(
            "cannot condition on l = {l} days with only n = {n}"
        )));
    }
    let jl = match checked_jl(j, l)? {
        Some(jl) if jl <= k => jl,
        _ => return Ok(BigRational::zero()),
    };
    Ok(ratio(
        multiset_coefficient(n, k - jl)?,
        multiset_coefficient(n, k)?,
    ))
}

/// Product route to the same probability: prod_{a<jl} (k-a)/(n+k-1-a).
pub fn prob_first_l_days_at_least_j_product(
    n: u64,
    k: u64,
    j: u64,
    l: u64,
) -> Result<BigRational> {
    require_modes(n)?;
    if l > n {
        return Err(Error::domain(format!(
            "cannot condition on l = {l} days with only n = {n}"
        )));
    }
    let jl = match checked_jl(j, l)? {
        Some(jl) if jl <= k => jl,
        _ => return Ok(BigRational::zero()),
    };
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for a in 0..jl {
        num *= k - a;
        den *= n + k - 1 - a;
    }
    Ok(ratio(num, den))
}

/// l-th binomial moment of the number of days with at least `j`
/// occupants: C(n,l) times the probability that `l` fixed days each hold
/// at least `j`. Equals the exact expectation of C(Z, l) where Z counts
/// days with occupancy >= j.
pub fn binomial_moment_at_least(n: u64, k: u64, j: u64, l: u64) -> Result<BigRational> {
    let p = prob_first_l_days_at_least_j(n, k, j, l)?;
    Ok(BigRational::from(BigInt::from(binomial(n, l))) * p)
}

/// Smallest `k` such that a repeated day has probability at least 1/2,
/// decided with exact rational comparisons only.
///
/// The all-distinct probability is nonincreasing in `k`, so an exponential
/// bracket followed by binary search is valid.
pub fn threshold_k(n: u64, model: ParticleModel) -> Result<u64> {
    require_modes(n)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let all_distinct = |k: u64| -> Result<BigRational> {
        match model {
            ParticleModel::Boson => prob_all_distinct_bosons(n, k),
            ParticleModel::Boltzmannon => prob_all_distinct_boltzmannons(n, k),
        }
    };
    // k = 1 never collides; bracket upward from 2.
    let mut hi = 2u64;
    while all_distinct(hi)? > half {
        hi *= 2;
    }
    let mut lo = hi / 2; // all_distinct(lo) > 1/2 (or lo = 1)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if all_distinct(mid)? <= half {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exact distribution of the collision profile under the uniform
/// unordered model, by brute-force enumeration of all C(n+k-1,k)
/// occupancy vectors in colexicographic order. Each multiset carries
/// weight 1/C(n+k-1,k); the returned probabilities sum to exactly one.
pub fn exact_profile_distribution(
    n: u64,
    k: u64,
) -> Result<BTreeMap<CollisionProfile, BigRational>> {
    exact_profile_distribution_with_cap(n, k, DEFAULT_ENUMERATION_CAP)
}

/// As [`exact_profile_distribution`], with an explicit enumeration cap.
pub fn exact_profile_distribution_with_cap(
    n: u64,
    k: u64,
    cap: u64,
) -> Result<BTreeMap<CollisionProfile, BigRational>> {
    let total = multiset_coefficient(n, k)?;
    if total > BigUint::from(cap) {
        return Err(Error::size_cap("profile enumeration", &total, cap));
    }
    let mut counts: BTreeMap<CollisionProfile, u64> = BTreeMap::new();
    for occ in occupancy_vectors(n, k) {
        *counts.entry(occ.collision_profile()).or_insert(0) += 1;
    }
    let total = BigUint::from(counts.values().sum::<u64>());
    Ok(counts
        .into_iter()
        .map(|(profile, c)| (profile, ratio(BigUint::from(c), total.clone())))
        .collect())
}

/// Render a rational as `p/q` with an explicit denominator.
pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Double-precision approximation of a rational whose numerator and
/// denominator may be far outside the f64 range. Both parts are shifted
/// down to 64 significant bits before dividing.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    fn to_f64_exp(x: &BigUint) -> (f64, i64) {
        let bits = x.bits();
        if bits <= 64 {
            (x.to_f64().unwrap_or(0.0), 0)
        } else {
            let shift = bits - 64;
            ((x >> shift).to_f64().unwrap_or(0.0), shift as i64)
        }
    }
    if r.is_zero() {
        return 0.0;
    }
    let (num, num_exp) = to_f64_exp(r.numer().magnitude());
    let (den, den_exp) = to_f64_exp(r.denom().magnitude());
    let value = (num / den) * 2f64.powi((num_exp - den_exp) as i32);
    if r.is_negative() {
        -value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy::{CountMode, OccupancyVector};

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Independent oracle: Pascal-triangle table of binomial coefficients.
    fn pascal_binomial(n: usize, k: usize) -> BigUint {
        let mut row = vec![BigUint::one()];
        for _ in 0..n {
            let mut next = vec![BigUint::one()];
            for i in 1..row.len() {
                next.push(&row[i - 1] + &row[i]);
            }
            next.push(BigUint::one());
            row = next;
        }
        row.get(k).cloned().unwrap_or_else(BigUint::zero)
    }

    #[test]
    fn multiset_coefficient_examples() {
        // n=6, k=4 is the stars-and-bars showcase: C(9,4) via Pascal.
        assert_eq!(multiset_coefficient(6, 4).unwrap(), pascal_binomial(9, 4));
        assert_eq!(multiset_coefficient(6, 4).unwrap(), BigUint::from(126u32));
        assert_eq!(multiset_coefficient(17, 0).unwrap(), BigUint::one());
        assert_eq!(multiset_coefficient(1, 7).unwrap(), BigUint::one());
        assert!(matches!(
            multiset_coefficient(0, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pascal_identity_small_grid() {
        for n in 1..=25u64 {
            for k in 1..=25u64 {
                let lhs = multiset_coefficient(n, k).unwrap();
                let rhs = multiset_coefficient(n - 1, k).unwrap_or_else(|_| BigUint::zero())
                    + multiset_coefficient(n, k - 1).unwrap();
                assert_eq!(lhs, rhs, "Pascal identity failed at n={n}, k={k}");
            }
        }
    }

    #[test]
    fn all_distinct_bosons_examples() {
        // Oracle: 6 multisets of size 2 on 3 days, 3 of them distinct pairs.
        let mut distinct = 0usize;
        let mut total = 0usize;
        for occ in occupancy_vectors(3, 2) {
            total += 1;
            if occ.all_distinct() {
                distinct += 1;
            }
        }
        assert_eq!((distinct, total), (3, 6));
        assert_eq!(prob_all_distinct_bosons(3, 2).unwrap(), rat(1, 2));
        assert_eq!(prob_all_distinct_bosons(42, 1).unwrap(), rat(1, 1));
        assert_eq!(prob_all_distinct_bosons(5, 6).unwrap(), BigRational::zero());
    }

    #[test]
    fn all_distinct_product_form_matches_ratio_form() {
        for n in 1..=12u64 {
            for k in 0..=14u64 {
                assert_eq!(
                    prob_all_distinct_bosons(n, k).unwrap(),
                    prob_all_distinct_bosons_product(n, k).unwrap(),
                    "mismatch at n={n}, k={k}"
                );
            }
        }
    }

    #[test]
    fn all_distinct_boltzmannon_examples() {
        assert_eq!(prob_all_distinct_boltzmannons(2, 2).unwrap(), rat(1, 2));
        assert_eq!(prob_all_distinct_boltzmannons(9, 1).unwrap(), rat(1, 1));
        let p23 = prob_all_distinct_boltzmannons(365, 23).unwrap();
        let p22 = prob_all_distinct_boltzmannons(365, 22).unwrap();
        assert!(p23 < rat(1, 2));
        assert!(p22 > rat(1, 2));
    }

    #[test]
    fn at_least_j_examples() {
        assert_eq!(
            prob_first_l_days_at_least_j(9, 4, 3, 0).unwrap(),
            rat(1, 1)
        );
        // Exactly one of the 6 multisets puts both particles on day 1.
        assert_eq!(
            prob_first_l_days_at_least_j(3, 2, 2, 1).unwrap(),
            rat(1, 6)
        );
        assert_eq!(
            prob_first_l_days_at_least_j(3, 2, 3, 1).unwrap(),
            BigRational::zero()
        );
        assert!(prob_first_l_days_at_least_j(3, 2, 0, 1).is_err());
        assert!(prob_first_l_days_at_least_j(3, 2, 2, 4).is_err());
    }

    #[test]
    fn at_least_j_product_form_matches_ratio_form() {
        for n in 1..=10u64 {
            for k in 0..=12u64 {
                for j in 1..=4u64 {
                    for l in 0..=n.min(5) {
                        assert_eq!(
                            prob_first_l_days_at_least_j(n, k, j, l).unwrap(),
                            prob_first_l_days_at_least_j_product(n, k, j, l).unwrap(),
                            "mismatch at n={n}, k={k}, j={j}, l={l}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn binomial_moment_examples() {
        assert_eq!(binomial_moment_at_least(3, 2, 2, 1).unwrap(), rat(1, 2));
        assert_eq!(binomial_moment_at_least(7, 3, 2, 0).unwrap(), rat(1, 1));
        // For k = sqrt(n) the expected number of collision days is near 1.
        let moment = ratio_to_f64(&binomial_moment_at_least(10_000, 100, 2, 1).unwrap());
        assert!((moment - 1.0).abs() < 0.05, "moment = {moment}");
    }

    #[test]
    fn binomial_moments_match_enumeration() {
        for (n, k) in [(3u64, 2u64), (4, 3), (5, 4), (2, 5)] {
            let dist = exact_profile_distribution(n, k).unwrap();
            for j in 1..=3u64 {
                let expectation: BigRational = dist
                    .iter()
                    .map(|(profile, p)| {
                        BigRational::from(BigInt::from(
                            profile.count_j_fold(j, CountMode::AtLeast),
                        )) * p
                    })
                    .sum();
                assert_eq!(
                    expectation,
                    binomial_moment_at_least(n, k, j, 1).unwrap(),
                    "mismatch at n={n}, k={k}, j={j}"
                );
            }
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_k(1, ParticleModel::Boson).unwrap(), 2);
        assert_eq!(threshold_k(365, ParticleModel::Boltzmannon).unwrap(), 23);
        let kstar = threshold_k(365, ParticleModel::Boson).unwrap();
        let target = (365.0f64 * 2.0f64.ln()).sqrt();
        assert!((kstar as f64 / target - 1.0).abs() < 0.25);
    }

    #[test]
    fn profile_distribution_examples() {
        let dist = exact_profile_distribution(3, 2).unwrap();
        let two_singles = OccupancyVector::new(vec![1, 1, 0]).collision_profile();
        let one_double = OccupancyVector::new(vec![2, 0, 0]).collision_profile();
        assert_eq!(dist[&two_singles], rat(1, 2));
        assert_eq!(dist[&one_double], rat(1, 2));

        let dist = exact_profile_distribution(1, 3).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(
            dist[&OccupancyVector::new(vec![3]).collision_profile()],
            rat(1, 1)
        );

        let dist = exact_profile_distribution(2, 2).unwrap();
        let singles = OccupancyVector::new(vec![1, 1]).collision_profile();
        let double = OccupancyVector::new(vec![2, 0]).collision_profile();
        assert_eq!(dist[&singles], rat(1, 3));
        assert_eq!(dist[&double], rat(2, 3));
    }

    #[test]
    fn profile_distribution_sums_to_one_and_matches_all_distinct() {
        for (n, k) in [(3u64, 2u64), (4, 4), (6, 3), (2, 6)] {
            let dist = exact_profile_distribution(n, k).unwrap();
            let total: BigRational = dist.values().cloned().sum();
            assert_eq!(total, rat(1, 1));
            let distinct_mass: BigRational = dist
                .iter()
                .filter(|(profile, _)| profile.count_j_fold(2, CountMode::AtLeast) == 0)
                .map(|(_, p)| p.clone())
                .sum();
            assert_eq!(distinct_mass, prob_all_distinct_bosons(n, k).unwrap());
        }
    }

    #[test]
    fn profile_distribution_cap_is_enforced() {
        match exact_profile_distribution_with_cap(30, 20, 1000) {
            Err(Error::SizeCap { cap, .. }) => assert_eq!(cap, 1000),
            other => panic!("expected a size-cap error, got {other:?}"),
        }
    }

    #[test]
    fn ratio_string_format() {
        assert_eq!(ratio_string(&rat(1, 2)), "1/2");
        assert_eq!(ratio_string(&rat(3, 1)), "3/1");
        assert_eq!(ratio_string(&BigRational::zero()), "0/1");
    }

    #[test]
    fn ratio_to_f64_handles_huge_parts() {
        let p = prob_all_distinct_bosons(1_000_000, 1000).unwrap();
        let direct: f64 = (0..1000u64)
            .map(|a| ((1_000_000 - a) as f64 / (1_000_000 + a) as f64).ln())
            .sum::<f64>()
            .exp();
        let approx = ratio_to_f64(&p);
        assert!(
            (approx - direct).abs() < 1e-9,
            "approx = {approx}, direct = {direct}"
        );
        assert_eq!(ratio_to_f64(&rat(-3, 4)), -0.75);
    }
}
