//! Seedable Monte Carlo realizations of the random construction.
//!
//! Each replication draws two independent survivor sets with its own ChaCha8
//! stream `(seed, replication)`, so results do not depend on how replications
//! are scheduled across threads.

mod ntt;
mod triangles;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{gamma_table, EdgeWeights};
use crate::error::{Error, Result};
use crate::survival::{checked_power, DigitSet, JointSurvivalDistribution};

pub use ntt::cross_correlation;
pub use triangles::{detect_delta_pairs, difference_approximation, triangle_counts, DeltaPairCounts, TriangleCounts};

/// Largest number of level-`n` indices a survivor set may span (`n log2 M <= 26`).
pub const MAX_INDICES: usize = 1 << 26;

/// Above this many atoms the sampler uses a cumulative table instead of an alias table.
pub const ALIAS_ATOM_LIMIT: usize = 1 << 16;

/// Replications per aggregation chunk.
const CHUNK: u64 = 256;

/// Fixed-length bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn zeros(len: usize) -> Self {
        Bitset { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// Positions `i` with both `i` and `i + 1` set.
    pub fn consecutive_pairs(&self) -> Bitset {
        let mut out = Bitset::zeros(self.len);
        for (wi, w) in self.words.iter().enumerate() {
            let next_low = self.words.get(wi + 1).map_or(0, |n| n & 1);
            out.words[wi] = w & (w >> 1 | next_low << 63);
        }
        out
    }
}

/// The surviving level-`n` indices of one realization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurvivorSet {
    m: usize,
    level: usize,
    bits: Bitset,
}

impl SurvivorSet {
    /// Level 0: only the root.
    pub fn root(m: usize) -> Self {
        let mut bits = Bitset::zeros(1);
        bits.insert(0);
        SurvivorSet { m, level: 0, bits }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(m: usize, level: usize, indices: I) -> Result<Self> {
        if m < 2 {
            return Err(Error::AlphabetTooSmall(m));
        }
        let size = checked_power(m, level, MAX_INDICES)?;
        let mut bits = Bitset::zeros(size);
        for k in indices {
            if k >= size {
                return Err(Error::Invalid(format!("index {k} outside [0, {size})")));
            }
            bits.insert(k);
        }
        Ok(SurvivorSet { m, level, bits })
    }

    pub fn full(m: usize, level: usize) -> Result<Self> {
        let size = checked_power(m, level, MAX_INDICES)?;
        Self::from_indices(m, level, 0..size)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `M^n`.
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, k: usize) -> bool {
        self.bits.contains(k)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    /// Draws the next level: every survivor `k` spawns `M k + j` for `j` in a subset drawn from `sampler`.
    pub fn offspring<R: Rng + ?Sized>(&self, sampler: &SubsetSampler, rng: &mut R) -> Result<SurvivorSet> {
        let size = checked_power(self.m, self.level + 1, MAX_INDICES)?;
        let mut bits = Bitset::zeros(size);
        for k in self.indices() {
            for j in sampler.sample(rng).iter() {
                bits.insert(self.m * k + j);
            }
        }
        Ok(SurvivorSet { m: self.m, level: self.level + 1, bits })
    }
}

/// Draws subsets of `{0, .., M-1}` from a joint survival distribution.
#[derive(Clone, Debug)]
pub enum SubsetSampler {
    Bernoulli(Vec<f64>),
    Alias { sets: Vec<DigitSet>, table: WeightedAliasIndex<f64> },
    Cumulative { sets: Vec<DigitSet>, table: WeightedIndex<f64> },
}

impl SubsetSampler {
    pub fn new(mu: &JointSurvivalDistribution) -> Result<Self> {
        if let Some(p) = mu.product_marginals() {
            return Ok(SubsetSampler::Bernoulli(p.as_slice().to_vec()));
        }
        let atoms = mu.atoms().expect("non-product distributions carry atoms");
        let sets: Vec<DigitSet> = atoms.iter().map(|a| a.set).collect();
        let weights: Vec<f64> = atoms.iter().map(|a| a.prob).collect();
        if atoms.len() <= ALIAS_ATOM_LIMIT {
            let table = WeightedAliasIndex::new(weights).map_err(|e| Error::Invalid(e.to_string()))?;
            Ok(SubsetSampler::Alias { sets, table })
        } else {
            let table = WeightedIndex::new(weights).map_err(|e| Error::Invalid(e.to_string()))?;
            Ok(SubsetSampler::Cumulative { sets, table })
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DigitSet {
        match self {
            SubsetSampler::Bernoulli(p) => {
                let bits = p
                    .iter()
                    .enumerate()
                    .filter(|&(_, &pi)| rng.random_bool(pi))
                    .fold(0u64, |acc, (i, _)| acc | 1 << i);
                DigitSet::from_bits(bits)
            }
            SubsetSampler::Alias { sets, table } => sets[table.sample(rng)],
            SubsetSampler::Cumulative { sets, table } => sets[table.sample(rng)],
        }
    }
}

/// Survivor sets at levels `0..=n` of a single realization.
pub fn sample_cantor_levels<R: Rng + ?Sized>(mu: &JointSurvivalDistribution, n: usize, rng: &mut R) -> Result<Vec<SurvivorSet>> {
    checked_power(mu.m(), n, MAX_INDICES)?;
    let sampler = SubsetSampler::new(mu)?;
    let mut levels = vec![SurvivorSet::root(mu.m())];
    for _ in 0..n {
        let next = levels.last().expect("root present").offspring(&sampler, rng)?;
        levels.push(next);
    }
    Ok(levels)
}

pub fn sample_cantor_with<R: Rng + ?Sized>(mu: &JointSurvivalDistribution, n: usize, rng: &mut R) -> Result<SurvivorSet> {
    Ok(sample_cantor_levels(mu, n, rng)?.pop().expect("root present"))
}

pub fn sample_cantor(mu: &JointSurvivalDistribution, n: usize, seed: u64) -> Result<SurvivorSet> {
    sample_cantor_with(mu, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The generator used for replication `replication` under master seed `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u64,
    pub level: usize,
    pub mu: JointSurvivalDistribution,
    pub lambda: JointSurvivalDistribution,
}

impl SimConfig {
    fn validate(&self) -> Result<usize> {
        if self.mu.m() != self.lambda.m() {
            return Err(Error::SizeMismatch { left: self.mu.m(), right: self.lambda.m() });
        }
        checked_power(self.mu.m(), self.level, MAX_INDICES)
    }
}

struct Samplers {
    mu: SubsetSampler,
    lambda: SubsetSampler,
}

fn run_one(config: &SimConfig, samplers: &Samplers, replication: u64) -> TriangleCounts {
    let mut rng = replication_rng(config.seed, replication);
    let mut s1 = SurvivorSet::root(config.mu.m());
    let mut s2 = s1.clone();
    for _ in 0..config.level {
        s1 = s1.offspring(&samplers.mu, &mut rng).expect("size validated");
    }
    for _ in 0..config.level {
        s2 = s2.offspring(&samplers.lambda, &mut rng).expect("size validated");
    }
    triangle_counts(&s1, &s2).expect("same alphabet and level")
}

/// Triangle counts of a single replication.
pub fn replicate(config: &SimConfig, replication: u64) -> Result<TriangleCounts> {
    config.validate()?;
    let samplers = Samplers { mu: SubsetSampler::new(&config.mu)?, lambda: SubsetSampler::new(&config.lambda)? };
    Ok(run_one(config, &samplers, replication))
}

/// Runs every replication and hands the counts to `f` in replication order.
/// Replications within a batch run in parallel.
pub fn for_each_replication<F>(config: &SimConfig, mut f: F) -> Result<()>
where
    F: FnMut(u64, &TriangleCounts) -> Result<()>,
{
    config.validate()?;
    let samplers = Samplers { mu: SubsetSampler::new(&config.mu)?, lambda: SubsetSampler::new(&config.lambda)? };
    let batch = 4 * CHUNK;
    let mut start = 0;
    while start < config.replications {
        let end = (start + batch).min(config.replications);
        let counts: Vec<TriangleCounts> = (start..end).into_par_iter().map(|r| run_one(config, &samplers, r)).collect();
        for (offset, c) in counts.iter().enumerate() {
            f(start + offset as u64, c)?;
        }
        start = end;
    }
    Ok(())
}

/// Streaming mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Welford { count, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Per-class estimates of `E Z^L(k) = gamma_{k+1}` and `E Z^R(k) = gamma_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEstimate {
    pub k: usize,
    pub mean_l: f64,
    pub stderr_l: f64,
    pub gamma_l: f64,
    pub mean_r: f64,
    pub stderr_r: f64,
    pub gamma_r: f64,
}

impl ClassEstimate {
    /// Largest deviation from the analytic value in units of standard error.
    /// Zero standard error with an exact match counts as zero.
    pub fn max_z(&self) -> f64 {
        let z = |mean: f64, se: f64, g: f64| {
            let diff = (mean - g).abs();
            if diff <= 1e-9 * g.abs().max(1.0) {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                diff / se
            }
        };
        z(self.mean_l, self.stderr_l, self.gamma_l).max(z(self.mean_r, self.stderr_r, self.gamma_r))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalGamma {
    pub m: usize,
    pub level: usize,
    pub replications: u64,
    pub classes: Vec<ClassEstimate>,
}

/// Per-class accumulators fed in replication order. Replications are grouped
/// into fixed chunks whose statistics are merged in order, so the result
/// does not depend on how the chunks were scheduled.
#[derive(Clone, Debug)]
pub struct ClassAccumulator {
    total: Vec<[Welford; 2]>,
    current: Vec<[Welford; 2]>,
    in_chunk: u64,
}

impl ClassAccumulator {
    pub fn new(width: usize) -> Self {
        ClassAccumulator {
            total: vec![[Welford::default(); 2]; width],
            current: vec![[Welford::default(); 2]; width],
            in_chunk: 0,
        }
    }

    pub fn push(&mut self, counts: &TriangleCounts) {
        for (k, slot) in self.current.iter_mut().enumerate() {
            let (l, r) = counts.class(k);
            slot[0].push(l as f64);
            slot[1].push(r as f64);
        }
        self.in_chunk += 1;
        if self.in_chunk == CHUNK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        for (t, c) in self.total.iter_mut().zip(&mut self.current) {
            *t = [t[0].merge(&c[0]), t[1].merge(&c[1])];
            *c = [Welford::default(); 2];
        }
        self.in_chunk = 0;
    }

    fn merge_chunk(&mut self, chunk: &ClassAccumulator) {
        for (t, c) in self.total.iter_mut().zip(&chunk.current) {
            *t = [t[0].merge(&c[0]), t[1].merge(&c[1])];
        }
    }

    /// Final estimates next to the analytic coefficients of `config`.
    pub fn finish(mut self, config: &SimConfig) -> Result<EmpiricalGamma> {
        self.flush();
        let weights = EdgeWeights::from_marginals(&config.mu.marginals(), &config.lambda.marginals())?;
        let gamma = gamma_table(&weights, config.level, MAX_INDICES)?;
        let classes = self
            .total
            .iter()
            .enumerate()
            .map(|(k, [l, r])| ClassEstimate {
                k,
                mean_l: l.mean,
                stderr_l: l.stderr(),
                gamma_l: gamma.get(k as i64 + 1),
                mean_r: r.mean,
                stderr_r: r.stderr(),
                gamma_r: gamma.get(k as i64),
            })
            .collect();
        Ok(EmpiricalGamma { m: config.mu.m(), level: config.level, replications: config.replications, classes })
    }
}

/// Mean and standard error of the paired-column triangle counts over all
/// replications, next to the analytic coefficients.
pub fn empirical_gamma(config: &SimConfig) -> Result<EmpiricalGamma> {
    if config.replications < 2 {
        return Err(Error::Invalid("at least 2 replications are required".into()));
    }
    let width = config.validate()?;
    let samplers = Samplers { mu: SubsetSampler::new(&config.mu)?, lambda: SubsetSampler::new(&config.lambda)? };
    let chunks: Vec<ClassAccumulator> = (0..config.replications.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = ClassAccumulator::new(width);
            for r in c * CHUNK..((c + 1) * CHUNK).min(config.replications) {
                let counts = run_one(config, &samplers, r);
                for (k, slot) in acc.current.iter_mut().enumerate() {
                    let (l, rr) = counts.class(k);
                    slot[0].push(l as f64);
                    slot[1].push(rr as f64);
                }
            }
            acc
        })
        .collect();
    let mut total = ClassAccumulator::new(width);
    for chunk in &chunks {
        total.merge_chunk(chunk);
    }
    total.finish(config)
}

/// Runs every replication once, handing the counts to `f` in order, and
/// returns the same estimates as [`empirical_gamma`].
pub fn simulate_with<F>(config: &SimConfig, mut f: F) -> Result<EmpiricalGamma>
where
    F: FnMut(u64, &TriangleCounts) -> Result<()>,
{
    if config.replications < 2 {
        return Err(Error::Invalid("at least 2 replications are required".into()));
    }
    let mut acc = ClassAccumulator::new(config.validate()?);
    for_each_replication(config, |r, counts| {
        acc.push(counts);
        f(r, counts)
    })?;
    acc.finish(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::{MarginalVector, DEFAULT_TOLERANCE};

    fn point_mass(m: usize, digits: &[usize]) -> JointSurvivalDistribution {
        let set = DigitSet::from_digits(digits.iter().copied(), m).unwrap();
        JointSurvivalDistribution::from_atoms(m, [(set, 1.0)], DEFAULT_TOLERANCE).unwrap()
    }

    fn product(p: &[f64]) -> JointSurvivalDistribution {
        JointSurvivalDistribution::product_measure(&MarginalVector::new(p.to_vec()).unwrap())
    }

    fn config(p: &[f64], level: usize, replications: u64, seed: u64) -> SimConfig {
        SimConfig { seed, replications, level, mu: product(p), lambda: product(p) }
    }

    #[test]
    fn full_point_mass_keeps_everything() {
        let s = sample_cantor(&point_mass(3, &[0, 1, 2]), 4, 1).unwrap();
        assert_eq!(s.len(), 81);
    }

    #[test]
    fn triadic_level_two() {
        let s = sample_cantor(&point_mass(3, &[0, 2]), 2, 99).unwrap();
        assert_eq!(s.indices().collect::<Vec<_>>(), vec![0, 2, 6, 8]);
    }

    #[test]
    fn empty_point_mass_dies() {
        let s = sample_cantor(&point_mass(2, &[]), 3, 5).unwrap();
        assert!(s.is_empty());
        assert_eq!(SurvivorSet::root(2).indices().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn level_cap_enforced() {
        assert!(matches!(sample_cantor(&product(&[0.5, 0.5]), 27, 0), Err(Error::CapExceeded { .. })));
        assert!(sample_cantor(&product(&[0.5, 0.5]), 20, 0).is_ok());
    }

    #[test]
    fn levels_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mu = product(&[0.8, 0.6, 0.9]);
        for _ in 0..20 {
            let levels = sample_cantor_levels(&mu, 6, &mut rng).unwrap();
            for pair in levels.windows(2) {
                assert!(pair[1].indices().all(|k| pair[0].contains(k / 3)));
            }
        }
    }

    #[test]
    fn alias_sampler_frequencies() {
        let sets = [(DigitSet::from_bits(0b01), 0.2), (DigitSet::from_bits(0b11), 0.5), (DigitSet::from_bits(0b10), 0.3)];
        let mu = JointSurvivalDistribution::from_atoms(2, sets, DEFAULT_TOLERANCE).unwrap();
        let sampler = SubsetSampler::new(&mu).unwrap();
        assert!(matches!(sampler, SubsetSampler::Alias { .. }));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let both = (0..n).filter(|_| sampler.sample(&mut rng).bits() == 0b11).count() as f64 / n as f64;
        // binomial standard error is about 0.0016
        assert!((both - 0.5).abs() < 0.01, "{both}");
    }

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..10].iter().for_each(|&x| a.push(x));
        xs[10..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(&b);
        assert_eq!(merged.count, all.count);
        assert!((merged.mean - all.mean).abs() < 1e-12);
        assert!((merged.variance() - all.variance()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_full_survival() {
        let est = empirical_gamma(&config(&[1.0, 1.0], 3, 5, 0)).unwrap();
        for c in &est.classes {
            assert_eq!((c.mean_l, c.mean_r), (8.0, 8.0));
            assert_eq!((c.stderr_l, c.stderr_r), (0.0, 0.0));
            assert_eq!((c.gamma_l, c.gamma_r), (8.0, 8.0));
        }
    }

    #[test]
    fn ternary_first_level_class_zero() {
        let est = empirical_gamma(&config(&[0.9, 0.9, 0.9], 1, 10_000, 20240101)).unwrap();
        let c = &est.classes[0];
        assert!((c.gamma_r - 2.43).abs() < 1e-12);
        assert!((c.mean_r - 2.43).abs() <= 3.0 * c.stderr_r, "{c:?}");
    }

    #[test]
    fn asymmetric_pair_is_unbiased() {
        let cfg = SimConfig {
            seed: 11,
            replications: 20_000,
            level: 2,
            mu: product(&[0.9, 0.3, 0.6]),
            lambda: product(&[0.5, 1.0, 0.2]),
        };
        let est = empirical_gamma(&cfg).unwrap();
        // 18 comparisons at 4 standard errors
        for c in &est.classes {
            assert!(c.max_z() < 4.0, "{c:?}");
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = config(&[0.8, 0.7], 3, 600, 42);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| empirical_gamma(&cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        let mut seen = Vec::new();
        let collect = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                let mut rows = Vec::new();
                for_each_replication(&cfg, |r, c| {
                    rows.push((r, c.clone()));
                    Ok(())
                })
                .unwrap();
                rows
            })
        };
        seen.push(collect(1));
        seen.push(collect(3));
        assert_eq!(seen[0], seen[1]);
        assert_eq!(seen[0][17].1, replicate(&cfg, 17).unwrap());
    }

    #[test]
    fn streaming_summary_matches_parallel() {
        let cfg = config(&[0.8, 0.7], 3, 700, 9);
        let mut rows = 0;
        let streamed = simulate_with(&cfg, |_, _| {
            rows += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(rows, 700);
        assert_eq!(streamed, empirical_gamma(&cfg).unwrap());
    }

    #[test]
    fn subcritical_extinction_frequency() {
        let mu = product(&[0.45, 0.45]);
        let reps = 4000u64;
        let survived = (0..reps)
            .filter(|&r| !sample_cantor_with(&mu, 15, &mut replication_rng(5, r)).unwrap().is_empty())
            .count() as f64;
        let frac = survived / reps as f64;
        let bound = 0.9f64.powi(15);
        let stderr = (bound * (1.0 - bound) / reps as f64).sqrt();
        assert!(frac <= bound + 3.0 * stderr, "{frac} vs {bound}");
    }

    #[test]
    fn replications_required() {
        assert!(empirical_gamma(&config(&[0.5, 0.5], 1, 1, 0)).is_err());
    }
}
