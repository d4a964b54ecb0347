//! Joint survival distributions over subsets of the alphabet `{0, .., M-1}`,
//! their marginals, marginal support, the joint survival condition and the
//! extinction regime of the induced branching process.
//!
//! Subsets are bitmasks (bit `i` set means digit `i` survives), so a
//! distribution given by explicit atoms supports `M <= 64`. Product
//! (independent Bernoulli) measures can also be held in marginal-only form,
//! which is the only form accepted for `M > 24`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance of the in-memory invariant.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Normalization tolerance accepted when reading distribution files.
pub const PARSE_TOLERANCE: f64 = 1e-9;
/// Largest alphabet for which the `2^M` atoms of a product measure are enumerated.
pub const ATOM_ENUMERATION_LIMIT: usize = 24;
/// Largest alphabet representable by a subset bitmask.
pub const BITMASK_LIMIT: usize = 64;
/// Default cap on the number of entries of any order-`n` table.
pub const DEFAULT_ENTRY_CAP: usize = 1 << 22;

/// A subset of the alphabet stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DigitSet(u64);

impl DigitSet {
    pub const EMPTY: DigitSet = DigitSet(0);

    pub fn from_bits(bits: u64) -> Self {
        DigitSet(bits)
    }

    /// Builds a set from digits, checking each lies in `[0, m)`.
    pub fn from_digits<I: IntoIterator<Item = usize>>(digits: I, m: usize) -> Result<Self> {
        if m > BITMASK_LIMIT {
            return Err(Error::AlphabetTooLarge { m, limit: BITMASK_LIMIT, what: "subset bitmasks" });
        }
        let mut bits = 0u64;
        for d in digits {
            if d >= m {
                return Err(Error::DigitOutOfRange { digit: d, m });
            }
            bits |= 1 << d;
        }
        Ok(DigitSet(bits))
    }

    /// All digits `0..m`.
    pub fn full(m: usize) -> Self {
        if m >= 64 {
            DigitSet(u64::MAX)
        } else {
            DigitSet((1u64 << m) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, digit: usize) -> bool {
        digit < 64 && self.0 >> digit & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Digits in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let d = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(d)
            }
        })
    }
}

impl fmt::Display for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, d) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}}")
    }
}

fn check_probability(p: f64) -> Result<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::BadProbability(p))
    }
}

/// Per-digit survival probabilities `p_0, .., p_{M-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalVector {
    p: Vec<f64>,
}

impl MarginalVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::AlphabetTooSmall(p.len()));
        }
        for &x in &p {
            check_probability(x)?;
        }
        Ok(MarginalVector { p })
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, i: usize) -> f64 {
        self.p[i]
    }

    /// `||p||_1`, the expected number of children of a surviving interval.
    pub fn norm1(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn support(&self) -> MarginalSupport {
        MarginalSupport { digits: (0..self.m()).filter(|&i| self.p[i] > 0.0).collect() }
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &MarginalVector, tol: f64) -> bool {
        self.m() == other.m() && self.p.iter().zip(&other.p).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Digits with positive marginal probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalSupport {
    digits: Vec<usize>,
}

impl MarginalSupport {
    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn contains(&self, d: usize) -> bool {
        self.digits.binary_search(&d).is_ok()
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub set: DigitSet,
    pub prob: f64,
}

/// Long-run behaviour of the number of surviving level-`n` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtinctionRegime {
    /// `||p||_1 > 1`: the set is non-empty with positive probability.
    SurvivesWPP,
    /// `||p||_1 <= 1` and not degenerate: almost sure extinction.
    DiesOut,
    /// Exactly one child survives at every node; the set is a single point.
    DegenerateSingleChild,
}

/// Probability distribution of the random set of surviving children.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSurvivalDistribution {
    m: usize,
    /// Sorted by bitmask, no duplicates, no zero-probability entries. Empty
    /// only for a marginal-only product measure.
    atoms: Vec<Atom>,
    /// Set when the distribution is the product of independent Bernoulli digits.
    product: Option<MarginalVector>,
}

impl JointSurvivalDistribution {
    /// Builds a distribution from explicit atoms. Duplicate subsets are merged
    /// and zero-probability atoms dropped; the total must be within `tol` of 1.
    pub fn from_atoms<I>(m: usize, atoms: I, tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (DigitSet, f64)>,
    {
        if m < 2 {
            return Err(Error::AlphabetTooSmall(m));
        }
        if m > BITMASK_LIMIT {
            return Err(Error::AlphabetTooLarge { m, limit: BITMASK_LIMIT, what: "explicit atoms" });
        }
        let full = DigitSet::full(m).bits();
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for (set, prob) in atoms {
            if set.bits() & !full != 0 {
                let digit = (set.bits() & !full).trailing_zeros() as usize;
                return Err(Error::DigitOutOfRange { digit, m });
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(Error::BadProbability(prob));
            }
            *merged.entry(set.bits()).or_insert(0.0) += prob;
        }
        let sum: f64 = merged.values().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized { sum, tol });
        }
        let atoms = merged
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(bits, prob)| Atom { set: DigitSet(bits), prob })
            .collect();
        Ok(JointSurvivalDistribution { m, atoms, product: None })
    }

    /// The product measure with marginals `p`, enumerated into its atoms.
    /// Refused for `M > 24`; use [`Self::product_measure`] there.
    pub fn independent_distribution(p: &MarginalVector) -> Result<Self> {
        let m = p.m();
        if m > ATOM_ENUMERATION_LIMIT {
            return Err(Error::AlphabetTooLarge { m, limit: ATOM_ENUMERATION_LIMIT, what: "atom enumeration" });
        }
        let mut atoms = Vec::new();
        for bits in 0u64..(1u64 << m) {
            let prob: f64 = (0..m)
                .map(|i| if bits >> i & 1 == 1 { p.get(i) } else { 1.0 - p.get(i) })
                .product();
            if prob > 0.0 {
                atoms.push(Atom { set: DigitSet(bits), prob });
            }
        }
        Ok(JointSurvivalDistribution { m, atoms, product: Some(p.clone()) })
    }

    /// The product measure with marginals `p`. Atoms are enumerated when
    /// `M <= 24`, otherwise only the marginal form is kept.
    pub fn product_measure(p: &MarginalVector) -> Self {
        if p.m() <= ATOM_ENUMERATION_LIMIT {
            Self::independent_distribution(p).expect("alphabet within enumeration limit")
        } else {
            JointSurvivalDistribution { m: p.m(), atoms: Vec::new(), product: Some(p.clone()) }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Explicit atoms, or `None` for a marginal-only product measure.
    pub fn atoms(&self) -> Option<&[Atom]> {
        if self.atoms.is_empty() && self.product.is_some() {
            None
        } else {
            Some(&self.atoms)
        }
    }

    /// Marginals of a product measure.
    pub fn product_marginals(&self) -> Option<&MarginalVector> {
        self.product.as_ref()
    }

    /// Probability assigned to exactly the subset `set`.
    pub fn prob_of(&self, set: DigitSet) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms
                .binary_search_by_key(&set.bits(), |a| a.set.bits())
                .map(|i| atoms[i].prob)
                .unwrap_or(0.0),
            None => {
                let p = self.product.as_ref().expect("marginal-only form is a product");
                (0..self.m)
                    .map(|i| if set.contains(i) { p.get(i) } else { 1.0 - p.get(i) })
                    .product()
            }
        }
    }

    pub fn marginals(&self) -> MarginalVector {
        if let Some(p) = &self.product {
            return p.clone();
        }
        let mut p = vec![0.0; self.m];
        for atom in &self.atoms {
            for d in atom.set.iter() {
                p[d] += atom.prob;
            }
        }
        for x in &mut p {
            *x = x.min(1.0);
        }
        MarginalVector { p }
    }

    pub fn support(&self) -> MarginalSupport {
        self.marginals().support()
    }

    /// Joint survival condition: the atom equal to the marginal support has
    /// positive probability.
    pub fn jsc_holds(&self) -> bool {
        if self.product.is_some() {
            // prod over the support of p_i, all positive
            return true;
        }
        let support = self.support();
        let set = DigitSet::from_digits(support.digits().iter().copied(), self.m)
            .expect("support digits lie in the alphabet");
        self.prob_of(set) > 0.0
    }

    /// `E|S_1|` computed from the atoms (or marginals for a product measure).
    pub fn expected_children(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|a| a.prob * a.set.len() as f64).sum(),
            None => self.marginals().norm1(),
        }
    }

    /// `P(|S_1| = 1)`.
    pub fn prob_single_child(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().filter(|a| a.set.len() == 1).map(|a| a.prob).sum(),
            None => {
                let p = self.marginals();
                (0..self.m)
                    .map(|i| {
                        (0..self.m)
                            .map(|j| if j == i { p.get(j) } else { 1.0 - p.get(j) })
                            .product::<f64>()
                    })
                    .sum()
            }
        }
    }

    pub fn extinction_regime(&self) -> ExtinctionRegime {
        extinction_regime(&self.marginals(), self)
    }
}

/// Classifies the branching process `|S_n|` by its mean `||p||_1`.
pub fn extinction_regime(p: &MarginalVector, mu: &JointSurvivalDistribution) -> ExtinctionRegime {
    if p.norm1() > 1.0 {
        ExtinctionRegime::SurvivesWPP
    } else if (mu.prob_single_child() - 1.0).abs() <= DEFAULT_TOLERANCE {
        ExtinctionRegime::DegenerateSingleChild
    } else {
        ExtinctionRegime::DiesOut
    }
}

/// Number of entries `M^n`, or an error when it exceeds `cap`.
pub fn checked_power(m: usize, n: usize, cap: usize) -> Result<usize> {
    let entries = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if entries > cap as u128 {
        return Err(Error::CapExceeded { entries, cap: cap as u128 });
    }
    Ok(entries as usize)
}

/// Order-`n` marginals: the entry at `[i_1 .. i_n]_M` is `prod_d p_{i_d}`.
pub fn higher_order_marginals(p: &MarginalVector, n: usize, cap: usize) -> Result<MarginalVector> {
    if n == 0 {
        return Err(Error::Invalid("order must be at least 1".into()));
    }
    let size = checked_power(p.m(), n, cap)?;
    let mut out = vec![1.0];
    out.reserve(size);
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|&prefix| p.as_slice().iter().map(move |&x| prefix * x))
            .collect();
    }
    Ok(MarginalVector { p: out })
}

#[derive(Serialize, Deserialize)]
struct AtomEntry {
    set: Vec<usize>,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DistributionFile {
    Atoms {
        #[serde(rename = "M")]
        m: usize,
        atoms: Vec<AtomEntry>,
    },
    Independent {
        #[serde(rename = "M")]
        m: usize,
        p: Vec<f64>,
    },
}

impl JointSurvivalDistribution {
    /// Parses `{"M": .., "atoms": [{"set": [..], "prob": ..}]}` or the
    /// independent shorthand `{"M": .., "p": [..]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(s)?;
        match file {
            DistributionFile::Independent { m, p } => {
                if p.len() != m {
                    return Err(Error::SizeMismatch { left: m, right: p.len() });
                }
                Ok(Self::product_measure(&MarginalVector::new(p)?))
            }
            DistributionFile::Atoms { m, atoms } => {
                let mut parsed = Vec::with_capacity(atoms.len());
                for a in atoms {
                    if a.prob < 0.0 {
                        return Err(Error::BadProbability(a.prob));
                    }
                    parsed.push((DigitSet::from_digits(a.set.iter().copied(), m)?, a.prob));
                }
                let dist = Self::from_atoms(m, parsed, PARSE_TOLERANCE)?;
                let sum: f64 = dist.atoms.iter().map(|a| a.prob).sum();
                if (sum - 1.0).abs() > DEFAULT_TOLERANCE {
                    let atoms = dist.atoms.iter().map(|a| (a.set, a.prob / sum));
                    return Self::from_atoms(m, atoms, DEFAULT_TOLERANCE);
                }
                Ok(dist)
            }
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Product measures are written in the shorthand form.
    pub fn to_json_value(&self) -> serde_json::Value {
        let file = match &self.product {
            Some(p) => DistributionFile::Independent { m: self.m, p: p.as_slice().to_vec() },
            None => DistributionFile::Atoms {
                m: self.m,
                atoms: self
                    .atoms
                    .iter()
                    .map(|a| AtomEntry { set: a.set.iter().collect(), prob: a.prob })
                    .collect(),
            },
        };
        serde_json::to_value(file).expect("distribution serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("distribution serializes")
    }
}
