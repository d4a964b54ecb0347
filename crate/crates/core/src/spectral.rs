//! Lower spectral radius of the expectation-matrix family
//! `{M(0), .., M(M-1)}`.
//!
//! Finite-depth estimates are exact minima over all `M^n` ordered products.
//!
//! Norms: `||P||_1 = max(e P)` depends only on the row vector `v = e P`,
//! which evolves as `v <- v A_k`. Nonnegative matrices preserve the entrywise
//! order, so a vector dominated by another one at the same depth can never
//! lead to a smaller norm and is dropped. Each depth keeps only the Pareto
//! front of `{e P}`.
//!
//! Perron roots: a depth-first search over digit strings. A prefix `P` is
//! discarded when `min colsum(P) * c(rest)` already exceeds the incumbent,
//! where `c(rest)` is the exact minimum column sum over products of the
//! remaining length, or when `sqrt(|det P| d^r)` does, with `d` the smallest
//! `|det A_k|` and `r` the remaining length. For nonnegative matrices
//! `e P Q >= min colsum(P) e Q`, the Perron root dominates the smallest
//! column sum, and `rho(A) >= sqrt(|det A|)` for any 2x2 matrix, so neither
//! bound cuts a minimizer.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{expectation_matrices, EdgeWeights};
use crate::error::{Error, Result};
use crate::matrix::Mat2;

/// Largest depth searched exhaustively.
pub const EXHAUSTIVE_DEPTH_CAP: usize = 24;
/// Half-width of the band around 1 reported as a boundary value.
pub const BOUNDARY_BAND: f64 = 1e-9;
/// Relative slack on the pruning test, absorbing rounding in the bound.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LsrMethod {
    NormMin,
    PerronMin,
    ClosedForm2adic,
    PermutativeBound,
}

impl LsrMethod {
    pub fn cli_name(self) -> &'static str {
        match self {
            LsrMethod::NormMin => "norm",
            LsrMethod::PerronMin => "perron",
            LsrMethod::ClosedForm2adic => "closed2",
            LsrMethod::PermutativeBound => "permutative",
        }
    }
}

impl fmt::Display for LsrMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for LsrMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(LsrMethod::NormMin),
            "perron" => Ok(LsrMethod::PerronMin),
            "closed2" => Ok(LsrMethod::ClosedForm2adic),
            "permutative" => Ok(LsrMethod::PermutativeBound),
            other => Err(Error::Invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// A finite family of nonnegative 2x2 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFamily {
    mats: Vec<Mat2>,
    irreducible: bool,
}

impl MatrixFamily {
    pub fn new(mats: Vec<Mat2>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if let Some(x) = mats.iter().flat_map(|m| m.entries()).find(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::NegativeEntry(x));
        }
        let irreducible = irreducible_pattern(&mats);
        Ok(MatrixFamily { mats, irreducible })
    }

    /// The family `{M(0), .., M(M-1)}` of the given edge weights.
    pub fn from_edge_weights(w: &EdgeWeights) -> Self {
        Self::new(expectation_matrices(w)).expect("edge weights are nonnegative")
    }

    pub fn matrices(&self) -> &[Mat2] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Product `A_{d_1} ... A_{d_n}`.
    pub fn product(&self, digits: &[usize]) -> Mat2 {
        digits.iter().fold(Mat2::IDENTITY, |acc, &d| acc * self.mats[d])
    }

    /// `(m_0, m_1)` when the family has the 2-adic shape
    /// `M(0) = [[b,0],[b,a]]`, `M(1) = [[a,b],[0,b]]`.
    pub fn two_adic_parameters(&self) -> Option<(f64, f64)> {
        if self.mats.len() != 2 {
            return None;
        }
        let [[b, z0], [b2, a]] = self.mats[0].0;
        let [[a2, b3], [z1, b4]] = self.mats[1].0;
        let same = b == b2 && b == b3 && b == b4 && a == a2 && z0 == 0.0 && z1 == 0.0;
        same.then_some((a, b))
    }
}

/// `(L,R)` entry positive for `k >= 1` and `(R,L)` entry positive for `k <= M-2`.
fn irreducible_pattern(mats: &[Mat2]) -> bool {
    let m = mats.len();
    (1..m).all(|k| mats[k].get(0, 1) > 0.0) && (0..m.saturating_sub(1)).all(|k| mats[k].get(1, 0) > 0.0)
}

pub fn is_irreducible(family: &MatrixFamily) -> bool {
    family.is_irreducible()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsrEstimate {
    pub depth: usize,
    pub method: LsrMethod,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
}

/// Position of a spectral-radius value relative to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationToOne {
    Below,
    Boundary,
    Above,
}

impl LsrEstimate {
    pub fn relation_to_one(&self, band: f64) -> RelationToOne {
        relation_to_one(self.value, band)
    }

    /// Value recomputed from the witness product, if there is one.
    pub fn reevaluate(&self, family: &MatrixFamily) -> Option<f64> {
        let witness = self.witness.as_ref()?;
        let n = witness.len() as f64;
        let p = family.product(witness);
        match self.method {
            LsrMethod::NormMin => Some(p.norm1().powf(1.0 / n)),
            LsrMethod::PerronMin => Some(p.perron_root().powf(1.0 / n)),
            _ => None,
        }
    }
}

pub fn relation_to_one(value: f64, band: f64) -> RelationToOne {
    if (value - 1.0).abs() <= band {
        RelationToOne::Boundary
    } else if value < 1.0 {
        RelationToOne::Below
    } else {
        RelationToOne::Above
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    Perron,
    MinColumnSum,
}

impl Objective {
    fn eval(self, p: &Mat2) -> f64 {
        match self {
            Objective::Perron => p.perron_root(),
            Objective::MinColumnSum => p.min_column_sum(),
        }
    }
}

/// Exact minimum of `objective` over products of one fixed length.
#[derive(Clone, Debug)]
struct Minimum {
    value: f64,
    witness: Vec<usize>,
}

struct Search<'a> {
    mats: &'a [Mat2],
    objective: Objective,
    depth: usize,
    /// `bound_tail[r]` is a lower bound for the objective factor of any
    /// length-`r` tail.
    bound_tail: &'a [f64],
    /// Smallest `|det|` in the family, when the determinant bound applies.
    det_floor: Option<f64>,
    incumbent: &'a AtomicU64,
    deadline: Option<Instant>,
    expired: &'a AtomicBool,
}

impl Search<'_> {
    fn lower_bound(&self, prefix: &Mat2, remaining: usize) -> f64 {
        let colsum = prefix.min_column_sum() * self.bound_tail[remaining];
        match self.det_floor {
            Some(d) => colsum.max((prefix.det().abs() * d.powi(remaining as i32)).sqrt()),
            None => colsum,
        }
    }

    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(Ordering::Relaxed))
    }

    fn offer(&self, value: f64) {
        // nonnegative floats order like their bit patterns
        self.incumbent.fetch_min(value.to_bits(), Ordering::Relaxed);
    }

    fn dfs(&self, prefix: &mut Vec<usize>, product: Mat2, best: &mut Option<Minimum>, visits: &mut u32) {
        *visits = visits.wrapping_add(1);
        if *visits % 4096 == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() > deadline {
                    self.expired.store(true, Ordering::Relaxed);
                }
            }
        }
        if self.expired.load(Ordering::Relaxed) {
            return;
        }
        if prefix.len() == self.depth {
            let value = self.objective.eval(&product);
            if best.as_ref().is_none_or(|b| value < b.value) {
                *best = Some(Minimum { value, witness: prefix.clone() });
                self.offer(value);
            }
            return;
        }
        let remaining = self.depth - prefix.len() - 1;
        for (d, a) in self.mats.iter().enumerate() {
            let next = product * *a;
            let limit = self.incumbent().min(best.as_ref().map_or(f64::INFINITY, |b| b.value));
            let bound = self.lower_bound(&next, remaining);
            if bound > limit * (1.0 + PRUNE_SLACK) {
                continue;
            }
            prefix.push(d);
            self.dfs(prefix, next, best, visits);
            prefix.pop();
        }
    }
}

/// Exhaustive minimum at one depth. `None` when the deadline expired.
fn minimize(
    mats: &[Mat2],
    objective: Objective,
    depth: usize,
    bound_tail: &[f64],
    seed: f64,
    deadline: Option<Instant>,
) -> Option<Minimum> {
    let m = mats.len();
    // split the tree into at least 64 independent prefixes when possible
    let mut split = 0;
    while split < depth && m.pow(split as u32) < 64 {
        split += 1;
    }
    let prefixes: Vec<Vec<usize>> = (0..m.pow(split as u32))
        .map(|mut idx| {
            let mut digits = vec![0; split];
            for slot in digits.iter_mut().rev() {
                *slot = idx % m;
                idx /= m;
            }
            digits
        })
        .collect();
    let incumbent = AtomicU64::new(seed.to_bits());
    let expired = AtomicBool::new(false);
    let det_floor = (objective == Objective::Perron)
        .then(|| mats.iter().map(|a| a.det().abs()).fold(f64::INFINITY, f64::min));
    let search =
        Search { mats, objective, depth, bound_tail, det_floor, incumbent: &incumbent, deadline, expired: &expired };

    let results: Vec<Option<Minimum>> = prefixes
        .into_par_iter()
        .map(|mut prefix| {
            let product = prefix.iter().fold(Mat2::IDENTITY, |acc, &d| acc * mats[d]);
            let mut best = None;
            let mut visits = 0;
            if prefix.len() == depth {
                let value = objective.eval(&product);
                search.offer(value);
                return Some(Minimum { value, witness: prefix });
            }
            let remaining = depth - prefix.len();
            if search.lower_bound(&product, remaining) > search.incumbent() * (1.0 + PRUNE_SLACK) {
                return None;
            }
            search.dfs(&mut prefix, product, &mut best, &mut visits);
            best
        })
        .collect();
    if expired.load(Ordering::Relaxed) {
        return None;
    }
    // prefixes are in lexicographic order; keep the first of equal minima
    results.into_iter().flatten().fold(None, |acc: Option<Minimum>, cand| match acc {
        Some(a) if a.value <= cand.value => Some(a),
        _ => Some(cand),
    })
}

/// Incremental exhaustive search, reusing lower depths for pruning bounds.
struct DepthSweep<'a> {
    family: &'a MatrixFamily,
    objective: Objective,
    deadline: Option<Instant>,
    /// Exact minima of the objective at depths `0..`.
    optimum: Vec<Minimum>,
    /// Exact minima of the minimum column sum at depths `0..` (Perron only).
    colsum: Option<Box<DepthSweep<'a>>>,
}

impl<'a> DepthSweep<'a> {
    fn new(family: &'a MatrixFamily, objective: Objective, deadline: Option<Instant>) -> Self {
        let colsum = (objective == Objective::Perron)
            .then(|| Box::new(DepthSweep::new(family, Objective::MinColumnSum, deadline)));
        let identity = Minimum { value: objective.eval(&Mat2::IDENTITY), witness: Vec::new() };
        DepthSweep { family, objective, deadline, optimum: vec![identity], colsum }
    }

    fn depth(&self) -> usize {
        self.optimum.len() - 1
    }

    /// Extends the sweep by one depth; `false` when the deadline expired.
    fn advance(&mut self) -> bool {
        let depth = self.depth() + 1;
        let mats = self.family.matrices();
        let tail: Vec<f64> = match &mut self.colsum {
            Some(colsum) => {
                if colsum.depth() < depth - 1 && !colsum.advance() {
                    return false;
                }
                colsum.optimum.iter().map(|m| m.value).collect()
            }
            None => self.optimum.iter().map(|m| m.value).collect(),
        };
        // extend the previous witness by one digit for a starting incumbent
        let prev = &self.optimum[depth - 1].witness;
        let seed = (0..mats.len())
            .map(|d| {
                let mut w = prev.clone();
                w.push(d);
                self.objective.eval(&self.family.product(&w))
            })
            .fold(f64::INFINITY, f64::min);
        match minimize(mats, self.objective, depth, &tail, seed, self.deadline) {
            Some(min) => {
                self.optimum.push(min);
                true
            }
            None => false,
        }
    }

    fn estimate(&self, depth: usize, method: LsrMethod) -> LsrEstimate {
        let min = &self.optimum[depth];
        LsrEstimate { depth, method, value: min.value.powf(1.0 / depth as f64), witness: Some(min.witness.clone()) }
    }
}

fn check_depth(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    if n > EXHAUSTIVE_DEPTH_CAP {
        return Err(Error::DepthCap { depth: n, cap: EXHAUSTIVE_DEPTH_CAP });
    }
    Ok(())
}

/// Depth-`n` estimate of the lower spectral radius.
///
/// `NormMin` is `min ||A_1 .. A_n||_1^(1/n)` and `PerronMin` is
/// `(min rho(A_1 .. A_n))^(1/n)`, both over all `M^n` products and both with
/// a witness digit string. `ClosedForm2adic` needs the 2-adic family shape;
/// `PermutativeBound` needs a permutative family. Neither depends on `n`.
pub fn lsr_depth_n(family: &MatrixFamily, n: usize, method: LsrMethod) -> Result<LsrEstimate> {
    check_depth(n)?;
    Ok(lsr_profile(family, n, method, None)?.pop().expect("depth >= 1"))
}

/// Estimates at every depth `1..=max_depth`. With a time budget the sweep
/// stops early and returns the depths completed so far, never extrapolating.
pub fn lsr_profile(
    family: &MatrixFamily,
    max_depth: usize,
    method: LsrMethod,
    budget: Option<Duration>,
) -> Result<Vec<LsrEstimate>> {
    check_depth(max_depth)?;
    let deadline = budget.map(|b| Instant::now() + b);
    let objective = match method {
        LsrMethod::NormMin => return Ok(norm_sweep(family, max_depth, deadline)),
        LsrMethod::PerronMin => Objective::Perron,
        LsrMethod::ClosedForm2adic => {
            let (m0, m1) = family.two_adic_parameters().ok_or(Error::NotDyadic(family.len()))?;
            let value = closed_form(m0, m1)?;
            return Ok((1..=max_depth).map(|depth| LsrEstimate { depth, method, value, witness: None }).collect());
        }
        LsrMethod::PermutativeBound => {
            let value = permutative_bound(family)
                .ok_or_else(|| Error::Invalid("family contains a non-permutative matrix".into()))?;
            return Ok((1..=max_depth).map(|depth| LsrEstimate { depth, method, value, witness: None }).collect());
        }
    };
    let mut sweep = DepthSweep::new(family, objective, deadline);
    let mut out = Vec::with_capacity(max_depth);
    while sweep.depth() < max_depth {
        if !sweep.advance() {
            break;
        }
        out.push(sweep.estimate(sweep.depth(), method));
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct FrontEntry {
    v: [f64; 2],
    parent: usize,
    digit: usize,
}

/// Exact `NormMin` at depths `1..=max_depth` over Pareto fronts of `e P`.
fn norm_sweep(family: &MatrixFamily, max_depth: usize, deadline: Option<Instant>) -> Vec<LsrEstimate> {
    let mats = family.matrices();
    let mut layers = vec![vec![FrontEntry { v: [1.0, 1.0], parent: 0, digit: 0 }]];
    let mut out = Vec::with_capacity(max_depth);
    for depth in 1..=max_depth {
        if deadline.is_some_and(|d| Instant::now() > d) {
            break;
        }
        let prev = layers.last().expect("root layer");
        let mut candidates: Vec<FrontEntry> = prev
            .iter()
            .enumerate()
            .flat_map(|(parent, e)| {
                mats.iter().enumerate().map(move |(digit, a)| FrontEntry { v: a.left_mul(e.v), parent, digit })
            })
            .collect();
        // stable: equal vectors keep generation order
        candidates.par_sort_by(|a, b| a.v[0].total_cmp(&b.v[0]).then(a.v[1].total_cmp(&b.v[1])));
        let mut front = Vec::new();
        let mut lowest = f64::INFINITY;
        for c in candidates {
            if c.v[1] < lowest {
                lowest = c.v[1];
                front.push(c);
            }
        }
        let (best_idx, best) = front
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.v[0].max(e.v[1])))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        layers.push(front);
        let mut witness = vec![0; depth];
        let mut idx = best_idx;
        for level in (1..=depth).rev() {
            let entry = layers[level][idx];
            witness[level - 1] = entry.digit;
            idx = entry.parent;
        }
        out.push(LsrEstimate {
            depth,
            method: LsrMethod::NormMin,
            value: best.powf(1.0 / depth as f64),
            witness: Some(witness),
        });
    }
    out
}

fn closed_form(m0: f64, m1: f64) -> Result<f64> {
    if !(m1 > 0.0) {
        return Err(Error::Reducible);
    }
    Ok(0.5 * m1 + (m1 * m0 + 0.25 * m1 * m1).sqrt())
}

/// `x_+ = m_1/2 + sqrt(m_1 m_0 + m_1^2/4)`, the larger root of
/// `x^2 - m_1 x - m_0 m_1`.
pub fn lsr_2adic_closed_form(w: &EdgeWeights) -> Result<f64> {
    if w.m() != 2 {
        return Err(Error::NotDyadic(w.m()));
    }
    closed_form(w.get(0), w.get(1))
}

/// `sqrt(min_k |pi(M(k))|)` when every matrix is permutative.
pub fn permutative_bound(family: &MatrixFamily) -> Option<f64> {
    if !family.matrices().iter().all(Mat2::is_permutative) {
        return None;
    }
    let min = family
        .matrices()
        .iter()
        .map(|m| m.permutative_product().abs())
        .fold(f64::INFINITY, f64::min);
    Some(min.sqrt())
}

/// Every entry multiplied by `c^2`, matching marginals scaled by `c`.
pub fn scale_family(family: &MatrixFamily, c: f64) -> Result<MatrixFamily> {
    if !(c >= 0.0) {
        return Err(Error::Invalid(format!("scale factor {c} must be nonnegative")));
    }
    MatrixFamily::new(family.matrices().iter().map(|m| m.scale(c * c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::MarginalVector;

    fn family(p: &[f64]) -> MatrixFamily {
        MatrixFamily::from_edge_weights(&EdgeWeights::symmetric(&MarginalVector::new(p.to_vec()).unwrap()))
    }

    /// Plain enumeration of every product, no pruning.
    fn brute(family: &MatrixFamily, n: usize, eval: fn(&Mat2) -> f64) -> f64 {
        let m = family.len();
        let mut best = f64::INFINITY;
        for idx in 0..m.pow(n as u32) {
            let mut digits = vec![0; n];
            let mut rest = idx;
            for slot in digits.iter_mut().rev() {
                *slot = rest % m;
                rest /= m;
            }
            best = best.min(eval(&family.product(&digits)));
        }
        best.powf(1.0 / n as f64)
    }

    #[test]
    fn identity_family() {
        let f = MatrixFamily::new(vec![Mat2::IDENTITY]).unwrap();
        for n in [1, 5, 12] {
            for method in [LsrMethod::NormMin, LsrMethod::PerronMin] {
                assert_eq!(lsr_depth_n(&f, n, method).unwrap().value, 1.0);
            }
        }
        assert_eq!(permutative_bound(&f), Some(1.0));
    }

    #[test]
    fn pruned_search_matches_brute_force() {
        for p in [vec![0.9, 0.4], vec![0.7, 0.3, 0.9], vec![1.0, 0.0, 0.6, 0.0, 1.0], vec![0.2, 0.95, 0.5]] {
            let f = family(&p);
            for n in 1..=6 {
                let norm = lsr_depth_n(&f, n, LsrMethod::NormMin).unwrap();
                let perron = lsr_depth_n(&f, n, LsrMethod::PerronMin).unwrap();
                assert!((norm.value - brute(&f, n, Mat2::norm1)).abs() <= 1e-12 * norm.value, "{p:?} n={n}");
                assert!((perron.value - brute(&f, n, Mat2::perron_root)).abs() <= 1e-12 * perron.value.max(1e-300));
                assert_eq!(norm.witness.as_ref().unwrap().len(), n);
                let again = norm.reevaluate(&f).unwrap();
                assert!((again - norm.value).abs() <= 1e-12 * norm.value);
            }
        }
    }

    #[test]
    fn dyadic_all_ones() {
        let f = family(&[1.0, 1.0]);
        let est = lsr_depth_n(&f, 8, LsrMethod::PerronMin).unwrap();
        assert!((est.value - 2.0).abs() < 1e-12);
        let w = EdgeWeights::symmetric(&MarginalVector::new(vec![1.0, 1.0]).unwrap());
        assert_eq!(lsr_2adic_closed_form(&w).unwrap(), 2.0);
        assert_eq!(lsr_depth_n(&f, 3, LsrMethod::ClosedForm2adic).unwrap().value, 2.0);
    }

    #[test]
    fn closed_form_fixtures() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = EdgeWeights::symmetric(&MarginalVector::new(vec![s, s]).unwrap());
        assert!((lsr_2adic_closed_form(&w).unwrap() - 1.0).abs() < 1e-12);

        let w = EdgeWeights::symmetric(&MarginalVector::new(vec![1.0, 0.0]).unwrap());
        assert!(matches!(lsr_2adic_closed_form(&w), Err(Error::Reducible)));

        // generic pair [[a,b],[0,b]], [[b,0],[b,a]]
        let (a, b) = (0.9, 0.4);
        let f = MatrixFamily::new(vec![Mat2::new(b, 0.0, b, a), Mat2::new(a, b, 0.0, b)]).unwrap();
        let want = 0.5 * b + 0.5 * (4.0 * a * b + b * b).sqrt();
        assert_eq!(f.two_adic_parameters(), Some((a, b)));
        assert!((lsr_depth_n(&f, 1, LsrMethod::ClosedForm2adic).unwrap().value - want).abs() < 1e-12);
    }

    #[test]
    fn permutative_bounds() {
        for t in [0.5, 0.75, 1.0] {
            let f = family(&[1.0, 0.0, t, 0.0, 1.0]);
            assert!((permutative_bound(&f).unwrap() - (2.0 * t).sqrt()).abs() < 1e-12);
            assert!(!f.is_irreducible());
        }
        assert_eq!(permutative_bound(&family(&[1.0, 1.0])), None);
    }

    #[test]
    fn scaling() {
        let f = family(&[1.0, 1.0]);
        assert_eq!(scale_family(&f, 1.0).unwrap(), f);
        let zero = scale_family(&f, 0.0).unwrap();
        assert_eq!(lsr_depth_n(&zero, 4, LsrMethod::NormMin).unwrap().value, 0.0);
        let half = scale_family(&f, 0.5).unwrap();
        assert!((lsr_depth_n(&half, 2, LsrMethod::ClosedForm2adic).unwrap().value - 0.5).abs() < 1e-15);
        assert!(scale_family(&f, -1.0).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(family(&[0.3, 0.2]).is_irreducible());
        assert!(!family(&[1.0, 0.0, 1.0]).is_irreducible());
        assert!(family(&[0.3, 0.2, 0.9]).is_irreducible());
    }

    #[test]
    fn depth_cap_and_empty_family() {
        let f = family(&[0.5, 0.5]);
        assert!(matches!(lsr_depth_n(&f, 25, LsrMethod::NormMin), Err(Error::DepthCap { .. })));
        assert!(matches!(MatrixFamily::new(vec![]), Err(Error::EmptyFamily)));
        assert!(MatrixFamily::new(vec![Mat2::new(-1.0, 0.0, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn budget_returns_completed_depths() {
        let f = family(&[0.7, 0.3, 0.9, 0.6, 0.8]);
        let out = lsr_profile(&f, 24, LsrMethod::NormMin, Some(Duration::ZERO)).unwrap();
        assert!(out.len() < 24);
        for (i, est) in out.iter().enumerate() {
            assert_eq!(est.depth, i + 1);
        }
    }

    #[test]
    fn method_names() {
        for m in [LsrMethod::NormMin, LsrMethod::PerronMin, LsrMethod::ClosedForm2adic, LsrMethod::PermutativeBound] {
            assert_eq!(m.cli_name().parse::<LsrMethod>().unwrap(), m);
        }
        assert!("spectral".parse::<LsrMethod>().is_err());
    }
}
