//! Cyclic cross-correlation coefficients, the edge weights `m_e`, the
//! expectation matrices built from them, and higher-order coefficients
//! computed either as matrix products or by the scalar `m_e` recursion.
//!
//! Column indices are signed integers; every order-`n` quantity is periodic
//! with period `M^n` and is reduced on access.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Mat2;
use crate::survival::{checked_power, MarginalVector};

/// Expected triangle counts `[[E Z^LL, E Z^LR], [E Z^RL, E Z^RR]]` of one column.
pub type ExpectationMatrix = Mat2;

/// One period of order-`n` correlation coefficients `gamma^(n)_k`, `0 <= k < M^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaVector {
    m: usize,
    order: usize,
    values: Vec<f64>,
}

impl GammaVector {
    /// The order-0 vector, identically 1.
    pub fn order_zero(m: usize) -> Self {
        GammaVector { m, order: 0, values: vec![1.0] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `gamma_k` for any integer `k`.
    pub fn get(&self, k: i64) -> f64 {
        self.values[k.rem_euclid(self.values.len() as i64) as usize]
    }

    /// The smallest coefficient and the smallest nonnegative index attaining it.
    pub fn min(&self) -> (usize, f64) {
        let mut best = (0, self.values[0]);
        for (k, &v) in self.values.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (k, v);
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All coefficients strictly above `threshold`.
    pub fn all_above(&self, threshold: f64) -> bool {
        self.values.iter().all(|&v| v > threshold)
    }

    /// First `k` (cyclically) with `gamma_k` and `gamma_{k+1}` both below `threshold`.
    pub fn consecutive_below(&self, threshold: f64) -> Option<usize> {
        let n = self.values.len() as i64;
        (0..n).find(|&k| self.get(k) < threshold && self.get(k + 1) < threshold).map(|k| k as usize)
    }
}

/// Order-1 coefficients `gamma_k = sum_i q_i p_{(i+k) mod M}`.
pub fn gamma(p: &MarginalVector, q: &MarginalVector) -> Result<GammaVector> {
    let m = p.m();
    if q.m() != m {
        return Err(Error::SizeMismatch { left: m, right: q.m() });
    }
    let values = (0..m)
        .map(|k| (0..m).map(|i| q.get(i) * p.get((i + k) % m)).sum())
        .collect();
    Ok(GammaVector { m, order: 1, values })
}

/// Expected number of surviving level-1 squares `Q_{i,j}` with `i - j = e`,
/// for `e` in `[-M, M]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeWeights {
    m: usize,
    /// Entry `e + M` holds `m_e`.
    weights: Vec<f64>,
}

impl EdgeWeights {
    /// `m_e = sum_{i - j = e} p_i q_j`.
    pub fn from_marginals(p: &MarginalVector, q: &MarginalVector) -> Result<Self> {
        let m = p.m();
        if q.m() != m {
            return Err(Error::SizeMismatch { left: m, right: q.m() });
        }
        let mut weights = vec![0.0; 2 * m + 1];
        for i in 0..m {
            for j in 0..m {
                weights[i + m - j] += p.get(i) * q.get(j);
            }
        }
        Ok(EdgeWeights { m, weights })
    }

    pub fn symmetric(p: &MarginalVector) -> Self {
        Self::from_marginals(p, p).expect("equal sizes")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `m_e`; zero outside `[-M, M]`.
    pub fn get(&self, e: i64) -> f64 {
        let idx = e + self.m as i64;
        if idx < 0 || idx as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[idx as usize]
        }
    }

    /// True when `m_e > 0` for every `0 < |e| < M`.
    pub fn all_off_diagonal_positive(&self) -> bool {
        let m = self.m as i64;
        (1..m).all(|e| self.get(e) > 0.0 && self.get(-e) > 0.0)
    }

    /// True when `m_e > 0` for every `|e| < M`.
    pub fn all_positive(&self) -> bool {
        self.all_off_diagonal_positive() && self.get(0) > 0.0
    }
}

pub fn edge_weights(p: &MarginalVector, q: &MarginalVector) -> Result<EdgeWeights> {
    EdgeWeights::from_marginals(p, q)
}

/// `M(k) = [[m_{k+1-M}, m_{k-M}], [m_{k+1}, m_k]]`.
pub fn expectation_matrix(w: &EdgeWeights, k: usize) -> Result<ExpectationMatrix> {
    if k >= w.m {
        return Err(Error::DigitOutOfRange { digit: k, m: w.m });
    }
    let (k, m) = (k as i64, w.m as i64);
    Ok(Mat2::new(w.get(k + 1 - m), w.get(k - m), w.get(k + 1), w.get(k)))
}

pub fn expectation_matrices(w: &EdgeWeights) -> Vec<ExpectationMatrix> {
    (0..w.m).map(|k| expectation_matrix(w, k).expect("digit in range")).collect()
}

/// The row vector `(gamma^(n)_{k+1}, gamma^(n)_k)` for `k = [k_1 .. k_n]_M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaPair {
    pub digits: Vec<usize>,
    pub values: [f64; 2],
}

impl GammaPair {
    pub fn order(&self) -> usize {
        self.digits.len()
    }

    pub fn next(&self) -> f64 {
        self.values[0]
    }

    pub fn current(&self) -> f64 {
        self.values[1]
    }

    /// `[k_1 .. k_n]_M`, if it fits in 128 bits.
    pub fn index(&self, m: usize) -> Option<u128> {
        self.digits
            .iter()
            .try_fold(0u128, |acc, &d| acc.checked_mul(m as u128)?.checked_add(d as u128))
    }
}

/// A pair of values sharing a power-of-two exponent: `mantissa * 2^exp2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledPair {
    pub mantissa: [f64; 2],
    pub exp2: i64,
}

impl ScaledPair {
    pub fn to_f64(self) -> [f64; 2] {
        let scale = 2f64.powi(self.exp2.clamp(i32::MIN as i64, i32::MAX as i64) as i32);
        [self.mantissa[0] * scale, self.mantissa[1] * scale]
    }

    pub fn log2(self) -> [f64; 2] {
        [self.mantissa[0].log2() + self.exp2 as f64, self.mantissa[1].log2() + self.exp2 as f64]
    }
}

/// Digit strings longer than this are accumulated with a separate exponent.
pub const SCALED_PRODUCT_THRESHOLD: usize = 64;

fn check_digits(w: &EdgeWeights, digits: &[usize]) -> Result<()> {
    match digits.iter().find(|&&d| d >= w.m) {
        Some(&d) => Err(Error::DigitOutOfRange { digit: d, m: w.m }),
        None => Ok(()),
    }
}

/// `e M(k_1) ... M(k_n)`, multiplied left to right, renormalizing the
/// running vector into a mantissa and a power-of-two exponent.
pub fn gamma_pair_by_product_scaled(w: &EdgeWeights, digits: &[usize]) -> Result<ScaledPair> {
    check_digits(w, digits)?;
    let mats = expectation_matrices(w);
    let mut v = [1.0, 1.0];
    let mut exp2 = 0i64;
    for &d in digits {
        v = mats[d].left_mul(v);
        let big = v[0].max(v[1]);
        if big > 0.0 && big.is_finite() {
            let e = big.log2().floor() as i64;
            if e != 0 {
                let s = 2f64.powi(-e as i32);
                v = [v[0] * s, v[1] * s];
                exp2 += e;
            }
        }
    }
    Ok(ScaledPair { mantissa: v, exp2 })
}

/// `(gamma^(n)_{k+1}, gamma^(n)_k) = e M(k_1) ... M(k_n)`.
pub fn gamma_pair_by_product(w: &EdgeWeights, digits: &[usize]) -> Result<GammaPair> {
    let values = if digits.len() > SCALED_PRODUCT_THRESHOLD {
        gamma_pair_by_product_scaled(w, digits)?.to_f64()
    } else {
        check_digits(w, digits)?;
        let mats = expectation_matrices(w);
        digits.iter().fold([1.0, 1.0], |v, &d| mats[d].left_mul(v))
    };
    Ok(GammaPair { digits: digits.to_vec(), values })
}

/// The base-`M` digits of `k mod M^n`, most significant first.
pub fn digits_of(k: i128, m: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    let mut rest = k;
    for slot in digits.iter_mut().rev() {
        *slot = rest.rem_euclid(m as i128) as usize;
        rest = rest.div_euclid(m as i128);
    }
    digits
}

/// `gamma^(n)_k` from the scalar recursion
/// `gamma^(j+1)_{Mk+l} = m_{l-M} gamma^(j)_{k+1} + m_l gamma^(j)_k`, base `gamma^(0) = 1`.
///
/// The pair `(gamma_k, gamma_{k+1})` at order `j+1` only needs the pair at
/// `floor(k / M)` at order `j`, with `l + 1 = M` handled by the `l = M` case.
pub fn gamma_by_recursion(w: &EdgeWeights, n: usize, k: i128) -> f64 {
    let m = w.m as i64;
    let mut remainders = Vec::with_capacity(n);
    let mut rest = k;
    for _ in 0..n {
        remainders.push(rest.rem_euclid(m as i128) as i64);
        rest = rest.div_euclid(m as i128);
    }
    let (mut here, mut right) = (1.0, 1.0);
    for &l in remainders.iter().rev() {
        let next_here = w.get(l - m) * right + w.get(l) * here;
        let next_right = w.get(l + 1 - m) * right + w.get(l + 1) * here;
        here = next_here;
        right = next_right;
    }
    here
}

/// Every order-`n` coefficient over one period, level by level.
pub fn gamma_table(w: &EdgeWeights, n: usize, cap: usize) -> Result<GammaVector> {
    checked_power(w.m, n, cap)?;
    let m = w.m;
    let mut table = GammaVector::order_zero(m);
    for order in 1..=n {
        let prev = &table;
        let len = prev.period();
        let mut values = Vec::with_capacity(len * m);
        for k in 0..len as i64 {
            let (here, right) = (prev.get(k), prev.get(k + 1));
            for l in 0..m as i64 {
                values.push(w.get(l - m as i64) * right + w.get(l) * here);
            }
        }
        table = GammaVector { m, order, values };
    }
    Ok(table)
}

/// Bounded-skewness constant
/// `R = min_{0<k<M, k' in {k-1,k+1}} min(m_{k-M}, m_k) / max(m_{k'-M}, m_{k'})`.
///
/// Requires `m_e > 0` for all `|e| < M`, including `e = 0`; returns `None`
/// otherwise.
pub fn skewness_r(w: &EdgeWeights) -> Option<f64> {
    if !w.all_positive() {
        return None;
    }
    let m = w.m as i64;
    let mut r = f64::INFINITY;
    for k in 1..m {
        let num = w.get(k - m).min(w.get(k));
        for kp in [k - 1, k + 1] {
            let den = w.get(kp - m).max(w.get(kp));
            r = r.min(num / den);
        }
    }
    Some(r)
}

/// The 2-adic minimum-tracking indices `(k_n, k'_n)`: `k_0 = 0`, `k'_0 = 1`,
/// `k_{j+1} = k'_j + k_j`, `k'_{j+1} = 2 k_j`.
///
/// # Panics
///
/// For `n >= 64`, where `k_n` no longer fits in 64 bits.
pub fn jacobsthal_min_indices(n: usize) -> (u64, u64) {
    assert!(n < 64, "index sequence overflows u64 beyond n = 63");
    let (mut k, mut kp) = (0u64, 1u64);
    for _ in 0..n {
        (k, kp) = (kp + k, 2 * k);
    }
    (k, kp)
}

/// Minimum values `a_n = gamma^(n)_{k_n}` in the 2-adic case:
/// `a_0 = 1`, `a_1 = 2 m_1`, `a_{n+2} = m_1 a_{n+1} + m_1 m_0 a_n`.
pub fn a_sequence(w: &EdgeWeights, n_max: usize) -> Result<Vec<f64>> {
    if w.m != 2 {
        return Err(Error::NotDyadic(w.m));
    }
    let (m0, m1) = (w.get(0), w.get(1));
    if m1 <= 0.0 {
        return Err(Error::Reducible);
    }
    let mut a = vec![1.0, 2.0 * m1];
    while a.len() <= n_max {
        let len = a.len();
        a.push(m1 * a[len - 1] + m1 * m0 * a[len - 2]);
    }
    a.truncate(n_max + 1);
    Ok(a)
}
