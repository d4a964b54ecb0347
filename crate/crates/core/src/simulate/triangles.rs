//! Triangle counts per column of a pair of survivor sets.
//!
//! Square `(i, j)` contributes its R-triangle to column `i - j` and its
//! L-triangle to column `i - j - 1`. Columns run over `[-N, N)` with
//! `N = M^n` and are stored at offset `d + N`.

use serde::Serialize;

use super::ntt::cross_correlation;
use super::{Bitset, SurvivorSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TriangleCounts {
    pub m: usize,
    pub level: usize,
    zl: Vec<u64>,
    zr: Vec<u64>,
}

impl TriangleCounts {
    /// `N = M^n`.
    pub fn width(&self) -> usize {
        self.zl.len() / 2
    }

    /// All column indices `-N..N`.
    pub fn columns(&self) -> impl Iterator<Item = i64> {
        let n = self.width() as i64;
        -n..n
    }

    fn offset(&self, d: i64) -> Option<usize> {
        let idx = d + self.width() as i64;
        (idx >= 0 && (idx as usize) < self.zl.len()).then_some(idx as usize)
    }

    pub fn zl(&self, d: i64) -> u64 {
        self.offset(d).map_or(0, |i| self.zl[i])
    }

    pub fn zr(&self, d: i64) -> u64 {
        self.offset(d).map_or(0, |i| self.zr[i])
    }

    /// Paired-column class `k` in `[0, N)`: columns `k - N` and `k` summed, as `(Z^L, Z^R)`.
    pub fn class(&self, k: usize) -> (u64, u64) {
        let (k, n) = (k as i64, self.width() as i64);
        (self.zl(k - n) + self.zl(k), self.zr(k - n) + self.zr(k))
    }

    pub fn total(&self) -> u64 {
        self.zl.iter().chain(&self.zr).sum()
    }
}

fn check_pair(s1: &SurvivorSet, s2: &SurvivorSet) -> Result<()> {
    if s1.m() != s2.m() {
        return Err(Error::SizeMismatch { left: s1.m(), right: s2.m() });
    }
    if s1.level() != s2.level() {
        return Err(Error::LevelMismatch(s1.level(), s2.level()));
    }
    Ok(())
}

/// Correlation value `c(e)` from the layout returned by [`cross_correlation`].
fn at(c: &[u64], n: usize, e: i64) -> u64 {
    let idx = e + n as i64 - 1;
    if idx < 0 || idx as usize >= c.len() {
        0
    } else {
        c[idx as usize]
    }
}

pub fn triangle_counts(s1: &SurvivorSet, s2: &SurvivorSet) -> Result<TriangleCounts> {
    check_pair(s1, s2)?;
    let n = s1.width();
    let c = cross_correlation(s1.bits(), s2.bits());
    let mut zl = vec![0u64; 2 * n];
    let mut zr = vec![0u64; 2 * n];
    for d in -(n as i64)..n as i64 {
        let idx = (d + n as i64) as usize;
        zr[idx] = at(&c, n, d);
        zl[idx] = at(&c, n, d + 1);
    }
    Ok(TriangleCounts { m: s1.m(), level: s1.level(), zl, zr })
}

/// Columns `d` in `[-N, N)` holding at least one triangle, ascending.
pub fn difference_approximation(s1: &SurvivorSet, s2: &SurvivorSet) -> Result<Vec<i64>> {
    let counts = triangle_counts(s1, s2)?;
    Ok(counts.columns().filter(|&d| counts.zl(d) + counts.zr(d) > 0).collect())
}

/// Per-column number of unaligned (L, R) triangle pairs, indexed like [`TriangleCounts`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaPairCounts {
    pub level: usize,
    counts: Vec<u64>,
}

impl DeltaPairCounts {
    pub fn get(&self, d: i64) -> u64 {
        let idx = d + (self.counts.len() / 2) as i64;
        if idx < 0 || idx as usize >= self.counts.len() {
            0
        } else {
            self.counts[idx as usize]
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Columns with at least one pair.
    pub fn columns(&self) -> Vec<i64> {
        let n = (self.counts.len() / 2) as i64;
        (-n..n).filter(|&d| self.get(d) > 0).collect()
    }
}

/// In column `d` the L-triangles come from squares with `i - j = d + 1` and
/// the R-triangles from `i - j = d`. A pair is aligned when the squares share
/// a row (`j' = j + 1`, same `i`) or a column (`i = i' + 1`, same `j`); both
/// cannot hold at once, so aligned pairs are counted by two correlations.
pub fn detect_delta_pairs(s1: &SurvivorSet, s2: &SurvivorSet) -> Result<DeltaPairCounts> {
    check_pair(s1, s2)?;
    let n = s1.width();
    let c = cross_correlation(s1.bits(), s2.bits());
    let t1: Bitset = s1.bits().consecutive_pairs();
    let t2: Bitset = s2.bits().consecutive_pairs();
    let same_row = cross_correlation(s1.bits(), &t2);
    let same_col = cross_correlation(&t1, s2.bits());
    let mut counts = vec![0u64; 2 * n];
    for d in -(n as i64)..n as i64 {
        let pairs = at(&c, n, d + 1) * at(&c, n, d);
        let aligned = at(&same_row, n, d + 1) + at(&same_col, n, d);
        counts[(d + n as i64) as usize] = pairs - aligned;
    }
    Ok(DeltaPairCounts { level: s1.level(), counts })
}
