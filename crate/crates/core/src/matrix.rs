use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A 2x2 real matrix, row-major. Row and column 0 correspond to `L`, 1 to `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().copied()
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        let [[a, b], [d, e]] = self.0;
        Mat2([[c * a, c * b], [c * d, c * e]])
    }

    /// Column sums, i.e. the all-ones row vector times the matrix.
    pub fn column_sums(&self) -> [f64; 2] {
        [self.0[0][0] + self.0[1][0], self.0[0][1] + self.0[1][1]]
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        (a.abs() + c.abs()).max(b.abs() + d.abs())
    }

    pub fn min_column_sum(&self) -> f64 {
        let [x, y] = self.column_sums();
        x.min(y)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Perron-Frobenius root of a nonnegative matrix, from the characteristic
    /// polynomial: `(a+d)/2 + sqrt(((a-d)/2)^2 + bc)`.
    pub fn perron_root(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let half_diff = 0.5 * (a - d);
        0.5 * (a + d) + (half_diff * half_diff + b * c).max(0.0).sqrt()
    }

    /// True when every row and every column holds at most one non-zero entry.
    pub fn is_permutative(&self) -> bool {
        let [[a, b], [c, d]] = self.0;
        !(a != 0.0 && b != 0.0 || c != 0.0 && d != 0.0 || a != 0.0 && c != 0.0 || b != 0.0 && d != 0.0)
    }

    /// Product of the entries on the permutation pattern of a permutative
    /// matrix; zero when fewer than two entries are non-zero.
    pub fn permutative_product(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        if a != 0.0 && d != 0.0 {
            a * d
        } else if b != 0.0 && c != 0.0 {
            b * c
        } else {
            0.0
        }
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0;
        [v[0] * a + v[1] * c, v[0] * b + v[1] * d]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries().all(|x| x >= 0.0)
    }

    pub fn dominates(&self, other: &Mat2) -> bool {
        self.entries().zip(other.entries()).all(|(a, b)| a >= b)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = rhs.0;
        Mat2([[a * e + b * g, a * f + b * h], [c * e + d * g, c * f + d * h]])
    }
}
