//! Exact integer cross-correlation of 0/1 indicator vectors.
//!
//! Small inputs are correlated by iterating over pairs of set positions.
//! Larger ones go through a number-theoretic transform modulo the prime
//! `2^64 - 2^32 + 1`; every true coefficient is at most the vector length,
//! far below the modulus, so the result is exact.

use super::Bitset;

const P: u64 = 0xFFFF_FFFF_0000_0001;
const GENERATOR: u64 = 7;

fn mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn add(a: u64, b: u64) -> u64 {
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= P {
        s.wrapping_sub(P)
    } else {
        s
    }
}

fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a.wrapping_sub(b).wrapping_add(P)
    }
}

fn pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

fn transform(a: &mut [u64], invert: bool) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w_len = pow(GENERATOR, (P - 1) / len as u64);
        if invert {
            w_len = pow(w_len, P - 2);
        }
        let half = len / 2;
        // twiddles for this stage, shared by every block
        let mut twiddles = Vec::with_capacity(half);
        let mut w = 1;
        for _ in 0..half {
            twiddles.push(w);
            w = mul(w, w_len);
        }
        for block in a.chunks_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for ((u, v), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let x = *u;
                let y = mul(*v, w);
                *u = add(x, y);
                *v = sub(x, y);
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow(n as u64, P - 2);
        for x in a.iter_mut() {
            *x = mul(*x, inv_n);
        }
    }
}

/// Cross-correlation `c(e) = #{(i, j) : a_i = b_j = 1, i - j = e}` for
/// `e` in `[-(N-1), N-1]`, stored at index `e + N - 1`.
pub fn cross_correlation(a: &Bitset, b: &Bitset) -> Vec<u64> {
    assert_eq!(a.len(), b.len(), "indicator vectors must have equal length");
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let pairs = a.count() as u128 * b.count() as u128;
    let size = (2 * n - 1).next_power_of_two();
    let transform_cost = 3 * size as u128 * (size.trailing_zeros() as u128 + 1);
    if pairs <= transform_cost {
        direct(a, b)
    } else {
        by_transform(a, b)
    }
}

pub(crate) fn direct(a: &Bitset, b: &Bitset) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u64; 2 * n - 1];
    let bs: Vec<usize> = b.ones().collect();
    for i in a.ones() {
        for &j in &bs {
            out[i + n - 1 - j] += 1;
        }
    }
    out
}

pub(crate) fn by_transform(a: &Bitset, b: &Bitset) -> Vec<u64> {
    let n = a.len();
    let size = (2 * n - 1).next_power_of_two();
    let mut fa = vec![0u64; size];
    let mut fb = vec![0u64; size];
    for i in a.ones() {
        fa[i] = 1;
    }
    // reversed b turns the convolution into a correlation
    for j in b.ones() {
        fb[n - 1 - j] = 1;
    }
    transform(&mut fa, false);
    transform(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = mul(*x, *y);
    }
    transform(&mut fa, true);
    fa.truncate(2 * n - 1);
    fa
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(n: usize, ones: &[usize]) -> Bitset {
        let mut b = Bitset::zeros(n);
        for &i in ones {
            b.insert(i);
        }
        b
    }

    #[test]
    fn root_of_unity_has_full_order() {
        // 7 generates the multiplicative group, so 7^((p-1)/2) = -1
        assert_eq!(pow(GENERATOR, (P - 1) / 2), P - 1);
    }

    #[test]
    fn small_correlation() {
        let a = bits(4, &[0, 3]);
        let b = bits(4, &[0, 1]);
        // differences: 0-0, 0-1, 3-0, 3-1
        let c = by_transform(&a, &b);
        let mut expected = vec![0u64; 7];
        for e in [0i64, -1, 3, 2] {
            expected[(e + 3) as usize] += 1;
        }
        assert_eq!(c, expected);
        assert_eq!(direct(&a, &b), expected);
    }

    proptest! {
        #[test]
        fn transform_matches_direct(n in 1usize..300, seed_a in any::<u64>(), seed_b in any::<u64>(), density in 0.0f64..1.0) {
            use rand::{Rng, SeedableRng};
            let mut ra = rand_chacha::ChaCha8Rng::seed_from_u64(seed_a);
            let mut rb = rand_chacha::ChaCha8Rng::seed_from_u64(seed_b);
            let mut a = Bitset::zeros(n);
            let mut b = Bitset::zeros(n);
            for i in 0..n {
                if ra.random_bool(density) { a.insert(i); }
                if rb.random_bool(density) { b.insert(i); }
            }
            prop_assert_eq!(by_transform(&a, &b), direct(&a, &b));
        }
    }
}
