//! Exact binomials, two-row partition data and colexicographic subset ranking.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest ball count supported by the bitmask state encoding.
pub const MAX_BALLS: usize = 64;

/// `C(n, k)` as an exact integer; zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Row `n` of Pascal's triangle, `C(n, 0..=n)`, built incrementally.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut acc = BigUint::one();
    row.push(acc.clone());
    for i in 0..n {
        acc *= n - i;
        acc /= i + 1;
        row.push(acc.clone());
    }
    row
}

/// Small binomial table for n < 64, used by the subset ranking.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    table: Vec<[u64; MAX_BALLS + 1]>,
}

impl BinomialTable {
    pub fn new() -> Self {
        let mut table = vec![[0u64; MAX_BALLS + 1]; MAX_BALLS + 1];
        for n in 0..=MAX_BALLS {
            table[n][0] = 1;
            for k in 1..=n {
                table[n][k] = table[n - 1][k - 1].saturating_add(table[n - 1][k]);
            }
        }
        BinomialTable { table }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[n][k]
        }
    }
}

impl Default for BinomialTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Colexicographic rank of a subset mask among all subsets of the same size.
#[inline]
pub fn colex_rank(table: &BinomialTable, mut mask: u64) -> u64 {
    let mut rank = 0u64;
    let mut i = 1usize;
    while mask != 0 {
        let pos = mask.trailing_zeros() as usize;
        rank += table.get(pos, i);
        mask &= mask - 1;
        i += 1;
    }
    rank
}

/// Inverse of [`colex_rank`] for subsets of size `k` drawn from `n` elements.
pub fn colex_unrank(table: &BinomialTable, n: usize, k: usize, mut rank: u64) -> u64 {
    let mut mask = 0u64;
    let mut pos = n;
    for i in (1..=k).rev() {
        // largest pos with C(pos, i) <= rank
        pos -= 1;
        while table.get(pos, i) > rank {
            pos -= 1;
        }
        rank -= table.get(pos, i);
        mask |= 1u64 << pos;
    }
    mask
}

/// Dimension of the irreducible representation of S_n labelled by `[n-i, i]`.
pub fn dim_two_row(n: u64, i: u64) -> Result<BigUint> {
    if i > n / 2 {
        return Err(Error::IndexOutOfRange(format!(
            "[{}, {}] is not a partition of {}",
            n as i64 - i as i64,
            i,
            n
        )));
    }
    Ok(binomial(n, i as i64) - binomial(n, i as i64 - 1))
}

/// Normalized transposition character `chi(tau)/d` of the two-row irreducible `[n-i, i]`.
pub fn char_ratio_two_row(n: i64, i: i64) -> Result<Ratio<i64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "character ratio needs n >= 2, got {n}"
        )));
    }
    if i < 0 || i > n / 2 {
        return Err(Error::IndexOutOfRange(format!(
            "[{}, {}] is not a partition of {}",
            n - i,
            i,
            n
        )));
    }
    let num = (n - i) * (n - i - 1) + i * (i - 3);
    Ok(Ratio::new(num, n * (n - 1)))
}

/// Natural log of a big unsigned integer without overflowing `f64`.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn ratio_to_big(r: Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub(crate) fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(4, -1), BigUint::zero());
        assert_eq!(binomial(4, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        let mut row = vec![BigUint::one()];
        for n in 1..=40u64 {
            let mut next = vec![BigUint::one(); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial(n, k as i64), row[k as usize]);
            }
            assert_eq!(binomial_row(n), row);
        }
        assert_eq!(binomial(30, 15), BigUint::from(155_117_520u64));
    }

    #[test]
    fn two_row_dims() {
        assert_eq!(dim_two_row(4, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(dim_two_row(4, 1).unwrap(), BigUint::from(3u32));
        assert_eq!(dim_two_row(4, 2).unwrap(), BigUint::from(2u32));
        assert!(dim_two_row(4, 3).is_err());
        assert!(dim_two_row(5, 3).is_err());
    }

    #[test]
    fn char_ratio_values() {
        assert_eq!(char_ratio_two_row(4, 0).unwrap(), Ratio::from_integer(1));
        assert_eq!(char_ratio_two_row(4, 1).unwrap(), Ratio::new(1, 3));
        // chi_[2,2] vanishes on transpositions
        assert_eq!(char_ratio_two_row(4, 2).unwrap(), Ratio::from_integer(0));
        assert!(char_ratio_two_row(1, 0).is_err());
        assert!(char_ratio_two_row(4, 3).is_err());
    }

    #[test]
    fn colex_rank_is_a_bijection() {
        let table = BinomialTable::new();
        for n in 1..=10usize {
            for k in 0..=n {
                let total = table.get(n, k);
                let mut seen = vec![false; total as usize];
                for mask in 0u64..(1 << n) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let rank = colex_rank(&table, mask);
                    assert!(rank < total);
                    assert!(!seen[rank as usize]);
                    seen[rank as usize] = true;
                    assert_eq!(colex_unrank(&table, n, k, rank), mask);
                }
            }
        }
    }

    #[test]
    fn ln_big_matches_float_log() {
        let x = binomial(2000, 1000);
        let direct: f64 = (1..=1000)
            .map(|i| ((1000 + i) as f64).ln() - (i as f64).ln())
            .sum();
        assert!((ln_biguint(&x) - direct).abs() < 1e-9 * direct);
        assert_eq!(ln_biguint(&BigUint::from(1u32)), 0.0);
    }
}
