//! Closed-form eigenvalues, the spectral upper-bound sums, and the
//! second-moment lower bound for the variant chain.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::catalog::Catalog;
use crate::combinatorics::{ln_biguint, ratio_to_big, ratio_to_f64};
use crate::error::{Error, Result};
use crate::model::{initial_mask, validate_params, Family, Mask};

fn check_unsigned_index(n: usize, r: usize, i: usize) -> Result<()> {
    validate_params(n, r)?;
    if i > r {
        return Err(Error::IndexOutOfRange(format!("i = {i} exceeds r = {r}")));
    }
    Ok(())
}

fn check_signed_index(n: usize, j: usize, ell: usize, m: usize) -> Result<()> {
    if n < 2 || j > n || ell > j / 2 || m > (n - j) / 2 {
        return Err(Error::IndexOutOfRange(format!(
            "(j, ell, m) = ({j}, {ell}, {m}) is not a valid label for n = {n}"
        )));
    }
    Ok(())
}

/// Eigenvalue of the classical chain on `[n-i, i]`: `1 - i(n-i+1)/(r(n-r))`.
pub fn eig_classical(n: usize, r: usize, i: usize) -> Result<Ratio<i64>> {
    check_unsigned_index(n, r, i)?;
    let (n, r, i) = (n as i64, r as i64, i as i64);
    Ok(Ratio::one() - Ratio::new(i * (n - i + 1), r * (n - r)))
}

/// Eigenvalue of the variant chain on `[n-i, i]`: `1 - 2i(n-i+1)/n^2`.
pub fn eig_variant(n: usize, r: usize, i: usize) -> Result<Ratio<i64>> {
    check_unsigned_index(n, r, i)?;
    let (n, i) = (n as i64, i as i64);
    Ok(Ratio::one() - Ratio::new(2 * i * (n - i + 1), n * n))
}

/// Independent-flips eigenvalue `F(j, ell) = (j^2 - 2 ell (j - ell + 1)) / n^2`.
pub fn eig_independent(n: usize, j: usize, ell: usize) -> Result<Ratio<i64>> {
    check_signed_index(n, j, ell, 0)?;
    let (n, j, ell) = (n as i64, j as i64, ell as i64);
    Ok(Ratio::new(j * j - 2 * ell * (j - ell + 1), n * n))
}

/// Paired-flips eigenvalue on `([j-ell, ell]; [(n-j)-m, m])`.
pub fn eig_paired(n: usize, j: usize, ell: usize, m: usize) -> Result<Ratio<i64>> {
    check_signed_index(n, j, ell, m)?;
    let (n, j, ell, m) = (n as i64, j as i64, ell as i64, m as i64);
    let q = n - j;
    let num = j * j - 2 * ell * (j - ell + 1) + q * q - 2 * m * (q - m + 1) - q;
    Ok(Ratio::new(num, n * n))
}

/// One point of the spectral upper-bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCurvePoint {
    pub k: u64,
    /// `1/4 * sum over nontrivial constituents of dim * mult * eigenvalue^(2k)`.
    pub l2n_sq_bound: f64,
    /// Square root of `l2n_sq_bound`; may exceed one.
    pub tv_upper: f64,
    pub tv_upper_clamped: f64,
}

/// `1/4 * sum dim * mult * lambda^(2k)` over the nontrivial part of the catalog.
pub fn l2n_sq_bound(catalog: &Catalog, k: u64) -> f64 {
    let mut total = 0.0f64;
    for e in catalog.nontrivial() {
        let lambda = ratio_to_f64(e.eigenvalue).abs();
        let power = if k == 0 {
            1.0
        } else if lambda == 0.0 {
            0.0
        } else if k <= i32::MAX as u64 / 2 {
            lambda.powi(2 * k as i32)
        } else {
            (2.0 * k as f64 * lambda.ln()).exp()
        };
        if power == 0.0 {
            continue;
        }
        let term = if e.dim.bits() < 1000 {
            num_traits::ToPrimitive::to_f64(&e.dim).unwrap() * e.mult as f64 * power
        } else {
            let log_power = if k == 0 {
                0.0
            } else {
                2.0 * k as f64 * lambda.ln()
            };
            (ln_biguint(&e.dim) + (e.mult as f64).ln() + log_power).exp()
        };
        total += term;
    }
    total / 4.0
}

/// Exact rational version of [`l2n_sq_bound`].
pub fn l2n_sq_bound_exact(catalog: &Catalog, k: u64) -> BigRational {
    let mut total = BigRational::zero();
    for e in catalog.nontrivial() {
        let lambda = ratio_to_big(e.eigenvalue);
        let power = num_traits::pow::pow(lambda, 2 * k as usize);
        let weight = BigInt::from(e.dim.clone()) * BigInt::from(e.mult);
        total += power * BigRational::from_integer(weight);
    }
    total / BigRational::from_integer(BigInt::from(4))
}

/// Upper bound on total variation: raw square root and the value clamped at 1.
pub fn tv_upper(catalog: &Catalog, k: u64) -> (f64, f64) {
    let raw = l2n_sq_bound(catalog, k).sqrt();
    (raw, raw.min(1.0))
}

pub fn bound_point(catalog: &Catalog, k: u64) -> BoundCurvePoint {
    let l2 = l2n_sq_bound(catalog, k);
    let raw = l2.sqrt();
    BoundCurvePoint {
        k,
        l2n_sq_bound: l2,
        tv_upper: raw,
        tv_upper_clamped: raw.min(1.0),
    }
}

/// Real-valued step count at which each family's upper bound reaches `a e^{-c/2}`.
pub fn theorem_k_real(family: Family, n: usize, r: usize, c: f64) -> Result<f64> {
    validate_params(n, r)?;
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidArgument(format!("need c > 0, got {c}")));
    }
    let (nf, rf) = (n as f64, r as f64);
    let scale = nf.ln() + c;
    Ok(match family {
        Family::Classical => 0.5 * rf * (1.0 - rf / nf) * scale,
        Family::Variant | Family::IndependentFlips => 0.25 * nf * scale,
        Family::PairedFlips => 0.5 * nf * scale,
    })
}

/// [`theorem_k_real`] rounded up to a whole number of steps.
pub fn theorem_k(family: Family, n: usize, r: usize, c: f64) -> Result<u64> {
    Ok(theorem_k_real(family, n, r, c)?.ceil() as u64)
}

/// Number of rack-1 balls whose labels lie in `{r+1, ..., n}`.
#[inline]
pub fn displaced(r: usize, rack1: Mask) -> u32 {
    (rack1 & !initial_mask(r)).count_ones()
}

/// First spherical function of the unsigned homogeneous space,
/// `s1(x) = 1 - j n / (r (n - r))` with `j` the displaced count of `x`.
pub fn spherical_s1(n: usize, r: usize, rack1: Mask) -> Ratio<i64> {
    let j = displaced(r, rack1) as i64;
    let (n, r) = (n as i64, r as i64);
    Ratio::one() - Ratio::new(j * n, r * (n - r))
}

pub fn spherical_s1_f64(n: usize, r: usize, rack1: Mask) -> f64 {
    let j = displaced(r, rack1) as f64;
    let (n, r) = (n as f64, r as f64);
    1.0 - j * n / (r * (n - r))
}

/// Expected `s1` after `k` variant steps, `(1 - 2/n)^k`.
pub fn moment_s1(n: usize, k: u64) -> f64 {
    (1.0 - 2.0 / n as f64).powf(k as f64)
}

/// Expected `s2` after `k` variant steps, `(1 - 2/n)^(2k)`.
pub fn moment_s2(n: usize, k: u64) -> f64 {
    (1.0 - 2.0 / n as f64).powf(2.0 * k as f64)
}

/// `Var(f) / E(f)^2` for `f = sqrt(n-1) s1` after `k` variant steps.
pub fn variance_ratio(n: usize, r: usize, k: u64) -> Result<f64> {
    validate_params(n, r)?;
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "variance ratio needs n >= 3, got {n}"
        )));
    }
    let (nf, rf) = (n as f64, r as f64);
    let rho = 1.0 - 2.0 / nf;
    let mean_f = (nf - 1.0).sqrt() * rho.powf(k as f64);
    let gap = nf - 2.0 * rf;
    let first = 1.0 / (mean_f * mean_f);
    let second = (4.0 * nf * nf / (nf - 2.0)) / (nf * nf - gap * gap)
        * ((gap / nf).powi(2) * rho.powf(-(k as f64)) - 1.0);
    let third = (3.0 * nf - 2.0) / ((nf - 1.0) * (nf - 2.0));
    Ok(first + second + third)
}

/// Second branch of the lower-bound step count,
/// `(n-2) log(n/(n-2r)) + (n-2)/2 log[1 + (n-2)/4 (1 - ((n-2r)/n)^2) e^{-c}]`;
/// infinite when `2r = n`.
pub fn crossover_f(n: usize, r: usize, c: f64) -> Result<f64> {
    validate_params(n, r)?;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidArgument(format!("need c >= 0, got {c}")));
    }
    if 2 * r == n {
        return Ok(f64::INFINITY);
    }
    let (nf, rf) = (n as f64, r as f64);
    let gap = nf - 2.0 * rf;
    let spread = 1.0 - (gap / nf).powi(2);
    Ok((nf - 2.0) * (nf / gap).ln()
        + 0.5 * (nf - 2.0) * (1.0 + 0.25 * (nf - 2.0) * spread * (-c).exp()).ln())
}

/// Constant in the total-variation guarantee `1 - 1566 e^{-c}`.
pub const LOWER_BOUND_CONSTANT: f64 = 1566.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub c: f64,
    /// Steps up to which the chain provably has not mixed.
    pub k_threshold: u64,
    /// `1 - 1566 e^{-c}`; vacuous when not positive.
    pub tv_guarantee: f64,
    /// `E f` at `k_threshold`.
    pub mean_f: f64,
    /// `Var f / (E f)^2` at `k_threshold`.
    pub var_ratio: f64,
}

impl LowerBoundReport {
    pub fn is_vacuous(&self) -> bool {
        self.tv_guarantee <= 0.0
    }
}

/// Step count below which the variant chain is still far from uniform,
/// with the accompanying Chebyshev guarantee.
pub fn lower_bound(n: usize, r: usize, c: f64) -> Result<LowerBoundReport> {
    validate_params(n, r)?;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    let nf = n as f64;
    if c.is_nan() || c < 0.0 || c > nf.ln() {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= c <= log n = {}, got {c}",
            nf.ln()
        )));
    }
    let cutoff_branch = 0.25 * nf * (nf.ln() - c);
    let k_real = cutoff_branch.min(crossover_f(n, r, c)?);
    let k_threshold = k_real.max(0.0).floor() as u64;
    let mean_f = (nf - 1.0).sqrt() * moment_s1(n, k_threshold);
    Ok(LowerBoundReport {
        c,
        k_threshold,
        tv_guarantee: 1.0 - LOWER_BOUND_CONSTANT * (-c).exp(),
        mean_f,
        var_ratio: variance_ratio(n, r, k_threshold)?,
    })
}

/// Helper for exact comparisons: `|x|` of a big rational as `f64`.
pub fn big_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_for;

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eig_classical(4, 2, 1).unwrap(), Ratio::from_integer(0));
        assert_eq!(eig_classical(2, 1, 1).unwrap(), Ratio::from_integer(-1));
        assert_eq!(eig_classical(9, 3, 0).unwrap(), Ratio::from_integer(1));
        assert_eq!(eig_variant(4, 2, 1).unwrap(), Ratio::new(1, 2));
        assert_eq!(eig_variant(4, 2, 2).unwrap(), Ratio::new(1, 4));
        assert_eq!(eig_variant(2, 1, 1).unwrap(), Ratio::from_integer(0));
        assert_eq!(eig_independent(2, 1, 0).unwrap(), Ratio::new(1, 4));
        assert_eq!(eig_independent(2, 2, 1).unwrap(), Ratio::from_integer(0));
        assert_eq!(eig_independent(7, 7, 0).unwrap(), Ratio::from_integer(1));
        assert_eq!(eig_paired(2, 0, 0, 0).unwrap(), Ratio::new(1, 2));
        assert_eq!(eig_paired(2, 0, 0, 1).unwrap(), Ratio::new(-1, 2));
        assert_eq!(eig_paired(2, 1, 0, 0).unwrap(), Ratio::new(1, 4));
    }

    #[test]
    fn eigenvalue_index_errors() {
        assert!(eig_classical(4, 2, 3).is_err());
        assert!(eig_variant(4, 3, 1).is_err());
        assert!(eig_independent(4, 2, 2).is_err());
        assert!(eig_independent(4, 5, 0).is_err());
        assert!(eig_paired(4, 1, 0, 2).is_err());
    }

    #[test]
    fn unit_eigenvalue_only_at_trivial_label() {
        for n in 2..=9 {
            for j in 0..=n {
                for ell in 0..=j / 2 {
                    let f = eig_independent(n, j, ell).unwrap();
                    assert_eq!(f == Ratio::one(), (j, ell) == (n, 0));
                    for m in 0..=(n - j) / 2 {
                        let p = eig_paired(n, j, ell, m).unwrap();
                        assert_eq!(p == Ratio::one(), (j, ell, m) == (n, 0, 0));
                    }
                }
            }
        }
    }

    #[test]
    fn bound_sum_examples() {
        let cat = catalog_for(Family::Variant, 4, 2).unwrap();
        assert!((l2n_sq_bound(&cat, 1) - 0.21875).abs() < 1e-15);
        assert_eq!(l2n_sq_bound(&cat, 0), 1.25);
        let (raw, clamped) = tv_upper(&cat, 0);
        assert!((raw - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(clamped, 1.0);

        let cat = catalog_for(Family::Variant, 2, 1).unwrap();
        assert_eq!(l2n_sq_bound(&cat, 1), 0.0);
        assert_eq!(tv_upper(&cat, 1).0, 0.0);

        let cat = catalog_for(Family::Classical, 2, 1).unwrap();
        for k in [1, 2, 17, 1000] {
            assert!(tv_upper(&cat, k).0 >= 0.5);
        }
    }

    #[test]
    fn exact_and_float_sums_agree() {
        for fam in Family::ALL {
            let cat = catalog_for(fam, 6, 3).unwrap();
            for k in 0..10 {
                let exact = big_to_f64(&l2n_sq_bound_exact(&cat, k));
                let float = l2n_sq_bound(&cat, k);
                assert!((exact - float).abs() <= 1e-12 * exact.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn large_dimension_terms_use_logs() {
        // n = 1200 makes C(n, n/2) overflow f64; bound must stay finite.
        let cat = crate::catalog::unsigned_catalog(1200, 600, Family::Variant).unwrap();
        let k = theorem_k(Family::Variant, 1200, 600, 4.0).unwrap();
        let v = l2n_sq_bound(&cat, k);
        assert!(v.is_finite() && v > 0.0 && v < 1.0);
    }

    #[test]
    fn theorem_k_values() {
        assert_eq!(theorem_k(Family::Variant, 100, 50, 4.0).unwrap(), 216);
        assert_eq!(
            theorem_k(Family::IndependentFlips, 100, 50, 4.0).unwrap(),
            216
        );
        assert_eq!(theorem_k(Family::PairedFlips, 100, 50, 4.0).unwrap(), 431);
        // 1/2 * 50 * (1 - 1/2) * log 100
        assert_eq!(theorem_k(Family::Classical, 100, 50, 1e-12).unwrap(), 58);
        assert!(theorem_k(Family::Variant, 100, 50, 0.0).is_err());
        assert!(theorem_k(Family::Variant, 100, 50, -1.0).is_err());
    }

    #[test]
    fn spherical_examples() {
        assert_eq!(spherical_s1(6, 2, 0b11), Ratio::one());
        assert_eq!(spherical_s1(3, 1, 0b010), Ratio::new(-1, 2));
        assert_eq!(spherical_s1(2, 1, 0b10), Ratio::from_integer(-1));
    }

    #[test]
    fn moments() {
        assert!((moment_s1(4, 2) - 0.25).abs() < 1e-15);
        assert_eq!(moment_s1(7, 0), 1.0);
        assert_eq!(moment_s2(7, 0), 1.0);
        assert!((moment_s1(10, 10) - 0.8f64.powi(10)).abs() < 1e-15);
        assert!((moment_s2(10, 3) - moment_s1(10, 6)).abs() < 1e-15);
    }

    #[test]
    fn variance_ratio_middle_term_vanishes_at_half() {
        // With 2r = n only the first and third terms remain.
        let (n, k) = (10usize, 4u64);
        let mean_f = 9f64.sqrt() * 0.8f64.powi(4);
        let want = 1.0 / (mean_f * mean_f) - 4.0 * 100.0 / 8.0 / 100.0 + 28.0 / 72.0;
        assert!((variance_ratio(n, 5, k).unwrap() - want).abs() < 1e-12);
        assert!(variance_ratio(2, 1, 1).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let rep = lower_bound(1000, 500, 2.0).unwrap();
        assert_eq!(rep.k_threshold, 1226);
        assert_eq!(lower_bound(100, 50, 2.0).unwrap().k_threshold, 65);

        let c = LOWER_BOUND_CONSTANT.ln();
        let rep = lower_bound(2000, 1000, c).unwrap();
        assert!(rep.tv_guarantee.abs() < 1e-12);
        assert!(lower_bound(2000, 1000, 0.5).unwrap().is_vacuous());

        assert!(lower_bound(100, 50, -0.1).is_err());
        assert!(lower_bound(100, 50, 4.7).is_err());
        assert!(lower_bound(2, 1, 0.1).is_err());
    }

    #[test]
    fn crossover_behaviour() {
        assert_eq!(crossover_f(100, 50, 1.0).unwrap(), f64::INFINITY);
        for n in [20usize, 50, 101, 400] {
            for c in [0.0, 0.5, 2.0] {
                let mut prev = f64::NEG_INFINITY;
                for r in 1..=n / 2 {
                    let f = crossover_f(n, r, c).unwrap();
                    assert!(f > prev, "n={n} r={r} c={c}");
                    prev = f;
                }
            }
        }
        let f = crossover_f(100, 1, 0.0).unwrap();
        assert!(f >= 100.0 / 33.0);
        assert!(f <= 25.0 * 100f64.ln());
        // at 2r < n, the min picks the crossover when r is tiny
        let rep = lower_bound(400, 1, 1.0).unwrap();
        assert_eq!(
            rep.k_threshold,
            crossover_f(400, 1, 1.0).unwrap().floor() as u64
        );
    }
}
