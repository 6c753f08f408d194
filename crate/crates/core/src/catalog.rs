//! Irreducible constituents of the permutation representation on the state
//! space, with their dimensions, multiplicities and chain eigenvalues.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::combinatorics::{binomial_row, dim_two_row};
use crate::error::{Error, Result};
use crate::model::{validate_params, Family};
use crate::spectral::{eig_classical, eig_independent, eig_paired, eig_variant};

/// Two-row irreducible `[n-i, i]` of S_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnsignedIrrep {
    pub i: usize,
}

/// Irreducible of the hyperoctahedral group labelled by the partition pair
/// `([j-ell, ell]; [(n-j)-m, m])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedIrrep {
    pub j: usize,
    pub ell: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrrepLabel {
    Unsigned(UnsignedIrrep),
    Signed(SignedIrrep),
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrepLabel::Unsigned(u) => write!(f, "i={}", u.i),
            IrrepLabel::Signed(s) => write!(f, "j={};l={};m={}", s.j, s.ell, s.m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrepEntry {
    pub label: IrrepLabel,
    pub dim: BigUint,
    pub mult: u64,
    pub eigenvalue: Ratio<i64>,
}

impl IrrepEntry {
    /// Number of kernel eigenvalues this entry accounts for, `dim * mult`.
    pub fn weight(&self) -> BigUint {
        &self.dim * self.mult
    }
}

/// Full decomposition for one model; entries sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub family: Family,
    pub n: usize,
    pub r: usize,
    pub entries: Vec<IrrepEntry>,
}

impl Catalog {
    /// `sum dim * mult`, which must equal the size of the state space.
    pub fn total_dimension(&self) -> BigUint {
        self.entries.iter().map(IrrepEntry::weight).sum()
    }

    /// The trivial constituent: `i = 0`, or `(j, ell, m) = (n, 0, 0)`.
    pub fn is_trivial(&self, label: &IrrepLabel) -> bool {
        match label {
            IrrepLabel::Unsigned(u) => u.i == 0,
            IrrepLabel::Signed(s) => s.j == self.n && s.ell == 0 && s.m == 0,
        }
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &IrrepEntry> {
        self.entries
            .iter()
            .filter(move |e| !self.is_trivial(&e.label))
    }

    /// Eigenvalue multiset expanded to `dim * mult` copies, sorted descending.
    ///
    /// Only sensible for small catalogs; the expansion has one value per state.
    pub fn expanded_spectrum(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in &self.entries {
            let copies: u64 = e.weight().try_into().unwrap_or(u64::MAX);
            let value = *e.eigenvalue.numer() as f64 / *e.eigenvalue.denom() as f64;
            out.extend(std::iter::repeat_n(value, copies as usize));
        }
        out.sort_by(|a, b| b.partial_cmp(a).unwrap());
        out
    }
}

/// Constituents `[n-i, i]`, `i = 0..=r`, each of multiplicity one.
pub fn unsigned_catalog(n: usize, r: usize, family: Family) -> Result<Catalog> {
    validate_params(n, r)?;
    let eig: fn(usize, usize, usize) -> Result<Ratio<i64>> = match family {
        Family::Classical => eig_classical,
        Family::Variant => eig_variant,
        other => {
            return Err(Error::InvalidArgument(format!(
                "{other} is not an unsigned family"
            )))
        }
    };
    let entries = (0..=r)
        .map(|i| {
            Ok(IrrepEntry {
                label: IrrepLabel::Unsigned(UnsignedIrrep { i }),
                dim: dim_two_row(n as u64, i as u64)?,
                mult: 1,
                eigenvalue: eig(n, r, i)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Catalog {
        family,
        n,
        r,
        entries,
    })
}

/// Number of `i` in the inner range of the signed decomposition for which
/// `m` is admissible; this is the multiplicity of `(j, ell, m)`.
pub fn signed_multiplicity(n: usize, r: usize, j: usize, ell: usize, m: usize) -> u64 {
    let lo = ell.max(r.saturating_sub(n - j));
    let hi = r.min(j.saturating_sub(ell));
    if j < ell || lo > hi {
        return 0;
    }
    (lo..=hi)
        .filter(|&i| {
            let rest = r - i;
            (n - j) >= rest && m <= rest.min((n - j) - rest)
        })
        .count() as u64
}

/// Distinct labels of the signed decomposition with their multiplicities.
pub fn signed_catalog(n: usize, r: usize, family: Family) -> Result<Catalog> {
    validate_params(n, r)?;
    if !family.is_signed() {
        return Err(Error::InvalidArgument(format!(
            "{family} is not a signed family"
        )));
    }
    let binom_n = binomial_row(n as u64);
    // dim_two_row(k, t) for every k <= n, t <= k/2
    let two_row: Vec<Vec<BigUint>> = (0..=n)
        .map(|k| {
            let row = binomial_row(k as u64);
            (0..=k / 2)
                .map(|t| {
                    if t == 0 {
                        BigUint::one()
                    } else {
                        &row[t] - &row[t - 1]
                    }
                })
                .collect()
        })
        .collect();

    let mut entries = Vec::new();
    for j in 0..=n {
        for ell in 0..=j / 2 {
            for m in 0..=(n - j) / 2 {
                let mult = signed_multiplicity(n, r, j, ell, m);
                if mult == 0 {
                    continue;
                }
                let dim = &binom_n[j] * &two_row[j][ell] * &two_row[n - j][m];
                debug_assert!(!dim.is_zero());
                let eigenvalue = match family {
                    Family::IndependentFlips => eig_independent(n, j, ell)?,
                    _ => eig_paired(n, j, ell, m)?,
                };
                entries.push(IrrepEntry {
                    label: IrrepLabel::Signed(SignedIrrep { j, ell, m }),
                    dim,
                    mult,
                    eigenvalue,
                });
            }
        }
    }
    Ok(Catalog {
        family,
        n,
        r,
        entries,
    })
}

/// Catalog for any built-in family.
pub fn catalog_for(family: Family, n: usize, r: usize) -> Result<Catalog> {
    if family.is_signed() {
        signed_catalog(n, r, family)
    } else {
        unsigned_catalog(n, r, family)
    }
}
