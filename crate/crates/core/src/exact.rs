//! Exact distribution evolution, distances to uniformity, and kernel spectra.
//!
//! Every kernel here is symmetric, so one step of evolution is computed in
//! "pull" form: the new mass at `y` is the kernel row of `y` dotted with the
//! current vector. Each output entry is a fixed-order sequential sum, which
//! makes results bitwise independent of the rayon worker count.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::chains::ChainModel;
use crate::combinatorics::{ratio_to_big, ratio_to_f64};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::space::{state_count_saturating, StateIndex, StateSpace};
use crate::spectral::{big_to_f64, spherical_s1_f64};

/// Largest state space `evolve` will touch.
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;
/// Largest state space for dense eigendecomposition and trace checks.
pub const DENSE_EIG_CAP: u128 = 4096;
/// Largest state space for rational-mode evolution.
pub const RATIONAL_STATE_CAP: u128 = 10_000;
/// Largest step count for rational-mode evolution.
pub const RATIONAL_STEP_CAP: u64 = 50;
/// Kernels with at most this many stored transitions are materialized.
const SPARSE_NNZ_CAP: usize = 20_000_000;

pub fn space_size(chain: &dyn ChainModel) -> u128 {
    state_count_saturating(chain.n(), chain.r(), chain.is_signed())
}

/// Cap check that runs before any table is built.
fn checked_space(chain: &dyn ChainModel, cap: u128) -> Result<StateSpace> {
    check_cap(space_size(chain), cap)?;
    Ok(StateSpace::for_chain(chain))
}

fn check_cap(size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded {
            required: size,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Probability vector over ranked states after some number of steps.
///
/// `excess` holds `probs - 1/|X|` evolved directly, which keeps distances
/// accurate long after `probs` has rounded to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub model: ModelSpec,
    pub steps: u64,
    pub probs: Vec<f64>,
    pub excess: Vec<f64>,
}

impl Distribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Half the l1 distance to uniform.
    pub fn tv_distance(&self) -> f64 {
        0.5 * self.excess.iter().map(|d| d.abs()).sum::<f64>()
    }

    /// `|X|/4 * sum (p(x) - 1/|X|)^2`.
    pub fn l2n_sq_distance(&self) -> f64 {
        0.25 * self.len() as f64 * self.excess.iter().map(|d| d * d).sum::<f64>()
    }

    /// Mass aggregated over the rack-1 subset, indexed by subset rank.
    pub fn subset_marginal(&self, space: &StateSpace) -> Vec<f64> {
        let subsets = space.subset_count() as usize;
        let mut out = vec![0.0; subsets];
        for (i, p) in self.probs.iter().enumerate() {
            out[i % subsets] += p;
        }
        out
    }

    /// `(E s1, E s1^2)` with `s1` evaluated on the rack-1 subset.
    pub fn s1_moments(&self, space: &StateSpace) -> (f64, f64) {
        let (n, r) = (space.n(), space.r());
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            let s = spherical_s1_f64(n, r, space.unrank(StateIndex(i)).rack1);
            m1 += p * s;
            m2 += p * s * s;
        }
        (m1, m2)
    }

    /// Writes `rank,probability` lines with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rank,probability")?;
        for (i, p) in self.probs.iter().enumerate() {
            writeln!(out, "{i},{p:.16e}")?;
        }
        Ok(())
    }
}

pub fn tv_distance(dist: &Distribution) -> f64 {
    dist.tv_distance()
}

pub fn l2n_sq_distance(dist: &Distribution) -> f64 {
    dist.l2n_sq_distance()
}

/// Exact distribution in rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalDistribution {
    pub model: ModelSpec,
    pub steps: u64,
    pub probs: Vec<BigRational>,
}

impl RationalDistribution {
    fn uniform(&self) -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(self.probs.len()))
    }

    pub fn total_mass(&self) -> BigRational {
        self.probs.iter().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn tv_distance(&self) -> BigRational {
        let u = self.uniform();
        let sum = self
            .probs
            .iter()
            .fold(BigRational::zero(), |a, p| a + (p - &u).abs());
        sum / BigRational::from_integer(BigInt::from(2))
    }

    pub fn l2n_sq_distance(&self) -> BigRational {
        let u = self.uniform();
        let sum = self.probs.iter().fold(BigRational::zero(), |a, p| {
            let d = p - &u;
            a + &d * &d
        });
        sum * BigRational::new(BigInt::from(self.probs.len()), BigInt::from(4))
    }

    pub fn to_float(&self) -> Distribution {
        let u = self.uniform();
        Distribution {
            model: self.model,
            steps: self.steps,
            probs: self.probs.iter().map(big_to_f64).collect(),
            excess: self.probs.iter().map(|p| big_to_f64(&(p - &u))).collect(),
        }
    }
}

/// Kernel rows stored in compressed form, in the chain's visit order.
#[derive(Debug, Clone)]
pub struct SparseKernel {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
}

impl SparseKernel {
    pub fn build(chain: &dyn ChainModel, space: &StateSpace) -> Self {
        let size = space.size() as usize;
        let rows: Vec<Vec<(u32, f64)>> = (0..size)
            .into_par_iter()
            .map(|y| {
                let mut row = Vec::new();
                chain.for_each_transition(space.unrank(StateIndex(y)), &mut |x, w| {
                    row.push((space.rank(x).0 as u32, ratio_to_f64(w)));
                });
                row
            })
            .collect();
        let mut offsets = Vec::with_capacity(size + 1);
        offsets.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        for row in rows {
            for (c, w) in row {
                cols.push(c);
                weights.push(w);
            }
            offsets.push(cols.len());
        }
        SparseKernel {
            offsets,
            cols,
            weights,
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    fn row_dot(&self, y: usize, v: &[f64]) -> f64 {
        let (lo, hi) = (self.offsets[y], self.offsets[y + 1]);
        let mut acc = 0.0;
        for t in lo..hi {
            acc += self.weights[t] * v[self.cols[t] as usize];
        }
        acc
    }

    /// `K v`, one independent dot product per row.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.offsets.len() - 1)
            .into_par_iter()
            .map(|y| self.row_dot(y, v))
            .collect()
    }
}

enum Stepper<'a> {
    Stored(SparseKernel),
    OnTheFly(&'a dyn ChainModel),
}

/// Repeated application of the kernel to the initial point mass.
pub struct Evolver<'a> {
    model: ModelSpec,
    space: StateSpace,
    stepper: Stepper<'a>,
    steps: u64,
    excess: Vec<f64>,
}

impl<'a> Evolver<'a> {
    pub fn new(chain: &'a dyn ChainModel) -> Result<Self> {
        Self::with_cap(chain, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(chain: &'a dyn ChainModel, cap: u128) -> Result<Self> {
        let space = checked_space(chain, cap)?;
        let size = space.size() as usize;
        let row_estimate = chain.n() * chain.n() * 2;
        let stepper = if size.saturating_mul(row_estimate) <= SPARSE_NNZ_CAP {
            Stepper::Stored(SparseKernel::build(chain, &space))
        } else {
            Stepper::OnTheFly(chain)
        };
        let uniform = 1.0 / size as f64;
        let mut excess = vec![-uniform; size];
        excess[space.rank(chain.initial_state()).0] += 1.0;
        Ok(Evolver {
            model: chain.spec(),
            space,
            stepper,
            steps: 0,
            excess,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn advance(&mut self) {
        self.excess = match &self.stepper {
            Stepper::Stored(kernel) => kernel.apply(&self.excess),
            Stepper::OnTheFly(chain) => {
                let space = &self.space;
                let v = &self.excess;
                (0..v.len())
                    .into_par_iter()
                    .map(|y| {
                        let mut acc = 0.0;
                        chain.for_each_transition(space.unrank(StateIndex(y)), &mut |x, w| {
                            acc += ratio_to_f64(w) * v[space.rank(x).0];
                        });
                        acc
                    })
                    .collect()
            }
        };
        self.steps += 1;
    }

    pub fn advance_to(&mut self, k: u64) {
        while self.steps < k {
            self.advance();
        }
    }

    pub fn distribution(&self) -> Distribution {
        let uniform = 1.0 / self.excess.len() as f64;
        Distribution {
            model: self.model,
            steps: self.steps,
            probs: self.excess.iter().map(|d| uniform + d).collect(),
            excess: self.excess.clone(),
        }
    }
}

/// Distribution after `k` steps from the initial state.
pub fn evolve(chain: &dyn ChainModel, k: u64) -> Result<Distribution> {
    evolve_with_cap(chain, k, DEFAULT_STATE_CAP)
}

pub fn evolve_with_cap(chain: &dyn ChainModel, k: u64, cap: u128) -> Result<Distribution> {
    let mut ev = Evolver::with_cap(chain, cap)?;
    ev.advance_to(k);
    Ok(ev.distribution())
}

/// Distributions for every `k` in `0..=kmax`.
pub fn evolve_path(chain: &dyn ChainModel, kmax: u64) -> Result<Vec<Distribution>> {
    let mut ev = Evolver::new(chain)?;
    let mut out = vec![ev.distribution()];
    for _ in 0..kmax {
        ev.advance();
        out.push(ev.distribution());
    }
    Ok(out)
}

/// Exact rational evolution for every `k` in `0..=kmax`.
pub fn evolve_rational_path(
    chain: &dyn ChainModel,
    kmax: u64,
) -> Result<Vec<RationalDistribution>> {
    let space = checked_space(chain, RATIONAL_STATE_CAP)?;
    if kmax > RATIONAL_STEP_CAP {
        return Err(Error::InvalidArgument(format!(
            "rational mode supports at most {RATIONAL_STEP_CAP} steps, got {kmax}"
        )));
    }
    let size = space.size() as usize;
    let rows: Vec<Vec<(usize, BigRational)>> = (0..size)
        .into_par_iter()
        .map(|y| {
            let mut row: Vec<(usize, Ratio<i64>)> = Vec::new();
            chain.for_each_transition(space.unrank(StateIndex(y)), &mut |x, w| {
                row.push((space.rank(x).0, w));
            });
            row.into_iter().map(|(x, w)| (x, ratio_to_big(w))).collect()
        })
        .collect();
    let mut probs = vec![BigRational::zero(); size];
    probs[space.rank(chain.initial_state()).0] = BigRational::from_integer(BigInt::from(1));
    let mut out = vec![RationalDistribution {
        model: chain.spec(),
        steps: 0,
        probs: probs.clone(),
    }];
    for step in 1..=kmax {
        probs = rows
            .par_iter()
            .map(|row| {
                row.iter()
                    .fold(BigRational::zero(), |acc, (x, w)| acc + w * &probs[*x])
            })
            .collect();
        out.push(RationalDistribution {
            model: chain.spec(),
            steps: step,
            probs: probs.clone(),
        });
    }
    Ok(out)
}

pub fn evolve_rational(chain: &dyn ChainModel, k: u64) -> Result<RationalDistribution> {
    Ok(evolve_rational_path(chain, k)?
        .pop()
        .expect("path has k + 1 entries"))
}

/// Dense transition matrix, rows indexed by source.
pub fn dense_kernel(chain: &dyn ChainModel) -> Result<DMatrix<f64>> {
    let space = checked_space(chain, DENSE_EIG_CAP)?;
    let size = space.size() as usize;
    let mut m = DMatrix::zeros(size, size);
    for x in 0..size {
        chain.for_each_transition(space.unrank(StateIndex(x)), &mut |y, w| {
            m[(x, space.rank(y).0)] += ratio_to_f64(w);
        });
    }
    Ok(m)
}

/// Largest `|K(x,y) - K(y,x)|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// All eigenvalues of the kernel, sorted descending.
pub fn spectrum(chain: &dyn ChainModel) -> Result<Vec<f64>> {
    let m = dense_kernel(chain)?;
    let asym = asymmetry(&m);
    if asym > 1e-15 {
        return Err(Error::Asymmetric(asym));
    }
    let sym = (&m + m.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: u64,
    pub kernel_trace: f64,
    pub spectral_trace: f64,
    pub rel_err: f64,
}

/// Compares `Tr(K^k)` with `sum dim * mult * lambda^k` for `k = 1..=kmax`.
///
/// The kernel side propagates every basis vector through the stored kernel
/// and reads back its diagonal entry.
pub fn trace_identity_check(chain: &dyn ChainModel, kmax: u64) -> Result<Vec<TraceRow>> {
    let space = checked_space(chain, DENSE_EIG_CAP)?;
    let size = space.size() as usize;
    let kernel = SparseKernel::build(chain, &space);
    let diagonals: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|x| {
            let mut v = vec![0.0; size];
            v[x] = 1.0;
            (1..=kmax)
                .map(|_| {
                    v = (0..size).map(|y| kernel.row_dot(y, &v)).collect();
                    v[x]
                })
                .collect()
        })
        .collect();
    let catalog = chain.catalog()?;
    (1..=kmax)
        .map(|k| {
            let kernel_trace: f64 = diagonals.iter().map(|d| d[k as usize - 1]).sum();
            let exact = catalog.entries.iter().fold(BigRational::zero(), |acc, e| {
                let w = BigInt::from(e.dim.clone()) * BigInt::from(e.mult);
                acc + num_traits::pow::pow(ratio_to_big(e.eigenvalue), k as usize)
                    * BigRational::from_integer(w)
            });
            let spectral_trace = big_to_f64(&exact);
            let scale = spectral_trace.abs().max(1.0);
            Ok(TraceRow {
                k,
                kernel_trace,
                spectral_trace,
                rel_err: (kernel_trace - spectral_trace).abs() / scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Family, ModelSpec};

    fn chain(f: Family, n: usize, r: usize) -> Box<dyn ChainModel> {
        ModelSpec::new(f, n, r).unwrap().build().unwrap()
    }

    #[test]
    fn point_mass_at_zero_steps() {
        let c = chain(Family::Variant, 4, 2);
        let d = evolve(c.as_ref(), 0).unwrap();
        assert_eq!(d.len(), 6);
        assert!((d.tv_distance() - 5.0 / 6.0).abs() < 1e-15);
        assert!((d.l2n_sq_distance() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn variant_n2_is_uniform_after_one_step() {
        let c = chain(Family::Variant, 2, 1);
        let d = evolve(c.as_ref(), 1).unwrap();
        assert_eq!(d.probs, vec![0.5, 0.5]);
        assert_eq!(d.tv_distance(), 0.0);
        assert_eq!(d.l2n_sq_distance(), 0.0);
    }

    #[test]
    fn classical_n2_alternates() {
        let c = chain(Family::Classical, 2, 1);
        let sp = StateSpace::for_chain(c.as_ref());
        let one = evolve(c.as_ref(), 1).unwrap();
        assert_eq!(
            one.probs[sp.rank(crate::model::State::unsigned(0b10)).0],
            1.0
        );
        let two = evolve(c.as_ref(), 2).unwrap();
        assert_eq!(two.probs[sp.initial_index().0], 1.0);
        for k in 0..6 {
            assert_eq!(evolve(c.as_ref(), k).unwrap().tv_distance(), 0.5);
        }
    }

    #[test]
    fn variant_n4_one_step_matches_bound_example() {
        let c = chain(Family::Variant, 4, 2);
        let d = evolve(c.as_ref(), 1).unwrap();
        assert!((d.l2n_sq_distance() - 0.21875).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let c = chain(Family::PairedFlips, 8, 4);
        assert!(matches!(
            evolve_with_cap(c.as_ref(), 1, 1000),
            Err(Error::CapExceeded {
                required: 17920,
                cap: 1000
            })
        ));
        assert!(spectrum(c.as_ref()).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let c = chain(Family::IndependentFlips, 2, 1);
        let s = spectrum(c.as_ref()).unwrap();
        let want = [1.0, 0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = chain(Family::PairedFlips, 2, 1);
        let s = spectrum(c.as_ref()).unwrap();
        let want = [1.0, 0.5, 0.25, 0.25, 0.25, 0.25, 0.0, -0.5];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_identity_small() {
        let c = chain(Family::IndependentFlips, 2, 1);
        let rows = trace_identity_check(c.as_ref(), 3).unwrap();
        assert!((rows[0].kernel_trace - 2.0).abs() < 1e-12);
        assert!((rows[0].spectral_trace - 2.0).abs() < 1e-12);
        let c = chain(Family::PairedFlips, 3, 1);
        for row in trace_identity_check(c.as_ref(), 2).unwrap() {
            assert!(row.rel_err < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn rational_mode_agrees_with_float() {
        let c = chain(Family::IndependentFlips, 3, 1);
        let exact = evolve_rational_path(c.as_ref(), 6).unwrap();
        let float = evolve_path(c.as_ref(), 6).unwrap();
        for (e, f) in exact.iter().zip(&float) {
            assert_eq!(e.total_mass(), BigRational::from_integer(BigInt::from(1)));
            let ef = e.to_float();
            for (a, b) in ef.probs.iter().zip(&f.probs) {
                assert!((a - b).abs() < 1e-15);
            }
            assert!((big_to_f64(&e.tv_distance()) - f.tv_distance()).abs() < 1e-14);
        }
        assert!(evolve_rational(c.as_ref(), 51).is_err());
    }

    #[test]
    fn csv_export() {
        let c = chain(Family::Variant, 2, 1);
        let d = evolve(c.as_ref(), 1).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "rank,probability\n0,5.0000000000000000e-1\n1,5.0000000000000000e-1\n"
        );
    }
}
