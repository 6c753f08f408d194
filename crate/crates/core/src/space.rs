//! Dense indexing of the state space: colexicographic subset rank, with the
//! sign mask as the high-order digit for signed chains.

use crate::chains::ChainModel;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::combinatorics::{binomial, colex_rank, colex_unrank, BinomialTable, MAX_BALLS};
use crate::model::{initial_mask, Mask, State};

/// Position of a state in dense vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIndex(pub usize);

#[derive(Debug, Clone)]
pub struct StateSpace {
    n: usize,
    r: usize,
    signed: bool,
    subsets: u64,
    table: BinomialTable,
}

/// `C(n, r)`, times `2^n` when signed.
pub fn state_count(n: usize, r: usize, signed: bool) -> BigUint {
    let base = binomial(n as u64, r as i64);
    if signed {
        base << n
    } else {
        base
    }
}

/// [`state_count`] saturated to `u128`, convenient for cap checks.
pub fn state_count_saturating(n: usize, r: usize, signed: bool) -> u128 {
    state_count(n, r, signed).to_u128().unwrap_or(u128::MAX)
}

/// Largest `n` whose states can be ranked.
pub const MAX_RANKED_BALLS: usize = MAX_BALLS;

impl StateSpace {
    /// Panics when `n` exceeds [`MAX_RANKED_BALLS`]; check sizes with
    /// [`state_count`] first.
    pub fn new(n: usize, r: usize, signed: bool) -> Self {
        assert!(n <= MAX_RANKED_BALLS, "cannot rank states of {n} balls");
        let table = BinomialTable::new();
        let subsets = table.get(n, r);
        StateSpace {
            n,
            r,
            signed,
            subsets,
            table,
        }
    }

    pub fn for_chain(chain: &dyn ChainModel) -> Self {
        StateSpace::new(chain.n(), chain.r(), chain.is_signed())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Number of `r`-subsets, `C(n, r)`.
    pub fn subset_count(&self) -> u64 {
        self.subsets
    }

    /// `C(n, r)`, times `2^n` for signed chains; saturates at `u128::MAX`.
    pub fn size(&self) -> u128 {
        let base = self.subsets as u128;
        if self.signed {
            base.saturating_mul(1u128 << self.n)
        } else {
            base
        }
    }

    #[inline]
    pub fn subset_rank(&self, rack1: Mask) -> u64 {
        colex_rank(&self.table, rack1 as u64)
    }

    #[inline]
    pub fn rank(&self, state: State) -> StateIndex {
        let sub = colex_rank(&self.table, state.rack1 as u64);
        StateIndex((state.signs as u64 * self.subsets + sub) as usize)
    }

    #[inline]
    pub fn unrank(&self, index: StateIndex) -> State {
        let idx = index.0 as u64;
        let signs = idx / self.subsets;
        let sub = idx % self.subsets;
        State {
            rack1: colex_unrank(&self.table, self.n, self.r, sub) as Mask,
            signs: signs as Mask,
        }
    }

    pub fn initial_index(&self) -> StateIndex {
        self.rank(State::unsigned(initial_mask(self.r)))
    }

    /// Every state in index order; only meaningful when `size()` fits in memory.
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.size() as usize).map(move |i| self.unrank(StateIndex(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes() {
        assert_eq!(StateSpace::new(4, 2, false).size(), 6);
        assert_eq!(StateSpace::new(2, 1, true).size(), 8);
        assert_eq!(StateSpace::new(8, 4, true).size(), 17920);
        assert_eq!(StateSpace::new(10, 5, true).size(), 258_048);
    }

    #[test]
    fn initial_rank_is_computed_not_assumed() {
        let sp = StateSpace::new(6, 3, true);
        let idx = sp.initial_index();
        assert_eq!(sp.unrank(idx), State::unsigned(0b111));
    }

    proptest! {
        #[test]
        fn rank_unrank_round_trip(n in 2usize..=16, r_seed in 0usize..8, raw in any::<u64>(), signed in any::<bool>()) {
            let r = 1 + r_seed % (n / 2);
            let sp = StateSpace::new(n, r, signed);
            let idx = StateIndex((raw % sp.size() as u64) as usize);
            let state = sp.unrank(idx);
            prop_assert_eq!(state.rack1.count_ones() as usize, r);
            prop_assert!(state.rack1 < (1 << n));
            prop_assert_eq!(sp.rank(state), idx);
        }
    }
}
