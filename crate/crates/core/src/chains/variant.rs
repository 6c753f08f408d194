use num_rational::Ratio;
use rand::{Rng, RngCore};

use super::{swap_if_cross, ChainModel};
use crate::catalog::{unsigned_catalog, Catalog};
use crate::error::Result;
use crate::model::{full_mask, validate_encodable, Family, Mask, ModelSpec, State};

/// Two uniform positions are drawn with repetition; the balls are switched
/// only when they sit on different racks.
#[derive(Debug, Clone)]
pub struct VariantChain {
    n: usize,
    r: usize,
}

impl VariantChain {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        validate_encodable(n, r)?;
        Ok(VariantChain { n, r })
    }
}

/// Draws an ordered pair of balls uniformly from `n^2` and swaps them if
/// they are on different racks.
pub fn step_variant(n: usize, rack1: Mask, rng: &mut dyn RngCore) -> Mask {
    let a = rng.gen_range(0..n) as u32;
    let b = rng.gen_range(0..n) as u32;
    swap_if_cross(rack1, a, b)
}

impl ChainModel for VariantChain {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            family: Family::Variant,
            n: self.n,
            r: self.r,
        }
    }

    fn step(&self, state: State, rng: &mut dyn RngCore) -> State {
        State::unsigned(step_variant(self.n, state.rack1, rng))
    }

    fn for_each_transition(&self, state: State, visit: &mut dyn FnMut(State, Ratio<i64>)) {
        let nn = (self.n * self.n) as i64;
        let cross = (self.r * (self.n - self.r)) as i64;
        visit(state, Ratio::new(nn - 2 * cross, nn));
        let swap = Ratio::new(2, nn);
        let rack2 = full_mask(self.n) & !state.rack1;
        let mut from = state.rack1;
        while from != 0 {
            let a = from & from.wrapping_neg();
            let mut to = rack2;
            while to != 0 {
                let b = to & to.wrapping_neg();
                visit(State::unsigned(state.rack1 ^ a ^ b), swap);
                to ^= b;
            }
            from ^= a;
        }
    }

    fn catalog(&self) -> Result<Catalog> {
        unsigned_catalog(self.n, self.r, Family::Variant)
    }
}
