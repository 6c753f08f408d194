use num_rational::Ratio;
use rand::{Rng, RngCore};

use super::{nth_set_bit, ChainModel};
use crate::catalog::{unsigned_catalog, Catalog};
use crate::error::Result;
use crate::model::{full_mask, validate_encodable, Family, Mask, ModelSpec, State};

/// One uniformly chosen ball from each rack is switched every step.
#[derive(Debug, Clone)]
pub struct ClassicalChain {
    n: usize,
    r: usize,
}

impl ClassicalChain {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        validate_encodable(n, r)?;
        Ok(ClassicalChain { n, r })
    }
}

/// Switches a uniform ball of rack 1 with a uniform ball of rack 2.
pub fn step_classical(n: usize, r: usize, rack1: Mask, rng: &mut dyn RngCore) -> Mask {
    let rack2 = full_mask(n) & !rack1;
    let a = nth_set_bit(rack1, rng.gen_range(0..r));
    let b = nth_set_bit(rack2, rng.gen_range(0..n - r));
    rack1 ^ (1 << a) ^ (1 << b)
}

impl ChainModel for ClassicalChain {
    fn spec(&self) -> ModelSpec {
        ModelSpec {
            family: Family::Classical,
            n: self.n,
            r: self.r,
        }
    }

    fn step(&self, state: State, rng: &mut dyn RngCore) -> State {
        State::unsigned(step_classical(self.n, self.r, state.rack1, rng))
    }

    fn for_each_transition(&self, state: State, visit: &mut dyn FnMut(State, Ratio<i64>)) {
        let w = Ratio::new(1, (self.r * (self.n - self.r)) as i64);
        let rack2 = full_mask(self.n) & !state.rack1;
        let mut from = state.rack1;
        while from != 0 {
            let a = from & from.wrapping_neg();
            let mut to = rack2;
            while to != 0 {
                let b = to & to.wrapping_neg();
                visit(State::unsigned(state.rack1 ^ a ^ b), w);
                to ^= b;
            }
            from ^= a;
        }
    }

    fn catalog(&self) -> Result<Catalog> {
        unsigned_catalog(self.n, self.r, Family::Classical)
    }
}
