use num_rational::Ratio;
use rand::{Rng, RngCore};

use super::{swap_if_cross, ChainModel};
use crate::catalog::{signed_catalog, Catalog};
use crate::error::Result;
use crate::model::{validate_encodable, Family, ModelSpec, State};

/// How the charges of the two moved balls change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipRule {
    /// Each moved ball flips with its own fair coin.
    Independent,
    /// One fair coin flips both moved balls or neither.
    Paired,
}

/// Signed urn chain; the rack dynamics match the variant chain, and a ball
/// drawn twice keeps its place while its charge flips with probability 1/2.
#[derive(Debug, Clone)]
pub struct SignedChain {
    n: usize,
    r: usize,
    rule: FlipRule,
}

impl SignedChain {
    pub fn new(n: usize, r: usize, rule: FlipRule) -> Result<Self> {
        validate_encodable(n, r)?;
        Ok(SignedChain { n, r, rule })
    }

    pub fn rule(&self) -> FlipRule {
        self.rule
    }
}

fn step_signed(n: usize, state: State, rule: FlipRule, rng: &mut dyn RngCore) -> State {
    let a = rng.gen_range(0..n) as u32;
    let b = rng.gen_range(0..n) as u32;
    let mut signs = state.signs;
    if a == b {
        if rng.gen::<bool>() {
            signs ^= 1 << a;
        }
        return State {
            rack1: state.rack1,
            signs,
        };
    }
    let rack1 = swap_if_cross(state.rack1, a, b);
    match rule {
        FlipRule::Independent => {
            if rng.gen::<bool>() {
                signs ^= 1 << a;
            }
            if rng.gen::<bool>() {
                signs ^= 1 << b;
            }
        }
        FlipRule::Paired => {
            if rng.gen::<bool>() {
                signs ^= (1 << a) | (1 << b);
            }
        }
    }
    State { rack1, signs }
}

pub fn step_independent_flips(n: usize, state: State, rng: &mut dyn RngCore) -> State {
    step_signed(n, state, FlipRule::Independent, rng)
}

pub fn step_paired_flips(n: usize, state: State, rng: &mut dyn RngCore) -> State {
    step_signed(n, state, FlipRule::Paired, rng)
}

impl ChainModel for SignedChain {
    fn spec(&self) -> ModelSpec {
        let family = match self.rule {
            FlipRule::Independent => Family::IndependentFlips,
            FlipRule::Paired => Family::PairedFlips,
        };
        ModelSpec {
            family,
            n: self.n,
            r: self.r,
        }
    }

    fn step(&self, state: State, rng: &mut dyn RngCore) -> State {
        step_signed(self.n, state, self.rule, rng)
    }

    fn for_each_transition(&self, state: State, visit: &mut dyn FnMut(State, Ratio<i64>)) {
        let nn = (self.n * self.n) as i64;
        // same ball drawn twice: weight 1/n^2, then a fair flip coin
        let half = Ratio::new(1, 2 * nn);
        for a in 0..self.n as u32 {
            visit(state, half);
            visit(
                State {
                    rack1: state.rack1,
                    signs: state.signs ^ (1 << a),
                },
                half,
            );
        }
        // unordered distinct pair: weight 2/n^2 split over the flip outcomes
        for a in 0..self.n as u32 {
            for b in a + 1..self.n as u32 {
                let rack1 = swap_if_cross(state.rack1, a, b);
                let (fa, fb) = (1 << a, 1 << b);
                match self.rule {
                    FlipRule::Independent => {
                        let w = Ratio::new(1, 2 * nn);
                        for flip in [0, fa, fb, fa | fb] {
                            visit(
                                State {
                                    rack1,
                                    signs: state.signs ^ flip,
                                },
                                w,
                            );
                        }
                    }
                    FlipRule::Paired => {
                        let w = Ratio::new(1, nn);
                        for flip in [0, fa | fb] {
                            visit(
                                State {
                                    rack1,
                                    signs: state.signs ^ flip,
                                },
                                w,
                            );
                        }
                    }
                }
            }
        }
    }

    fn catalog(&self) -> Result<Catalog> {
        signed_catalog(self.n, self.r, self.spec().family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::kernel_row;
    use crate::model::Mask;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(rack1: Mask, signs: Mask) -> State {
        State { rack1, signs }
    }

    #[test]
    fn independent_row_n2() {
        let chain = SignedChain::new(2, 1, FlipRule::Independent).unwrap();
        let row = kernel_row(&chain, st(0b01, 0b00)).unwrap();
        let e = Ratio::new(1, 8);
        assert_eq!(row.probability(st(0b01, 0b00)), Ratio::new(1, 4));
        assert_eq!(row.probability(st(0b01, 0b01)), e);
        assert_eq!(row.probability(st(0b01, 0b10)), e);
        assert_eq!(row.probability(st(0b01, 0b11)), Ratio::from_integer(0));
        for signs in 0..4 {
            assert_eq!(row.probability(st(0b10, signs)), e);
        }
        assert_eq!(row.entries.len(), 7);
        assert_eq!(row.total(), Ratio::from_integer(1));
    }

    #[test]
    fn paired_row_n2() {
        let chain = SignedChain::new(2, 1, FlipRule::Paired).unwrap();
        let row = kernel_row(&chain, st(0b01, 0b00)).unwrap();
        assert_eq!(row.probability(st(0b01, 0b00)), Ratio::new(1, 4));
        assert_eq!(row.probability(st(0b10, 0b00)), Ratio::new(1, 4));
        assert_eq!(row.probability(st(0b10, 0b11)), Ratio::new(1, 4));
        assert_eq!(row.probability(st(0b10, 0b01)), Ratio::from_integer(0));
        assert_eq!(row.probability(st(0b10, 0b10)), Ratio::from_integer(0));
    }

    #[test]
    fn holding_probability_is_a_quarter_at_n2() {
        for rule in [FlipRule::Independent, FlipRule::Paired] {
            let chain = SignedChain::new(2, 1, rule).unwrap();
            for rack1 in [0b01, 0b10] {
                for signs in 0..4 {
                    let s = st(rack1, signs);
                    assert_eq!(
                        kernel_row(&chain, s).unwrap().probability(s),
                        Ratio::new(1, 4)
                    );
                }
            }
        }
    }

    #[test]
    fn paired_flip_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut s = st(0b000111, 0);
        for _ in 0..5000 {
            let next = step_paired_flips(6, s, &mut rng);
            let flipped = (next.signs ^ s.signs).count_ones();
            assert!(flipped <= 2);
            if flipped == 1 {
                // only a ball drawn twice flips alone, and it never moves
                assert_eq!(next.rack1, s.rack1);
            }
            s = next;
        }
    }

    #[test]
    fn double_draw_never_moves_a_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = st(0b01, 0);
        for _ in 0..1000 {
            let next = step_independent_flips(2, s, &mut rng);
            if next.rack1 == s.rack1 {
                assert!((next.signs ^ s.signs).count_ones() <= 1);
            }
        }
    }
}
