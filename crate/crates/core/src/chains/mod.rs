//! Chain families as interchangeable strategies.
//!
//! Every family implements [`ChainModel`]: a single-step sampler, an exact
//! enumeration of one-step transitions, and its representation catalog.
//! Families are looked up by name in a [`Registry`]; the command line and the
//! verification suites only ever talk to `dyn ChainModel`.

mod classical;
mod signed;
mod variant;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use rand::RngCore;

pub use classical::{step_classical, ClassicalChain};
pub use signed::{step_independent_flips, step_paired_flips, FlipRule, SignedChain};
pub use variant::{step_variant, VariantChain};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::model::{full_mask, initial_mask, Family, Mask, ModelSpec, State};

/// A Markov chain on the (signed) urn state space.
pub trait ChainModel: Send + Sync + fmt::Debug {
    /// Family and parameters this chain was built with.
    fn spec(&self) -> ModelSpec;

    /// Name the chain is registered under.
    fn name(&self) -> &str {
        self.spec().family.name()
    }

    fn n(&self) -> usize {
        self.spec().n
    }

    fn r(&self) -> usize {
        self.spec().r
    }

    fn is_signed(&self) -> bool {
        self.spec().family.is_signed()
    }

    /// Balls `1..=r` on rack 1, every charge positive.
    fn initial_state(&self) -> State {
        State::unsigned(initial_mask(self.r()))
    }

    /// One random step.
    fn step(&self, state: State, rng: &mut dyn RngCore) -> State;

    /// Calls `visit` for every elementary outcome of one step from `state`
    /// with its exact probability. Targets may repeat; weights sum to one.
    fn for_each_transition(&self, state: State, visit: &mut dyn FnMut(State, Ratio<i64>));

    /// Irreducible constituents with dimensions, multiplicities and eigenvalues.
    fn catalog(&self) -> Result<Catalog>;

    /// Step count at which the family's upper bound reaches `a e^{-c/2}`, rounded up.
    fn theorem_k(&self, c: f64) -> Result<u64> {
        let spec = self.spec();
        crate::spectral::theorem_k(spec.family, spec.n, spec.r, c)
    }

    /// Whether `state` is a point of this chain's state space.
    fn is_valid_state(&self, state: State) -> bool {
        let full = full_mask(self.n());
        state.rack1 & !full == 0
            && state.rack1.count_ones() as usize == self.r()
            && if self.is_signed() {
                state.signs & !full == 0
            } else {
                state.signs == 0
            }
    }
}

/// Exact one-step distribution from one source state.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub source: State,
    /// Distinct targets in ascending order, each with positive probability.
    pub entries: Vec<(State, Ratio<i64>)>,
}

impl KernelRow {
    pub fn probability(&self, target: State) -> Ratio<i64> {
        self.entries
            .binary_search_by_key(&target, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or_else(|_| Ratio::zero())
    }

    pub fn total(&self) -> Ratio<i64> {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Aggregated exact row of the transition kernel.
pub fn kernel_row(chain: &dyn ChainModel, state: State) -> Result<KernelRow> {
    if !chain.is_valid_state(state) {
        return Err(Error::InvalidArgument(format!(
            "{state:?} is not a state of {}",
            chain.spec()
        )));
    }
    let mut acc: BTreeMap<State, Ratio<i64>> = BTreeMap::new();
    chain.for_each_transition(state, &mut |target, w| {
        *acc.entry(target).or_insert_with(Ratio::zero) += w;
    });
    let entries: Vec<_> = acc.into_iter().filter(|(_, w)| !w.is_zero()).collect();
    debug_assert_eq!(
        entries.iter().map(|e| e.1).sum::<Ratio<i64>>(),
        Ratio::one()
    );
    Ok(KernelRow {
        source: state,
        entries,
    })
}

/// Builds a chain for given `(n, r)`.
pub type ChainFactory = Arc<dyn Fn(usize, usize) -> Result<Box<dyn ChainModel>> + Send + Sync>;

/// Chain families keyed by name.
#[derive(Clone, Default)]
pub struct Registry {
    factories: BTreeMap<String, ChainFactory>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("families", &self.names())
            .finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    /// The four built-in families under their `Family::name()`.
    pub fn builtin() -> Self {
        let mut reg = Registry::empty();
        reg.register(Family::Classical.name(), |n, r| {
            Ok(Box::new(ClassicalChain::new(n, r)?) as Box<dyn ChainModel>)
        });
        reg.register(Family::Variant.name(), |n, r| {
            Ok(Box::new(VariantChain::new(n, r)?) as Box<dyn ChainModel>)
        });
        reg.register(Family::IndependentFlips.name(), |n, r| {
            Ok(Box::new(SignedChain::new(n, r, FlipRule::Independent)?) as Box<dyn ChainModel>)
        });
        reg.register(Family::PairedFlips.name(), |n, r| {
            Ok(Box::new(SignedChain::new(n, r, FlipRule::Paired)?) as Box<dyn ChainModel>)
        });
        reg
    }

    /// Adds or replaces a family.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(usize, usize) -> Result<Box<dyn ChainModel>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn factory(&self, name: &str) -> Option<ChainFactory> {
        self.factories.get(name).cloned()
    }

    pub fn build(&self, name: &str, n: usize, r: usize) -> Result<Box<dyn ChainModel>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))?;
        factory(n, r)
    }

    /// Builds one chain per registered family at the same `(n, r)`.
    pub fn build_all(&self, n: usize, r: usize) -> Result<Vec<Box<dyn ChainModel>>> {
        self.factories.values().map(|f| f(n, r)).collect()
    }
}

static BUILTIN: Lazy<Registry> = Lazy::new(Registry::builtin);

/// Process-wide registry of the built-in families.
pub fn builtin_registry() -> &'static Registry {
    &BUILTIN
}

impl ModelSpec {
    /// Instantiates the chain via the built-in registry.
    pub fn build(&self) -> Result<Box<dyn ChainModel>> {
        builtin_registry().build(self.family.name(), self.n, self.r)
    }
}

/// Label of the `k`-th set bit (0-based) of `mask`.
#[inline]
pub(crate) fn nth_set_bit(mut mask: Mask, k: usize) -> u32 {
    for _ in 0..k {
        mask &= mask - 1;
    }
    mask.trailing_zeros()
}

#[inline]
pub(crate) fn swap_if_cross(rack1: Mask, a: u32, b: u32) -> Mask {
    let in_a = rack1 >> a & 1;
    let in_b = rack1 >> b & 1;
    if in_a != in_b {
        rack1 ^ (1 << a) ^ (1 << b)
    } else {
        rack1
    }
}
