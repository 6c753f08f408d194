//! Parallel walkers with per-walker random streams.

use std::io::{Read, Write};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chains::ChainModel;
use crate::error::{Error, Result};
use crate::model::{Mask, ModelSpec, State};
use crate::space::{state_count_saturating, StateSpace};
use crate::spectral::spherical_s1_f64;

/// Header of the binary terminal-state dump.
pub const RECORD_MAGIC: &[u8; 8] = b"URNMC01\0";
/// Empirical TV is only reported for spaces up to this size.
pub const EMPIRICAL_TV_MAX_STATES: u128 = 100_000;
/// Required walkers per state for empirical TV.
pub const EMPIRICAL_TV_WALKERS_PER_STATE: u128 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub k: u64,
    pub walkers: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub model: ModelSpec,
    pub k: u64,
    pub walkers: u64,
    pub seed: u64,
    pub mean_s1: f64,
    pub stderr_s1: f64,
    pub empirical_tv: Option<f64>,
    /// `sqrt(|X| / walkers) / 2`, reported next to `empirical_tv`.
    pub tv_bias_ceiling: Option<f64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Random stream for walker `worker`; depends only on `(seed, worker)`.
pub fn derive_stream(seed: u64, worker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker);
    rng
}

/// Sum in a fixed balanced tree, independent of how the input was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Terminal state of every walker, in walker order.
pub fn terminal_states(chain: &dyn ChainModel, k: u64, walkers: u64, seed: u64) -> Vec<State> {
    (0..walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = derive_stream(seed, w);
            let mut state = chain.initial_state();
            for _ in 0..k {
                state = chain.step(state, &mut rng);
            }
            state
        })
        .collect()
}

pub fn run(chain: &dyn ChainModel, config: &SimConfig) -> Result<SimSummary> {
    if config.walkers == 0 {
        return Err(Error::InvalidArgument("walkers must be at least 1".into()));
    }
    if chain.spec() != config.model {
        return Err(Error::InvalidArgument(format!(
            "chain {} does not match configured model {}",
            chain.spec(),
            config.model
        )));
    }
    let start = Instant::now();
    let states = terminal_states(chain, config.k, config.walkers, config.seed);
    let summary = summarize(chain, config, &states, start.elapsed());
    Ok(summary)
}

/// Statistics of a set of terminal states.
pub fn summarize(
    chain: &dyn ChainModel,
    config: &SimConfig,
    states: &[State],
    elapsed: Duration,
) -> SimSummary {
    let (n, r) = (chain.n(), chain.r());
    let count = states.len() as f64;
    let s1: Vec<f64> = states
        .par_iter()
        .map(|s| spherical_s1_f64(n, r, s.rack1))
        .collect();
    let mean = pairwise_sum(&s1) / count;
    let sq: Vec<f64> = s1.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if states.len() > 1 {
        pairwise_sum(&sq) / (count - 1.0)
    } else {
        0.0
    };
    let stderr = (var / count).sqrt();

    let size = state_count_saturating(n, r, chain.is_signed());
    let (empirical_tv, tv_bias_ceiling) = if size <= EMPIRICAL_TV_MAX_STATES
        && (states.len() as u128) >= EMPIRICAL_TV_WALKERS_PER_STATE * size
    {
        let space = StateSpace::for_chain(chain);
        let mut hist = vec![0u64; size as usize];
        for s in states {
            hist[space.rank(*s).0] += 1;
        }
        let u = 1.0 / size as f64;
        let dev: Vec<f64> = hist.iter().map(|&c| (c as f64 / count - u).abs()).collect();
        (
            Some(0.5 * pairwise_sum(&dev)),
            Some(0.5 * (size as f64 / count).sqrt()),
        )
    } else {
        (None, None)
    };

    SimSummary {
        model: config.model,
        k: config.k,
        walkers: states.len() as u64,
        seed: config.seed,
        mean_s1: mean,
        stderr_s1: stderr,
        empirical_tv,
        tv_bias_ceiling,
        elapsed,
    }
}

/// Writes the magic header followed by one `(signs, rack1)` record per state.
///
/// Records hold 64-bit masks, so states with balls beyond label 64 are rejected.
pub fn write_records<W: Write>(mut out: W, states: &[State]) -> Result<()> {
    let wide = (u64::MAX as Mask) ^ Mask::MAX;
    if let Some(s) = states.iter().find(|s| (s.rack1 | s.signs) & wide != 0) {
        return Err(Error::InvalidArgument(format!(
            "state {s:?} does not fit the 64-bit record format"
        )));
    }
    out.write_all(RECORD_MAGIC)?;
    for s in states {
        out.write_all(&(s.signs as u64).to_le_bytes())?;
        out.write_all(&(s.rack1 as u64).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(mut input: R) -> Result<Vec<State>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let body = bytes
        .strip_prefix(RECORD_MAGIC.as_slice())
        .ok_or_else(|| Error::InvalidArgument("missing URNMC01 header".into()))?;
    if body.len() % 16 != 0 {
        return Err(Error::InvalidArgument(format!(
            "truncated record stream: {} trailing bytes",
            body.len() % 16
        )));
    }
    Ok(body
        .chunks_exact(16)
        .map(|c| State {
            signs: u64::from_le_bytes(c[..8].try_into().unwrap()) as Mask,
            rack1: u64::from_le_bytes(c[8..].try_into().unwrap()) as Mask,
        })
        .collect())
}
