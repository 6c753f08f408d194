use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four built-in chain families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// One ball from each rack is switched every step.
    Classical,
    /// Two uniform positions; switched only when they lie on different racks.
    Variant,
    /// Signed balls, charges of the two moved balls flipped by independent coins.
    #[serde(rename = "independent")]
    IndependentFlips,
    /// Signed balls, charges of the two moved balls flipped together or not at all.
    #[serde(rename = "paired")]
    PairedFlips,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Classical,
        Family::Variant,
        Family::IndependentFlips,
        Family::PairedFlips,
    ];

    /// Registry name, also the `--family` value on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Family::Classical => "classical",
            Family::Variant => "variant",
            Family::IndependentFlips => "independent",
            Family::PairedFlips => "paired",
        }
    }

    pub fn is_signed(self) -> bool {
        matches!(self, Family::IndependentFlips | Family::PairedFlips)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// A chain family together with its ball count `n` and first-rack size `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub n: usize,
    pub r: usize,
}

impl ModelSpec {
    /// Validates `n` and `r`; the 64-ball encoding limit is enforced only when
    /// a chain is built from the spec.
    pub fn new(family: Family, n: usize, r: usize) -> Result<Self> {
        validate_params(n, r)?;
        Ok(ModelSpec { family, n, r })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.family, self.n, self.r)
    }
}

/// `n >= 2` and `1 <= r <= n/2`.
pub fn validate_params(n: usize, r: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("need n >= 2, got n = {n}")));
    }
    if r < 1 || r > n / 2 {
        return Err(Error::InvalidModel(format!(
            "need 1 <= r <= n/2, got n = {n}, r = {r}"
        )));
    }
    Ok(())
}

/// Balls representable in a [`Mask`].
pub const MAX_BALLS: usize = Mask::BITS as usize;

/// One bit per ball.
pub type Mask = u128;

/// [`validate_params`] plus the bitmask limit needed to simulate or enumerate states.
pub fn validate_encodable(n: usize, r: usize) -> Result<()> {
    validate_params(n, r)?;
    if n > MAX_BALLS {
        return Err(Error::InvalidModel(format!(
            "n = {n} exceeds the {MAX_BALLS}-ball state encoding"
        )));
    }
    Ok(())
}

/// Point of the homogeneous space.
///
/// `rack1` holds the labels on the first rack (bit `b` is ball `b + 1`).
/// `signs` marks negatively charged balls and is always zero for the
/// unsigned families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State {
    pub rack1: Mask,
    pub signs: Mask,
}

impl State {
    pub fn unsigned(rack1: Mask) -> Self {
        State { rack1, signs: 0 }
    }

    /// Balls on rack 1 as 1-based labels, ascending.
    pub fn rack1_labels(&self) -> Vec<usize> {
        (0..MAX_BALLS)
            .filter(|b| self.rack1 >> b & 1 == 1)
            .map(|b| b + 1)
            .collect()
    }
}

/// Mask of the first `r` balls, the initial contents of rack 1.
#[inline]
pub fn initial_mask(r: usize) -> Mask {
    if r >= MAX_BALLS {
        Mask::MAX
    } else {
        (1 << r) - 1
    }
}

/// Mask of all `n` balls.
#[inline]
pub fn full_mask(n: usize) -> Mask {
    initial_mask(n)
}
