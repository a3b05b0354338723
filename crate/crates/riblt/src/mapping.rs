//! Deterministic mapping of items to coded-symbol indices.
//!
//! An item is mapped to index `i` with probability `rho(i) = 1/(1 + alpha*i)`.
//! Instead of rolling a die per index, a [`Mapper`] samples the *gap* to the
//! next mapped index by inverting the gap CDF, so producing each mapped index
//! costs O(1). Because `rho(0) = 1`, every item is mapped to index 0 and the
//! emitted sequence is strictly increasing from there.
//!
//! Everything here is a two-party wire contract: the PRNG update function,
//! the seed derivation, the uniform-double extraction, and the inverse-CDF
//! formulas must be identical on both sides. See `docs/wire.md`.

use crate::error::{Error, Result};
use crate::symbol::HashedItem;

/// Default `alpha` for the regular profile; the square-root inverse below
/// is exact for this value.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Default irregular profile: three subsets with these weights...
pub const IRREGULAR_WEIGHTS: [f64; 3] = [0.18, 0.56, 0.26];
/// ...and these per-subset `alpha` values.
pub const IRREGULAR_ALPHAS: [f64; 3] = [0.11, 0.68, 0.82];

/// Probability that a random item is mapped to coded symbol `i`.
pub fn mapping_probability(i: u64, alpha: f64) -> f64 {
    1.0 / (1.0 + alpha * i as f64)
}

/// How items choose their mapping probability.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingProfile {
    /// Every item uses the same `alpha`.
    Regular { alpha: f64 },
    /// Items are partitioned into `weights.len()` subsets by their checksum;
    /// subset `j` is chosen with probability `weights[j]` and maps with
    /// `alphas[j]`.
    Irregular { weights: Vec<f64>, alphas: Vec<f64> },
}

impl Default for MappingProfile {
    fn default() -> Self {
        MappingProfile::regular()
    }
}

impl MappingProfile {
    /// The regular profile with `alpha = 0.5`.
    pub fn regular() -> Self {
        MappingProfile::Regular {
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn regular_with_alpha(alpha: f64) -> Result<Self> {
        let p = MappingProfile::Regular { alpha };
        p.validate()?;
        Ok(p)
    }

    /// The published three-subset irregular profile.
    pub fn irregular_default() -> Self {
        MappingProfile::Irregular {
            weights: IRREGULAR_WEIGHTS.to_vec(),
            alphas: IRREGULAR_ALPHAS.to_vec(),
        }
    }

    pub fn irregular(weights: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        let p = MappingProfile::Irregular { weights, alphas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MappingProfile::Regular { alpha } => {
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::InvalidProfile(format!("alpha must be > 0, got {alpha}")));
                }
            }
            MappingProfile::Irregular { weights, alphas } => {
                if weights.is_empty() || weights.len() != alphas.len() {
                    return Err(Error::InvalidProfile(format!(
                        "need matching non-empty weights/alphas, got {}/{}",
                        weights.len(),
                        alphas.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                    return Err(Error::InvalidProfile("weights must be > 0".into()));
                }
                if alphas.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(Error::InvalidProfile("alphas must be > 0".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidProfile(format!(
                        "weights must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_irregular(&self) -> bool {
        matches!(self, MappingProfile::Irregular { .. })
    }

    /// Subset index for an item's checksum: subset `j` covers the checksum
    /// fractions `[sum(w_0..w_j), sum(w_0..=w_j))`.
    pub fn subset_index(&self, checksum: u64) -> usize {
        match self {
            MappingProfile::Regular { .. } => 0,
            MappingProfile::Irregular { weights, .. } => {
                let u = checksum as f64 / 18_446_744_073_709_551_616.0; // 2^64
                let mut acc = 0.0;
                for (j, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return j;
                    }
                }
                weights.len() - 1
            }
        }
    }

    /// The `alpha` governing the mapping of an item with this checksum.
    pub fn alpha_for(&self, checksum: u64) -> f64 {
        match self {
            MappingProfile::Regular { alpha } => *alpha,
            MappingProfile::Irregular { alphas, .. } => alphas[self.subset_index(checksum)],
        }
    }

    /// Probability that a random item maps to index `i` under this profile
    /// (the subset mixture for irregular profiles). This is what the wire
    /// format uses to predict cell counts.
    pub fn mapping_probability(&self, i: u64) -> f64 {
        match self {
            MappingProfile::Regular { alpha } => mapping_probability(i, *alpha),
            MappingProfile::Irregular { weights, alphas } => weights
                .iter()
                .zip(alphas)
                .map(|(w, a)| w * mapping_probability(i, *a))
                .sum(),
        }
    }
}

/// Inverse of the gap CDF: the (real-valued) gap below which a fraction `r`
/// of the mass lies, for an item currently at index `i`.
///
/// For `alpha = 0.5` this is the exact closed form; for other `alpha` it is
/// the Stirling-approximate inverse. Both are pinned wire behavior.
fn inverse_gap_cdf(i: u64, alpha: f64, r: f64) -> f64 {
    if alpha == 0.5 {
        let t = 3.0 + 2.0 * i as f64;
        ((t * t - r) / (4.0 * (1.0 - r))).sqrt() - t / 2.0
    } else {
        (i as f64 + 1.0) * ((1.0 - r).powf(-alpha) - 1.0)
    }
}

/// Integer gap sampled from uniform `r` in `[0, 1)` at current index `i`.
/// The gap is at least 1 by definition; `r = 0` would otherwise yield 0.
pub(crate) fn sample_gap(i: u64, alpha: f64, r: f64) -> u64 {
    let g = inverse_gap_cdf(i, alpha, r).ceil();
    if g < 1.0 {
        1
    } else {
        g as u64
    }
}

/// Seed substituted when an item's checksum is zero (the xorshift state must
/// be non-zero).
const ZERO_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

/// xorshift64*: the per-item deterministic generator. The multiplier
/// perturbs the weak low bits of plain xorshift before outputs are
/// truncated. Its update function is part of the wire contract.
#[derive(Debug, Clone)]
pub(crate) struct ItemRng {
    state: u64,
}

impl ItemRng {
    pub(crate) fn new(checksum: u64) -> Self {
        ItemRng {
            state: if checksum == 0 { ZERO_SEED } else { checksum },
        }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }
}

/// Generator of the strictly increasing index sequence for one item.
///
/// Fully determined by the item's checksum and the profile; both parties
/// derive identical sequences.
#[derive(Debug, Clone)]
pub struct Mapper {
    rng: ItemRng,
    alpha: f64,
    last: u64,
    started: bool,
}

impl Mapper {
    pub fn new(h: &HashedItem, profile: &MappingProfile) -> Self {
        Mapper {
            rng: ItemRng::new(h.checksum),
            alpha: profile.alpha_for(h.checksum),
            last: 0,
            started: false,
        }
    }

    // Uniform double in [0, 1) from the top 53 bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Next index this item is mapped to. The first call returns 0 without
    /// consuming randomness (`rho(0) = 1`).
    pub fn next_index(&mut self) -> u64 {
        if !self.started {
            self.started = true;
            return 0;
        }
        let r = self.uniform();
        let gap = sample_gap(self.last, self.alpha, r);
        self.last = self.last.saturating_add(gap);
        self.last
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}
