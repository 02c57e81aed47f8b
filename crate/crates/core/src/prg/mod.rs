//! Hardcore-bit pseudorandom generator built from a one-way function.
//!
//! One extension step maps `x ∥ r` to `f(x) ∥ r ∥ <x, r>`; iterating it on a
//! constant-length state and emitting the inner-product bit each round
//! stretches a `seed_len`-bit seed to `out_len` bits. The induced output
//! distribution carries at most `seed_len * ln 2` nats of entropy.

mod battery;
mod owf;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

pub use battery::{distinguisher_battery, AdvantageReport, BatteryTest, MIN_BATTERY_SAMPLES};
pub use owf::{OwfSpec, MAX_OWF_BITS};

use crate::channel::{DistributionSpec, MAX_ENUMERABLE_SEED_LEN};
use crate::gf2::BitString;
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrgError {
    #[error("length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown owf id {0:?} (expected toyexp, keyedperm or identity)")]
    UnknownOwf(String),
    #[error("owf width {0} outside 1..={max}", max = MAX_OWF_BITS)]
    OwfWidth(usize),
    #[error("invalid PRG configuration: {0}")]
    Config(String),
    #[error("battery needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrgConfig {
    owf: OwfSpec,
    seed_len: usize,
    out_len: usize,
}

impl PrgConfig {
    /// `seed_len` must be even (the state splits into equal `x` and `r`
    /// halves) and match twice the OWF width. `out_len == seed_len` is the
    /// degenerate no-stretch generator.
    pub fn new(owf: OwfSpec, seed_len: usize, out_len: usize) -> Result<Self, PrgError> {
        if seed_len < 2 || !seed_len.is_multiple_of(2) {
            return Err(PrgError::Config(format!(
                "seed_len {seed_len} must be even and at least 2"
            )));
        }
        if owf.input_len() * 2 != seed_len {
            return Err(PrgError::Config(format!(
                "owf width {} does not match half of seed_len {seed_len}",
                owf.input_len()
            )));
        }
        if out_len < seed_len {
            return Err(PrgError::Config(format!(
                "out_len {out_len} is shorter than seed_len {seed_len}"
            )));
        }
        Ok(Self {
            owf,
            seed_len,
            out_len,
        })
    }

    /// Convenience constructor using the canonical OWF named by `owf_id`.
    pub fn from_id(owf_id: &str, seed_len: usize, out_len: usize) -> Result<Self, PrgError> {
        if !seed_len.is_multiple_of(2) {
            return Err(PrgError::Config(format!(
                "seed_len {seed_len} must be even and at least 2"
            )));
        }
        Self::new(OwfSpec::from_id(owf_id, seed_len / 2)?, seed_len, out_len)
    }

    pub fn owf(&self) -> &OwfSpec {
        &self.owf
    }

    pub fn seed_len(&self) -> usize {
        self.seed_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn is_enumerable(&self) -> bool {
        self.seed_len <= MAX_ENUMERABLE_SEED_LEN
    }

    /// `seed_len * ln 2`, the entropy ceiling of the output distribution.
    pub fn entropy_bound_nats(&self) -> f64 {
        self.seed_len as f64 * std::f64::consts::LN_2
    }
}

/// `f(x) ∥ r ∥ <x, r>`.
pub fn gl_extend(owf: &OwfSpec, x: &BitString, r: &BitString) -> Result<BitString, PrgError> {
    if x.len() != owf.input_len() {
        return Err(PrgError::LengthMismatch {
            expected: owf.input_len(),
            got: x.len(),
        });
    }
    if r.len() != x.len() {
        return Err(PrgError::LengthMismatch {
            expected: x.len(),
            got: r.len(),
        });
    }
    let hardcore = x.dot(r).expect("lengths checked");
    let mut out = owf.eval(x)?.concat(r);
    out = out.concat(&BitString::from_bits([hardcore]));
    Ok(out)
}

/// Stretches `seed` to `cfg.out_len()` bits.
///
/// Each of the `out_len - seed_len` rounds emits one hardcore bit and keeps
/// the first `seed_len` bits of the extension as the next state; the final
/// state fills the remaining output.
pub fn stretch(cfg: &PrgConfig, seed: &BitString) -> Result<BitString, PrgError> {
    if seed.len() != cfg.seed_len {
        return Err(PrgError::LengthMismatch {
            expected: cfg.seed_len,
            got: seed.len(),
        });
    }
    let half = cfg.seed_len / 2;
    let rounds = cfg.out_len - cfg.seed_len;
    let mut emitted = Vec::with_capacity(cfg.out_len);
    let mut state = seed.clone();
    for _ in 0..rounds {
        let x = state.slice(0, half);
        let r = state.slice(half, cfg.seed_len);
        let ext = gl_extend(&cfg.owf, &x, &r)?;
        emitted.push(ext.get(ext.len() - 1));
        state = ext.prefix(cfg.seed_len);
    }
    Ok(BitString::from_bits(emitted.into_iter().chain(state.iter())))
}

/// Integer-only fast path of [`stretch`] used for exhaustive enumeration.
fn stretch_u64(cfg: &PrgConfig, seed: u64) -> BitString {
    let half = cfg.seed_len / 2;
    let half_mask = (1u64 << half) - 1;
    let rounds = cfg.out_len - cfg.seed_len;
    let mut out = BitString::zeros(cfg.out_len);
    let (mut x, r) = (seed & half_mask, (seed >> half) & half_mask);
    for i in 0..rounds {
        out.set(i, (x & r).count_ones() % 2 == 1);
        x = cfg.owf.eval_u64(x);
    }
    for j in 0..half {
        out.set(rounds + j, x >> j & 1 == 1);
        out.set(rounds + half + j, r >> j & 1 == 1);
    }
    out
}

/// Exact output frequencies over all `2^seed_len` seeds, sorted by output.
pub fn enumerate_image(cfg: &PrgConfig, exec: Execution) -> Result<Vec<(BitString, u64)>, PrgError> {
    if !cfg.is_enumerable() {
        return Err(PrgError::Config(format!(
            "seed_len {} exceeds the enumeration cap {MAX_ENUMERABLE_SEED_LEN}",
            cfg.seed_len
        )));
    }
    const CHUNK: u64 = 1 << 12;
    let total = 1u64 << cfg.seed_len;
    let chunks = total.div_ceil(CHUNK);
    let counts = par::map_reduce(
        chunks,
        exec,
        HashMap::<BitString, u64>::new,
        |c| {
            let mut local = HashMap::new();
            for seed in c * CHUNK..((c + 1) * CHUNK).min(total) {
                *local.entry(stretch_u64(cfg, seed)).or_insert(0) += 1;
            }
            local
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        },
    );
    let mut image: Vec<_> = counts.into_iter().collect();
    image.sort();
    Ok(image)
}

/// The output distribution of the generator on a uniform seed. Enumerable
/// configurations carry the exact table; larger ones support sampling only.
pub fn induced_distribution(cfg: &PrgConfig) -> DistributionSpec {
    let table = enumerate_image(cfg, Execution::default()).ok().map(|image| {
        let total = (1u64 << cfg.seed_len) as f64;
        image
            .into_iter()
            .map(|(x, c)| (x, c as f64 / total))
            .collect()
    });
    DistributionSpec::prg_induced(cfg.clone(), table)
}

/// Exactly uniform `n`-bit samples for use as a battery reference. Small `n`
/// uses the explicit uniform table; larger even `n` uses the identity OWF
/// without stretch, whose output is the seed itself.
pub fn uniform_reference(n: usize) -> Result<DistributionSpec, PrgError> {
    if n <= 16 {
        return DistributionSpec::uniform(n).map_err(|e| PrgError::Config(e.to_string()));
    }
    if n.is_multiple_of(2) && n / 2 <= MAX_OWF_BITS {
        let cfg = PrgConfig::from_id("identity", n, n)?;
        return Ok(DistributionSpec::prg_induced(cfg, None));
    }
    Err(PrgError::Config(format!(
        "no uniform reference for n = {n}: need n <= 16 or even n <= {}",
        2 * MAX_OWF_BITS
    )))
}
