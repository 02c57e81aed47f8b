//! One-way-function stand-ins. These are INSECURE toys: they exist to drive
//! the construction mechanics, not to provide any hardness.

use serde::Serialize;

use super::PrgError;
use crate::gf2::BitString;

/// Widest OWF input supported (the PRG seed is at most 64 bits).
pub const MAX_OWF_BITS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "owf_id", rename_all = "snake_case")]
pub enum OwfSpec {
    /// `x -> g^x mod p`, cycle-walked back into `bits`-bit strings.
    ///
    /// `p` is the smallest safe prime above `2^bits` and `g` generates the
    /// full group, so `x -> g^x - 1` permutes `[0, p-2]`; restricting that
    /// permutation to `[0, 2^bits)` by cycle walking keeps it one-to-one and
    /// length preserving.
    #[serde(rename = "toyexp")]
    ToyExp { bits: usize, modulus: u64, generator: u64 },
    /// A fixed-key bijective mix of xors, odd multiplications and xorshifts.
    #[serde(rename = "keyedperm")]
    KeyedPerm { bits: usize, key: u64 },
    /// `x -> x`. Only useful for degenerate checks.
    #[serde(rename = "identity")]
    Identity { bits: usize },
}

const KEYEDPERM_DEFAULT_KEY: u64 = 0x5eed_c0ff_ee15_600d;

impl OwfSpec {
    /// Builds the canonical instance of `id` on `bits`-bit inputs.
    pub fn from_id(id: &str, bits: usize) -> Result<Self, PrgError> {
        if bits == 0 || bits > MAX_OWF_BITS {
            return Err(PrgError::OwfWidth(bits));
        }
        match id {
            "toyexp" => Self::toyexp(bits),
            "keyedperm" => Ok(Self::KeyedPerm {
                bits,
                key: KEYEDPERM_DEFAULT_KEY,
            }),
            "identity" => Ok(Self::Identity { bits }),
            other => Err(PrgError::UnknownOwf(other.to_string())),
        }
    }

    pub fn toyexp(bits: usize) -> Result<Self, PrgError> {
        if bits == 0 || bits > MAX_OWF_BITS {
            return Err(PrgError::OwfWidth(bits));
        }
        let modulus = smallest_safe_prime_above(1u64 << bits);
        let generator = (2..modulus)
            .find(|&g| is_generator_of_safe_prime(g, modulus))
            .expect("every safe prime has a generator");
        Ok(Self::ToyExp {
            bits,
            modulus,
            generator,
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::ToyExp { .. } => "toyexp",
            Self::KeyedPerm { .. } => "keyedperm",
            Self::Identity { .. } => "identity",
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            Self::ToyExp { bits, .. } | Self::KeyedPerm { bits, .. } | Self::Identity { bits } => bits,
        }
    }

    pub fn output_len(&self) -> usize {
        self.input_len()
    }

    /// Evaluates the function on an integer in `[0, 2^bits)`.
    pub fn eval_u64(&self, x: u64) -> u64 {
        match *self {
            Self::ToyExp {
                bits,
                modulus,
                generator,
            } => {
                let bound = 1u64 << bits;
                let mut v = x;
                loop {
                    v = pow_mod(generator, v, modulus) - 1;
                    if v < bound {
                        return v;
                    }
                }
            }
            Self::KeyedPerm { bits, key } => keyed_mix(x, bits, key),
            Self::Identity { .. } => x,
        }
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString, PrgError> {
        if x.len() != self.input_len() {
            return Err(PrgError::LengthMismatch {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        Ok(BitString::from_u64(self.output_len(), self.eval_u64(x.to_u64())))
    }
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keyed_mix(x: u64, bits: usize, key: u64) -> u64 {
    let m = mask(bits);
    let shift = (bits / 2).max(1);
    let mut ks = key;
    let mut v = x & m;
    for _ in 0..4 {
        v ^= splitmix(&mut ks) & m;
        v = v.wrapping_mul(splitmix(&mut ks) | 1) & m;
        v ^= v >> shift;
    }
    v
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut result = 1u128 % m;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result as u64
}

/// Deterministic Miller-Rabin, exact for all `u64`.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn smallest_safe_prime_above(bound: u64) -> u64 {
    (bound + 1..)
        .find(|&p| is_prime(p) && is_prime((p - 1) / 2) && p % 2 == 1)
        .expect("safe primes are unbounded")
}

/// For a safe prime `p = 2q + 1`, `g` has order `p - 1` iff `g^2 != 1` and `g^q != 1`.
fn is_generator_of_safe_prime(g: u64, p: u64) -> bool {
    let q = (p - 1) / 2;
    pow_mod(g, 2, p) != 1 && pow_mod(g, q, p) != 1
}
