//! Linear algebra over GF(2) and Pauli-string algebra.
//!
//! Bit `i` of a [`BitString`] addresses qubit `i`. When packed into bytes
//! (wire and file formats), bit `i` lives in byte `i / 8` at position
//! `i % 8`, least significant first.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of rejected draws after which [`sample_invertible`] gives up.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: matrix has {cols} columns, vector has {len} bits")]
    DimensionMismatch { cols: usize, len: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("matrix is singular")]
    Singular,
    #[error("rng fault: {0} consecutive singular draws")]
    RngFault(usize),
    #[error("invalid hex bitstring {text:?}: {reason}")]
    InvalidHex { text: String, reason: &'static str },
}

/// Fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        s.clear_padding();
        s
    }

    /// Takes the low `len` bits of `value`; bit `i` of the string is bit `i` of `value`.
    pub fn from_u64(len: usize, value: u64) -> Self {
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = value;
            s.clear_padding();
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses a string of `'0'`/`'1'` characters, first character is bit 0.
    pub fn from_binary_str(text: &str) -> Option<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self {
            len,
            words: (0..len.div_ceil(64)).map(|_| rng.gen()).collect(),
        };
        s.clear_padding();
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn try_xor(&self, other: &Self) -> Result<Self, Gf2Error> {
        self.check_len(other)?;
        Ok(Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn try_and(&self, other: &Self) -> Result<Self, Gf2Error> {
        self.check_len(other)?;
        Ok(Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        })
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Self) -> Result<bool, Gf2Error> {
        self.check_len(other)?;
        let parity = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones());
        Ok(parity & 1 == 1)
    }

    /// Bits `range.start..range.end` as a new string.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.len, "bad slice {start}..{end} of {}", self.len);
        Self::from_bits((start..end).map(|i| self.get(i)))
    }

    pub fn prefix(&self, m: usize) -> Self {
        self.slice(0, m)
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self::from_bits(self.iter().chain(other.iter()))
    }

    /// Value of the low 64 bits (bit `i` becomes bit `i` of the integer).
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    /// Little-endian packing: bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = (self.words[i / 8] >> ((i % 8) * 8)) as u8;
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Rejects input whose padding bits are set.
    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut s = Self::zeros(len);
        for (i, &b) in bytes.iter().enumerate() {
            s.words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        let before = s.words.clone();
        s.clear_padding();
        (s.words == before).then_some(s)
    }

    pub fn to_hex(&self) -> String {
        hex_encode(&self.to_bytes())
    }

    pub fn from_hex(len: usize, text: &str) -> Result<Self, Gf2Error> {
        let bad = |reason| Gf2Error::InvalidHex {
            text: text.to_string(),
            reason,
        };
        let text = text.trim();
        if text.len() != 2 * len.div_ceil(8) {
            return Err(bad("wrong number of hex digits for the bit length"));
        }
        let bytes = hex_decode(text).ok_or_else(|| bad("not a hex string"))?;
        Self::from_bytes(len, &bytes).ok_or_else(|| bad("padding bits beyond the length are set"))
    }

    fn check_len(&self, other: &Self) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    fn clear_padding(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
        self.words.truncate(self.len.div_ceil(64));
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    fn bitxor(self, rhs: &BitString) -> BitString {
        self.try_xor(rhs).expect("xor of bitstrings with different lengths")
    }
}

impl BitXorAssign<&BitString> for BitString {
    fn bitxor_assign(&mut self, rhs: &BitString) {
        self.check_len(rhs).expect("xor of bitstrings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        fmt::Display::fmt(self, f)?;
        write!(f, ")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Serialized as `{"len": n, "hex": "..."}` using the byte packing above.
impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("BitString", 2)?;
        st.serialize_field("len", &self.len)?;
        st.serialize_field("hex", &self.to_hex())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            len: usize,
            hex: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        BitString::from_hex(raw.len, &raw.hex).map_err(serde::de::Error::custom)
    }
}

/// Dense GF(2) matrix stored as bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: Vec<BitString>,
    cols: usize,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows: vec![BitString::zeros(cols); rows],
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitString>) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, BitString::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Gf2Error::LengthMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        Ok(Self { rows, cols })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self {
            rows: (0..rows).map(|_| BitString::random(cols, rng)).collect(),
            cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitString {
        &self.rows[i]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn mul_vec(&self, x: &BitString) -> Result<BitString, Gf2Error> {
        if x.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                cols: self.cols,
                len: x.len(),
            });
        }
        let mut out = BitString::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            out.set(i, row.dot(x)?);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, Gf2Error> {
        if other.n_rows() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                cols: self.cols,
                len: other.n_rows(),
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = BitString::zeros(other.cols);
                for k in 0..self.cols {
                    if row.get(k) {
                        acc ^= &other.rows[k];
                    }
                }
                acc
            })
            .collect();
        Ok(Self {
            rows,
            cols: other.cols,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in 0..self.cols {
                if row.get(c) {
                    t.rows[c].set(r, true);
                }
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    *row ^= &pivot_row;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rows.len() == self.cols && self.rank() == self.cols
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self, Gf2Error> {
        let n = self.cols;
        if self.rows.len() != n {
            return Err(Gf2Error::Singular);
        }
        let mut a = self.rows.clone();
        let mut inv = Self::identity(n).rows;
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r].get(col)).ok_or(Gf2Error::Singular)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let (pa, pi) = (a[col].clone(), inv[col].clone());
            for r in 0..n {
                if r != col && a[r].get(col) {
                    a[r] ^= &pa;
                    inv[r] ^= &pi;
                }
            }
        }
        Ok(Self { rows: inv, cols: n })
    }

    /// Decomposes the matrix into a CNOT circuit realizing `|z> -> |Mz>`.
    ///
    /// Uses elimination without row swaps: a zero pivot is repaired by one
    /// row addition from below, so the circuit has at most `n^2` gates.
    pub fn cnot_circuit(&self) -> Result<Vec<Cnot>, Gf2Error> {
        let n = self.cols;
        if self.rows.len() != n {
            return Err(Gf2Error::Singular);
        }
        let mut a = self.rows.clone();
        // Row op "row[target] ^= row[control]" is left multiplication by E.
        let mut ops = Vec::new();
        for col in 0..n {
            if !a[col].get(col) {
                let src = (col + 1..n).find(|&r| a[r].get(col)).ok_or(Gf2Error::Singular)?;
                let src_row = a[src].clone();
                a[col] ^= &src_row;
                ops.push(Cnot {
                    control: src,
                    target: col,
                });
            }
            let pivot_row = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != col && row.get(col) {
                    *row ^= &pivot_row;
                    ops.push(Cnot {
                        control: col,
                        target: r,
                    });
                }
            }
        }
        // E_k ... E_1 M = I, so M = E_1 ... E_k; applied to a state the
        // rightmost factor acts first.
        ops.reverse();
        Ok(ops)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}

impl Serialize for Gf2Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<String> = self.rows.iter().map(BitString::to_hex).collect();
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Gf2Matrix", 3)?;
        st.serialize_field("rows", &self.rows.len())?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("row_hex", &rows)?;
        st.end()
    }
}

/// A controlled-NOT acting on computational basis bits as `z[target] ^= z[control]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cnot {
    pub control: usize,
    pub target: usize,
}

impl Cnot {
    pub fn apply(&self, z: &mut BitString) {
        if z.get(self.control) {
            z.flip(self.target);
        }
    }
}

/// Samples a uniformly random invertible `n x n` matrix by rejection.
pub fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Lowercase or uppercase hex, two digits per byte.
pub fn hex_decode(text: &str) -> Option<Vec<u8>> {
    if !text.len().is_multiple_of(2) || !text.is_ascii() {
        return None;
    }
    (0..text.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&text[i..i + 2], 16).ok())
        .collect()
}

pub fn sample_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Gf2Matrix, Gf2Error> {
    if n == 0 {
        return Err(Gf2Error::EmptyDimension);
    }
    for _ in 0..MAX_REJECTIONS {
        let m = Gf2Matrix::random(n, n, rng);
        if m.is_invertible() {
            return Ok(m);
        }
    }
    Err(Gf2Error::RngFault(MAX_REJECTIONS))
}

/// Probability that a uniform `n x n` matrix is invertible: `prod (1 - 2^-i)`.
pub fn invertible_fraction(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 - 0.5f64.powi(i as i32)).product()
}

/// `i^phase * X^x Z^z`, with X's written to the left of Z's.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PauliString {
    pub x_part: BitString,
    pub z_part: BitString,
    pub phase_exp: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            x_part: BitString::zeros(n),
            z_part: BitString::zeros(n),
            phase_exp: 0,
        }
    }

    pub fn new(x_part: BitString, z_part: BitString, phase_exp: u8) -> Result<Self, Gf2Error> {
        if x_part.len() != z_part.len() {
            return Err(Gf2Error::LengthMismatch {
                left: x_part.len(),
                right: z_part.len(),
            });
        }
        Ok(Self {
            x_part,
            z_part,
            phase_exp: phase_exp % 4,
        })
    }

    /// `X^x`.
    pub fn x_string(x: BitString) -> Self {
        let n = x.len();
        Self {
            x_part: x,
            z_part: BitString::zeros(n),
            phase_exp: 0,
        }
    }

    /// `Z^z`.
    pub fn z_string(z: BitString) -> Self {
        let n = z.len();
        Self {
            x_part: BitString::zeros(n),
            z_part: z,
            phase_exp: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.x_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_part.is_empty()
    }

    /// True when the operator is proportional to the identity.
    pub fn is_identity(&self) -> bool {
        self.x_part.is_zero() && self.z_part.is_zero()
    }

    /// Equality up to global phase.
    pub fn same_up_to_phase(&self, other: &Self) -> bool {
        self.x_part == other.x_part && self.z_part == other.z_part
    }

    /// `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self, Gf2Error> {
        let overlap = self.z_part.try_and(&other.x_part)?.weight();
        Ok(Self {
            x_part: self.x_part.try_xor(&other.x_part)?,
            z_part: self.z_part.try_xor(&other.z_part)?,
            phase_exp: ((self.phase_exp as usize + other.phase_exp as usize + 2 * overlap) % 4) as u8,
        })
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool, Gf2Error> {
        let a = self.x_part.dot(&other.z_part)?;
        let b = self.z_part.dot(&other.x_part)?;
        Ok(a == b)
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = ["+", "+i", "-", "-i"][self.phase_exp as usize % 4];
        write!(f, "{phase}")?;
        for q in 0..self.len() {
            let c = match (self.x_part.get(q), self.z_part.get(q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'W', // X·Z = -iY
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn bs(s: &str) -> BitString {
        BitString::from_binary_str(s).unwrap()
    }

    #[test]
    fn n1_invertible_is_unique() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = sample_invertible(1, &mut rng).unwrap();
            assert_eq!(m, Gf2Matrix::identity(1));
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_invertible(0, &mut rng), Err(Gf2Error::EmptyDimension));
    }

    /// Brute-force count of invertible matrices by determinant over all entries.
    fn count_invertible_brute(n: usize) -> usize {
        (0u64..1 << (n * n))
            .filter(|&bits| {
                let rows = (0..n)
                    .map(|r| BitString::from_u64(n, (bits >> (r * n)) & ((1 << n) - 1)))
                    .collect();
                // determinant via permutation expansion over GF(2)
                let m = Gf2Matrix::from_rows(rows).unwrap();
                permanent_mod2(&m)
            })
            .count()
    }

    fn permanent_mod2(m: &Gf2Matrix) -> bool {
        // over GF(2) the determinant equals the permanent
        fn rec(m: &Gf2Matrix, row: usize, used: &mut Vec<bool>) -> bool {
            if row == m.n_rows() {
                return true;
            }
            let mut acc = false;
            for c in 0..m.n_cols() {
                if !used[c] && m.get(row, c) {
                    used[c] = true;
                    acc ^= rec(m, row + 1, used);
                    used[c] = false;
                }
            }
            acc
        }
        rec(m, 0, &mut vec![false; m.n_cols()])
    }

    #[test]
    fn invertible_counts_match_enumeration() {
        assert_eq!(count_invertible_brute(2), 6);
        assert_eq!(count_invertible_brute(3), 168);
    }

    #[test]
    fn n3_reaches_all_168() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..20_000 {
            seen.insert(sample_invertible(3, &mut rng).unwrap());
        }
        assert_eq!(seen.len(), 168);
    }

    #[test]
    fn mat_vec_examples() {
        let x = bs("1011");
        assert_eq!(Gf2Matrix::identity(4).mul_vec(&x).unwrap(), x);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = sample_invertible(4, &mut rng).unwrap();
        assert!(m.mul_vec(&BitString::zeros(4)).unwrap().is_zero());

        // rows (1,1) and (0,1); x = (1,0): out = (1*1 ^ 1*0, 0*1 ^ 1*0) = (1,0)
        let m = Gf2Matrix::from_rows(vec![bs("11"), bs("01")]).unwrap();
        assert_eq!(m.mul_vec(&bs("10")).unwrap(), bs("10"));
        assert_eq!(m.mul_vec(&bs("01")).unwrap(), bs("11"));
    }

    #[test]
    fn mat_vec_dimension_mismatch() {
        let m = Gf2Matrix::identity(3);
        assert!(matches!(
            m.mul_vec(&bs("10")),
            Err(Gf2Error::DimensionMismatch { cols: 3, len: 2 })
        ));
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..12 {
            let m = sample_invertible(n, &mut rng).unwrap();
            let inv = m.inverse().unwrap();
            assert_eq!(m.mul(&inv).unwrap(), Gf2Matrix::identity(n));
            assert_eq!(inv.mul(&m).unwrap(), Gf2Matrix::identity(n));
        }
        assert_eq!(Gf2Matrix::zeros(2, 2).inverse(), Err(Gf2Error::Singular));
    }

    #[test]
    fn cnot_circuit_realizes_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..10 {
            for _ in 0..20 {
                let m = sample_invertible(n, &mut rng).unwrap();
                let circuit = m.cnot_circuit().unwrap();
                assert!(circuit.len() <= n * n);
                for _ in 0..5 {
                    let x = BitString::random(n, &mut rng);
                    let mut z = x.clone();
                    for g in &circuit {
                        g.apply(&mut z);
                    }
                    assert_eq!(z, m.mul_vec(&x).unwrap());
                }
            }
        }
    }

    #[test]
    fn hex_packing_is_little_endian_within_bytes() {
        let mut x = BitString::zeros(12);
        x.set(0, true);
        x.set(9, true);
        assert_eq!(x.to_bytes(), vec![0x01, 0x02]);
        assert_eq!(x.to_hex(), "0102");
        assert_eq!(BitString::from_hex(12, "0102").unwrap(), x);
        assert!(BitString::from_hex(12, "01f2").is_err(), "padding bit set");
        assert!(BitString::from_hex(12, "01").is_err());
        assert!(BitString::from_hex(8, "zz").is_err());
    }

    #[test]
    fn pauli_examples() {
        let x1 = PauliString::x_string(bs("1"));
        let z1 = PauliString::z_string(bs("1"));
        let id = PauliString::identity(1);
        assert_eq!(id.multiply(&x1).unwrap(), x1);
        assert!(x1.multiply(&x1).unwrap().is_identity());
        let zx = z1.multiply(&x1).unwrap();
        let xz = x1.multiply(&z1).unwrap();
        assert!(zx.same_up_to_phase(&xz));
        assert_eq!((zx.phase_exp + 4 - xz.phase_exp) % 4, 2);
        assert!(!x1.commutes_with(&z1).unwrap());
        assert!(x1.multiply(&PauliString::identity(2)).is_err());
    }

    /// 2x2 complex matrices as [[re, im]; 4], row-major.
    type M2 = [(f64, f64); 4];

    fn m2_mul(a: &M2, b: &M2) -> M2 {
        let mut out = [(0.0, 0.0); 4];
        for r in 0..2 {
            for c in 0..2 {
                for k in 0..2 {
                    let (ar, ai) = a[r * 2 + k];
                    let (br, bi) = b[k * 2 + c];
                    out[r * 2 + c].0 += ar * br - ai * bi;
                    out[r * 2 + c].1 += ar * bi + ai * br;
                }
            }
        }
        out
    }

    fn dense_single(p: &PauliString) -> M2 {
        let id: M2 = [(1., 0.), (0., 0.), (0., 0.), (1., 0.)];
        let x: M2 = [(0., 0.), (1., 0.), (1., 0.), (0., 0.)];
        let z: M2 = [(1., 0.), (0., 0.), (0., 0.), (-1., 0.)];
        let mut m = id;
        if p.x_part.get(0) {
            m = m2_mul(&m, &x);
        }
        if p.z_part.get(0) {
            m = m2_mul(&m, &z);
        }
        let ph = [(1., 0.), (0., 1.), (-1., 0.), (0., -1.)][p.phase_exp as usize];
        let phm: M2 = [ph, (0., 0.), (0., 0.), ph];
        m2_mul(&phm, &m)
    }

    #[test]
    fn single_qubit_products_match_dense_matrices() {
        let mut all = Vec::new();
        for x in [false, true] {
            for z in [false, true] {
                for ph in 0..4 {
                    all.push(
                        PauliString::new(BitString::from_bits([x]), BitString::from_bits([z]), ph)
                            .unwrap(),
                    );
                }
            }
        }
        for a in &all {
            for b in &all {
                let got = dense_single(&a.multiply(b).unwrap());
                let want = m2_mul(&dense_single(a), &dense_single(b));
                for k in 0..4 {
                    assert!((got[k].0 - want[k].0).abs() < 1e-12);
                    assert!((got[k].1 - want[k].1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn n2_histogram_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples = 100_000;
        let mut counts: HashMap<Gf2Matrix, usize> = HashMap::new();
        for _ in 0..samples {
            *counts.entry(sample_invertible(2, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - samples as f64 * p).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn invertible_fraction_bound() {
        // expected rejection attempts stay below 3.47
        for n in 1..64 {
            assert!(invertible_fraction(n) >= 0.288);
            assert!(1.0 / invertible_fraction(n) <= 3.47);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bitstring(n: usize) -> impl Strategy<Value = BitString> {
            proptest::collection::vec(any::<bool>(), n).prop_map(BitString::from_bits)
        }

        fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
            (bitstring(n), bitstring(n), 0u8..4)
                .prop_map(|(x, z, p)| PauliString::new(x, z, p).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn mat_vec_is_linear(seed in any::<u64>(), n in 1usize..20) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = sample_invertible(n, &mut rng).unwrap();
                prop_assert_eq!(m.rank(), n);
                let x = BitString::random(n, &mut rng);
                let y = BitString::random(n, &mut rng);
                let lhs = m.mul_vec(&(&x ^ &y)).unwrap();
                let rhs = &m.mul_vec(&x).unwrap() ^ &m.mul_vec(&y).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn pauli_product_is_associative(a in pauli(5), b in pauli(5), c in pauli(5)) {
                let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
                let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn xor_group_laws(n in 0usize..130, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = BitString::random(n, &mut rng);
                let b = BitString::random(n, &mut rng);
                let c = BitString::random(n, &mut rng);
                prop_assert_eq!(&(&a ^ &b) ^ &c, &a ^ &(&b ^ &c));
                prop_assert_eq!(&a ^ &b, &b ^ &a);
                prop_assert!((&a ^ &a).is_zero());
            }

            #[test]
            fn hex_round_trip(n in 0usize..200, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = BitString::random(n, &mut rng);
                prop_assert_eq!(BitString::from_hex(n, &a.to_hex()).unwrap(), a);
            }
        }
    }
}
