//! Bit-packed vectors and matrices over F2.
//!
//! Bit order convention, used everywhere in this crate: bit index 0 is the
//! first feature. The text rendering of a vector puts bit 0 leftmost, so the
//! string `"100"` has exactly feature 0 set. When a short vector doubles as
//! an array index (transform bins), bit i maps to the 2^i place of the index.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the trailing word.
#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length vector over F2, packed into 64-bit words. Bits past `len`
/// are kept zero so weight and parity can run over whole words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        BinaryVector {
            len,
            words: vec![0; word_count(len)],
        }
    }

    /// Vector with the given bit positions set.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BinaryVector::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    /// Interpret the low `len` bits of `index` as a vector (bit i of the
    /// index becomes component i). Used for transform bins with small `len`.
    pub fn from_index(index: usize, len: usize) -> Self {
        assert!(len >= usize::BITS as usize || index < (1usize << len));
        let mut v = BinaryVector::zeros(len);
        if let Some(first) = v.words.first_mut() {
            *first = index as u64 & tail_mask(len.min(WORD_BITS));
        }
        v
    }

    /// Inverse of [`BinaryVector::from_index`]; requires `len` to fit in a `usize`.
    pub fn to_index(&self) -> usize {
        assert!(self.len <= usize::BITS as usize, "vector too long for an index");
        self.words.first().map(|&w| w as usize).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn xor_assign(&mut self, other: &BinaryVector) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BinaryVector) -> BinaryVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Number of set bits.
    pub fn hamming_weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryVector) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Indices of the set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.hamming_weight());
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                out.push(w * WORD_BITS + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Grow or shrink to `len`, zero-filling new positions.
    pub fn resized(&self, len: usize) -> BinaryVector {
        let mut out = BinaryVector::zeros(len);
        let shared = word_count(len.min(self.len));
        out.words[..shared].copy_from_slice(&self.words[..shared]);
        if !out.words.is_empty() {
            let last = out.words.len() - 1;
            out.words[last] &= tail_mask(len);
        }
        out
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Parity of <a, b> over F2, i.e. popcount(a AND b) mod 2.
pub fn dot_parity(a: &BinaryVector, b: &BinaryVector) -> Result<bool> {
    if a.len != b.len {
        return Err(Error::DimensionMismatch {
            context: "dot_parity operands",
            expected: a.len,
            got: b.len,
        });
    }
    Ok(dot_parity_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_parity_unchecked(a: &BinaryVector, b: &BinaryVector) -> bool {
    let mut acc = 0u64;
    for (x, y) in a.words.iter().zip(&b.words) {
        acc ^= x & y;
    }
    acc.count_ones() & 1 == 1
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({})", self)
    }
}

impl FromStr for BinaryVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = BinaryVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(v)
    }
}

impl Serialize for BinaryVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Row-major packed matrix over F2.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BinaryVector>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix {
            rows,
            cols,
            data: vec![BinaryVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BinaryMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i].set(i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BinaryVector>) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix rows",
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Ok(BinaryMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BinaryVector {
        &self.data[i]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &BinaryVector> {
        self.data.iter()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    /// Keep only the first `cols` columns of every row.
    pub fn truncated_cols(&self, cols: usize) -> BinaryMatrix {
        assert!(cols <= self.cols);
        BinaryMatrix {
            rows: self.rows,
            cols,
            data: self.data.iter().map(|r| r.resized(cols)).collect(),
        }
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {}", r)?;
        }
        Ok(())
    }
}

/// y = M v over F2: y_i is the parity of row i AND v.
pub fn gf2_matvec(m: &BinaryMatrix, v: &BinaryVector) -> Result<BinaryVector> {
    if v.len() != m.cols {
        return Err(Error::DimensionMismatch {
            context: "gf2_matvec vector length",
            expected: m.cols,
            got: v.len(),
        });
    }
    let mut out = BinaryVector::zeros(m.rows);
    for (i, row) in m.data.iter().enumerate() {
        if dot_parity_unchecked(row, v) {
            out.set(i, true);
        }
    }
    Ok(out)
}

/// y = M^T v over F2, computed as the XOR of the rows of M selected by v.
pub fn gf2_matvec_t(m: &BinaryMatrix, v: &BinaryVector) -> Result<BinaryVector> {
    if v.len() != m.rows {
        return Err(Error::DimensionMismatch {
            context: "gf2_matvec_t vector length",
            expected: m.rows,
            got: v.len(),
        });
    }
    let mut out = BinaryVector::zeros(m.cols);
    for i in 0..m.rows {
        if v.get(i) {
            out.xor_assign(&m.data[i]);
        }
    }
    Ok(out)
}

/// Matrix with i.i.d. fair bits, deterministic for a given RNG state.
pub fn random_binary_matrix(rows: usize, cols: usize, rng: &mut impl RngCore) -> BinaryMatrix {
    let mut m = BinaryMatrix::zeros(rows, cols);
    for row in &mut m.data {
        for word in &mut row.words {
            *word = rng.next_u64();
        }
        if let Some(last) = row.words.last_mut() {
            *last &= tail_mask(cols);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::substream;
    use proptest::prelude::*;

    fn bv(s: &str) -> BinaryVector {
        s.parse().unwrap()
    }

    #[test]
    fn matvec_identity_and_zero() {
        let eye = BinaryMatrix::identity(3);
        let v = bv("101");
        assert_eq!(gf2_matvec(&eye, &v).unwrap(), v);

        let m = random_binary_matrix(4, 3, &mut substream(9, "test"));
        let zero = BinaryVector::zeros(3);
        assert!(gf2_matvec(&m, &zero).unwrap().is_zero());
    }

    #[test]
    fn matvec_hand_example() {
        let m = BinaryMatrix::from_rows(vec![bv("110"), bv("011")]).unwrap();
        assert_eq!(gf2_matvec(&m, &bv("110")).unwrap(), bv("01"));
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let m = BinaryMatrix::identity(3);
        assert!(gf2_matvec(&m, &bv("10")).is_err());
        assert!(gf2_matvec_t(&m, &bv("1011")).is_err());
    }

    #[test]
    fn dot_parity_examples() {
        assert!(!dot_parity(&bv("0000"), &bv("1011")).unwrap());
        assert!(!dot_parity(&bv("11"), &bv("11")).unwrap());
        assert!(dot_parity(&bv("110"), &bv("100")).unwrap());
        assert!(dot_parity(&bv("10"), &bv("101")).is_err());
    }

    #[test]
    fn hamming_weight_examples() {
        assert_eq!(bv("0000").hamming_weight(), 0);
        assert_eq!(bv("1111").hamming_weight(), 4);
        assert_eq!(bv("1010").hamming_weight(), 2);
    }

    #[test]
    fn random_matrix_is_seed_deterministic() {
        let a = random_binary_matrix(8, 64, &mut substream(7, "plan"));
        let b = random_binary_matrix(8, 64, &mut substream(7, "plan"));
        let c = random_binary_matrix(8, 64, &mut substream(8, "plan"));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_matrix_density() {
        let m = random_binary_matrix(64, 4096, &mut substream(3, "plan"));
        let ones: usize = m.row_iter().map(|r| r.hamming_weight()).sum();
        let frac = ones as f64 / (64.0 * 4096.0);
        assert!((0.45..=0.55).contains(&frac), "one-bit fraction {frac}");
    }

    #[test]
    fn index_round_trip() {
        for idx in [0usize, 1, 5, 63, 200] {
            let v = BinaryVector::from_index(idx, 9);
            assert_eq!(v.to_index(), idx % 512);
        }
        assert_eq!(BinaryVector::from_index(5, 8).to_string(), "10100000");
    }

    #[test]
    fn display_parse_round_trip() {
        let v = bv("10110001101");
        assert_eq!(v.to_string().parse::<BinaryVector>().unwrap(), v);
        assert!("10a1".parse::<BinaryVector>().is_err());
    }

    proptest! {
        #[test]
        fn matvec_is_linear(seed in 0u64..1000, n in 1usize..100, r in 1usize..40) {
            let mut rng = substream(seed, "prop");
            let m = random_binary_matrix(r, n, &mut rng);
            let a = random_binary_matrix(1, n, &mut rng).row(0).clone();
            let b = random_binary_matrix(1, n, &mut rng).row(0).clone();
            let lhs = gf2_matvec(&m, &a.xor(&b)).unwrap();
            let rhs = gf2_matvec(&m, &a).unwrap().xor(&gf2_matvec(&m, &b).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn dot_parity_matches_weight_of_and(seed in 0u64..1000, n in 1usize..200) {
            let mut rng = substream(seed, "prop");
            let a = random_binary_matrix(1, n, &mut rng).row(0).clone();
            let b = random_binary_matrix(1, n, &mut rng).row(0).clone();
            let and_weight: usize = a.words().iter().zip(b.words())
                .map(|(x, y)| (x & y).count_ones() as usize)
                .sum();
            prop_assert_eq!(dot_parity(&a, &b).unwrap(), and_weight % 2 == 1);
        }

        #[test]
        fn transpose_matvec_agree(seed in 0u64..1000, n in 1usize..80, r in 1usize..20) {
            let mut rng = substream(seed, "prop");
            let m = random_binary_matrix(r, n, &mut rng);
            let l = random_binary_matrix(1, r, &mut rng).row(0).clone();
            let fast = gf2_matvec_t(&m, &l).unwrap();
            let mut slow = BinaryVector::zeros(n);
            for c in 0..n {
                let mut bit = false;
                for i in 0..r {
                    bit ^= m.get(i, c) && l.get(i);
                }
                slow.set(c, bit);
            }
            prop_assert_eq!(fast, slow);
        }
    }
}
