//! Shortened primitive narrow-sense binary BCH codes.
//!
//! The code serves two jobs here: its parity rows provide the shift vectors
//! used when sampling, and its decoder turns noisy per-bin sign observations
//! back into the interaction index that generated them. Decoding is
//! Berlekamp-Massey followed by a Chien search, with an optional chase pass
//! over the least reliable positions for soft inputs.
//!
//! Layout conventions. A message has `n` bits (the shortened dimension); a
//! received word has `n + p` bits, message part first. Internally, message
//! symbol `i` of the full `(n_c, k_c)` code sits at polynomial degree
//! `n_c - 1 - i` and parity symbol `j` at degree `p - 1 - j`, so a codeword
//! is `[u ; P u]` with `P` the `p x k_c` systematic parity matrix. Shortening
//! keeps the first `n` columns of `P`; positions `n..k_c` are pinned to zero
//! and any decode that claims an error there is rejected.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gf2::{gf2_matvec, BinaryMatrix, BinaryVector};

/// One primitive polynomial per extension degree, bit i = coefficient of x^i.
const PRIMITIVE_POLYS: [(u32, u32); 14] = [
    (3, 0b1011),
    (4, 0b1_0011),
    (5, 0b10_0101),
    (6, 0b100_0011),
    (7, 0b1000_1001),
    (8, 0b1_0001_1101),
    (9, 0b10_0001_0001),
    (10, 0b100_0000_1001),
    (11, 0b1000_0000_0101),
    (12, 0b1_0000_0101_0011),
    (13, 0b10_0000_0001_1011),
    (14, 0b100_0100_0100_0011),
    (15, 0b1000_0000_0000_0011),
    (16, 0b1_0001_0000_0000_1011),
];

/// Cap on the extension degree; covers n up to 65519.
pub const MAX_M: usize = 16;

/// GF(2^m) arithmetic via log/antilog tables.
struct GfTables {
    n_c: usize,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl GfTables {
    fn new(m: usize) -> Self {
        let poly = PRIMITIVE_POLYS
            .iter()
            .find(|(deg, _)| *deg as usize == m)
            .map(|(_, p)| *p)
            .expect("extension degree out of table range");
        let n_c = (1usize << m) - 1;
        let mut exp = vec![0u32; 2 * n_c];
        let mut log = vec![0u32; n_c + 1];
        let mut x = 1u32;
        for (e, slot) in exp.iter_mut().enumerate().take(n_c) {
            *slot = x;
            log[x as usize] = e as u32;
            x <<= 1;
            if x >> m != 0 {
                x ^= poly;
            }
        }
        for e in n_c..2 * n_c {
            exp[e] = exp[e - n_c];
        }
        GfTables { n_c, exp, log }
    }

    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    #[inline]
    fn inv(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        self.exp[self.n_c - self.log[a as usize] as usize]
    }

    #[inline]
    fn alpha_pow(&self, e: usize) -> u32 {
        self.exp[e % self.n_c]
    }
}

/// Cyclotomic coset of `i` modulo `n_c = 2^m - 1`.
fn cyclotomic_coset(i: usize, n_c: usize) -> Vec<usize> {
    let mut coset = vec![i % n_c];
    let mut next = (2 * i) % n_c;
    while next != i % n_c {
        coset.push(next);
        next = (2 * next) % n_c;
    }
    coset
}

/// Degree-tracked binary polynomial, bit d of word d/64 = coefficient of x^d.
#[derive(Clone)]
struct BitPoly {
    bits: Vec<u64>,
}

impl BitPoly {
    fn one() -> Self {
        BitPoly { bits: vec![1] }
    }

    fn get(&self, d: usize) -> bool {
        self.bits
            .get(d / 64)
            .map(|w| (w >> (d % 64)) & 1 == 1)
            .unwrap_or(false)
    }

    fn set(&mut self, d: usize) {
        let w = d / 64;
        if w >= self.bits.len() {
            self.bits.resize(w + 1, 0);
        }
        self.bits[w] |= 1 << (d % 64);
    }

    fn degree(&self) -> usize {
        for (w, &word) in self.bits.iter().enumerate().rev() {
            if word != 0 {
                return w * 64 + 63 - word.leading_zeros() as usize;
            }
        }
        0
    }

    fn mul(&self, other: &BitPoly) -> BitPoly {
        let mut out = BitPoly { bits: vec![0; self.bits.len() + other.bits.len()] };
        for d in 0..=self.degree() {
            if self.get(d) {
                for e in 0..=other.degree() {
                    if other.get(e) {
                        let w = (d + e) / 64;
                        out.bits[w] ^= 1 << ((d + e) % 64);
                    }
                }
            }
        }
        out
    }

    /// Multiply by x, then reduce modulo `modulus` (degree `deg`).
    fn shift_mod(&mut self, modulus: &BitPoly, deg: usize) {
        let mut carry = false;
        for w in &mut self.bits {
            let new_carry = *w >> 63 != 0;
            *w = (*w << 1) | (carry as u64);
            carry = new_carry;
        }
        if carry {
            self.bits.push(1);
        }
        if self.get(deg) {
            for (a, b) in self.bits.iter_mut().zip(&modulus.bits) {
                *a ^= b;
            }
        }
    }
}

/// Minimal polynomial of alpha^i over GF(2), as a binary polynomial.
fn minimal_polynomial(gf: &GfTables, coset: &[usize]) -> BitPoly {
    // Product of (x + alpha^j) over the coset, computed in GF(2^m); the
    // result always collapses to 0/1 coefficients.
    let mut coeffs: Vec<u32> = vec![1];
    for &j in coset {
        let root = gf.alpha_pow(j);
        let mut next = vec![0u32; coeffs.len() + 1];
        for (d, &c) in coeffs.iter().enumerate() {
            next[d + 1] ^= c;
            next[d] ^= gf.mul(c, root);
        }
        coeffs = next;
    }
    let mut poly = BitPoly { bits: vec![0] };
    for (d, &c) in coeffs.iter().enumerate() {
        debug_assert!(c <= 1, "minimal polynomial coefficient not binary");
        if c == 1 {
            poly.set(d);
        }
    }
    poly
}

/// A shortened systematic BCH code serving `n` message bits with
/// error-correcting capability `t`.
pub struct BchCode {
    /// Galois extension degree.
    pub m: usize,
    /// Full code length 2^m - 1.
    pub n_c: usize,
    /// Full code dimension.
    pub k_c: usize,
    /// Error-correcting capability.
    pub t: usize,
    /// Parity count n_c - k_c.
    pub p: usize,
    /// Number of message bits actually served (shortened dimension).
    pub n: usize,
    /// Systematic parity rows, p x n: parity = parity_rows * message.
    pub parity_rows: BinaryMatrix,
    gf: GfTables,
    generator: BitPoly,
}

/// A received word for hard decoding: message part pinned to zero, parity
/// part carrying the observed signs.
#[derive(Clone, Debug)]
pub struct HardWord {
    bits: BinaryVector,
}

impl HardWord {
    /// Build from the p parity bits; the n message bits start at zero.
    pub fn from_parity(code: &BchCode, parity: &BinaryVector) -> Result<HardWord> {
        if parity.len() != code.p {
            return Err(Error::DimensionMismatch {
                context: "hard word parity length",
                expected: code.p,
                got: parity.len(),
            });
        }
        let mut bits = BinaryVector::zeros(code.n + code.p);
        for j in 0..code.p {
            if parity.get(j) {
                bits.set(code.n + j, true);
            }
        }
        Ok(HardWord { bits })
    }

    pub fn bits(&self) -> &BinaryVector {
        &self.bits
    }
}

/// Smallest code with k_c >= n for the requested capability; deterministic.
pub fn construct_bch(n: usize, t: usize) -> Result<BchCode> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidConfig(format!(
            "code construction needs n >= 1 and t >= 1, got n={n}, t={t}"
        )));
    }
    for m in 3..=MAX_M {
        let n_c = (1usize << m) - 1;
        if 2 * t >= n_c {
            continue;
        }
        let gf = GfTables::new(m);
        let mut seen = BTreeSet::new();
        let mut generator = BitPoly::one();
        for i in (1..=2 * t - 1).step_by(2) {
            let coset = cyclotomic_coset(i, n_c);
            let rep = *coset.iter().min().unwrap();
            if seen.insert(rep) {
                generator = generator.mul(&minimal_polynomial(&gf, &coset));
            }
        }
        let p = generator.degree();
        if p >= n_c {
            continue;
        }
        let k_c = n_c - p;
        if k_c < n {
            continue;
        }
        let parity_rows = parity_matrix(&generator, n_c, p, n);
        return Ok(BchCode {
            m,
            n_c,
            k_c,
            t,
            p,
            n,
            parity_rows,
            gf,
            generator,
        });
    }
    Err(Error::CodeConstruction { n, t, max_m: MAX_M })
}

/// Parity matrix columns: column i holds the coefficients of
/// x^(n_c-1-i) mod g, mapped so that row j is the coefficient of x^(p-1-j).
fn parity_matrix(generator: &BitPoly, n_c: usize, p: usize, n: usize) -> BinaryMatrix {
    let mut rows = BinaryMatrix::zeros(p, n);
    let mut rem = BitPoly::one();
    for d in 0..n_c {
        if d + n >= n_c {
            let i = n_c - 1 - d;
            for j in 0..p {
                if rem.get(p - 1 - j) {
                    rows.set(j, i, true);
                }
            }
        }
        rem.shift_mod(generator, p);
    }
    rows
}

impl BchCode {
    /// Systematic encoding: [message ; parity_rows * message].
    pub fn encode(&self, message: &BinaryVector) -> Result<BinaryVector> {
        let parity = gf2_matvec(&self.parity_rows, message)?;
        let mut out = BinaryVector::zeros(self.n + self.p);
        for i in 0..self.n {
            if message.get(i) {
                out.set(i, true);
            }
        }
        for j in 0..self.p {
            if parity.get(j) {
                out.set(self.n + j, true);
            }
        }
        Ok(out)
    }

    /// Sign vector (-1)^(P k) of length p + 1, leading entry for the zero
    /// shift. This is the template a singleton bin observation follows.
    pub fn signature(&self, k: &BinaryVector) -> Result<Vec<f64>> {
        let parity = gf2_matvec(&self.parity_rows, k)?;
        let mut sig = Vec::with_capacity(self.p + 1);
        sig.push(1.0);
        for j in 0..self.p {
            sig.push(if parity.get(j) { -1.0 } else { 1.0 });
        }
        Ok(sig)
    }

    /// Nearest-neighbor hard input from the p+1 observation entries: parity
    /// bit i is 1 when the shifted value disagrees in sign with the
    /// unshifted one. `None` when the unshifted entry is exactly zero, which
    /// marks the bin undecodable this round.
    pub fn hard_input_from_ratios(&self, observation: &[f64]) -> Option<HardWord> {
        assert_eq!(observation.len(), self.p + 1, "observation length");
        if observation[0] == 0.0 {
            return None;
        }
        let mut bits = BinaryVector::zeros(self.n + self.p);
        for i in 1..=self.p {
            if observation[i] / observation[0] < 0.0 {
                bits.set(self.n + i - 1, true);
            }
        }
        Some(HardWord { bits })
    }

    /// Bounded-distance decode of a hard word. Returns the message when a
    /// codeword lies within distance t and touches no pinned position.
    pub fn hard_decode(&self, word: &HardWord) -> Option<BinaryVector> {
        self.decode_received(&word.bits)
    }

    /// Chase decode: retry hard decoding on sign-flip variants of the least
    /// reliable positions, in order of increasing flipped |llr| mass, at
    /// most 2^depth attempts.
    pub fn soft_decode_chase(&self, llrs: &[f64], depth: usize) -> Option<BinaryVector> {
        assert_eq!(llrs.len(), self.p, "llr length");
        let mut base = BinaryVector::zeros(self.n + self.p);
        for (i, &llr) in llrs.iter().enumerate() {
            if llr < 0.0 {
                base.set(self.n + i, true);
            }
        }
        let budget = 1usize << depth.min(30);
        let mut attempts = 0;
        for flips in FlipSchedule::new(llrs) {
            if attempts >= budget {
                break;
            }
            attempts += 1;
            let mut bits = base.clone();
            for &pos in &flips {
                bits.flip(self.n + pos);
            }
            if let Some(k) = self.decode_received(&bits) {
                return Some(k);
            }
        }
        None
    }

    fn decode_received(&self, bits: &BinaryVector) -> Option<BinaryVector> {
        debug_assert_eq!(bits.len(), self.n + self.p);
        let syndromes = self.syndromes(bits);
        if syndromes.iter().all(|&s| s == 0) {
            return Some(bits.resized(self.n));
        }
        let lambda = self.berlekamp_massey(&syndromes)?;
        let errors = self.chien_search(&lambda)?;
        let mut corrected = bits.clone();
        for &deg in &errors {
            let pos = self.degree_to_position(deg)?;
            corrected.flip(pos);
        }
        Some(corrected.resized(self.n))
    }

    /// S_j = r(alpha^j) for j = 1..2t, using the degree map of the layout.
    fn syndromes(&self, bits: &BinaryVector) -> Vec<u32> {
        let degrees: Vec<usize> = bits
            .support()
            .iter()
            .map(|&pos| self.position_to_degree(pos))
            .collect();
        (1..=2 * self.t)
            .map(|j| {
                let mut acc = 0u32;
                for &d in &degrees {
                    acc ^= self.gf.alpha_pow(j * d);
                }
                acc
            })
            .collect()
    }

    #[inline]
    fn position_to_degree(&self, pos: usize) -> usize {
        if pos < self.n {
            self.n_c - 1 - pos
        } else {
            self.p - 1 - (pos - self.n)
        }
    }

    /// Inverse of the position map; `None` for degrees that fall in the
    /// shortened (pinned-zero) region.
    fn degree_to_position(&self, deg: usize) -> Option<usize> {
        if deg < self.p {
            Some(self.n + (self.p - 1 - deg))
        } else {
            let i = self.n_c - 1 - deg;
            (i < self.n).then_some(i)
        }
    }

    /// Error-locator polynomial, low-degree first; `None` when the register
    /// length exceeds t.
    fn berlekamp_massey(&self, syndromes: &[u32]) -> Option<Vec<u32>> {
        let gf = &self.gf;
        let mut c = vec![0u32; syndromes.len() + 1];
        let mut b = vec![0u32; syndromes.len() + 1];
        c[0] = 1;
        b[0] = 1;
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut b_disc = 1u32;
        for (step, &s) in syndromes.iter().enumerate() {
            let mut disc = s;
            for i in 1..=l {
                disc ^= gf.mul(c[i], syndromes[step - i]);
            }
            if disc == 0 {
                shift += 1;
            } else if 2 * l <= step {
                let prev = c.clone();
                let coef = gf.mul(disc, gf.inv(b_disc));
                for i in 0..c.len() - shift {
                    c[i + shift] ^= gf.mul(coef, b[i]);
                }
                l = step + 1 - l;
                b = prev;
                b_disc = disc;
                shift = 1;
            } else {
                let coef = gf.mul(disc, gf.inv(b_disc));
                for i in 0..c.len() - shift {
                    c[i + shift] ^= gf.mul(coef, b[i]);
                }
                shift += 1;
            }
        }
        if l > self.t {
            return None;
        }
        c.truncate(l + 1);
        if c[l] == 0 {
            return None;
        }
        Some(c)
    }

    /// Roots of the locator over the whole field, returned as error degrees.
    /// `None` unless the root count matches the locator degree exactly.
    fn chien_search(&self, lambda: &[u32]) -> Option<Vec<usize>> {
        let gf = &self.gf;
        let nu = lambda.len() - 1;
        let mut errors = Vec::with_capacity(nu);
        for d in 0..self.n_c {
            // Evaluate lambda at alpha^(-d).
            let x_log = self.n_c - d % self.n_c;
            let mut acc = lambda[0];
            for (i, &coef) in lambda.iter().enumerate().skip(1) {
                if coef != 0 {
                    let e = (gf.log[coef as usize] as usize + i * x_log) % self.n_c;
                    acc ^= gf.exp[e];
                }
            }
            if acc == 0 {
                errors.push(d);
                if errors.len() > nu {
                    return None;
                }
            }
        }
        (errors.len() == nu).then_some(errors)
    }
}

/// Enumerates parity flip sets in nondecreasing total |llr| cost, the empty
/// set first. Classic k-smallest-subset-sums walk over the positions sorted
/// by reliability.
struct FlipSchedule {
    order: Vec<usize>,
    costs: Vec<f64>,
    heap: BinaryHeap<FlipCandidate>,
    emitted_empty: bool,
}

struct FlipCandidate {
    cost: f64,
    flips: Vec<usize>,
}

impl PartialEq for FlipCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for FlipCandidate {}
impl PartialOrd for FlipCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FlipCandidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for cheapest-first.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.flips.cmp(&self.flips))
    }
}

impl FlipSchedule {
    fn new(llrs: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..llrs.len()).collect();
        order.sort_by(|&a, &b| llrs[a].abs().total_cmp(&llrs[b].abs()).then(a.cmp(&b)));
        let costs: Vec<f64> = order.iter().map(|&i| llrs[i].abs()).collect();
        let mut heap = BinaryHeap::new();
        if !costs.is_empty() {
            heap.push(FlipCandidate {
                cost: costs[0],
                flips: vec![0],
            });
        }
        FlipSchedule {
            order,
            costs,
            heap,
            emitted_empty: false,
        }
    }
}

impl Iterator for FlipSchedule {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if !self.emitted_empty {
            self.emitted_empty = true;
            return Some(Vec::new());
        }
        let cand = self.heap.pop()?;
        let &last = cand.flips.last().unwrap();
        if last + 1 < self.costs.len() {
            let mut grown = cand.flips.clone();
            grown.push(last + 1);
            self.heap.push(FlipCandidate {
                cost: cand.cost + self.costs[last + 1],
                flips: grown,
            });
            let mut shifted = cand.flips.clone();
            *shifted.last_mut().unwrap() = last + 1;
            self.heap.push(FlipCandidate {
                cost: cand.cost - self.costs[last] + self.costs[last + 1],
                flips: shifted,
            });
        }
        Some(cand.flips.iter().map(|&i| self.order[i]).collect())
    }
}
