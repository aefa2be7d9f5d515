//! Dense GF(2) linear algebra.
//!
//! Rows are packed into `u64` words, least significant bit first, so column
//! `j` of a row lives in bit `j % 64` of word `j / 64`. Kernels in scope have
//! at most 64 columns and therefore fit in a single word per row; the
//! single-word accessors (`row_u64`, `from_rows_u64`) are what the hot loops
//! use. Wider matrices (explicit generator matrices) use the same layout with
//! more words per row.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: {left_rows}x{left_cols} times {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("kronecker product of size {0}x{1} overflows")]
    SizeOverflow(usize, usize),
    #[error("kernel text: {0}")]
    Parse(String),
    #[error("matrix of size {0} is singular (rank {1})")]
    Singular(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

/// Largest number of entries a Kronecker product may have.
const MAX_ENTRIES: usize = 1 << 28;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(64)
}

#[inline]
fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl BitMatrix {
    /// All-zero matrix. Panics on an empty shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix shape must be at least 1x1");
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// The Arikan matrix `F_t`, of size `2^t`, with `F_t[i][j] = 1` iff the
    /// binary digits of `j` are a subset of those of `i`.
    pub fn arikan(t: u32) -> Self {
        let n = 1usize << t;
        Self::from_fn(n, n, |i, j| i & j == j)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Builds a matrix with at most 64 columns from one word per row.
    pub fn from_rows_u64(cols: usize, rows: &[u64]) -> Self {
        assert!(cols <= 64, "from_rows_u64 needs cols <= 64");
        let mut m = Self::zeros(rows.len(), cols);
        let mask = low_mask(cols);
        for (i, &r) in rows.iter().enumerate() {
            m.words[i] = r & mask;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.words[i * self.stride + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        let w = &mut self.words[i * self.stride + j / 64];
        let bit = 1u64 << (j % 64);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    /// Row `i` as a single word. Only valid for matrices with at most 64 columns.
    #[inline]
    pub fn row_u64(&self, i: usize) -> u64 {
        debug_assert!(self.cols <= 64);
        self.words[i]
    }

    /// All rows as words (matrices with at most 64 columns).
    pub fn rows_u64(&self) -> Vec<u64> {
        assert!(self.cols <= 64, "rows_u64 needs cols <= 64");
        self.words.clone()
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        assert!(src < self.rows && dst < self.rows);
        if src == dst {
            self.words[dst * self.stride..(dst + 1) * self.stride].fill(0);
            return;
        }
        for w in 0..self.stride {
            let s = self.words[src * self.stride + w];
            self.words[dst * self.stride + w] ^= s;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn row_weight(&self, i: usize) -> u32 {
        self.row_words(i).iter().map(|w| w.count_ones()).sum()
    }

    pub fn row_bits(&self, i: usize) -> Vec<u8> {
        (0..self.cols).map(|j| self.get(i, j) as u8).collect()
    }

    pub fn column(&self, j: usize) -> Vec<bool> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    /// GF(2) product `self * other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    for w in 0..out.stride {
                        out.words[i * out.stride + w] ^= other.words[k * other.stride + w];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix, bits given as 0/1 bytes.
    pub fn vec_mul(&self, u: &[u8]) -> Vec<u8> {
        assert_eq!(u.len(), self.rows, "vector length must equal row count");
        let mut acc = vec![0u64; self.stride];
        for (i, &b) in u.iter().enumerate() {
            if b & 1 == 1 {
                for (a, w) in acc.iter_mut().zip(self.row_words(i)) {
                    *a ^= w;
                }
            }
        }
        (0..self.cols)
            .map(|j| ((acc[j / 64] >> (j % 64)) & 1) as u8)
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        let rows = self
            .rows
            .checked_mul(other.rows)
            .ok_or(Gf2Error::SizeOverflow(usize::MAX, 0))?;
        let cols = self
            .cols
            .checked_mul(other.cols)
            .ok_or(Gf2Error::SizeOverflow(rows, usize::MAX))?;
        if rows.checked_mul(cols).is_none_or(|e| e > MAX_ENTRIES) {
            return Err(Gf2Error::SizeOverflow(rows, cols));
        }
        let mut out = Self::zeros(rows, cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                if !self.get(i1, j1) {
                    continue;
                }
                for i2 in 0..other.rows {
                    let r = i1 * other.rows + i2;
                    for j2 in 0..other.cols {
                        if other.get(i2, j2) {
                            out.set(r, j1 * other.cols + j2, true);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot, rank);
            for r in 0..m.rows {
                if r != rank && m.get(r, col) {
                    m.xor_row_into(rank, r);
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| m.get(r, col))?;
            m.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            for r in 0..n {
                if r != col && m.get(r, col) {
                    m.xor_row_into(col, r);
                    inv.xor_row_into(col, r);
                }
            }
        }
        Some(inv)
    }

    /// True when every nonzero entry has `row <= col`.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols.min(i)).all(|j| !self.get(i, j)))
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> BitMatrix {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> BitMatrix {
        let idx: Vec<usize> = (0..k).collect();
        self.submatrix(&idx, &idx)
    }

    /// Permutes rows: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> BitMatrix {
        assert_eq!(perm.len(), self.rows);
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &src) in perm.iter().enumerate() {
            out.words[i * self.stride..(i + 1) * self.stride]
                .copy_from_slice(self.row_words(src));
        }
        out
    }

    /// Checks the zero-padding invariant beyond `cols`.
    pub fn padding_is_clean(&self) -> bool {
        let tail = self.cols % 64;
        if tail == 0 {
            return true;
        }
        let mask = !low_mask(tail);
        (0..self.rows).all(|i| self.words[i * self.stride + self.stride - 1] & mask == 0)
    }

    /// Renders in the kernel text format: size line, then one `0/1` line per row.
    pub fn to_kernel_text(&self) -> String {
        let mut s = format!("{}\n", self.rows);
        s.push_str(&self.to_string());
        s
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

/// Parses the kernel text format and checks the matrix is square and invertible.
///
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_kernel_text(text: &str) -> Result<BitMatrix, Gf2Error> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Gf2Error::Parse("empty input".into()))?;
    let l: usize = header
        .parse()
        .map_err(|_| Gf2Error::Parse(format!("bad size line {header:?}")))?;
    if l == 0 || l > 64 {
        return Err(Gf2Error::Parse(format!("kernel size {l} outside 1..=64")));
    }
    let mut m = BitMatrix::zeros(l, l);
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        if i >= l {
            return Err(Gf2Error::Parse(format!("more than {l} rows")));
        }
        if line.chars().count() != l {
            return Err(Gf2Error::NotSquare(l, line.chars().count()));
        }
        for (j, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => m.set(i, j, true),
                _ => return Err(Gf2Error::Parse(format!("row {i}: unexpected {ch:?}"))),
            }
        }
        count += 1;
    }
    if count != l {
        return Err(Gf2Error::NotSquare(count, l));
    }
    let r = m.rank();
    if r != l {
        return Err(Gf2Error::Singular(l, r));
    }
    Ok(m)
}

/// Result of a coset minimum-weight search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetMinimum {
    pub weight: u32,
    /// Bit `g` set iff generator `g` is part of the minimizing combination.
    pub combination: u64,
}

/// Minimum Hamming weight over `rep + span(generators)`, by Gray-code
/// enumeration of all `2^k` generator combinations.
pub fn coset_min_weight(generators: &[u64], rep: u64) -> CosetMinimum {
    coset_min_weight_floor(generators, rep, 0)
}

/// Same as [`coset_min_weight`] but stops as soon as a weight `<= floor` is
/// seen. Exact whenever `floor` is a valid lower bound on the answer.
pub fn coset_min_weight_floor(generators: &[u64], rep: u64, floor: u32) -> CosetMinimum {
    let k = generators.len();
    assert!(k < 64, "at most 63 generators");
    let mut best = CosetMinimum {
        weight: rep.count_ones(),
        combination: 0,
    };
    if best.weight <= floor {
        return best;
    }
    let mut cur = rep;
    let mut comb = 0u64;
    let total = 1u64 << k;
    for step in 1..total {
        let g = step.trailing_zeros() as usize;
        cur ^= generators[g];
        comb ^= 1 << g;
        let w = cur.count_ones();
        if w < best.weight {
            best = CosetMinimum {
                weight: w,
                combination: comb,
            };
            if w <= floor {
                break;
            }
        }
    }
    best
}

/// Echelon basis of a span, used to reduce vectors modulo it.
///
/// Two vectors lie in the same coset of the span iff their reductions agree.
#[derive(Debug, Clone, Default)]
pub struct SpanReducer {
    basis: Vec<(u64, u64)>, // (pivot bit, vector), pivot is the lowest set bit
}

impl SpanReducer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vectors(vectors: &[u64]) -> Self {
        let mut r = Self::new();
        for &v in vectors {
            r.insert(v);
        }
        r
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    pub fn reduce(&self, mut v: u64) -> u64 {
        for &(pivot, b) in &self.basis {
            if v & pivot != 0 {
                v ^= b;
            }
        }
        v
    }

    /// Adds `v` to the span; returns false when it was already in it.
    pub fn insert(&mut self, v: u64) -> bool {
        let r = self.reduce(v);
        if r == 0 {
            return false;
        }
        let pivot = r & r.wrapping_neg();
        for (_, b) in self.basis.iter_mut() {
            if *b & pivot != 0 {
                *b ^= r;
            }
        }
        self.basis.push((pivot, r));
        true
    }
}

/// Minimum weight of `rep + span`, searching error patterns of increasing
/// weight over the columns in `support` that reduce to the same syndrome as
/// `rep`. Patterns of weight below `floor` are assumed absent; the search
/// gives up at `ceiling` and returns it.
///
/// Returns the weight and a minimizing vector of the coset.
pub fn coset_min_weight_syndrome(
    span: &SpanReducer,
    rep: u64,
    support: u64,
    floor: u32,
    ceiling: u32,
) -> (u32, u64) {
    let ceiling = ceiling.min(rep.count_ones());
    let target = span.reduce(rep);
    let positions: Vec<u64> = (0..64)
        .filter(|&j| support >> j & 1 == 1)
        .map(|j| 1u64 << j)
        .collect();
    let residues: Vec<u64> = positions.iter().map(|&p| span.reduce(p)).collect();
    for w in floor..ceiling {
        if let Some(e) = find_pattern(&positions, &residues, target, w as usize) {
            return (w, e);
        }
    }
    (ceiling, rep)
}

fn find_pattern(positions: &[u64], residues: &[u64], target: u64, weight: usize) -> Option<u64> {
    fn rec(
        positions: &[u64],
        residues: &[u64],
        start: usize,
        left: usize,
        acc: u64,
        pattern: u64,
        target: u64,
    ) -> Option<u64> {
        if left == 0 {
            return (acc == target).then_some(pattern);
        }
        let m = positions.len();
        for j in start..=(m - left) {
            if let Some(p) = rec(
                positions,
                residues,
                j + 1,
                left - 1,
                acc ^ residues[j],
                pattern | positions[j],
                target,
            ) {
                return Some(p);
            }
        }
        None
    }
    if weight > positions.len() {
        return None;
    }
    rec(positions, residues, 0, weight, 0, 0, target)
}

pub(crate) fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Exact coset distance, picking whichever of Gray enumeration or syndrome
/// search visits fewer candidates.
///
/// `generators` span the code, `support` holds every column any vector can
/// be nonzero on, `floor` and `ceiling` are known bounds on the answer.
pub fn coset_distance(
    generators: &[u64],
    rep: u64,
    support: u64,
    floor: u32,
    ceiling: u32,
) -> u32 {
    let ceiling = ceiling.min(rep.count_ones());
    if floor >= ceiling {
        return ceiling;
    }
    let m = support.count_ones() as u64;
    let gray_cost = (generators.len() as f64).exp2();
    let syndrome_cost: f64 = (floor..ceiling)
        .map(|w| binomial(m, w as u64) * (w.max(1) as f64))
        .sum::<f64>()
        + (generators.len() * generators.len()) as f64;
    if gray_cost <= syndrome_cost && generators.len() < 40 {
        coset_min_weight_floor(generators, rep, floor).weight.min(ceiling)
    } else {
        let span = SpanReducer::from_vectors(generators);
        coset_min_weight_syndrome(&span, rep, support, floor, ceiling).0
    }
}

/// Permutation of `[0, prod(radices))` together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPermutation {
    radices: Vec<usize>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl IndexPermutation {
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn forward(&self, i: usize) -> usize {
        self.forward[i]
    }

    #[inline]
    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn forward_map(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.inverse
    }
}

/// Mixed-radix digit reversal over `radices = (l_1, ..., l_m)`.
///
/// An index whose digits `(t_1, ..., t_m)` are read with `t_1` most
/// significant (weights `l_2 ... l_m`, ..., `1`) maps to the index with the
/// same digits read with `t_1` least significant (weights `1`, `l_1`, ...).
/// For equal radices `l` this is `sum t_i l^i -> sum t_{m-1-i} l^i`.
pub fn digit_reversal(radices: &[usize]) -> IndexPermutation {
    assert!(!radices.is_empty(), "need at least one radix");
    assert!(radices.iter().all(|&r| r >= 1), "radices must be positive");
    let n: usize = radices.iter().product();
    let mut forward = vec![0; n];
    let mut inverse = vec![0; n];
    let mut digits = vec![0usize; radices.len()];
    for (idx, slot) in forward.iter_mut().enumerate() {
        // digits of idx, t_1 most significant
        let mut rest = idx;
        for (d, &r) in digits.iter_mut().zip(radices).rev() {
            *d = rest % r;
            rest /= r;
        }
        // re-read with t_1 least significant
        let mut out = 0;
        for (d, &r) in digits.iter().zip(radices).rev() {
            out = out * r + d;
        }
        *slot = out;
        inverse[out] = idx;
    }
    IndexPermutation {
        radices: radices.to_vec(),
        forward,
        inverse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> BitMatrix {
        BitMatrix::arikan(1)
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> BitMatrix {
        BitMatrix::from_fn(r, c, |_, _| rng.random::<bool>())
    }

    fn naive_mul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
        BitMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).fold(false, |acc, k| acc ^ (a.get(i, k) & b.get(k, j)))
        })
    }

    #[test]
    fn mul_examples() {
        assert_eq!(BitMatrix::identity(2).mul(&f2()).unwrap(), f2());
        assert_eq!(f2().mul(&f2()).unwrap(), BitMatrix::identity(2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random(&mut rng, 8, 8);
            let b = random(&mut rng, 8, 8);
            assert_eq!(a.mul(&b).unwrap(), naive_mul(&a, &b));
        }
        let err = BitMatrix::zeros(2, 3).mul(&BitMatrix::zeros(2, 3));
        assert!(matches!(err, Err(Gf2Error::DimensionMismatch { .. })));
    }

    #[test]
    fn wide_mul_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 7, 130);
        let b = random(&mut rng, 130, 70);
        assert_eq!(a.mul(&b).unwrap(), naive_mul(&a, &b));
        assert!(a.padding_is_clean());
    }

    #[test]
    fn kron_examples() {
        let f4 = f2().kron(&f2()).unwrap();
        assert_eq!(f4, BitMatrix::arikan(2));
        // hand expansion
        let expected = ["1000", "1100", "1010", "1111"];
        for (i, row) in expected.iter().enumerate() {
            let bits: String = f4.row_bits(i).iter().map(|b| (b + b'0') as char).collect();
            assert_eq!(&bits, row);
        }
        let m = BitMatrix::arikan(3);
        assert_eq!(BitMatrix::identity(1).kron(&m).unwrap(), m);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (a, b, c, d) = (
                random(&mut rng, 4, 4),
                random(&mut rng, 4, 4),
                random(&mut rng, 4, 4),
                random(&mut rng, 4, 4),
            );
            let lhs = a.kron(&b).unwrap().mul(&c.kron(&d).unwrap()).unwrap();
            let rhs = naive_mul(&a, &c).kron(&naive_mul(&b, &d)).unwrap();
            assert_eq!(lhs, rhs);
            let e = random(&mut rng, 2, 3);
            assert_eq!(
                a.kron(&b).unwrap().kron(&e).unwrap(),
                a.kron(&b.kron(&e).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn kron_overflow() {
        let big = BitMatrix::zeros(1 << 15, 1);
        assert!(matches!(
            big.kron(&BitMatrix::zeros(1 << 15, 1)),
            Ok(_) | Err(Gf2Error::SizeOverflow(..))
        ));
        let wide = BitMatrix::zeros(1 << 10, 1 << 10);
        assert!(matches!(wide.kron(&wide), Err(Gf2Error::SizeOverflow(..))));
    }

    // Independent elimination on Vec<Vec<bool>>.
    fn oracle_rank(m: &BitMatrix) -> usize {
        let mut rows: Vec<Vec<bool>> = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
            .collect();
        let mut rank = 0;
        let mut used = vec![false; rows.len()];
        for j in 0..m.cols() {
            if let Some(p) = (0..rows.len()).find(|&i| !used[i] && rows[i][j]) {
                used[p] = true;
                rank += 1;
                let pivot = rows[p].clone();
                for (i, r) in rows.iter_mut().enumerate() {
                    if i != p && r[j] {
                        for (x, y) in r.iter_mut().zip(&pivot) {
                            *x ^= *y;
                        }
                    }
                }
            }
        }
        rank
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::arikan(5).rank(), 32);
        assert_eq!(BitMatrix::zeros(4, 4).rank(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let m = random(&mut rng, 10, 10);
            assert_eq!(m.rank(), oracle_rank(&m));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let f = BitMatrix::arikan(4);
        let inv = f.inverse().unwrap();
        assert_eq!(f.mul(&inv).unwrap(), BitMatrix::identity(16));
        // F_t is an involution
        assert_eq!(inv, f);
        assert!(BitMatrix::zeros(3, 3).inverse().is_none());
    }

    #[test]
    fn row_ops_keep_padding_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = random(&mut rng, 6, 70);
        for _ in 0..30 {
            let a = rng.random_range(0..6);
            let b = rng.random_range(0..6);
            m.xor_row_into(a, b);
            m.swap_rows(a, b);
            assert!(m.padding_is_clean());
        }
    }

    #[test]
    fn coset_examples() {
        assert_eq!(coset_min_weight(&[0b11], 0b01).weight, 1);
        assert_eq!(coset_min_weight(&[], 0b1011).weight, 3);
        let f4 = BitMatrix::arikan(4);
        let gens: Vec<u64> = (2..16).map(|i| f4.row_u64(i)).collect();
        let m = coset_min_weight(&gens, f4.row_u64(1));
        assert_eq!(m.weight, 2);
        let mut v = f4.row_u64(1);
        for (g, gen) in gens.iter().enumerate() {
            if m.combination >> g & 1 == 1 {
                v ^= gen;
            }
        }
        assert_eq!(v.count_ones(), 2);
    }

    #[test]
    fn coset_routes_agree_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..300 {
            let width = rng.random_range(1..=20);
            let mask = (1u64 << width) - 1;
            let k = rng.random_range(0..=12.min(width));
            let gens: Vec<u64> = (0..k).map(|_| rng.random::<u64>() & mask).collect();
            let rep = rng.random::<u64>() & mask;
            // explicit enumeration of all codewords
            let brute = (0..1u64 << k)
                .map(|c| {
                    let mut v = rep;
                    for (g, gen) in gens.iter().enumerate() {
                        if c >> g & 1 == 1 {
                            v ^= gen;
                        }
                    }
                    v.count_ones()
                })
                .min()
                .unwrap();
            let gray = coset_min_weight(&gens, rep);
            assert_eq!(gray.weight, brute);
            assert!(gray.weight <= rep.count_ones());
            let span = SpanReducer::from_vectors(&gens);
            let (w, e) = coset_min_weight_syndrome(&span, rep, mask, 0, u32::MAX);
            assert_eq!(w, brute);
            assert_eq!(span.reduce(e), span.reduce(rep));
            assert_eq!(coset_distance(&gens, rep, mask, 0, 64), brute);
        }
    }

    #[test]
    fn digit_reversal_examples() {
        assert_eq!(digit_reversal(&[2, 2]).forward_map(), &[0, 2, 1, 3]);
        assert_eq!(digit_reversal(&[5]).forward_map(), &[0, 1, 2, 3, 4]);
        let p = digit_reversal(&[3, 2, 4]);
        for i in 0..p.len() {
            assert_eq!(p.inverse(p.forward(i)), i);
            assert_eq!(p.forward(p.inverse(i)), i);
        }
        // equal radices: sum t_i l^i -> sum t_{m-1-i} l^i
        let p = digit_reversal(&[3, 3, 3]);
        for t0 in 0..3 {
            for t1 in 0..3 {
                for t2 in 0..3 {
                    assert_eq!(p.forward(t0 + 3 * t1 + 9 * t2), t2 + 3 * t1 + 9 * t0);
                }
            }
        }
    }

    #[test]
    fn kernel_text_parsing() {
        let m = parse_kernel_text("2\n10\n11\n").unwrap();
        assert_eq!(m, f2());
        assert_eq!(parse_kernel_text(&m.to_kernel_text()).unwrap(), m);
        assert!(matches!(
            parse_kernel_text("2\n10\n10\n"),
            Err(Gf2Error::Singular(2, 1))
        ));
        assert!(matches!(
            parse_kernel_text("2\n100\n11\n"),
            Err(Gf2Error::NotSquare(..))
        ));
        assert!(parse_kernel_text("2\n10\n").is_err());
        assert!(parse_kernel_text("2\n1x\n11\n").is_err());
        assert!(parse_kernel_text("").is_err());
    }
}
