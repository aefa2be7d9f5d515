//! Kernel shortening and the search for shortening patterns with the largest
//! error exponent.
//!
//! All shortening work happens in parent coordinates on packed rows: removing
//! column `p` leaves column `p` zero in every surviving row, so the surviving
//! rows restricted to the unshortened columns are the shortened kernel. This
//! avoids re-packing rows after every step and lets distances be computed on
//! the parent layout directly.

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, Kernel};
use crate::exec::Execution;
use crate::gf2::{self, BitMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShorteningError {
    #[error("invalid shortening pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid hex pattern {0:?}: {1}")]
    Hex(String, String),
    #[error("shortening size t={t} out of range 1..={max} for kernel size {l}")]
    SizeOutOfRange { t: usize, l: usize, max: usize },
    #[error("full enumeration supports kernels up to 32x32, got {0}")]
    TooLarge(usize),
    #[error("parent kernel is not in minimum-weight form (row {0})")]
    NotMinWeightForm(usize),
    #[error("shortening order must be a permutation of the pattern")]
    BadOrder,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A set of shortened columns of an `l x l` kernel.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShorteningPattern {
    l: usize,
    mask: u64,
}

impl ShorteningPattern {
    pub fn new(l: usize, positions: &[usize]) -> Result<Self, ShorteningError> {
        let mut mask = 0u64;
        for &p in positions {
            if p >= l {
                return Err(ShorteningError::InvalidPattern(format!(
                    "position {p} outside kernel of size {l}"
                )));
            }
            if mask >> p & 1 == 1 {
                return Err(ShorteningError::InvalidPattern(format!("duplicate position {p}")));
            }
            mask |= 1 << p;
        }
        Self::from_mask(l, mask)
    }

    pub fn from_mask(l: usize, mask: u64) -> Result<Self, ShorteningError> {
        if !(3..=64).contains(&l) {
            return Err(ShorteningError::InvalidPattern(format!(
                "kernel size {l} admits no shortening"
            )));
        }
        if l < 64 && mask >> l != 0 {
            return Err(ShorteningError::InvalidPattern(format!(
                "mask {mask:#x} has bits beyond size {l}"
            )));
        }
        let t = mask.count_ones() as usize;
        if t == 0 || t > l - 2 {
            return Err(ShorteningError::SizeOutOfRange { t, l, max: l - 2 });
        }
        Ok(ShorteningPattern { l, mask })
    }

    /// Parses the big-endian hex form of `sum_p 2^p`.
    pub fn parse_hex(s: &str, l: usize) -> Result<Self, ShorteningError> {
        let trimmed = s.trim();
        let digits = trimmed
            .strip_prefix("0x")
            .or_else(|| trimmed.strip_prefix("0X"))
            .unwrap_or(trimmed);
        let err = |why: &str| ShorteningError::Hex(s.to_string(), why.to_string());
        if digits.is_empty() {
            return Err(err("empty"));
        }
        let significant = digits.trim_start_matches('0');
        if significant.len() > 16 {
            return Err(err("more than 64 bits"));
        }
        let mask = if significant.is_empty() {
            0
        } else {
            u64::from_str_radix(significant, 16).map_err(|e| err(&e.to_string()))?
        };
        if l < 64 && mask >> l != 0 {
            return Err(err(&format!("sets a bit at or above {l}")));
        }
        Self::from_mask(l, mask)
    }

    /// Zero-padded uppercase hex, `ceil(l/4)` digits.
    pub fn to_hex(&self) -> String {
        format!("{:0width$X}", self.mask, width = self.l.div_ceil(4))
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, p: usize) -> bool {
        p < 64 && self.mask >> p & 1 == 1
    }

    pub fn positions(&self) -> Vec<usize> {
        bits(self.mask).collect()
    }

    /// Sort key for the lexicographic order of indicator vectors
    /// `(x_0, ..., x_{l-1})`: patterns whose positions sit later compare
    /// smaller.
    pub fn lex_key(&self) -> u64 {
        lex_key(self.l, self.mask)
    }
}

fn lex_key(l: usize, mask: u64) -> u64 {
    mask.reverse_bits() >> (64 - l)
}

impl fmt::Display for ShorteningPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ShorteningPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShorteningPattern(l={}, {:?})", self.l, self.positions())
    }
}

impl Serialize for ShorteningPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

/// Indices of the set bits of `mask`, ascending.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            b
        })
    })
}

/// Packs the bits of `v` selected by `keep` into the low bits, preserving order.
pub(crate) fn compress(v: u64, keep: u64) -> u64 {
    let mut out = 0u64;
    for (k, b) in bits(keep).enumerate() {
        out |= (v >> b & 1) << k;
    }
    out
}

fn full_mask(l: usize) -> u64 {
    if l == 64 {
        u64::MAX
    } else {
        (1u64 << l) - 1
    }
}

/// One step of single-coordinate shortening on an explicit matrix.
///
/// Returns the shortened kernel, the removed row `a` (the last row with a one
/// in column `j`) and the rows that received row `a`.
pub fn shorten_single(k: &Kernel, j: usize) -> (Kernel, usize, Vec<usize>) {
    let l = k.size();
    assert!(l >= 2 && j < l, "column {j} out of range for size {l}");
    let m = k.matrix();
    let a = (0..l)
        .rev()
        .find(|&i| m.get(i, j))
        .expect("invertible kernel has no zero column");
    let mut work = m.clone();
    let mut touched = Vec::new();
    for i in 0..a {
        if work.get(i, j) {
            work.xor_row_into(a, i);
            touched.push(i);
        }
    }
    let rows: Vec<usize> = (0..l).filter(|&i| i != a).collect();
    let cols: Vec<usize> = (0..l).filter(|&c| c != j).collect();
    let out = Kernel::trusted(work.submatrix(&rows, &cols), format!("{}/{j}", k.name()));
    (out, a, touched)
}

/// A shortened kernel with its bookkeeping against the parent.
#[derive(Debug, Clone)]
pub struct ShorteningResult {
    pub kernel: Kernel,
    pub pattern: ShorteningPattern,
    /// Parent rows removed, in the order the steps removed them.
    pub removal_order: Vec<usize>,
    /// Parent rows removed, ascending.
    pub removed_rows: Vec<usize>,
    /// Shortened row `i` came from parent row `surviving_map[i]`.
    pub surviving_map: Vec<usize>,
    /// Shortened column `i` is parent column `column_map[i]`.
    pub column_map: Vec<usize>,
    /// Parent rows that received an addition at any step, ascending.
    pub modified_rows: Vec<usize>,
    /// Upper-triangular `T` (parent size) collecting every row addition, so
    /// that `T K` has zero `P` columns outside the removed rows.
    pub transform: BitMatrix,
}

impl ShorteningResult {
    pub fn shortened_size(&self) -> usize {
        self.kernel.size()
    }

    pub fn is_modified(&self, parent_row: usize) -> bool {
        self.modified_rows.binary_search(&parent_row).is_ok()
    }

    pub fn is_removed(&self, parent_row: usize) -> bool {
        self.removed_rows.binary_search(&parent_row).is_ok()
    }
}

/// Shortens in ascending column order.
pub fn shorten(k: &Kernel, p: &ShorteningPattern) -> ShorteningResult {
    shorten_ordered(k, p, &p.positions()).expect("ascending order is a valid order")
}

/// Shortens the columns of `p` in the given order.
pub fn shorten_ordered(
    k: &Kernel,
    p: &ShorteningPattern,
    order: &[usize],
) -> Result<ShorteningResult, ShorteningError> {
    let l = k.size();
    if p.l() != l {
        return Err(ShorteningError::InvalidPattern(format!(
            "pattern for size {} applied to kernel of size {l}",
            p.l()
        )));
    }
    let mut seen = 0u64;
    for &c in order {
        if !p.contains(c) || seen >> c & 1 == 1 {
            return Err(ShorteningError::BadOrder);
        }
        seen |= 1 << c;
    }
    if seen != p.mask() {
        return Err(ShorteningError::BadOrder);
    }

    let mut rows = k.rows();
    let mut trans: Vec<u64> = (0..l).map(|i| 1u64 << i).collect();
    let mut alive = full_mask(l);
    let mut touched = 0u64;
    let mut removal_order = Vec::with_capacity(order.len());
    for &c in order {
        let bit = 1u64 << c;
        let a = (0..l)
            .rev()
            .find(|&i| alive >> i & 1 == 1 && rows[i] & bit != 0)
            .expect("surviving rows restricted to surviving columns stay invertible");
        for i in bits(alive & ((1u64 << a) - 1)) {
            if rows[i] & bit != 0 {
                rows[i] ^= rows[a];
                trans[i] ^= trans[a];
                touched |= 1 << i;
            }
        }
        alive &= !(1u64 << a);
        removal_order.push(a);
    }

    let keep = full_mask(l) & !p.mask();
    let surviving_map: Vec<usize> = bits(alive).collect();
    let shortened: Vec<u64> = surviving_map.iter().map(|&i| compress(rows[i], keep)).collect();
    let mut removed_rows = removal_order.clone();
    removed_rows.sort_unstable();
    let kernel = Kernel::trusted(
        BitMatrix::from_rows_u64(l - p.len(), &shortened),
        format!("s_{}({})", p.to_hex(), k.name()),
    );
    Ok(ShorteningResult {
        kernel,
        pattern: *p,
        removal_order,
        removed_rows,
        surviving_map,
        column_map: bits(keep).collect(),
        modified_rows: bits(touched).collect(),
        transform: BitMatrix::from_rows_u64(l, &trans),
    })
}

/// Partial-distance bounds `(lower, upper)` for each row of a shortened kernel
/// whose parent is in minimum-weight form. Untouched rows keep the parent
/// distance exactly; touched rows lie between the parent distance and their
/// own weight.
pub fn pd_bounds(parent: &Kernel, result: &ShorteningResult) -> Result<Vec<(u32, u32)>, ShorteningError> {
    let d = parent.pdp();
    if let Some(i) = (0..parent.size()).find(|&i| parent.row(i).count_ones() != d[i]) {
        return Err(ShorteningError::NotMinWeightForm(i));
    }
    Ok(result
        .surviving_map
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if result.is_modified(a) {
                (d[a], result.kernel.row(i).count_ones())
            } else {
                (d[a], d[a])
            }
        })
        .collect())
}

/// Reduced row-echelon bases of the kernel codes `<K[i], ..., K[l-1]>`, one
/// per phase. Two kernels have the same kernel codes iff these agree.
pub fn kernel_code_bases(k: &Kernel) -> Vec<Vec<u64>> {
    let rows = k.rows();
    (0..rows.len()).map(|i| canonical_basis(&rows[i..])).collect()
}

pub(crate) fn canonical_basis(vectors: &[u64]) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vectors {
        let mut v = v;
        for &b in &basis {
            let pivot = 63 - b.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= b;
            }
        }
        if v == 0 {
            continue;
        }
        let pivot = 63 - v.leading_zeros();
        for b in basis.iter_mut() {
            if *b >> pivot & 1 == 1 {
                *b ^= v;
            }
        }
        basis.push(v);
    }
    basis.sort_unstable();
    basis
}

/// Shortens along `trials` random orders of `p` and checks that every order
/// yields the same kernel codes and the same removed rows.
pub fn verify_theorem1(k: &Kernel, p: &ShorteningPattern, trials: usize, seed: u64) -> bool {
    use rand::seq::SliceRandom;
    let reference = shorten(k, p);
    let codes = kernel_code_bases(&reference.kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = p.positions();
    (0..trials).all(|_| {
        order.shuffle(&mut rng);
        let r = shorten_ordered(k, p, &order).expect("permutation of the pattern");
        r.removed_rows == reference.removed_rows && kernel_code_bases(&r.kernel) == codes
    })
}

/// How patterns are drawn in [`find_optimal_shortening`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    Full,
    /// `budget` distinct patterns drawn with a seeded generator.
    Sampled { seed: u64, budget: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub best_pattern: ShorteningPattern,
    pub best_e: f64,
    /// Best lower bound found by the first pass.
    pub lower_bound_e: f64,
    /// Every examined pattern attaining `best_e`, in lexicographic order.
    pub ties: Vec<ShorteningPattern>,
    pub patterns_examined: u64,
    pub patterns_pruned: u64,
    /// Patterns whose bounds were already tight, so no enumeration ran.
    pub bounds_tight: u64,
    /// Patterns that needed at least one coset enumeration.
    pub exact_pdp_evaluations: u64,
    /// Exact evaluations abandoned once their running bound fell short.
    pub exact_aborted: u64,
    /// False when only a sample of the patterns was examined.
    pub optimal: bool,
}

/// Scores are `sum_i ln D'_i`; they share the positive ordering of `E` for a
/// fixed shortened size. Scores within `SCORE_EPS` are ties.
const SCORE_EPS: f64 = 1e-9;

pub fn find_optimal_shortening(
    k: &Kernel,
    t: usize,
    enumeration: Enumeration,
) -> Result<SearchOutcome, ShorteningError> {
    find_optimal_shortening_with(k, t, enumeration, Execution::Parallel)
}

/// Two passes over the patterns. The first installs the best lower bound
/// (parent distances of the surviving rows). The second skips patterns whose
/// upper bound falls below the current best and otherwise computes exact
/// distances for modified rows only, abandoning the pattern as soon as the
/// running bound drops below the best. Among patterns with equal exponent the
/// lexicographically smallest indicator vector wins.
pub fn find_optimal_shortening_with(
    k: &Kernel,
    t: usize,
    enumeration: Enumeration,
    exec: Execution,
) -> Result<SearchOutcome, ShorteningError> {
    let l = k.size();
    if l < 3 || t == 0 || t > l - 2 {
        return Err(ShorteningError::SizeOutOfRange {
            t,
            l,
            max: l.saturating_sub(2),
        });
    }
    if enumeration == Enumeration::Full && l > 32 {
        return Err(ShorteningError::TooLarge(l));
    }
    let parent = analysis::min_weight_form(k);
    let ctx = SearchContext::new(&parent, t);

    let (lower, stats, candidates) = match enumeration {
        Enumeration::Full => {
            let prefixes = ctx.prefixes();
            let lower = exec
                .map(&prefixes, |pre| {
                    let mut best = 0.0f64;
                    ctx.walk(pre, &mut |node, _| best = best.max(ctx.lower_score(node)));
                    best
                })
                .into_iter()
                .fold(0.0, f64::max);
            let threshold = AtomicU64::new(lower.to_bits());
            let parts = exec.map(&prefixes, |pre| {
                let mut worker = Worker::default();
                ctx.walk(pre, &mut |node, mask| worker.visit(&ctx, &threshold, node, mask));
                worker
            });
            let (stats, candidates) = merge(parts);
            (lower, stats, candidates)
        }
        Enumeration::Sampled { seed, budget } => {
            let masks = sample_patterns(l, t, seed, budget);
            let nodes = |mask: u64| {
                let mut node = Node::root(&ctx.rows);
                for p in bits(mask) {
                    node.step(p, l);
                }
                node
            };
            let lower = exec
                .map(&masks, |&m| ctx.lower_score(&nodes(m)))
                .into_iter()
                .fold(0.0, f64::max);
            let threshold = AtomicU64::new(lower.to_bits());
            let chunks: Vec<&[u64]> = masks.chunks(64).collect();
            let parts = exec.map(&chunks, |chunk| {
                let mut worker = Worker::default();
                for &m in chunk.iter() {
                    worker.visit(&ctx, &threshold, &nodes(m), m);
                }
                worker
            });
            let (stats, candidates) = merge(parts);
            (lower, stats, candidates)
        }
    };

    let top = candidates
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(top.is_finite(), "the first-pass maximizer is always evaluated exactly");
    let mut ties: Vec<ShorteningPattern> = candidates
        .iter()
        .filter(|c| c.0 >= top - SCORE_EPS)
        .map(|c| ShorteningPattern::from_mask(l, c.1).expect("enumerated pattern"))
        .collect();
    ties.sort_unstable_by_key(|p| p.lex_key());
    let best_pattern = ties[0];
    let best_e = shorten(k, &best_pattern).kernel.exponent();
    let l_short = (l - t) as f64;
    Ok(SearchOutcome {
        best_pattern,
        best_e,
        lower_bound_e: lower / (l_short * l_short.ln()),
        ties,
        patterns_examined: stats.examined,
        patterns_pruned: stats.pruned,
        bounds_tight: stats.tight,
        exact_pdp_evaluations: stats.exact,
        exact_aborted: stats.aborted,
        optimal: enumeration == Enumeration::Full,
    })
}

fn sample_patterns(l: usize, t: usize, seed: u64, budget: usize) -> Vec<u64> {
    let total = gf2::binomial(l as u64, t as u64);
    let want = (budget as f64).min(total) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(want);
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let mask = sample(&mut rng, l, t).iter().fold(0u64, |m, p| m | 1 << p);
        if seen.insert(mask) {
            out.push(mask);
        }
    }
    out
}

/// Ranks patterns by the scaling exponent of the shortened kernel, ascending,
/// with the lexicographic order as tie-break. Only the first `cap` patterns are evaluated.
pub fn rank_by_scaling_exponent(
    k: &Kernel,
    patterns: &[ShorteningPattern],
    cap: usize,
    exec: Execution,
) -> Result<Vec<(ShorteningPattern, f64)>, AnalysisError> {
    let chosen = &patterns[..patterns.len().min(cap)];
    let mut ranked = exec
        .map(chosen, |p| {
            let r = shorten(k, p);
            analysis::kernel_scaling_exponent(&r.kernel, false).map(|mu| (*p, mu))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.lex_key().cmp(&b.0.lex_key())));
    Ok(ranked)
}

#[derive(Clone, Copy)]
struct Node {
    rows: [u64; 64],
    alive: u64,
    touched: u64,
}

impl Node {
    fn root(rows: &[u64]) -> Self {
        let mut r = [0u64; 64];
        r[..rows.len()].copy_from_slice(rows);
        Node {
            rows: r,
            alive: full_mask(rows.len()),
            touched: 0,
        }
    }

    #[inline]
    fn step(&mut self, p: usize, l: usize) {
        let bit = 1u64 << p;
        let mut a = l;
        for i in (0..l).rev() {
            if self.alive >> i & 1 == 1 && self.rows[i] & bit != 0 {
                a = i;
                break;
            }
        }
        debug_assert!(a < l, "column {p} vanished");
        let ra = self.rows[a];
        let mut below = self.alive & ((1u64 << a) - 1);
        while below != 0 {
            let i = below.trailing_zeros() as usize;
            below &= below - 1;
            if self.rows[i] & bit != 0 {
                self.rows[i] ^= ra;
                self.touched |= 1 << i;
            }
        }
        self.alive &= !(1u64 << a);
    }
}

struct SearchContext<'a> {
    l: usize,
    t: usize,
    rows: Vec<u64>,
    d: &'a [u32],
    ln: [f64; 65],
}

impl<'a> SearchContext<'a> {
    fn new(parent: &'a Kernel, t: usize) -> SearchContext<'a> {
        let mut ln = [0.0; 65];
        for (d, v) in ln.iter_mut().enumerate().skip(1) {
            *v = (d as f64).ln();
        }
        SearchContext {
            l: parent.size(),
            t,
            rows: parent.rows(),
            d: parent.pdp(),
            ln,
        }
    }

    fn score(&self, counts: &[u32; 65]) -> f64 {
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(d, &c)| c as f64 * self.ln[d])
            .sum()
    }

    fn lower_score(&self, node: &Node) -> f64 {
        let mut counts = [0u32; 65];
        for i in bits(node.alive) {
            counts[self.d[i] as usize] += 1;
        }
        self.score(&counts)
    }

    /// Work items: every valid choice of the first `min(t, 2)` positions.
    fn prefixes(&self) -> Vec<Vec<usize>> {
        let (l, t) = (self.l, self.t);
        if t == 1 {
            return (0..l).map(|p| vec![p]).collect();
        }
        let mut out = Vec::new();
        for a in 0..=l - t {
            for b in a + 1..=l - t + 1 {
                out.push(vec![a, b]);
            }
        }
        out
    }

    /// Visits every completion of `prefix` to a `t`-subset with increasing
    /// positions, sharing the shortening steps of common prefixes.
    fn walk(&self, prefix: &[usize], visit: &mut impl FnMut(&Node, u64)) {
        let mut node = Node::root(&self.rows);
        let mut mask = 0u64;
        for &p in prefix {
            node.step(p, self.l);
            mask |= 1 << p;
        }
        let start = prefix.last().map_or(0, |&p| p + 1);
        self.descend(&node, mask, start, self.t - prefix.len(), visit);
    }

    fn descend(&self, node: &Node, mask: u64, start: usize, left: usize, visit: &mut impl FnMut(&Node, u64)) {
        if left == 0 {
            visit(node, mask);
            return;
        }
        for p in start..=self.l - left {
            let mut child = *node;
            child.step(p, self.l);
            self.descend(&child, mask | 1 << p, p + 1, left - 1, visit);
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Stats {
    examined: u64,
    pruned: u64,
    tight: u64,
    exact: u64,
    aborted: u64,
}

#[derive(Default)]
struct Worker {
    stats: Stats,
    best: f64,
    candidates: Vec<(f64, u64)>,
}

impl Worker {
    fn visit(&mut self, ctx: &SearchContext, threshold: &AtomicU64, node: &Node, mask: u64) {
        self.stats.examined += 1;
        let l = ctx.l;
        let mut counts = [0u32; 65];
        let alive: Vec<usize> = bits(node.alive).collect();
        for &i in &alive {
            let d = if node.touched >> i & 1 == 1 {
                node.rows[i].count_ones()
            } else {
                ctx.d[i]
            };
            counts[d as usize] += 1;
        }
        let bar = f64::from_bits(threshold.load(Ordering::Relaxed)) - SCORE_EPS;
        let upper = ctx.score(&counts);
        if upper < bar {
            self.stats.pruned += 1;
            return;
        }
        let support = full_mask(l) & !mask;
        let vecs: Vec<u64> = alive.iter().map(|&i| node.rows[i]).collect();
        let mut running = upper;
        let mut enumerated = false;
        for idx in (0..alive.len()).rev() {
            let i = alive[idx];
            if node.touched >> i & 1 == 0 {
                continue;
            }
            let ceiling = vecs[idx].count_ones();
            let floor = ctx.d[i];
            if floor == ceiling {
                continue;
            }
            if !enumerated {
                enumerated = true;
                self.stats.exact += 1;
            }
            let exact = gf2::coset_distance(&vecs[idx + 1..], vecs[idx], support, floor, ceiling);
            if exact != ceiling {
                counts[ceiling as usize] -= 1;
                counts[exact as usize] += 1;
                running -= ctx.ln[ceiling as usize] - ctx.ln[exact as usize];
                if running < bar {
                    self.stats.aborted += 1;
                    return;
                }
            }
        }
        if !enumerated {
            self.stats.tight += 1;
        }
        let score = ctx.score(&counts);
        if score < bar {
            return;
        }
        if score > self.best {
            self.best = score;
            threshold.fetch_max(score.to_bits(), Ordering::Relaxed);
            let keep = score - SCORE_EPS;
            self.candidates.retain(|c| c.0 >= keep);
        }
        self.candidates.push((score, mask));
    }
}

fn merge(parts: Vec<Worker>) -> (Stats, Vec<(f64, u64)>) {
    let mut stats = Stats::default();
    let mut candidates = Vec::new();
    for w in parts {
        stats.examined += w.stats.examined;
        stats.pruned += w.stats.pruned;
        stats.tight += w.stats.tight;
        stats.exact += w.stats.exact;
        stats.aborted += w.stats.aborted;
        candidates.extend(w.candidates);
    }
    (stats, candidates)
}
