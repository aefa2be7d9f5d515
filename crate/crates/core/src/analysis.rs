//! Polarization properties of kernels: partial distances, error exponent,
//! erasure profiles and the BEC scaling-exponent heuristic.

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::gf2::{self, BitMatrix, SpanReducer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("kernel must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("kernel of size {0} is singular (rank {1})")]
    Singular(usize, usize),
    #[error("kernel size {size} exceeds the limit of {limit}{hint}")]
    TooLarge {
        size: usize,
        limit: usize,
        hint: &'static str,
    },
    #[error("scaling-exponent iteration did not converge in {0} iterations")]
    NotConverged(usize),
    #[error("kernel does not polarize (dominant ratio {0})")]
    NoPolarization(f64),
    #[error("invalid erasure profile: {0}")]
    InvalidProfile(String),
}

/// An invertible `l x l` polarization kernel with a lazily computed
/// partial-distance profile.
#[derive(Clone, Debug)]
pub struct Kernel {
    mat: BitMatrix,
    pdp: OnceLock<Vec<u32>>,
    name: String,
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl Kernel {
    pub fn new(mat: BitMatrix, name: impl Into<String>) -> Result<Self, AnalysisError> {
        if !mat.is_square() {
            return Err(AnalysisError::NotSquare(mat.rows(), mat.cols()));
        }
        if mat.rows() > 64 {
            return Err(AnalysisError::TooLarge {
                size: mat.rows(),
                limit: 64,
                hint: "",
            });
        }
        let r = mat.rank();
        if r != mat.rows() {
            return Err(AnalysisError::Singular(mat.rows(), r));
        }
        Ok(Self::trusted(mat, name))
    }

    /// Skips the rank check; callers guarantee invertibility.
    pub(crate) fn trusted(mat: BitMatrix, name: impl Into<String>) -> Self {
        Kernel {
            mat,
            pdp: OnceLock::new(),
            name: name.into(),
        }
    }

    pub fn from_rows(l: usize, rows: &[u64], name: impl Into<String>) -> Result<Self, AnalysisError> {
        Self::new(BitMatrix::from_rows_u64(l, rows), name)
    }

    pub fn arikan(t: u32) -> Self {
        Self::trusted(BitMatrix::arikan(t), format!("F{t}"))
    }

    pub fn identity(l: usize) -> Self {
        Self::trusted(BitMatrix::identity(l), format!("I{l}"))
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.mat
    }

    #[inline]
    pub fn row(&self, i: usize) -> u64 {
        self.mat.row_u64(i)
    }

    pub fn rows(&self) -> Vec<u64> {
        self.mat.rows_u64()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Partial-distance profile, computed on first use.
    pub fn pdp(&self) -> &[u32] {
        self.pdp.get_or_init(|| compute_pdp_uncached(self, Execution::Parallel))
    }

    pub(crate) fn set_pdp(&self, pdp: Vec<u32>) {
        let _ = self.pdp.set(pdp);
    }

    pub fn has_pdp(&self) -> bool {
        self.pdp.get().is_some()
    }

    pub fn exponent(&self) -> f64 {
        error_exponent(self.pdp(), self.size())
    }

    /// True when `wt(K[i]) = D_i` for every row.
    pub fn is_min_weight_form(&self) -> bool {
        let pdp = self.pdp();
        (0..self.size()).all(|i| self.row(i).count_ones() == pdp[i])
    }

    /// Whether the matrix equals `F_t` for some `t`.
    pub fn arikan_stages(&self) -> Option<u32> {
        let l = self.size();
        if !l.is_power_of_two() {
            return None;
        }
        let t = l.trailing_zeros();
        (self.mat == BitMatrix::arikan(t)).then_some(t)
    }

    fn full_mask(&self) -> u64 {
        if self.size() == 64 {
            u64::MAX
        } else {
            (1u64 << self.size()) - 1
        }
    }
}

/// Exact partial-distance profile: `D_i` is the distance from row `i` to the
/// span of rows `i+1..l`, and `D_{l-1}` is the weight of the last row.
pub fn compute_pdp(kernel: &Kernel) -> Vec<u32> {
    kernel.pdp().to_vec()
}

pub fn compute_pdp_with(kernel: &Kernel, exec: Execution) -> Vec<u32> {
    let pdp = compute_pdp_uncached(kernel, exec);
    kernel.set_pdp(pdp.clone());
    pdp
}

fn compute_pdp_uncached(kernel: &Kernel, exec: Execution) -> Vec<u32> {
    let rows = kernel.rows();
    let support = kernel.full_mask();
    let phases: Vec<usize> = (0..rows.len()).collect();
    exec.map(&phases, |&i| {
        let rep = rows[i];
        gf2::coset_distance(&rows[i + 1..], rep, support, 1, rep.count_ones())
    })
}

/// `E = (1/l) * sum_i log_l D_i`.
pub fn error_exponent(pdp: &[u32], l: usize) -> f64 {
    assert!(l >= 2, "error exponent needs l >= 2");
    assert_eq!(pdp.len(), l, "profile length must equal kernel size");
    let ln_l = (l as f64).ln();
    pdp.iter().map(|&d| (d as f64).ln() / ln_l).sum::<f64>() / l as f64
}

/// Error exponent and optional scaling exponent of one kernel.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub size: usize,
    pub exponent: f64,
    pub scaling_exponent: Option<f64>,
    pub pdp: Vec<u32>,
}

impl ExponentReport {
    pub fn new(kernel: &Kernel, scaling_exponent: Option<f64>) -> Self {
        ExponentReport {
            size: kernel.size(),
            exponent: kernel.exponent(),
            scaling_exponent,
            pdp: kernel.pdp().to_vec(),
        }
    }
}

/// Equivalent kernel `K' = T K` with `wt(K'[i]) = D_i`, where `T` only adds
/// later rows into earlier ones. Returns the kernel and `T`.
pub fn min_weight_form_with_transform(kernel: &Kernel) -> (Kernel, BitMatrix) {
    let l = kernel.size();
    let pdp = kernel.pdp().to_vec();
    let support = kernel.full_mask();
    let mut rows = kernel.rows();
    for i in (0..l).rev() {
        let rep = rows[i];
        if rep.count_ones() == pdp[i] {
            continue;
        }
        let later = &rows[i + 1..];
        let replacement = if later.len() <= 24 {
            let m = gf2::coset_min_weight_floor(later, rep, pdp[i]);
            let mut v = rep;
            for (g, r) in later.iter().enumerate() {
                if m.combination >> g & 1 == 1 {
                    v ^= r;
                }
            }
            v
        } else {
            let span = SpanReducer::from_vectors(later);
            gf2::coset_min_weight_syndrome(&span, rep, support, pdp[i], rep.count_ones()).1
        };
        debug_assert_eq!(replacement.count_ones(), pdp[i]);
        rows[i] = replacement;
    }
    let mat = BitMatrix::from_rows_u64(l, &rows);
    let transform = mat
        .mul(&kernel.matrix().inverse().expect("kernel is invertible"))
        .expect("square shapes");
    let out = Kernel::trusted(mat, kernel.name().to_string());
    out.set_pdp(pdp);
    (out, transform)
}

pub fn min_weight_form(kernel: &Kernel) -> Kernel {
    min_weight_form_with_transform(kernel).0
}

/// Per-input BEC erasure statistics of a kernel.
///
/// `counts[i][w]` is the number of erasure patterns of weight `w` for which
/// input `i` cannot be recovered from the unerased outputs and inputs
/// `0..i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErasureProfile {
    pub l: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ErasureProfile {
    /// `f_i(z) = sum_w counts[i][w] z^w (1-z)^(l-w)`.
    pub fn erasure_probability(&self, i: usize, z: f64) -> f64 {
        self.polynomial(i, z, 1.0 - z, false)
    }

    /// `1 - f_i(z)` evaluated through the complementary counts, which keeps
    /// full relative precision as `f_i(z)` approaches one.
    pub fn recovery_probability(&self, i: usize, z: f64) -> f64 {
        self.polynomial(i, z, 1.0 - z, true)
    }

    fn polynomial(&self, i: usize, z: f64, zbar: f64, complement: bool) -> f64 {
        let l = self.l as u64;
        self.counts[i]
            .iter()
            .enumerate()
            .map(|(w, &c)| {
                let c = if complement {
                    gf2::binomial(l, w as u64) - c as f64
                } else {
                    c as f64
                };
                if c == 0.0 {
                    0.0
                } else {
                    c * z.powi(w as i32) * zbar.powi((l - w as u64) as i32)
                }
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.counts.len() != self.l {
            return Err(AnalysisError::InvalidProfile("row count".into()));
        }
        for (i, row) in self.counts.iter().enumerate() {
            if row.len() != self.l + 1 {
                return Err(AnalysisError::InvalidProfile(format!("input {i}: length")));
            }
            for (w, &c) in row.iter().enumerate() {
                if c as f64 > gf2::binomial(self.l as u64, w as u64) {
                    return Err(AnalysisError::InvalidProfile(format!(
                        "input {i}: count {c} above C({}, {w})",
                        self.l
                    )));
                }
            }
            if row[self.l] != 1 || row[0] != 0 {
                return Err(AnalysisError::InvalidProfile(format!("input {i}: endpoints")));
            }
        }
        Ok(())
    }
}

/// Largest kernel handled without the long-running opt-in.
pub const ERASURE_PROFILE_LIMIT: usize = 16;
/// Absolute limit with the opt-in.
pub const ERASURE_PROFILE_LONG_LIMIT: usize = 32;

/// Enumerates all `2^l` erasure patterns. Each pattern costs one bottom-up
/// elimination that classifies every input at once: input `i` is erased iff
/// row `i` restricted to the unerased columns depends on rows `i+1..l`.
pub fn erasure_profile(kernel: &Kernel, long_running: bool) -> Result<ErasureProfile, AnalysisError> {
    erasure_profile_with(kernel, long_running, Execution::Parallel)
}

pub fn erasure_profile_with(
    kernel: &Kernel,
    long_running: bool,
    exec: Execution,
) -> Result<ErasureProfile, AnalysisError> {
    let l = kernel.size();
    let limit = if long_running {
        ERASURE_PROFILE_LONG_LIMIT
    } else {
        ERASURE_PROFILE_LIMIT
    };
    if l > limit {
        return Err(AnalysisError::TooLarge {
            size: l,
            limit,
            hint: if long_running {
                ""
            } else {
                " (enable the long-running mode for up to 32)"
            },
        });
    }
    let rows = kernel.rows();
    let full = kernel.full_mask();
    let total = 1u64 << l;
    let chunk_bits = l.saturating_sub(6).min(12) as u32;
    let chunk = 1u64 << chunk_bits;
    let chunks: Vec<u64> = (0..total / chunk).collect();
    let zero = vec![0u64; l * (l + 1)];
    let flat = exec.map_reduce(
        &chunks,
        zero.clone(),
        |&c| {
            let mut counts = zero.clone();
            let mut basis = [0u64; 64];
            for erased in c * chunk..(c + 1) * chunk {
                let keep = full & !erased;
                let w = erased.count_ones() as usize;
                basis[..l].fill(0);
                for i in (0..l).rev() {
                    if !insert_xor_basis(&mut basis, rows[i] & keep) {
                        counts[i * (l + 1) + w] += 1;
                    }
                }
            }
            counts
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    );
    Ok(ErasureProfile {
        l,
        counts: flat.chunks(l + 1).map(<[u64]>::to_vec).collect(),
    })
}

#[inline]
fn insert_xor_basis(basis: &mut [u64; 64], mut v: u64) -> bool {
    while v != 0 {
        let b = 63 - v.leading_zeros() as usize;
        if basis[b] == 0 {
            basis[b] = v;
            return true;
        }
        v ^= basis[b];
    }
    false
}

/// Default grid and tolerance for [`scaling_exponent`].
pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 10_000;

/// Half-width of the logit interval covered by the grid.
const LOGIT_RANGE: f64 = 40.0;

/// Heuristic BEC scaling exponent.
///
/// Power iteration of `(T h)(z) = (1/l) sum_i h(f_i(z))` with `h(0) = h(1) = 0`,
/// starting from `z(1-z)` and sup-normalized after each step. The dominant
/// ratio `lambda` gives `mu = ln l / ln(1/lambda)`.
///
/// The `grid_size` interior points are uniform in `logit(z)` over
/// `[-40, 40]` and `h` is interpolated linearly in that coordinate. The
/// eigenfunction behaves like a fractional power of `z` near both endpoints,
/// which a grid uniform in `z` resolves poorly: with 1024 points it
/// underestimates the Arikan value by more than 0.01, while the logit grid is
/// accurate to about 1e-4.
pub fn scaling_exponent(profile: &ErasureProfile, grid_size: usize, tol: f64) -> Result<f64, AnalysisError> {
    profile.validate()?;
    assert!(grid_size >= 2, "grid needs at least two points");
    let l = profile.l;
    let n = grid_size;
    let step = 2.0 * LOGIT_RANGE / (n - 1) as f64;
    // grid point k (1..=n) sits at logit -R + (k-1) step; 0 and n+1 are z = 0, 1
    let point = |k: usize| {
        let u = -LOGIT_RANGE + (k - 1) as f64 * step;
        (1.0 / (1.0 + (-u).exp()), 1.0 / (1.0 + u.exp()))
    };
    let (z_first, _) = point(1);
    let (_, zbar_last) = point(n);
    // (lower array index, weight of the upper neighbour) for every (point, input)
    let mut taps = Vec::with_capacity(n * l);
    for k in 1..=n {
        let (z, zbar) = point(k);
        for i in 0..l {
            let f = profile.polynomial(i, z, zbar, false);
            let fbar = profile.polynomial(i, z, zbar, true);
            let tap = if f <= 0.0 {
                (0, 0.0)
            } else if fbar <= 0.0 {
                (n, 1.0)
            } else {
                let u = f.ln() - fbar.ln();
                if u < -LOGIT_RANGE {
                    (0, f / z_first)
                } else if u >= LOGIT_RANGE {
                    (n, 1.0 - fbar / zbar_last)
                } else {
                    let p = (u + LOGIT_RANGE) / step;
                    let lo = (p.floor() as usize).min(n - 2);
                    (lo + 1, p - lo as f64)
                }
            };
            taps.push(tap);
        }
    }
    let mut h: Vec<f64> = (0..n + 2)
        .map(|k| match k {
            0 => 0.0,
            k if k == n + 1 => 0.0,
            k => {
                let (z, zbar) = point(k);
                z * zbar
            }
        })
        .collect();
    let sup = h.iter().cloned().fold(0.0, f64::max);
    h.iter_mut().for_each(|v| *v /= sup);
    let mut next = vec![0.0; n + 2];
    let mut lambda_prev = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        for k in 1..=n {
            let s: f64 = taps[(k - 1) * l..k * l]
                .iter()
                .map(|&(lo, frac)| h[lo] * (1.0 - frac) + h[lo + 1] * frac)
                .sum();
            next[k] = s / l as f64;
        }
        let lambda = next.iter().cloned().fold(0.0, f64::max);
        if lambda <= 0.0 {
            return Err(AnalysisError::NoPolarization(lambda));
        }
        for (dst, src) in h.iter_mut().zip(&next) {
            *dst = src / lambda;
        }
        if (lambda - lambda_prev).abs() < tol {
            if lambda >= 1.0 - 1e-9 {
                return Err(AnalysisError::NoPolarization(lambda));
            }
            return Ok((l as f64).ln() / (1.0 / lambda).ln());
        }
        lambda_prev = lambda;
    }
    Err(AnalysisError::NotConverged(MAX_ITERATIONS))
}

/// Scaling exponent of a kernel with default grid settings.
pub fn kernel_scaling_exponent(kernel: &Kernel, long_running: bool) -> Result<f64, AnalysisError> {
    let profile = erasure_profile(kernel, long_running)?;
    scaling_exponent(&profile, DEFAULT_GRID, DEFAULT_TOLERANCE)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_kernel(rng: &mut ChaCha8Rng, l: usize) -> Kernel {
        loop {
            let rows: Vec<u64> = (0..l).map(|_| rng.random::<u64>() & ((1 << l) - 1)).collect();
            if let Ok(k) = Kernel::from_rows(l, &rows, "rand") {
                return k;
            }
        }
    }

    // from-scratch enumeration of the span of the later rows
    fn oracle_pdp(k: &Kernel) -> Vec<u32> {
        let l = k.size();
        (0..l)
            .map(|i| {
                let later: Vec<u64> = (i + 1..l).map(|j| k.row(j)).collect();
                (0..1u64 << later.len())
                    .map(|c| {
                        let mut v = k.row(i);
                        for (g, r) in later.iter().enumerate() {
                            if c >> g & 1 == 1 {
                                v ^= r;
                            }
                        }
                        v.count_ones()
                    })
                    .min()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn pdp_examples() {
        assert_eq!(compute_pdp(&Kernel::arikan(1)), vec![1, 2]);
        let expected: Vec<u32> = (0..16u32).map(|i| 1 << i.count_ones()).collect();
        assert_eq!(compute_pdp(&Kernel::arikan(4)), expected);
        assert_eq!(oracle_pdp(&Kernel::arikan(4)), expected);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let l = rng.random_range(2..=12);
            let k = random_kernel(&mut rng, l);
            let pdp = compute_pdp(&k);
            assert_eq!(pdp, oracle_pdp(&k));
            assert_eq!(pdp[l - 1], k.row(l - 1).count_ones());
            for (i, &d) in pdp.iter().enumerate() {
                assert!(d >= 1 && d <= k.row(i).count_ones());
            }
        }
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(Kernel::arikan(5).exponent(), 0.5);
        assert_eq!(Kernel::arikan(4).exponent(), 0.5);
        assert_eq!(error_exponent(&[1; 7], 7), 0.0);
    }

    #[test]
    fn min_weight_form_examples() {
        let f4 = Kernel::arikan(4);
        assert_eq!(min_weight_form(&f4), f4);

        // plant row0 = row0_min + row2 and undo it
        let mut rows = Kernel::arikan(3).rows();
        rows[1] ^= rows[7];
        let k = Kernel::from_rows(8, &rows, "planted").unwrap();
        assert_eq!(k.row(1).count_ones(), 6);
        let (m, t) = min_weight_form_with_transform(&k);
        assert_eq!(m.row(1).count_ones(), 2);
        assert_eq!(compute_pdp(&m), compute_pdp(&k));
        assert!(t.is_upper_triangular());
        assert_eq!(t.mul(k.matrix()).unwrap(), *m.matrix());

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let l = rng.random_range(2..=14);
            let k = random_kernel(&mut rng, l);
            let (m, t) = min_weight_form_with_transform(&k);
            assert!(m.is_min_weight_form());
            assert!(t.is_upper_triangular());
            let fresh = Kernel::new(m.matrix().clone(), "fresh").unwrap();
            assert_eq!(compute_pdp(&fresh), compute_pdp(&k));
            assert_eq!(fresh.exponent(), k.exponent());
        }
    }

    #[test]
    fn erasure_profile_examples() {
        let p = erasure_profile(&Kernel::arikan(1), false).unwrap();
        assert_eq!(p.counts, vec![vec![0, 2, 1], vec![0, 0, 1]]);
        let z = 0.3;
        assert!((p.erasure_probability(0, z) - (2.0 * z - z * z)).abs() < 1e-15);
        assert!((p.erasure_probability(1, z) - z * z).abs() < 1e-15);

        let l = 6;
        let p = erasure_profile(&Kernel::identity(l), false).unwrap();
        for i in 0..l {
            for w in 1..=l {
                assert_eq!(p.counts[i][w] as f64, gf2::binomial(l as u64 - 1, w as u64 - 1));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let l = rng.random_range(2..=10);
            let k = random_kernel(&mut rng, l);
            let p = erasure_profile(&k, false).unwrap();
            p.validate().unwrap();
            for s in 0..=20 {
                let z = s as f64 / 20.0;
                let total: f64 = (0..l).map(|i| p.erasure_probability(i, z)).sum();
                assert!((total - l as f64 * z).abs() < 1e-12, "conservation at z={z}");
            }
        }
    }

    #[test]
    fn erasure_profile_paths_agree() {
        let k = Kernel::arikan(3);
        assert_eq!(
            erasure_profile_with(&k, false, Execution::Sequential).unwrap(),
            erasure_profile_with(&k, false, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn erasure_profile_guard() {
        let big = Kernel::arikan(5);
        assert!(matches!(
            erasure_profile(&big, false),
            Err(AnalysisError::TooLarge { size: 32, limit: 16, .. })
        ));
    }

    #[test]
    fn scaling_exponent_of_arikan() {
        let p = erasure_profile(&Kernel::arikan(1), false).unwrap();
        let mu = scaling_exponent(&p, DEFAULT_GRID, DEFAULT_TOLERANCE).unwrap();
        assert!((mu - 3.627).abs() < 0.01, "mu = {mu}");
        let coarse = scaling_exponent(&p, 512, DEFAULT_TOLERANCE).unwrap();
        assert!((coarse - mu).abs() < 0.005, "{coarse} vs {mu}");
    }

    #[test]
    fn scaling_exponent_identity_does_not_polarize() {
        let p = erasure_profile(&Kernel::identity(4), false).unwrap();
        assert!(matches!(
            scaling_exponent(&p, 256, DEFAULT_TOLERANCE),
            Err(AnalysisError::NoPolarization(_))
        ));
    }

    #[test]
    fn singular_kernel_rejected() {
        assert!(matches!(
            Kernel::from_rows(2, &[1, 1], "s"),
            Err(AnalysisError::Singular(2, 1))
        ));
    }
}
