//! Min-sum processing of the Arikan kernel `F_t`, indexed so that
//! `F_t[i][j] = 1` iff the bits of `j` are a subset of the bits of `i`.
//!
//! With `F_t = F_2 (x) F_{t-1}` the codeword splits as
//! `c_left = (v_a + v_b) F'` and `c_right = v_b F'`, so phase `j < l/2` sees
//! the check-node channel `f(y_left, y_right)` and phase `j >= l/2` sees
//! `y_right + (-1)^s y_left` with `s = v_a F'`.

use super::{Llr, ProcCounters};

/// `c = v F_t` in place: each `c_j` is the XOR of `v_i` over supersets `i`
/// of `j`.
pub fn arikan_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut step = 1;
    while step < n {
        for i in 0..n {
            if i & step == 0 {
                bits[i] ^= bits[i | step];
            }
        }
        step <<= 1;
    }
}

/// Phase-`partial.len()` LLR of `F_t` by direct recursion. Kept deliberately
/// simple; [`ArikanSc`] is the incremental version.
pub fn arikan_layer_llrs(t: u32, partial: &[u8], llrs: &[Llr]) -> Llr {
    assert_eq!(llrs.len(), 1usize << t, "need 2^t channel values");
    assert!(partial.len() < llrs.len(), "phase out of range");
    recurse(partial, llrs)
}

fn recurse(partial: &[u8], llrs: &[Llr]) -> Llr {
    let n = llrs.len();
    if n == 1 {
        return llrs[0];
    }
    if llrs.iter().all(|&y| y == Llr::INFINITY) {
        // A known all-zero codeword forces every input to zero.
        return if partial.iter().all(|&b| b == 0) { Llr::INFINITY } else { Llr::NAN };
    }
    let half = n / 2;
    let (left, right) = llrs.split_at(half);
    let j = partial.len();
    if j < half {
        let f: Vec<Llr> = left.iter().zip(right).map(|(&a, &b)| Llr::check_min(a, b)).collect();
        recurse(partial, &f)
    } else {
        let mut s = partial[..half].to_vec();
        arikan_transform(&mut s);
        let g: Vec<Llr> = left
            .iter()
            .zip(right)
            .zip(&s)
            .map(|((&a, &b), &bit)| Llr::var(a, b, bit))
            .collect();
        recurse(&partial[half..], &g)
    }
}

/// Incremental successive-cancellation state for `F_t`.
///
/// Layer `d` holds the `2^(t-d)` LLRs of the subtree that contains the
/// current phase; only the layers whose subtree changed are recomputed when
/// the phase advances. Cloning is cheap enough to branch on hypotheses.
#[derive(Clone)]
pub struct ArikanSc {
    t: u32,
    n: usize,
    layers: Vec<Llr>,
    /// Lowest layer that is stale for the current phase.
    stale_from: u32,
    decisions: Vec<u8>,
}

impl ArikanSc {
    pub fn new(llrs: &[Llr]) -> Self {
        let n = llrs.len();
        assert!(n.is_power_of_two(), "Arikan kernels have power-of-two size");
        let mut layers = vec![Llr::ZERO; 2 * n - 1];
        layers[..n].copy_from_slice(llrs);
        ArikanSc {
            t: n.trailing_zeros(),
            n,
            layers,
            stale_from: 1,
            decisions: Vec::with_capacity(n),
        }
    }

    #[inline]
    fn offset(&self, d: u32) -> usize {
        2 * self.n - 2 * (self.n >> d)
    }

    pub fn phase(&self) -> usize {
        self.decisions.len()
    }

    pub fn decisions(&self) -> &[u8] {
        &self.decisions
    }

    /// LLR of the current phase given the decisions so far.
    pub fn llr(&mut self, counters: &mut ProcCounters) -> Llr {
        let i = self.decisions.len();
        assert!(i < self.n, "all phases decided");
        for d in self.stale_from..=self.t {
            let size = self.n >> d;
            let (parent_off, off) = (self.offset(d - 1), self.offset(d));
            let bit = i >> (self.t - d) & 1;
            let (head, tail) = self.layers.split_at_mut(off);
            let parent = &head[parent_off..parent_off + 2 * size];
            let out = &mut tail[..size];
            let known_zero = parent.iter().all(|&y| y == Llr::INFINITY);
            if bit == 0 {
                if known_zero {
                    out.fill(Llr::INFINITY);
                    counters.skipped_blocks += 1;
                    continue;
                }
                for k in 0..size {
                    out[k] = Llr::check_min(parent[k], parent[k + size]);
                }
            } else {
                let start = (i >> (self.t - d + 1)) << (self.t - d + 1);
                let decided = &self.decisions[start..start + size];
                if known_zero {
                    // Any one among the decided inputs contradicts the known zeros.
                    let fill = if decided.iter().all(|&b| b == 0) { Llr::INFINITY } else { Llr::NAN };
                    out.fill(fill);
                    counters.skipped_blocks += 1;
                    continue;
                }
                let mut s = decided.to_vec();
                arikan_transform(&mut s);
                for k in 0..size {
                    out[k] = Llr::var(parent[k], parent[k + size], s[k]);
                }
            }
        }
        self.stale_from = self.t + 1;
        counters.llr_evaluations += 1;
        self.layers[2 * self.n - 2]
    }

    /// Records the decision for the current phase.
    pub fn push(&mut self, bit: u8) {
        let i = self.decisions.len();
        self.decisions.push(bit & 1);
        let next = i + 1;
        if next < self.n {
            let top = usize::BITS - 1 - (next ^ i).leading_zeros();
            self.stale_from = self.stale_from.min(self.t - top);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Kernel;
    use crate::kernelproc::{exact_kernel_llr, Marginalization};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quantized(rng: &mut ChaCha8Rng, n: usize) -> Vec<Llr> {
        (0..n).map(|_| Llr(rng.random_range(-32i32..=32) as f64 / 4.0)).collect()
    }

    #[test]
    fn transform_is_row_combination() {
        let k = Kernel::arikan(3);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let v: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
            let mut c = v.clone();
            arikan_transform(&mut c);
            assert_eq!(c, k.matrix().vec_mul(&v));
        }
    }

    #[test]
    fn f2_matches_exact() {
        let f2 = Kernel::arikan(1);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let y = quantized(&mut rng, 2);
            assert_eq!(
                arikan_layer_llrs(1, &[], &y),
                exact_kernel_llr(&f2, 0, &[], &y, Marginalization::Max).unwrap()
            );
            let b = rng.random_range(0..2);
            assert_eq!(
                arikan_layer_llrs(1, &[b], &y),
                exact_kernel_llr(&f2, 1, &[b], &y, Marginalization::Max).unwrap()
            );
        }
    }

    #[test]
    fn f8_matches_exact_at_every_phase() {
        let f8 = Kernel::arikan(3);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..300 {
            let y = quantized(&mut rng, 8);
            let v: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
            let mut sc = ArikanSc::new(&y);
            let mut counters = ProcCounters::default();
            for phase in 0..8 {
                let oracle = exact_kernel_llr(&f8, phase, &v[..phase], &y, Marginalization::Max).unwrap();
                assert_eq!(arikan_layer_llrs(3, &v[..phase], &y), oracle);
                assert_eq!(sc.llr(&mut counters), oracle);
                sc.push(v[phase]);
            }
        }
    }

    #[test]
    fn incremental_matches_recursion_on_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let mut y: Vec<Llr> = (0..32).map(|_| Llr(rng.random_range(-5.0..5.0))).collect();
            for j in 0..32 {
                if rng.random_range(0..4) == 0 {
                    y[j] = Llr::INFINITY;
                }
            }
            let mut sc = ArikanSc::new(&y);
            let mut counters = ProcCounters::default();
            let mut v = Vec::new();
            for _ in 0..32 {
                let a = sc.llr(&mut counters);
                assert_eq!(a, arikan_layer_llrs(5, &v, &y));
                let bit = a.hard();
                v.push(bit);
                sc.push(bit);
            }
        }
    }

    #[test]
    fn certain_zero() {
        let y = vec![Llr::INFINITY; 16];
        let mut sc = ArikanSc::new(&y);
        let mut counters = ProcCounters::default();
        for phase in 0..16 {
            assert_eq!(arikan_layer_llrs(4, &vec![0; phase], &y), Llr::INFINITY);
            assert_eq!(sc.llr(&mut counters), Llr::INFINITY);
            sc.push(0);
        }
        assert!(counters.skipped_blocks > 0);
    }

    #[test]
    fn contradicting_prefix_is_impossible() {
        let f4 = Kernel::arikan(2);
        let y = [Llr(2.75), Llr(2.75), Llr::INFINITY, Llr::INFINITY];
        for bits in 0u8..8 {
            let prefix = [bits & 1, bits >> 1 & 1, bits >> 2 & 1];
            let direct = arikan_layer_llrs(2, &prefix, &y);
            let mut sc = ArikanSc::new(&y);
            for &b in &prefix {
                sc.llr(&mut ProcCounters::default());
                sc.push(b);
            }
            let incremental = sc.llr(&mut ProcCounters::default());
            match exact_kernel_llr(&f4, 3, &prefix, &y, Marginalization::Max) {
                Ok(want) => {
                    assert_eq!(direct, want, "prefix {prefix:?}");
                    assert_eq!(incremental, want, "prefix {prefix:?}");
                }
                Err(_) => {
                    assert!(direct.is_nan(), "prefix {prefix:?}: {direct:?}");
                    assert!(incremental.is_nan(), "prefix {prefix:?}: {incremental:?}");
                }
            }
        }
    }
}
