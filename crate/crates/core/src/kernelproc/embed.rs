//! Processing a shortened kernel with the processor of its parent.
//!
//! Shortening yields an upper-triangular `T` with `K^ = T K`, where the rows
//! of `K^` outside `R` vanish on the shortened columns `P` and restrict to
//! `s_P(K)` on the rest. A shortened input `u` extends to `u~` (values
//! scattered by `A`, zeros on `R`) and the channel to `y~` (`+inf` on `P`),
//! so `u s_P(K)` is `u~ K^` on the kept columns and `u~ T` is the matching
//! parent input. Shortened phase `phi` becomes parent phase `psi = A_phi`,
//! and the parent LLR of `(u~ T)_psi` equals the shortened LLR up to the
//! sign `sum_{i < psi} u~_i T[i][psi]`.

use crate::analysis::Kernel;
use crate::gf2::BitMatrix;
use crate::shortening::{bits, ShorteningResult};

use super::exact::exact_llr_rows;
use super::window::{build_window_plan, window_llr_counted, WindowPlan};
use super::{Llr, Marginalization, ProcCounters, ProcError};

/// Parent processor used for a shortened kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact(Marginalization),
    /// Window processing through the parent's plan, max mode.
    Window,
}

#[derive(Debug, Clone)]
pub struct EmbeddingPlan {
    parent_rows: Vec<u64>,
    shortening: ShorteningResult,
    /// Rows of `T` as bit masks.
    t_rows: Vec<u64>,
    t_inverse: BitMatrix,
    window: Option<WindowPlan>,
    window_error: Option<String>,
    zero_forced: u64,
}

/// Builds the embedding. The window backend is prepared when the parent
/// admits a window plan; the exact backend is always available.
pub fn build_embedding(parent: &Kernel, shortening: &ShorteningResult) -> Result<EmbeddingPlan, ProcError> {
    let l = parent.size();
    if shortening.pattern.l() != l {
        return Err(ProcError::Unsupported("shortening does not belong to this parent".into()));
    }
    let t = &shortening.transform;
    if !t.is_upper_triangular() {
        return Err(ProcError::Unsupported(
            "row additions must only add later rows into earlier ones".into(),
        ));
    }
    let hat = t.mul(parent.matrix()).expect("square shapes");
    for (i, &a) in shortening.surviving_map.iter().enumerate() {
        for p in shortening.pattern.positions() {
            if hat.get(a, p) {
                return Err(ProcError::Unsupported(format!("row {a} is nonzero on shortened column {p}")));
            }
        }
        for (jj, &c) in shortening.column_map.iter().enumerate() {
            if hat.get(a, c) != shortening.kernel.matrix().get(i, jj) {
                return Err(ProcError::Unsupported("shortening does not belong to this parent".into()));
            }
        }
    }
    let t_inverse = t.inverse().expect("unit upper-triangular");
    let (window, window_error, zero_forced) = match build_window_plan(parent) {
        Ok(plan) => {
            // u~ = v (T_K T^{-1}); a column r in R with a single one at row s
            // pins v_s to zero
            let m = plan.transform().mul(&t_inverse).expect("square shapes");
            let forced = shortening.removed_rows.iter().fold(0u64, |acc, &r| {
                let col: Vec<usize> = (0..l).filter(|&s| m.get(s, r)).collect();
                if col.len() == 1 {
                    acc | 1 << col[0]
                } else {
                    acc
                }
            });
            (Some(plan), None, forced)
        }
        Err(e) => (None, Some(e.to_string()), 0),
    };
    Ok(EmbeddingPlan {
        parent_rows: parent.rows(),
        shortening: shortening.clone(),
        t_rows: t.rows_u64(),
        t_inverse,
        window,
        window_error,
        zero_forced,
    })
}

impl EmbeddingPlan {
    pub fn shortened_size(&self) -> usize {
        self.shortening.kernel.size()
    }

    pub fn parent_size(&self) -> usize {
        self.parent_rows.len()
    }

    pub fn shortening(&self) -> &ShorteningResult {
        &self.shortening
    }

    pub fn transform(&self) -> BitMatrix {
        BitMatrix::from_rows_u64(self.parent_size(), &self.t_rows)
    }

    pub fn transform_inverse(&self) -> &BitMatrix {
        &self.t_inverse
    }

    /// Leading `(psi+1) x (psi+1)` block of `T^{-1}`.
    pub fn inverse_block(&self, psi: usize) -> BitMatrix {
        self.t_inverse.leading_block(psi + 1)
    }

    /// Extended phase `psi = A_phi`.
    pub fn psi(&self, phase: usize) -> usize {
        self.shortening.surviving_map[phase]
    }

    pub fn window_plan(&self) -> Option<&WindowPlan> {
        self.window.as_ref()
    }

    /// Arikan-domain inputs pinned to zero by the shortening.
    pub fn zero_forced(&self) -> Vec<usize> {
        bits(self.zero_forced).collect()
    }

    /// Reduced window of shortened phase `phase`; empty without a plan.
    pub fn reduced_window(&self, phase: usize) -> Vec<usize> {
        self.window.as_ref().map_or_else(Vec::new, |w| {
            w.window(self.psi(phase))
                .iter()
                .copied()
                .filter(|&i| self.zero_forced >> i & 1 == 0)
                .collect()
        })
    }

    /// Extended channel: `y` on kept columns, `+inf` on shortened ones.
    pub fn extend_llrs(&self, llrs: &[Llr]) -> Vec<Llr> {
        let mut out = vec![Llr::INFINITY; self.parent_size()];
        for (&c, &y) in self.shortening.column_map.iter().zip(llrs) {
            out[c] = y;
        }
        out
    }

    /// Parent prefix `(u~ T)_{<psi}` and the sign bit at `psi`.
    fn parent_prefix(&self, prefix: &[u8], psi: usize) -> (Vec<u8>, u8) {
        let mut x = 0u64;
        for (&b, &a) in prefix.iter().zip(&self.shortening.surviving_map) {
            if b & 1 == 1 {
                x ^= self.t_rows[a];
            }
        }
        let bits: Vec<u8> = (0..psi).map(|i| (x >> i & 1) as u8).collect();
        (bits, (x >> psi & 1) as u8)
    }

    pub fn shortened_kernel_llr(
        &self,
        phase: usize,
        prefix: &[u8],
        llrs: &[Llr],
        backend: Backend,
    ) -> Result<Llr, ProcError> {
        self.shortened_kernel_llr_counted(phase, prefix, llrs, backend, &mut ProcCounters::default())
    }

    pub fn shortened_kernel_llr_counted(
        &self,
        phase: usize,
        prefix: &[u8],
        llrs: &[Llr],
        backend: Backend,
        counters: &mut ProcCounters,
    ) -> Result<Llr, ProcError> {
        let ls = self.shortened_size();
        if llrs.len() != ls {
            return Err(ProcError::Length {
                expected: ls,
                got: llrs.len(),
            });
        }
        if phase >= ls || prefix.len() != phase {
            return Err(ProcError::Length {
                expected: phase,
                got: prefix.len(),
            });
        }
        let psi = self.psi(phase);
        let y = self.extend_llrs(llrs);
        let (x, offset) = self.parent_prefix(prefix, psi);
        let parent = match backend {
            Backend::Exact(mode) => exact_llr_rows(&self.parent_rows, psi, &x, &y, mode),
            Backend::Window => {
                let plan = self.window.as_ref().ok_or_else(|| {
                    ProcError::Unsupported(self.window_error.clone().unwrap_or_default())
                })?;
                window_llr_counted(plan, psi, &x, &y, self.zero_forced, counters)
            }
        }
        .map_err(|e| match e {
            ProcError::BothImpossible { .. } => ProcError::BothImpossible { phase },
            other => other,
        })?;
        Ok(parent.flip_if(offset))
    }
}
