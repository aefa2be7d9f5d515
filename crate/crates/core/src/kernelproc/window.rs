//! Window processing: a kernel `K` of size `2^t` is processed through the
//! Arikan recursion via `T K = F_t`.
//!
//! With `u = v T`, input `u_phi` is `v_{tau_phi}` plus earlier `v`, where
//! `tau_phi` is the last nonzero row of column `phi` of `T`. Fixing
//! `u_0..u_phi` leaves the window `D_phi = {0..=h_phi} \ {tau_0..tau_phi}`
//! of `v` free, `h_phi = max_{phi' <= phi} tau_phi'`. The phase LLR is the
//! difference of the best Arikan path metrics over both hypotheses on
//! `u_phi`, each minimized over the window.

use crate::analysis::Kernel;
use crate::gf2::BitMatrix;

use super::arikan::ArikanSc;
use super::{Llr, ProcCounters, ProcError};

#[derive(Debug, Clone)]
pub struct WindowPlan {
    t: u32,
    transform: BitMatrix,
    /// Column `phi` of `T` as a bit mask over rows.
    columns: Vec<u64>,
    tau: Vec<usize>,
    /// `tau_inv[i] = phi` when `tau_phi = i`.
    tau_inv: Vec<usize>,
    h: Vec<usize>,
    windows: Vec<Vec<usize>>,
}

impl WindowPlan {
    pub fn size(&self) -> usize {
        1 << self.t
    }

    pub fn stages(&self) -> u32 {
        self.t
    }

    /// `T` with `T K = F_t`.
    pub fn transform(&self) -> &BitMatrix {
        &self.transform
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn h(&self) -> &[usize] {
        &self.h
    }

    pub fn window(&self, phase: usize) -> &[usize] {
        &self.windows[phase]
    }

    pub fn windows(&self) -> &[Vec<usize>] {
        &self.windows
    }

    pub fn max_window(&self) -> usize {
        self.windows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Solves `T = F_t K^{-1}` and derives `tau`, `h` and the windows.
///
/// Kernels whose `T` has two columns ending in the same row are rejected.
pub fn build_window_plan(k: &Kernel) -> Result<WindowPlan, ProcError> {
    let l = k.size();
    if !l.is_power_of_two() || l < 2 {
        return Err(ProcError::Unsupported(format!("size {l} is not a power of two")));
    }
    let t = l.trailing_zeros();
    let inv = k
        .matrix()
        .inverse()
        .ok_or_else(|| ProcError::Unsupported("kernel is singular".into()))?;
    let f = BitMatrix::arikan(t);
    let transform = f.mul(&inv).expect("square shapes");
    debug_assert_eq!(transform.mul(k.matrix()).unwrap(), f);
    let columns: Vec<u64> = (0..l)
        .map(|c| (0..l).fold(0u64, |m, r| m | (transform.get(r, c) as u64) << r))
        .collect();
    let tau: Vec<usize> = columns.iter().map(|&c| 63 - c.leading_zeros() as usize).collect();
    let mut tau_inv = vec![usize::MAX; l];
    for (phi, &r) in tau.iter().enumerate() {
        if tau_inv[r] != usize::MAX {
            return Err(ProcError::Unsupported(format!(
                "columns {} and {phi} of T both end in row {r}",
                tau_inv[r]
            )));
        }
        tau_inv[r] = phi;
    }
    let mut h = Vec::with_capacity(l);
    let mut windows = Vec::with_capacity(l);
    let mut high = 0;
    for phi in 0..l {
        high = high.max(tau[phi]);
        h.push(high);
        windows.push((0..=high).filter(|&i| tau_inv[i] > phi).collect());
    }
    Ok(WindowPlan {
        t,
        transform,
        columns,
        tau,
        tau_inv,
        h,
        windows,
    })
}

/// Phase LLR through the window plan; `prefix` holds `u_0..u_{phase-1}`.
pub fn window_llr(plan: &WindowPlan, phase: usize, prefix: &[u8], llrs: &[Llr]) -> Result<Llr, ProcError> {
    window_llr_counted(plan, phase, prefix, llrs, 0, &mut ProcCounters::default())
}

/// As [`window_llr`], with the `v` indices in `forced` pinned to zero
/// instead of enumerated, and work recorded in `counters`.
pub fn window_llr_counted(
    plan: &WindowPlan,
    phase: usize,
    prefix: &[u8],
    llrs: &[Llr],
    forced: u64,
    counters: &mut ProcCounters,
) -> Result<Llr, ProcError> {
    let l = plan.size();
    if llrs.len() != l {
        return Err(ProcError::Length {
            expected: l,
            got: llrs.len(),
        });
    }
    if phase >= l || prefix.len() != phase {
        return Err(ProcError::Length {
            expected: phase,
            got: prefix.len(),
        });
    }
    let mut u = prefix.to_vec();
    u.push(0);
    let root = ArikanSc::new(llrs);
    let mut best = [f64::INFINITY; 2];
    for b in 0..2u8 {
        u[phase] = b;
        let mut search = Search {
            plan,
            phase,
            u: &u,
            forced,
            best: f64::INFINITY,
            counters: &mut *counters,
        };
        search.descend(root.clone(), 0, 0, 0.0);
        best[b as usize] = search.best;
    }
    if best[0].is_infinite() && best[1].is_infinite() {
        return Err(ProcError::BothImpossible { phase });
    }
    Ok(Llr(best[1] - best[0]))
}

struct Search<'a> {
    plan: &'a WindowPlan,
    phase: usize,
    u: &'a [u8],
    forced: u64,
    best: f64,
    counters: &'a mut ProcCounters,
}

impl Search<'_> {
    fn descend(&mut self, mut sc: ArikanSc, i: usize, v: u64, metric: f64) {
        if i > self.plan.h[self.phase] {
            self.counters.path_metrics += 1;
            self.best = self.best.min(metric);
            return;
        }
        let owner = self.plan.tau_inv[i];
        let choices: &[u8] = if owner <= self.phase {
            let earlier = v & self.plan.columns[owner] & ((1u64 << i) - 1);
            if (self.u[owner] ^ (earlier.count_ones() & 1) as u8) == 0 {
                &[0]
            } else {
                &[1]
            }
        } else if self.forced >> i & 1 == 1 {
            &[0]
        } else {
            &[0, 1]
        };
        let lambda = if metric.is_finite() {
            Some(sc.llr(self.counters))
        } else {
            None
        };
        for (n, &bit) in choices.iter().enumerate() {
            let step = lambda.map_or(f64::INFINITY, |y| y.penalty(bit));
            if n + 1 == choices.len() {
                sc.push(bit);
                self.descend(sc, i + 1, v | (bit as u64) << i, metric + step);
                return;
            }
            let mut child = sc.clone();
            child.push(bit);
            self.descend(child, i + 1, v | (bit as u64) << i, metric + step);
        }
    }
}
