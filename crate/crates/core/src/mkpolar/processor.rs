//! Per-kernel phase LLR computation used by the decoders.

use std::sync::Arc;

use crate::analysis::Kernel;
use crate::kernelproc::{
    arikan_layer_llrs, build_embedding, build_window_plan, exact_llr_rows, window_llr, Backend, EmbeddingPlan,
    Llr, Marginalization, ProcError, WindowPlan, EXACT_LIMIT,
};
use crate::shortening::ShorteningResult;

/// How one kernel turns `l` input LLRs into a phase LLR.
///
/// Every variant uses max-mode (min-sum) semantics, so decoders built from
/// any mix of them share one path metric.
#[derive(Debug, Clone)]
pub enum Processor {
    /// The 2x2 Arikan kernel, handled inline by the decoders.
    F2,
    Arikan(u32),
    Window(Arc<WindowPlan>),
    Embedded(Arc<EmbeddingPlan>, Backend),
    Exact(Vec<u64>),
}

impl Processor {
    /// Picks the cheapest exact-in-max-mode processor for `k`.
    pub fn for_kernel(k: &Kernel) -> Result<Self, ProcError> {
        if let Some(t) = k.arikan_stages() {
            return Ok(if t == 1 { Processor::F2 } else { Processor::Arikan(t) });
        }
        if let Ok(plan) = build_window_plan(k) {
            return Ok(Processor::Window(Arc::new(plan)));
        }
        if k.size() <= EXACT_LIMIT {
            return Ok(Processor::Exact(k.rows()));
        }
        Err(ProcError::SizeGuard {
            size: k.size(),
            limit: EXACT_LIMIT,
        })
    }

    /// Processes `s_P(parent)` through the parent, by window when the parent
    /// admits a plan and by enumeration otherwise.
    pub fn for_shortened(parent: &Kernel, shortening: &ShorteningResult) -> Result<Self, ProcError> {
        let plan = build_embedding(parent, shortening)?;
        let backend = if plan.window_plan().is_some() {
            Backend::Window
        } else if parent.size() <= EXACT_LIMIT {
            Backend::Exact(Marginalization::Max)
        } else {
            return Err(ProcError::SizeGuard {
                size: parent.size(),
                limit: EXACT_LIMIT,
            });
        };
        Ok(Processor::Embedded(Arc::new(plan), backend))
    }

    pub fn describe(&self) -> String {
        match self {
            Processor::F2 => "f2".into(),
            Processor::Arikan(t) => format!("arikan-{t}"),
            Processor::Window(p) => format!("window (max |D| = {})", p.max_window()),
            Processor::Embedded(_, Backend::Window) => "embedded window".into(),
            Processor::Embedded(_, Backend::Exact(_)) => "embedded exact".into(),
            Processor::Exact(_) => "exact".into(),
        }
    }

    /// Phase LLR; an impossible configuration yields NaN, which the path
    /// metric treats as an infinite penalty for both hypotheses.
    pub fn phase_llr(&self, phase: usize, prefix: &[u8], llrs: &[Llr]) -> Llr {
        let r = match self {
            Processor::F2 => Ok(if phase == 0 {
                Llr::check_min(llrs[0], llrs[1])
            } else {
                Llr::var(llrs[0], llrs[1], prefix[0])
            }),
            Processor::Arikan(t) => Ok(arikan_layer_llrs(*t, prefix, llrs)),
            Processor::Window(plan) => window_llr(plan, phase, prefix, llrs),
            Processor::Embedded(plan, backend) => plan.shortened_kernel_llr(phase, prefix, llrs, *backend),
            Processor::Exact(rows) => exact_llr_rows(rows, phase, prefix, llrs, Marginalization::Max),
        };
        r.unwrap_or(Llr(f64::NAN))
    }
}
