//! Kernel processing: phase LLRs of a kernel's inputs from channel LLRs.
//!
//! Backends: exhaustive marginalization (reference), the Arikan min-sum
//! recursion, window processing of kernels with `T K = F_t`, and shortened
//! kernels processed through their parent.

mod arikan;
mod embed;
mod exact;
mod llr;
pub(crate) mod window;

use thiserror::Error;

pub use arikan::{arikan_layer_llrs, arikan_transform, ArikanSc};
pub use embed::{build_embedding, Backend, EmbeddingPlan};
pub use exact::{exact_kernel_llr, exact_kernel_prob, EXACT_LIMIT};
pub(crate) use exact::exact_llr_rows;
pub use llr::{llrs_from, Llr};
pub use window::{build_window_plan, window_llr, window_llr_counted, WindowPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcError {
    #[error("kernel size {size} exceeds the processing limit {limit}")]
    SizeGuard { size: usize, limit: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("both hypotheses are impossible at phase {phase}")]
    BothImpossible { phase: usize },
    #[error("unsupported kernel for window processing: {0}")]
    Unsupported(String),
}

/// How suffixes are marginalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginalization {
    /// Exact probabilities (log-sum-exp).
    Sum,
    /// Best suffix only, consistent with min-sum path metrics.
    Max,
}

/// Work counters for the Arikan-domain backends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcCounters {
    /// Complete window hypotheses scored.
    pub path_metrics: u64,
    /// Arikan phase LLRs computed.
    pub llr_evaluations: u64,
    /// Sub-blocks skipped because every input was certain.
    pub skipped_blocks: u64,
}
