//! Mixed-kernel polar codes: construction, encoding, SC and SCL decoding.
//!
//! A code over kernels `K_1, ..., K_m` is generated by
//! `G = P_rev (K_1 x ... x K_m)`, with `P_rev` the mixed-radix digit
//! reversal over `(l_1, ..., l_m)`. Recursively, `K_m` combines `l_m` child
//! codewords of length `n / l_m`: position `g l_m + j` of the codeword is
//! `sum_t cw_t[g] K_m[t][j]`, child `t` carrying inputs
//! `u[t n/l_m .. (t+1) n/l_m]`. The decoders walk this tree depth first,
//! so inputs are decided in natural order.

mod construct;
mod decode;
mod processor;
mod specfile;

use thiserror::Error;

use crate::analysis::Kernel;
use crate::gf2::{digit_reversal, BitMatrix};
use crate::kernelproc::ProcError;
use crate::shortening::ShorteningResult;

pub use construct::{construct_frozen, construct_frozen_with, Reliability};
pub use decode::{genie_sc, sc_decode, scl_decode, Decoded};
pub use processor::Processor;
pub use specfile::{
    load_frozen_file, load_kernel_file, load_spec_file, parse_spec_text, KernelEntry, KernelSource, SpecFile,
};

/// Largest length for which [`build_generator`] materializes `G`.
pub const GENERATOR_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid code specification: {0}")]
    Spec(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("code length {n} exceeds the limit {limit}")]
    TooLong { n: usize, limit: usize },
    #[error(transparent)]
    Processing(#[from] ProcError),
}

/// One kernel of the product together with its processor.
#[derive(Debug, Clone)]
pub struct Stage {
    kernel: Kernel,
    rows: Vec<u64>,
    processor: Processor,
}

impl Stage {
    pub fn new(kernel: Kernel) -> Result<Self, CodeError> {
        let processor = Processor::for_kernel(&kernel)?;
        Ok(Self::with_processor(kernel, processor))
    }

    /// Stage for `s_P(parent)`, processed through the parent.
    pub fn shortened(parent: &Kernel, shortening: &ShorteningResult) -> Result<Self, CodeError> {
        let processor = Processor::for_shortened(parent, shortening)?;
        Ok(Self::with_processor(shortening.kernel.clone(), processor))
    }

    pub fn with_processor(kernel: Kernel, processor: Processor) -> Self {
        Stage {
            rows: kernel.rows(),
            kernel,
            processor,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn processor(&self) -> &Processor {
        &self.processor
    }

    #[inline]
    pub(crate) fn rows(&self) -> &[u64] {
        &self.rows
    }
}

/// A mixed-kernel polar code with frozen values fixed at zero.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    stages: Vec<Stage>,
    n: usize,
    frozen: Vec<bool>,
    info: Vec<usize>,
}

impl CodeSpec {
    /// `frozen` lists the frozen input indices, in any order.
    pub fn new(stages: Vec<Stage>, frozen: &[usize]) -> Result<Self, CodeError> {
        if stages.is_empty() {
            return Err(CodeError::Spec("at least one kernel is required".into()));
        }
        let n = stages
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.size()))
            .ok_or_else(|| CodeError::Spec("code length overflows".into()))?;
        let mut mask = vec![false; n];
        for &f in frozen {
            if f >= n {
                return Err(CodeError::Spec(format!("frozen index {f} outside [0, {n})")));
            }
            if mask[f] {
                return Err(CodeError::Spec(format!("frozen index {f} listed twice")));
            }
            mask[f] = true;
        }
        let info = (0..n).filter(|&i| !mask[i]).collect();
        Ok(CodeSpec {
            stages,
            n,
            frozen: mask,
            info,
        })
    }

    /// Same kernels, new frozen set.
    pub fn with_frozen(&self, frozen: &[usize]) -> Result<Self, CodeError> {
        CodeSpec::new(self.stages.clone(), frozen)
    }

    /// Arikan code `F_2^{x m}` with the given frozen set.
    pub fn arikan(m: usize, frozen: &[usize]) -> Result<Self, CodeError> {
        let stages = (0..m).map(|_| Stage::new(Kernel::arikan(1))).collect::<Result<_, _>>()?;
        CodeSpec::new(stages, frozen)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn radices(&self) -> Vec<usize> {
        self.stages.iter().map(Stage::size).collect()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.frozen[i]).collect()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    /// Inputs `u` with `info` scattered over the unfrozen positions.
    pub fn scatter(&self, info: &[u8]) -> Result<Vec<u8>, CodeError> {
        if info.len() != self.k() {
            return Err(CodeError::Length {
                expected: self.k(),
                got: info.len(),
            });
        }
        let mut u = vec![0u8; self.n];
        for (&p, &b) in self.info.iter().zip(info) {
            u[p] = b & 1;
        }
        Ok(u)
    }

    pub fn gather(&self, u: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&p| u[p]).collect()
    }
}

/// `out[g l + j] = sum_t input[t s + g] K[t][j]` over every block of
/// `l * s` symbols, `s = len / l`.
pub(crate) fn combine(stage: &Stage, input: &[u8], out: &mut [u8]) {
    let l = stage.size();
    let s = input.len() / l;
    // F_2 = [[1, 0], [1, 1]], column j stored at bit j
    if stage.rows() == [0b01, 0b11] {
        for g in 0..s {
            let (a, b) = (input[g], input[s + g]);
            out[2 * g] = a ^ b;
            out[2 * g + 1] = b;
        }
        return;
    }
    for g in 0..s {
        let mut c = 0u64;
        for (t, &row) in stage.rows().iter().enumerate() {
            if input[t * s + g] & 1 == 1 {
                c ^= row;
            }
        }
        for j in 0..l {
            out[g * l + j] = (c >> j & 1) as u8;
        }
    }
}

/// Applies `G` to the full input vector `u`, one tree depth at a time.
pub fn transform(spec: &CodeSpec, u: &[u8]) -> Result<Vec<u8>, CodeError> {
    if u.len() != spec.n {
        return Err(CodeError::Length {
            expected: spec.n,
            got: u.len(),
        });
    }
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    let mut y = vec![0u8; spec.n];
    let mut block = 1;
    // deepest nodes use K_1
    for stage in &spec.stages {
        block *= stage.size();
        for (src, dst) in x.chunks(block).zip(y.chunks_mut(block)) {
            combine(stage, src, dst);
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

/// Encodes `k` information bits; frozen inputs are zero.
pub fn encode(spec: &CodeSpec, info: &[u8]) -> Result<Vec<u8>, CodeError> {
    transform(spec, &spec.scatter(info)?)
}

/// Explicit `G = P_rev (K_1 x ... x K_m)`, for cross-checks at small `n`.
pub fn build_generator(spec: &CodeSpec) -> Result<BitMatrix, CodeError> {
    if spec.n > GENERATOR_LIMIT {
        return Err(CodeError::TooLong {
            n: spec.n,
            limit: GENERATOR_LIMIT,
        });
    }
    let mut g = BitMatrix::identity(1);
    for stage in &spec.stages {
        g = g.kron(stage.kernel.matrix()).map_err(|e| CodeError::Spec(e.to_string()))?;
    }
    let perm = digit_reversal(&spec.radices());
    Ok(BitMatrix::from_fn(spec.n, spec.n, |r, c| g.get(perm.inverse(r), c)))
}
