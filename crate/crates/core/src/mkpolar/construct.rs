//! Frozen-set construction by genie-aided Monte Carlo.
//!
//! Each frame draws random inputs, sends them over BPSK/AWGN at the design
//! SNR and runs SC with the true inputs fed back. An input counts as an
//! error when its LLR does not favour the true bit strictly; a zero LLR
//! counts as an error. Inputs are ranked by error count, then by the mean of
//! their signed LLR, and the `n - k` least reliable are frozen.

use rand::Rng;

use crate::exec::Execution;
use crate::sim::{awgn_llrs, frame_rng};

use super::decode::genie_sc;
use super::{CodeError, CodeSpec};

/// Smallest accepted budget.
pub const MIN_BUDGET: u64 = 1000;
const CHUNK: u64 = 64;
/// Certain LLRs are clamped so that means stay finite.
const LLR_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Reliability {
    pub frames: u64,
    pub errors: Vec<u64>,
    /// Mean of `llr (-1)^u` over the frames.
    pub mean_llr: Vec<f64>,
}

impl Reliability {
    /// Input indices from least to most reliable.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.errors.len()).collect();
        order.sort_by(|&a, &b| {
            self.errors[b]
                .cmp(&self.errors[a])
                .then(self.mean_llr[a].total_cmp(&self.mean_llr[b]))
                .then(a.cmp(&b))
        });
        order
    }
}

/// Frozen set of size `n - k`, ascending.
pub fn construct_frozen(spec: &CodeSpec, k: usize, design_snr_db: f64, budget: u64, seed: u64) -> Result<Vec<usize>, CodeError> {
    let rel = construct_frozen_with(spec, k, design_snr_db, budget, seed, Execution::default())?;
    let mut frozen: Vec<usize> = rel.ranking()[..spec.n() - k].to_vec();
    frozen.sort_unstable();
    Ok(frozen)
}

/// Runs the simulation and returns the per-input statistics. Results do not
/// depend on `exec`.
pub fn construct_frozen_with(
    spec: &CodeSpec,
    k: usize,
    design_snr_db: f64,
    budget: u64,
    seed: u64,
    exec: Execution,
) -> Result<Reliability, CodeError> {
    let n = spec.n();
    if k > n {
        return Err(CodeError::Spec(format!("k = {k} exceeds n = {n}")));
    }
    if budget < MIN_BUDGET {
        return Err(CodeError::Spec(format!("construction budget {budget} is below {MIN_BUDGET}")));
    }
    // noise level of the code being designed; a rate-0 design uses rate 1
    let rate = if k == 0 { 1.0 } else { k as f64 / n as f64 };
    let open = spec.with_frozen(&[])?;
    let chunks = budget.div_ceil(CHUNK);
    let partial = exec.map_range(0, chunks, |c| {
        let mut errors = vec![0u64; n];
        let mut sum = vec![0f64; n];
        for frame in c * CHUNK..((c + 1) * CHUNK).min(budget) {
            let mut rng = frame_rng(seed, u64::MAX, frame);
            let u: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let x = super::transform(&open, &u).expect("length n");
            let y = awgn_llrs(&x, design_snr_db, rate, &mut rng);
            let seen = genie_sc(&open, &y, &u).expect("length n");
            for i in 0..n {
                let signed = if u[i] == 0 { seen[i].0 } else { -seen[i].0 };
                // NaN fails the comparison and counts as an error
                if !(signed > 0.0) {
                    errors[i] += 1;
                }
                sum[i] += if signed.is_nan() { -LLR_CLAMP } else { signed.clamp(-LLR_CLAMP, LLR_CLAMP) };
            }
        }
        (errors, sum)
    });
    let mut errors = vec![0u64; n];
    let mut sum = vec![0f64; n];
    for (e, s) in partial {
        for i in 0..n {
            errors[i] += e[i];
            sum[i] += s[i];
        }
    }
    Ok(Reliability {
        frames: budget,
        errors,
        mean_llr: sum.into_iter().map(|s| s / budget as f64).collect(),
    })
}
