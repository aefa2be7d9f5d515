//! Reference kernel processing by enumerating every codeword that extends a
//! given input prefix.

use crate::analysis::Kernel;

use super::{Llr, Marginalization, ProcError};

/// Largest kernel accepted by the enumeration backend.
pub const EXACT_LIMIT: usize = 20;

fn guard(l: usize) -> Result<(), ProcError> {
    if l > EXACT_LIMIT {
        Err(ProcError::SizeGuard { size: l, limit: EXACT_LIMIT })
    } else {
        Ok(())
    }
}

/// Calls `visit` with every codeword `u K` where `u_0..u_{phase}` are fixed
/// by `base` (already multiplied out) and `u_{phase+1}..` range freely. Gray
/// order, so each step is a single XOR.
fn for_each_completion(rows: &[u64], phase: usize, base: u64, mut visit: impl FnMut(u64)) {
    let free = &rows[phase + 1..];
    let mut c = base;
    visit(c);
    for step in 1u64..(1u64 << free.len()) {
        c ^= free[step.trailing_zeros() as usize];
        visit(c);
    }
}

fn prefix_codeword(rows: &[u64], prefix: &[u8]) -> u64 {
    prefix
        .iter()
        .zip(rows)
        .filter(|(&b, _)| b & 1 == 1)
        .fold(0, |c, (_, &r)| c ^ r)
}

/// Total posterior probability of the input prefix `u_0..u_phase`, where
/// `priors[j] = [P(c_j = 0 | y_j), P(c_j = 1 | y_j)]`. Summation runs in the
/// log domain so that large kernels do not underflow.
pub fn exact_kernel_prob(k: &Kernel, prefix: &[u8], priors: &[[f64; 2]]) -> Result<f64, ProcError> {
    let l = k.size();
    guard(l)?;
    if prefix.is_empty() || prefix.len() > l || priors.len() != l {
        return Err(ProcError::Length {
            expected: l,
            got: priors.len(),
        });
    }
    let phase = prefix.len() - 1;
    let rows = k.rows();
    let logp: Vec<[f64; 2]> = priors.iter().map(|p| [p[0].ln(), p[1].ln()]).collect();
    let mut acc = LogSumExp::default();
    for_each_completion(&rows, phase, prefix_codeword(&rows, prefix), |c| {
        let s: f64 = (0..l).map(|j| logp[j][(c >> j & 1) as usize]).sum();
        acc.push(s);
    });
    Ok(acc.value().exp())
}

/// Phase-`phase` LLR of `u_phase` given `u_0..u_{phase-1} = prefix`.
///
/// Max mode takes `min PM(u_phase = 1) - min PM(u_phase = 0)` with the path
/// metric `PM(c) = sum_j [c_j != hard(y_j)] |y_j|`. Sum mode takes the
/// log-sum-exp of `-PM` instead, which is the exact LLR.
pub fn exact_kernel_llr(
    k: &Kernel,
    phase: usize,
    prefix: &[u8],
    llrs: &[Llr],
    mode: Marginalization,
) -> Result<Llr, ProcError> {
    exact_llr_rows(&k.rows(), phase, prefix, llrs, mode)
}

pub(crate) fn exact_llr_rows(
    rows: &[u64],
    phase: usize,
    prefix: &[u8],
    llrs: &[Llr],
    mode: Marginalization,
) -> Result<Llr, ProcError> {
    let l = rows.len();
    guard(l)?;
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
    let metric = ChunkMetric::new(llrs);
    let metric = |c: u64| metric.eval(c);
    let base = prefix_codeword(rows, prefix);
    let score = |start: u64| match mode {
        Marginalization::Max => {
            let mut best = f64::INFINITY;
            for_each_completion(rows, phase, start, |c| best = best.min(metric(c)));
            best
        }
        Marginalization::Sum => {
            let mut acc = LogSumExp::default();
            for_each_completion(rows, phase, start, |c| acc.push(-metric(c)));
            -acc.value()
        }
    };
    let zero = score(base);
    let one = score(base ^ rows[phase]);
    if zero.is_infinite() && one.is_infinite() {
        return Err(ProcError::BothImpossible { phase });
    }
    Ok(Llr(one - zero))
}

/// Path metric `sum_j penalty_j(c_j)` by table lookup, one
/// table per byte of the codeword. Within a byte the terms are summed in
/// ascending column order.
struct ChunkMetric {
    hard: u64,
    tables: Vec<[f64; 256]>,
}

impl ChunkMetric {
    fn new(llrs: &[Llr]) -> Self {
        let hard = llrs
            .iter()
            .enumerate()
            .fold(0u64, |m, (j, y)| m | (y.hard() as u64) << j);
        let tables = llrs
            .chunks(8)
            .map(|chunk| {
                let mut t = [0f64; 256];
                for (pattern, slot) in t.iter_mut().enumerate() {
                    let mut pm = 0.0;
                    for (j, y) in chunk.iter().enumerate() {
                        // `pattern` marks disagreements with the hard decision
                        pm += y.penalty(y.hard() ^ (pattern >> j & 1) as u8);
                    }
                    *slot = pm;
                }
                t
            })
            .collect();
        ChunkMetric { hard, tables }
    }

    #[inline]
    fn eval(&self, c: u64) -> f64 {
        let diff = c ^ self.hard;
        let mut pm = 0.0;
        for (k, t) in self.tables.iter().enumerate() {
            pm += t[(diff >> (8 * k) & 0xFF) as usize];
        }
        pm
    }
}

/// Streaming log-sum-exp.
#[derive(Default)]
pub(crate) struct LogSumExp {
    max: Option<f64>,
    sum: f64,
}

impl LogSumExp {
    pub(crate) fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        match self.max {
            None => {
                self.max = Some(x);
                self.sum = 1.0;
            }
            Some(m) if x > m => {
                self.sum = self.sum * (m - x).exp() + 1.0;
                self.max = Some(x);
            }
            Some(m) => self.sum += (x - m).exp(),
        }
    }

    pub(crate) fn value(&self) -> f64 {
        match self.max {
            None => f64::NEG_INFINITY,
            Some(m) => m + self.sum.ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Kernel {
        Kernel::arikan(1)
    }

    #[test]
    fn noiseless_probabilities() {
        let k = Kernel::arikan(3);
        let u = [1u8, 0, 1, 1, 0, 0, 1, 0];
        let c = k.matrix().vec_mul(&u);
        let priors: Vec<[f64; 2]> = c.iter().map(|&b| if b == 0 { [1.0, 0.0] } else { [0.0, 1.0] }).collect();
        for phase in 0..8 {
            let p = exact_kernel_prob(&k, &u[..=phase], &priors).unwrap();
            assert_eq!(p, 1.0);
            let mut flipped = u[..=phase].to_vec();
            flipped[phase] ^= 1;
            assert_eq!(exact_kernel_prob(&k, &flipped, &priors).unwrap(), 0.0);
        }
    }

    #[test]
    fn f2_by_hand() {
        // c = (u0 + u1, u1)
        let p = [[0.9, 0.1], [0.3, 0.7]];
        let got = exact_kernel_prob(&f2(), &[0], &p).unwrap();
        assert!((got - (0.9 * 0.3 + 0.1 * 0.7)).abs() < 1e-12);
        let got = exact_kernel_prob(&f2(), &[1, 1], &p).unwrap();
        assert!((got - 0.9 * 0.7).abs() < 1e-12);

        let (a, b) = (Llr(1.5), Llr(-0.75));
        let sum = exact_kernel_llr(&f2(), 0, &[], &[a, b], Marginalization::Sum).unwrap();
        assert!((sum.0 - Llr::check_exact(a, b).0).abs() < 1e-12);
        let max = exact_kernel_llr(&f2(), 0, &[], &[a, b], Marginalization::Max).unwrap();
        assert_eq!(max, Llr::check_min(a, b));
        let max = exact_kernel_llr(&f2(), 1, &[1], &[a, b], Marginalization::Max).unwrap();
        assert_eq!(max, Llr::var(a, b, 1));
    }

    #[test]
    fn certain_zero_everywhere() {
        let k = Kernel::arikan(3);
        let inf = vec![Llr::INFINITY; 8];
        for phase in 0..8 {
            let zeros = vec![0u8; phase];
            for mode in [Marginalization::Sum, Marginalization::Max] {
                assert_eq!(exact_kernel_llr(&k, phase, &zeros, &inf, mode).unwrap(), Llr::INFINITY);
            }
        }
        assert_eq!(
            exact_kernel_llr(&k, 7, &[1, 0, 0, 0, 0, 0, 0], &inf, Marginalization::Max),
            Err(ProcError::BothImpossible { phase: 7 })
        );
    }

    #[test]
    fn sum_mode_sign_is_map_decision() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let k = loop {
            let rows: Vec<u64> = (0..8).map(|_| rng.random::<u64>() & 0xFF).collect();
            if let Ok(k) = Kernel::from_rows(8, &rows, "r") {
                break k;
            }
        };
        for _ in 0..200 {
            let llrs: Vec<Llr> = (0..8).map(|_| Llr(rng.random_range(-4.0..4.0))).collect();
            let priors: Vec<[f64; 2]> = llrs
                .iter()
                .map(|y| {
                    let p0 = 1.0 / (1.0 + (-y.0).exp());
                    [p0, 1.0 - p0]
                })
                .collect();
            let phase = rng.random_range(0..8);
            let prefix: Vec<u8> = (0..phase).map(|_| rng.random_range(0..2)).collect();
            let llr = exact_kernel_llr(&k, phase, &prefix, &llrs, Marginalization::Sum).unwrap();
            let mut p = prefix.clone();
            p.push(0);
            let p0 = exact_kernel_prob(&k, &p, &priors).unwrap();
            p[phase] = 1;
            let p1 = exact_kernel_prob(&k, &p, &priors).unwrap();
            assert!((llr.0 - (p0 / p1).ln()).abs() < 1e-9);
            if (p0 - p1).abs() > 1e-12 {
                assert_eq!(llr.0 > 0.0, p0 > p1);
            }
        }
    }

    #[test]
    fn size_guard() {
        let big = Kernel::identity(21);
        assert!(matches!(
            exact_kernel_llr(&big, 0, &[], &[Llr(1.0); 21], Marginalization::Max),
            Err(ProcError::SizeGuard { size: 21, .. })
        ));
    }
}
