//! Successive-cancellation decoding over the kernel tree.
//!
//! A node at depth `d` has size `n_d` and kernel `K_{m-d}`; its `l` children
//! have size `n_d / l`. `alpha[d]` holds the node's input LLRs and `beta[d]`
//! the codewords of its decided children, child `t` at `t n_{d+1}..`.
//! Deciding a leaf penalizes the path metric by `|llr|` when the bit
//! disagrees with the hard decision (min-sum metric).

use std::rc::Rc;

use crate::kernelproc::Llr;

use super::processor::Processor;
use super::{combine, CodeError, CodeSpec, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub info: Vec<u8>,
    pub u: Vec<u8>,
    pub codeword: Vec<u8>,
    /// Min-sum path metric of the returned path.
    pub metric: f64,
}

/// Stages indexed by depth: the root uses the last kernel.
fn by_depth(spec: &CodeSpec) -> Vec<&Stage> {
    spec.stages().iter().rev().collect()
}

/// Input LLRs of child `t` from the node's LLRs and its earlier children.
fn child_llrs(stage: &Stage, t: usize, alpha: &[Llr], beta: &[u8], out: &mut [Llr]) {
    let l = stage.size();
    let s = out.len();
    match stage.processor() {
        Processor::F2 => {
            if t == 0 {
                for g in 0..s {
                    out[g] = Llr::check_min(alpha[2 * g], alpha[2 * g + 1]);
                }
            } else {
                for g in 0..s {
                    out[g] = Llr::var(alpha[2 * g], alpha[2 * g + 1], beta[g]);
                }
            }
        }
        proc => {
            let mut prefix = [0u8; 64];
            for g in 0..s {
                for (tt, p) in prefix[..t].iter_mut().enumerate() {
                    *p = beta[tt * s + g];
                }
                out[g] = proc.phase_llr(t, &prefix[..t], &alpha[g * l..(g + 1) * l]);
            }
        }
    }
}

fn check_llrs(spec: &CodeSpec, llrs: &[Llr]) -> Result<(), CodeError> {
    if llrs.len() != spec.n() {
        return Err(CodeError::Length {
            expected: spec.n(),
            got: llrs.len(),
        });
    }
    Ok(())
}

/// Single-path decoder with a pluggable decision rule.
struct Sc<'a, D> {
    stages: Vec<&'a Stage>,
    alpha: Vec<Vec<Llr>>,
    beta: Vec<Vec<u8>>,
    u: Vec<u8>,
    metric: f64,
    decide: D,
}

impl<D: FnMut(usize, Llr) -> u8> Sc<'_, D> {
    fn node(&mut self, d: usize) {
        let stage = self.stages[d];
        let cs = self.alpha[d].len() / stage.size();
        let leaf = d + 1 == self.stages.len();
        for t in 0..stage.size() {
            let (lo, hi) = self.alpha.split_at_mut(d + 1);
            child_llrs(stage, t, &lo[d], &self.beta[d][..t * cs], &mut hi[0]);
            if leaf {
                let llr = self.alpha[d + 1][0];
                let phase = self.u.len();
                let bit = (self.decide)(phase, llr) & 1;
                self.metric += llr.penalty(bit);
                self.u.push(bit);
                self.beta[d][t] = bit;
            } else {
                self.node(d + 1);
                let (lo, hi) = self.beta.split_at_mut(d + 1);
                combine(self.stages[d + 1], &hi[0], &mut lo[d][t * cs..(t + 1) * cs]);
            }
        }
    }
}

fn run_sc(spec: &CodeSpec, llrs: &[Llr], decide: impl FnMut(usize, Llr) -> u8) -> (Vec<u8>, Vec<u8>, f64) {
    let stages = by_depth(spec);
    let mut sizes = vec![spec.n()];
    for s in &stages {
        sizes.push(sizes.last().unwrap() / s.size());
    }
    let mut sc = Sc {
        alpha: sizes.iter().map(|&s| vec![Llr::ZERO; s]).collect(),
        beta: sizes[..stages.len()].iter().map(|&s| vec![0u8; s]).collect(),
        stages,
        u: Vec::with_capacity(spec.n()),
        metric: 0.0,
        decide,
    };
    sc.alpha[0].copy_from_slice(llrs);
    sc.node(0);
    let mut codeword = vec![0u8; spec.n()];
    combine(sc.stages[0], &sc.beta[0], &mut codeword);
    (sc.u, codeword, sc.metric)
}

/// Successive-cancellation decoding; frozen inputs are zero.
pub fn sc_decode(spec: &CodeSpec, llrs: &[Llr]) -> Result<Decoded, CodeError> {
    check_llrs(spec, llrs)?;
    let (u, codeword, metric) = run_sc(spec, llrs, |i, llr| if spec.is_frozen(i) { 0 } else { llr.hard() });
    Ok(Decoded {
        info: spec.gather(&u),
        u,
        codeword,
        metric,
    })
}

/// SC with the true inputs `u` fed back after every phase. Returns the
/// phase LLRs seen along the correct path.
pub fn genie_sc(spec: &CodeSpec, llrs: &[Llr], u: &[u8]) -> Result<Vec<Llr>, CodeError> {
    check_llrs(spec, llrs)?;
    if u.len() != spec.n() {
        return Err(CodeError::Length {
            expected: spec.n(),
            got: u.len(),
        });
    }
    let mut seen = Vec::with_capacity(spec.n());
    run_sc(spec, llrs, |i, llr| {
        seen.push(llr);
        u[i]
    });
    Ok(seen)
}

#[derive(Clone)]
struct Path {
    metric: f64,
    alpha: Vec<Rc<Vec<Llr>>>,
    beta: Vec<Rc<Vec<u8>>>,
    u: Rc<Vec<u8>>,
}

struct Scl<'a> {
    spec: &'a CodeSpec,
    stages: Vec<&'a Stage>,
    channel: &'a [Llr],
    paths: Vec<Path>,
    list: usize,
    phase: usize,
}

impl Scl<'_> {
    fn node(&mut self, d: usize) {
        let stage = self.stages[d];
        let size = if d == 0 { self.spec.n() } else { self.paths[0].alpha[d].len() };
        let cs = size / stage.size();
        let leaf = d + 1 == self.stages.len();
        for t in 0..stage.size() {
            for path in &mut self.paths {
                let (lo, hi) = path.alpha.split_at_mut(d + 1);
                let input: &[Llr] = if d == 0 { self.channel } else { &lo[d] };
                let out: &mut Vec<Llr> = Rc::make_mut(&mut hi[0]);
                child_llrs(stage, t, input, &path.beta[d][..t * cs], out);
            }
            if leaf {
                self.decide(d, t);
            } else {
                self.node(d + 1);
                let child = self.stages[d + 1];
                for path in &mut self.paths {
                    let (lo, hi) = path.beta.split_at_mut(d + 1);
                    combine(child, &hi[0], &mut Rc::make_mut(&mut lo[d])[t * cs..(t + 1) * cs]);
                }
            }
        }
    }

    fn set_bit(path: &mut Path, d: usize, t: usize, bit: u8, penalty: f64) {
        path.metric += penalty;
        Rc::make_mut(&mut path.beta[d])[t] = bit;
        Rc::make_mut(&mut path.u).push(bit);
    }

    fn decide(&mut self, d: usize, t: usize) {
        let phase = self.phase;
        self.phase += 1;
        if self.spec.is_frozen(phase) {
            for path in &mut self.paths {
                let pen = path.alpha[d + 1][0].penalty(0);
                Self::set_bit(path, d, t, 0, pen);
            }
            return;
        }
        // (path, bit, metric), in path order so the stable sort breaks ties
        // by path index and then by bit
        let mut cands: Vec<(usize, u8, f64)> = Vec::with_capacity(2 * self.paths.len());
        for (i, path) in self.paths.iter().enumerate() {
            let llr = path.alpha[d + 1][0];
            cands.push((i, 0, path.metric + llr.penalty(0)));
            cands.push((i, 1, path.metric + llr.penalty(1)));
        }
        cands.sort_by(|a, b| a.2.total_cmp(&b.2));
        cands.truncate(self.list);
        let mut uses = vec![0usize; self.paths.len()];
        for c in &cands {
            uses[c.0] += 1;
        }
        let mut old: Vec<Option<Path>> = std::mem::take(&mut self.paths).into_iter().map(Some).collect();
        let mut next = Vec::with_capacity(cands.len());
        for (i, bit, metric) in cands {
            uses[i] -= 1;
            let mut p = if uses[i] == 0 {
                old[i].take().expect("each path is moved once")
            } else {
                old[i].clone().expect("path still present")
            };
            Self::set_bit(&mut p, d, t, bit, 0.0);
            p.metric = metric;
            next.push(p);
        }
        self.paths = next;
    }
}

/// List decoding with at most `list` paths. Ties in the path metric are
/// broken by the order in which candidates are generated.
pub fn scl_decode(spec: &CodeSpec, llrs: &[Llr], list: usize) -> Result<Decoded, CodeError> {
    check_llrs(spec, llrs)?;
    if list == 0 {
        return Err(CodeError::Spec("list size must be at least 1".into()));
    }
    let stages = by_depth(spec);
    let mut sizes = vec![spec.n()];
    for s in &stages {
        sizes.push(sizes.last().unwrap() / s.size());
    }
    let root = Path {
        metric: 0.0,
        // alpha[0] is the shared channel and never stored per path
        alpha: sizes
            .iter()
            .enumerate()
            .map(|(d, &s)| Rc::new(vec![Llr::ZERO; if d == 0 { 0 } else { s }]))
            .collect(),
        beta: sizes[..stages.len()].iter().map(|&s| Rc::new(vec![0u8; s])).collect(),
        u: Rc::new(Vec::with_capacity(spec.n())),
    };
    let mut scl = Scl {
        spec,
        stages,
        channel: llrs,
        paths: vec![root],
        list,
        phase: 0,
    };
    scl.node(0);
    // trailing frozen phases add penalties after the last sort, so search;
    // the earliest path wins a tie
    let best_index = (0..scl.paths.len())
        .reduce(|a, b| if scl.paths[b].metric < scl.paths[a].metric { b } else { a })
        .expect("at least one path");
    let best = scl.paths.swap_remove(best_index);
    let mut codeword = vec![0u8; spec.n()];
    combine(scl.stages[0], &best.beta[0], &mut codeword);
    let u = Rc::try_unwrap(best.u).unwrap_or_else(|rc| (*rc).clone());
    Ok(Decoded {
        info: spec.gather(&u),
        u,
        codeword,
        metric: best.metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Kernel;
    use crate::mkpolar::{build_generator, encode, Stage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook SC for `F^{x m}` on plain floats, written independently of
    /// the tree code.
    fn textbook_sc(llrs: &[f64], frozen: &[bool]) -> Vec<u8> {
        fn rec(y: &[f64], frozen: &[bool]) -> (Vec<u8>, Vec<u8>) {
            let n = y.len();
            if n == 1 {
                let bit = if frozen[0] { 0 } else { (y[0] < 0.0) as u8 };
                return (vec![bit], vec![bit]);
            }
            let h = n / 2;
            // u F^{x m} = (x1 + x2, x2) with x1, x2 the encoded halves of u
            let f: Vec<f64> = (0..h)
                .map(|i| {
                    let (a, b) = (y[i], y[i + h]);
                    a.signum() * b.signum() * a.abs().min(b.abs())
                })
                .collect();
            let (u1, x1) = rec(&f, &frozen[..h]);
            let g: Vec<f64> = (0..h)
                .map(|i| y[i + h] + if x1[i] == 1 { -y[i] } else { y[i] })
                .collect();
            let (u2, x2) = rec(&g, &frozen[h..]);
            let mut x = vec![0u8; n];
            for i in 0..h {
                x[i] = x1[i] ^ x2[i];
                x[i + h] = x2[i];
            }
            ([u1, u2].concat(), x)
        }
        rec(llrs, frozen).0
    }

    fn random_llrs(rng: &mut ChaCha8Rng, codeword: &[u8], noise: f64) -> Vec<Llr> {
        codeword
            .iter()
            .map(|&c| Llr((1.0 - 2.0 * c as f64) + noise * rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn textbook_agrees_on_arikan_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let m = 5;
        let n = 1 << m;
        let frozen: Vec<usize> = (0..n).filter(|i: &usize| i.count_ones() < 3).collect();
        let spec = CodeSpec::arikan(m, &frozen).unwrap();
        let g = build_generator(&spec).unwrap();
        // P_rev F^{x m} = F^{x m} P_rev, so the textbook decoder sees the
        // same inputs through a bit-reversed channel
        let rev: Vec<usize> = (0..n).map(|i: usize| i.reverse_bits() >> (usize::BITS - m as u32)).collect();
        let mask: Vec<bool> = (0..n).map(|i| spec.is_frozen(i)).collect();
        for _ in 0..300 {
            let info: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2)).collect();
            let c = encode(&spec, &info).unwrap();
            assert_eq!(c, g.vec_mul(&spec.scatter(&info).unwrap()));
            let y = random_llrs(&mut rng, &c, 2.2);
            let ours = sc_decode(&spec, &y).unwrap();
            let plain: Vec<f64> = (0..n).map(|j| y[rev[j]].0).collect();
            assert_eq!(ours.u, textbook_sc(&plain, &mask));
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let stages = vec![
            Stage::new(crate::analysis::tests::random_kernel(&mut rng, 3)).unwrap(),
            Stage::new(Kernel::arikan(1)).unwrap(),
            Stage::new(Kernel::arikan(2)).unwrap(),
        ];
        let spec = CodeSpec::new(stages, &[0, 1, 5, 9]).unwrap();
        for _ in 0..20 {
            let info: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2)).collect();
            let c = encode(&spec, &info).unwrap();
            let y: Vec<Llr> = c.iter().map(|&b| if b == 0 { Llr::INFINITY } else { Llr::NEG_INFINITY }).collect();
            let sc = sc_decode(&spec, &y).unwrap();
            assert_eq!(sc.info, info);
            assert_eq!(sc.codeword, c);
            assert_eq!(sc.metric, 0.0);
            for list in [1, 3, 8] {
                assert_eq!(scl_decode(&spec, &y, list).unwrap().info, info);
            }
        }
    }

    #[test]
    fn list_of_one_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let spec = CodeSpec::new(
            vec![Stage::new(Kernel::arikan(1)).unwrap(), Stage::new(crate::analysis::tests::random_kernel(&mut rng, 5)).unwrap()],
            &[0, 1, 2],
        )
        .unwrap();
        for _ in 0..500 {
            let y: Vec<Llr> = (0..10).map(|_| Llr(rng.random_range(-3.0..3.0))).collect();
            assert_eq!(scl_decode(&spec, &y, 1).unwrap(), sc_decode(&spec, &y).unwrap());
        }
    }

    #[test]
    fn genie_follows_truth() {
        let spec = CodeSpec::arikan(3, &[]).unwrap();
        let u = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let c = crate::mkpolar::transform(&spec, &u).unwrap();
        let y: Vec<Llr> = c.iter().map(|&b| Llr(if b == 0 { 1.0 } else { -1.0 })).collect();
        let seen = genie_sc(&spec, &y, &u).unwrap();
        for (i, llr) in seen.iter().enumerate() {
            assert_eq!(llr.hard(), u[i], "phase {i}");
        }
    }
}
