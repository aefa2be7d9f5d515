#![allow(dead_code)]

use kshort::kernelproc::Llr;
use kshort::mkpolar::{CodeSpec, Stage};
use kshort::shortening::{shorten, ShorteningPattern};
use kshort::{BitMatrix, Kernel};
use rand::seq::index::sample;
use rand::Rng;

/// Uniformly random invertible `l x l` kernel.
pub fn random_kernel<R: Rng>(rng: &mut R, l: usize) -> Kernel {
    loop {
        let m = BitMatrix::from_fn(l, l, |_, _| rng.random_bool(0.5));
        if let Ok(k) = Kernel::new(m, format!("r{l}")) {
            return k;
        }
    }
}

pub fn random_pattern<R: Rng>(rng: &mut R, l: usize, t: usize) -> ShorteningPattern {
    ShorteningPattern::new(l, &sample(rng, l, t).into_vec()).unwrap()
}

/// A stage drawn from Arikan kernels, random small kernels, and shortened
/// Arikan or random parents processed through the parent.
pub fn random_stage<R: Rng>(rng: &mut R) -> Stage {
    match rng.random_range(0..5) {
        0 => Stage::new(Kernel::arikan(rng.random_range(1..=3))).unwrap(),
        1 => {
            let l = rng.random_range(2..=5);
            Stage::new(random_kernel(rng, l)).unwrap()
        }
        2 => {
            let parent = Kernel::arikan(3);
            let t = rng.random_range(1..=4);
            let res = shorten(&parent, &random_pattern(rng, 8, t));
            Stage::shortened(&parent, &res).unwrap()
        }
        3 => {
            let parent = Kernel::arikan(4);
            let t = rng.random_range(1..=3);
            let res = shorten(&parent, &random_pattern(rng, 16, t));
            Stage::shortened(&parent, &res).unwrap()
        }
        _ => {
            let l = rng.random_range(5..=8);
            let parent = random_kernel(rng, l);
            let t = rng.random_range(1..=l - 2);
            let res = shorten(&parent, &random_pattern(rng, l, t));
            Stage::shortened(&parent, &res).unwrap()
        }
    }
}

/// Random product code with at most `max_n` symbols and a random frozen set.
pub fn random_spec<R: Rng>(rng: &mut R, max_n: usize) -> CodeSpec {
    let mut stages = vec![random_stage(rng)];
    let mut n = stages[0].size();
    for _ in 0..rng.random_range(0..3) {
        let s = random_stage(rng);
        if n * s.size() > max_n {
            break;
        }
        n *= s.size();
        stages.push(s);
    }
    let f = rng.random_range(0..n);
    let frozen = sample(rng, n, f).into_vec();
    CodeSpec::new(stages, &frozen).unwrap()
}

pub fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Noisy LLRs for `codeword`: sign from the bit, Gaussian-ish magnitude.
pub fn noisy_llrs<R: Rng>(rng: &mut R, codeword: &[u8], snr_db: f64, rate: f64) -> Vec<Llr> {
    kshort::sim::awgn_llrs(codeword, snr_db, rate, rng)
}

/// Multiples of 1/4 in [-8, 8]; sums of these are exact in `f64`.
pub fn quantized_llrs<R: Rng>(rng: &mut R, n: usize) -> Vec<Llr> {
    (0..n).map(|_| Llr(rng.random_range(-32i32..=32) as f64 / 4.0)).collect()
}

/// Min-sum metric of a codeword.
pub fn codeword_metric(codeword: &[u8], llrs: &[Llr]) -> f64 {
    codeword.iter().zip(llrs).map(|(&c, y)| y.penalty(c)).sum()
}

/// Random `2^t x 2^t` kernel whose transform `T = F_t K^{-1}` has distinct
/// column ends, so window processing applies.
pub fn windowed_kernel<R: Rng>(rng: &mut R, t: u32) -> Kernel {
    use rand::seq::SliceRandom;
    let l = 1usize << t;
    let mut tau: Vec<usize> = (0..l).collect();
    tau.shuffle(rng);
    let m = BitMatrix::from_fn(l, l, |r, c| r == tau[c] || (r < tau[c] && rng.random_bool(0.5)));
    let inv = m.inverse().expect("distinct pivots");
    Kernel::new(inv.mul(&BitMatrix::arikan(t)).unwrap(), "windowed").unwrap()
}
