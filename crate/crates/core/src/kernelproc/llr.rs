//! Log-likelihood ratios over the extended reals.
//!
//! `+inf` marks a symbol known to be zero. Arithmetic is plain IEEE so that
//! infinities absorb finite values exactly. The only undefined combination,
//! opposite infinities, yields NaN, and every consumer treats a NaN as an
//! impossible hypothesis.

use std::fmt;
use std::ops::{Add, Neg};

#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
#[repr(transparent)]
pub struct Llr(pub f64);

impl Llr {
    pub const ZERO: Llr = Llr(0.0);
    /// Certainly zero.
    pub const INFINITY: Llr = Llr(f64::INFINITY);
    /// Certainly one.
    pub const NEG_INFINITY: Llr = Llr(f64::NEG_INFINITY);
    /// Neither hypothesis is possible.
    pub const NAN: Llr = Llr(f64::NAN);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_certain(self) -> bool {
        self.0.is_infinite()
    }

    #[inline]
    pub fn is_nan(self) -> bool {
        self.0.is_nan()
    }

    /// Hard decision; zero and NaN decide for 0.
    #[inline]
    pub fn hard(self) -> u8 {
        (self.0 < 0.0) as u8
    }

    #[inline]
    pub fn magnitude(self) -> f64 {
        self.0.abs()
    }

    /// Path-metric increment for deciding `bit`: `|llr|` when `bit`
    /// disagrees with the hard decision, zero otherwise.
    #[inline]
    pub fn penalty(self, bit: u8) -> f64 {
        if self.0.is_nan() {
            f64::INFINITY
        } else if bit != self.hard() {
            self.0.abs()
        } else {
            0.0
        }
    }

    /// Negates when `bit` is one.
    #[inline]
    pub fn flip_if(self, bit: u8) -> Llr {
        if bit & 1 == 1 {
            -self
        } else {
            self
        }
    }

    /// Min-sum check-node combination `sign(a) sign(b) min(|a|, |b|)`.
    #[inline]
    pub fn check_min(a: Llr, b: Llr) -> Llr {
        // `f64::min` would drop a NaN, which marks an impossible branch.
        if a.0.is_nan() || b.0.is_nan() {
            return Llr::NAN;
        }
        let m = a.0.abs().min(b.0.abs());
        if (a.0 < 0.0) != (b.0 < 0.0) {
            Llr(-m)
        } else {
            Llr(m)
        }
    }

    /// Exact check-node combination `2 atanh(tanh(a/2) tanh(b/2))` in the
    /// numerically stable Jacobian form.
    pub fn check_exact(a: Llr, b: Llr) -> Llr {
        let min = Self::check_min(a, b);
        if a.0.is_infinite() || b.0.is_infinite() {
            return min;
        }
        let corr = (-(a.0 + b.0).abs()).exp().ln_1p() - (-(a.0 - b.0).abs()).exp().ln_1p();
        Llr(min.0 + corr)
    }

    /// Variable-node combination `b + (-1)^s a`.
    #[inline]
    pub fn var(a: Llr, b: Llr, s: u8) -> Llr {
        b + a.flip_if(s)
    }
}

impl Add for Llr {
    type Output = Llr;
    #[inline]
    fn add(self, rhs: Llr) -> Llr {
        Llr(self.0 + rhs.0)
    }
}

impl Neg for Llr {
    type Output = Llr;
    #[inline]
    fn neg(self) -> Llr {
        Llr(-self.0)
    }
}

impl From<f64> for Llr {
    fn from(v: f64) -> Self {
        Llr(v)
    }
}

impl fmt::Debug for Llr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Llr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Converts plain values, e.g. from a channel model.
pub fn llrs_from(values: &[f64]) -> Vec<Llr> {
    values.iter().map(|&v| Llr(v)).collect()
}
