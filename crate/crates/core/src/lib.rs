//! Shortened polarization kernels, their soft-input processing, and
//! multi-kernel polar codes built from them.

pub mod analysis;
pub mod exec;
pub mod gf2;
pub mod kernelproc;
pub mod mkpolar;
pub mod shortening;
pub mod sim;

pub use analysis::{ExponentReport, Kernel};
pub use exec::Execution;
pub use gf2::BitMatrix;
pub use shortening::{ShorteningPattern, ShorteningResult};
