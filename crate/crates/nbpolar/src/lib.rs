//! Non-binary polar codes over GF(2^r) for the two-user adder multiple-access
//! channel.
//!
//! Both users encode length-`N = 2^n` symbol vectors with the kernel
//! `[[1, 0], [alpha, 1]]` (a per-user field factor `alpha`), transmit the
//! code symbols bit-serially with BPSK, and the receiver observes the
//! real-valued sum of the two signals plus Gaussian noise. A single joint
//! successive-cancellation decoder recovers both messages in three stages:
//! the first `M` symbols of user 1, all of user 2, then the rest of user 1,
//! with each stage reusing the partial sums decided by the other user.
//!
//! The crate is organized as a library; the `examples/` directory is the
//! primary tour:
//!
//! * `field_arithmetic` — GF(2^r) construction, log/antilog tables, bit order
//! * `encode_and_decode` — one end-to-end block over the noisy channel
//! * `decoder_trace` — the per-decision `stage,index,symbol` trace
//! * `construct_frozen_sets` — Monte Carlo reliability estimation
//! * `rank_kernels` — analytic kernel-factor ranking across noise levels
//! * `bler_sweep` — a small deterministic block-error-rate campaign
//!
//! Run one with `cargo run --release --example bler_sweep`.
//!
//! The same capabilities are exposed by the `nbpolar` binary
//! (`rank-kernels`, `construct`, `simulate`, `plotdata` subcommands) for
//! scripted use; see the crate README.

pub mod channel;
pub mod cli;
pub mod construction;
pub mod decoder;
mod error;
pub mod gf;
pub mod kernel;
pub mod polar;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
