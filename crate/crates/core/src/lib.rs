//! Page data arrangement for QLC 3D NAND flash.
//!
//! Physical pages written to one block are reordered across wordlines so that
//! vertically adjacent cells see as little lateral charge migration (LCM) as
//! possible. The crate provides:
//!
//! - [`types`]: program levels, block patterns, permutations and the
//!   architecture configuration shared by everything else.
//! - [`scoring`]: the LCM evaluation model (cell, page-triple and block
//!   scores, plus the adjacent-combination score tensor).
//! - [`solvers`]: classical baselines (exhaustive, random, greedy, annealing).
//! - [`neural`]: the LSTM arrangement network, its differentiable
//!   non-repetition objective, training and decoding.
//! - [`io`]: Gray coding, dataset generation and the binary file formats.
//! - [`channel`]: a synthetic retention channel used to relate score to BER.

pub mod channel;
pub mod error;
pub mod io;
pub mod neural;
pub mod scoring;
pub mod solvers;
pub mod types;

pub use error::{Error, Result};
pub use types::{ArchConfig, BlockPattern, Permutation, ProgramLevel};
