//! Growing neural cellular automata toward target shapes with age-layered
//! multi-objective search.
//!
//! The crate is organized around one pipeline: [`ca`] simulates a
//! 50-weight network rule on a two-channel grid, [`shapes`] provides the
//! binary target masks, [`objectives`] scores development traces with a
//! windowed matching loss and an information-theoretic empowerment term
//! built on [`infotheory`], and [`evolution`] searches genomes under four
//! selection treatments while logging per-generation summaries. [`pgm`]
//! holds the ASCII image format used for masks and state dumps.

pub mod ca;
pub mod error;
pub mod evolution;
pub mod infotheory;
pub mod objectives;
pub mod pgm;
pub mod shapes;

pub use error::{Error, Result};
