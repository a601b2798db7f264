//! Building blocks for adaptive forward error correction with unequal error
//! protection of video over lossy channels.
//!
//! The crate is organised by subsystem:
//!
//! - [`video`]: frame-metadata traces, GoP layouts, packetization and a
//!   synthetic video generator used in place of real encoded sequences.
//! - [`motion`]: motion/spatial features, Ward clustering and intensity classes.
//! - [`rnn`]: the small neural classifier scoring motion intensity.
//! - [`fuzzy`]: Mamdani inference, hierarchical composition and the built-in
//!   rule bases.
//! - [`fec`]: GF(256) Reed-Solomon erasure coding and FEC block bookkeeping.
//! - [`channel`]: Gilbert-Elliot loss channels, gap statistics and error-class
//!   prediction.
//! - [`netstate`]: windowed loss rate and node density from convex hulls.
//! - [`aco`]: the ant colony over the layered construction graph.
//! - [`mechanisms`]: the uniform protection-decision interface.
//! - [`qoe`]: damage propagation, concealment and quality metrics.

pub mod aco;
pub mod channel;
pub mod fec;
pub mod fuzzy;
pub mod mechanisms;
pub mod motion;
pub mod netstate;
pub mod qoe;
pub mod rng;
pub mod rnn;
pub mod video;

pub use rng::SimRng;
