//! Prototype-memory video object segmentation.
//!
//! The library segments the salient moving object in a video sequence
//! without a first-frame mask. Each frame is processed in two streams
//! (RGB appearance and optical-flow color images): the frame is split
//! into superpixels, a prototype vector is pooled from fused encoder
//! features for every superpixel, a single transformer block scores
//! each prototype's usefulness, and the top-scored prototypes are kept
//! in a per-sequence memory bank. Cosine-similarity correlation maps
//! between encoder features and the banked prototypes feed a small
//! decoder that emits the soft mask.
//!
//! All numeric work uses `f64` throughout; every stated tolerance in
//! the test suite assumes that width. All operations are pure
//! functions of their inputs, so values can be shared freely across
//! threads.

pub mod cmgm;
pub mod color;
pub mod config;
pub mod container;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod imageio;
pub mod metrics;
pub mod numerics;
pub mod pgm;
pub mod pipeline;
pub mod psm;
pub mod slic;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};

/// Which input stream a value was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Rgb,
    Flow,
}

impl std::fmt::Display for Stream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stream::Rgb => write!(f, "rgb"),
            Stream::Flow => write!(f, "flow"),
        }
    }
}
