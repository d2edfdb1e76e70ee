//! Multi-level salient-object ground truth and evaluation.
//!
//! The crate turns subjective-experiment records (eye fixations, point
//! clicks, drawn rectangles) into per-object saliency values and gray-level
//! ground-truth maps, scores detector saliency maps against them with
//! object-wise MAE, multi-level AuPRC and Kendall's τ_b (standard and
//! multi-reference), characterizes datasets, and generates synthetic scenes
//! with brute-force oracles for verification.

pub mod analysis;
pub mod data;
pub mod exec;
pub mod gtgen;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod synth;

pub use exec::Execution;
