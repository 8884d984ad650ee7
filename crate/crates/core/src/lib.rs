//! Phenotype-preserving evaluation of inpainted fluorescence micrographs.
//!
//! The central entry point is [`phirm_score`], which segments nuclei in an
//! original and a reconstructed image and penalizes differences in nucleus
//! count, nuclear area and saturated-artefact area. Around it sit the
//! pixel-fidelity baselines, mask generators, a patch extractor, a synthetic
//! validation lab and batch reporting.

// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod batch;
pub mod draw;
pub mod error;
pub mod imgcore;
pub mod io;
pub mod maskgen;
pub mod metric;
pub mod patches;
pub mod report;
pub mod rng;
pub mod synthval;

pub use baselines::BaselineScores;
pub use error::{Error, Result};
pub use imgcore::{BinaryMask, GrayImage, RawImage};
pub use metric::{phirm_score, summarize_phenotype, PhenotypeSummary, PhirmConfig, PhirmReport};
