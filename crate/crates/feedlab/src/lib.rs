//! feedlab: a self-contained laboratory for auditing homepage-feed
//! recommendation algorithms.
//!
//! A deterministic simulated social platform with planted, configurable
//! interaction weights stands in for a real platform, and a complete
//! sockpuppet crossover-trial pipeline runs against it: Latin-square
//! treatment sequences with primer/washout interactions, feed
//! composition vectors (topic and source prevalence/prominence, average
//! embeddings), difference-in-differences treatment effects with
//! significance tests, carryover diagnostics, a multiplicative influence
//! decomposition, exploration metrics, and dose-response curves with
//! Hill-equation fits. Because the ground truth is planted, every
//! estimator can be validated against known values.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`sim`] — the simulated platform (library, accounts, feeds)
//! - [`trial`] — crossover trial design and execution
//! - [`composition`] — embeddings, clustering, composition vectors
//! - [`effects`] — treatment-effect estimation and decomposition
//! - [`behaviors`] — exploration and dose-response metrics
//! - [`dataset`] — logs joined with composition summaries
//! - [`config`], [`obslog`], [`analysis`], [`report`] — configuration,
//!   persistence, and the batch pipeline behind the CLI

pub mod analysis;
pub mod behaviors;
pub mod composition;
pub mod config;
pub mod dataset;
pub mod effects;
pub mod error;
pub mod obslog;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod trial;

pub use error::{Error, Result};
