//! Bayesian hidden Markov stochastic blockmodels for time series of binary
//! directed trading networks.
//!
//! The model couples a hidden Markov chain over latent market regimes with a
//! stochastic blockmodel per regime: conditionally on the regime active in
//! week t, the probability that trader i sells to trader j depends only on
//! the trading communities of i and j within that regime. Community
//! structures follow two-parameter Poisson-Dirichlet (Pitman-Yor) priors,
//! interaction probabilities follow Beta priors with separate within- and
//! between-community hyperparameters, and every hyperparameter carries its
//! own prior so that assortativity is not baked in.
//!
//! Functionality by module:
//!
//! * [`network`] — sociomatrices, edge-list ingestion into ISO weeks, and
//!   per-week descriptive statistics;
//! * [`blockmodel`] — single-regime mathematics: stick-breaking, EPPF,
//!   Beta-Bernoulli marginals, assortativity/transitivity indices, forward
//!   simulation;
//! * [`hmm`] — forward-filter backward-sampling shared by both samplers;
//! * [`sampler`] — the full MCMC sampler (collapsed Gibbs over communities,
//!   joint state-path draws, conjugate and Metropolis-Hastings hyperparameter
//!   moves) plus the matching synthetic-data generator;
//! * [`baseline`] — the Gaussian-emission comparison model fitted to pairs of
//!   weekly summary statistics;
//! * [`analysis`] — co-clustering, Binder-loss point partitions, Geweke
//!   diagnostics, index time series, hyperparameter summary tables;
//! * [`predict`] — one-step-ahead link probabilities, ROC/AUC, rolling
//!   backtests;
//! * [`config`] — TOML run configuration with documented defaults.

pub mod analysis;
pub mod baseline;
pub mod blockmodel;
pub mod config;
pub mod error;
pub mod hmm;
pub mod math;
pub mod network;
pub mod predict;
pub mod sampler;
pub mod sampling;

pub use error::{Error, Result};
