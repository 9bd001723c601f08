//! Simulator and solver library for channel-aware throughput maximization in
//! V2V cooperative-perception networks.
//!
//! The library builds highway scenarios ([`scenario`]), derives OFDM
//! sub-channel capacities from a log-distance path-loss model ([`channel`]),
//! and solves the link-scheduling / rate / compression problem with an
//! alternating LP + greedy link search ([`solver`]). Simplified comparison
//! schemes live in [`baselines`], the rate-distortion bookkeeping and the
//! learnable-codec demonstrator in [`rd`], and packet latency accounting in
//! [`latency`]. The [`config`] module parses the flat key-value experiment
//! configuration consumed by the `tmac` CLI.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod latency;
pub mod mat;
pub mod rd;
pub mod report;
pub mod scenario;
pub mod simplex;
pub mod solver;
