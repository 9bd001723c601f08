//! Pairwise channel gains and OFDM sub-channel capacities.
//!
//! Gains follow a log-distance path-loss model with a reference gain at
//! d0 = 1 m, optionally multiplied by a seeded unit-mean exponential
//! (Rayleigh-power) fading factor. Capacity per sub-channel is
//! (W/K) * log2(1 + Pt*h / (N0*W/K)).

use crate::mat::Mat;
use crate::scenario::{ScenarioConfig, ScenarioState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Reference distance for the path-loss model, meters.
pub const REF_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("channel gain is undefined for a self link (i == j == {0})")]
    SelfLink(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub path_loss_exponent: f64,
    pub ref_gain_g0: f64,
    pub fading_enabled: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            path_loss_exponent: 2.5,
            ref_gain_g0: 1e-4,
            fading_enabled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    /// Power gains h_ij; diagonal entries are unused and set to 0.
    pub gain: Mat,
    /// Sub-channel capacities C_ij in bits/s; diagonal 0.
    pub capacity: Mat,
    /// W/K in Hz.
    pub subchannel_bandwidth: f64,
}

/// Deterministic path-loss gain for one directed link. Distances below the
/// reference distance are clamped to it so coincident vehicles stay finite.
pub fn channel_gain(
    state: &ScenarioState,
    cfg: &ScenarioConfig,
    ch: &ChannelConfig,
    i: usize,
    j: usize,
) -> Result<f64, ChannelError> {
    let _ = cfg;
    if i == j {
        return Err(ChannelError::SelfLink(i));
    }
    let d = state.distance_m.get(i, j).max(REF_DISTANCE_M);
    Ok(ch.ref_gain_g0 * (d / REF_DISTANCE_M).powf(-ch.path_loss_exponent))
}

/// Unit-mean exponential draw, used as the fading power factor.
pub fn exponential_unit_mean<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(0.0..1.0);
    -(1.0 - u).ln()
}

/// Shannon sub-channel capacity in bits/s.
pub fn subchannel_capacity(cfg: &ScenarioConfig, h: f64) -> f64 {
    let wk = cfg.bandwidth_w / cfg.subchannel_budget_k as f64;
    let snr = cfg.tx_power_pt * h / (cfg.noise_psd_n0 * wk);
    wk * (1.0 + snr).log2()
}

pub fn build_channel(
    state: &ScenarioState,
    cfg: &ScenarioConfig,
    ch: &ChannelConfig,
) -> ChannelMatrix {
    let n = state.n();
    let mut gain = Mat::zeros(n);
    let mut capacity = Mat::zeros(n);
    // Fading draws use their own stream so the geometry stays comparable
    // between fading-on and fading-off runs of the same seed.
    let mut fading_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut h = channel_gain(state, cfg, ch, i, j).expect("i != j");
            if ch.fading_enabled {
                h *= exponential_unit_mean(&mut fading_rng);
            }
            gain.set(i, j, h);
            capacity.set(i, j, subchannel_capacity(cfg, h));
        }
    }
    ChannelMatrix {
        gain,
        capacity,
        subchannel_bandwidth: cfg.bandwidth_w / cfg.subchannel_budget_k as f64,
    }
}
