//! Flat key-value experiment configuration.
//!
//! One `key = value` pair per line, `#` starts a comment, keys match the
//! struct field names (case-sensitive, e.g. `bandwidth_W`). Ranges are
//! written `lo,hi`, lists are comma-separated, and the compression
//! calibration table is `rho:beta` pairs. Unknown keys are an error.

use crate::baselines::Scheme;
use crate::channel::ChannelConfig;
use crate::latency::LatencyParams;
use crate::rd::{BetaMap, RdError, RdOperatingSet};
use crate::scenario::ScenarioConfig;
use crate::solver::RdConfig;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("invalid compression table: {0}")]
    Rd(#[from] RdError),
    #[error(transparent)]
    Latency(#[from] crate::latency::LatencyError),
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    VehicleCount,
    BandwidthW,
    TxPowerPt,
    SpanM,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<SweepParam> {
        match s {
            "vehicle_count" => Some(SweepParam::VehicleCount),
            "bandwidth_W" => Some(SweepParam::BandwidthW),
            "tx_power_Pt" => Some(SweepParam::TxPowerPt),
            "span_m" => Some(SweepParam::SpanM),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SweepParam::VehicleCount => "vehicle_count",
            SweepParam::BandwidthW => "bandwidth_W",
            SweepParam::TxPowerPt => "tx_power_Pt",
            SweepParam::SpanM => "span_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds_per_point: usize,
    pub schemes: Vec<Scheme>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            param: SweepParam::BandwidthW,
            values: vec![100e6, 125e6, 150e6, 175e6, 200e6],
            seeds_per_point: 20,
            schemes: Scheme::all().to_vec(),
        }
    }
}

/// Parameters of the synthetic fine-tuning demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub frame_dim: usize,
    pub latent_dim: usize,
    pub frame_count: usize,
    pub frame_correlation: f64,
    pub pretrain_steps: usize,
    pub finetune_steps: usize,
    pub learning_rate: f64,
    /// Leading frames sent uncompressed and used for fine-tuning (m).
    pub finetune_frames_m: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            frame_dim: 8,
            latent_dim: 4,
            frame_count: 16,
            frame_correlation: 0.9,
            pretrain_steps: 200,
            finetune_steps: 60,
            learning_rate: 0.5,
            finetune_frames_m: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub channel: ChannelConfig,
    pub rd: RdConfig,
    pub latency: LatencyParams,
    pub demo: DemoConfig,
    pub sweep: SweepSpec,
    pub max_rounds: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioConfig::default(),
            channel: ChannelConfig::default(),
            rd: RdConfig::default(),
            latency: LatencyParams::default(),
            demo: DemoConfig::default(),
            sweep: SweepSpec::default(),
            max_rounds: None,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), reason: reason.into() }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim().parse().map_err(|e| bad(key, format!("{e}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|e| bad(key, format!("{e}")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.trim().parse().map_err(|e| bad(key, format!("{e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(bad(key, format!("expected true/false, got `{other}`"))),
    }
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64), ConfigError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(bad(key, format!("expected `lo,hi`, got `{v}`")));
    }
    Ok((parse_f64(key, parts[0])?, parse_f64(key, parts[1])?))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

fn parse_beta_map(key: &str, v: &str) -> Result<BetaMap, ConfigError> {
    let mut points = Vec::new();
    for part in v.split(',').filter(|s| !s.trim().is_empty()) {
        let kv: Vec<&str> = part.split(':').collect();
        if kv.len() != 2 {
            return Err(bad(key, format!("expected `rho:beta`, got `{part}`")));
        }
        points.push((parse_f64(key, kv[0])?, parse_f64(key, kv[1])?));
    }
    Ok(BetaMap::new(points)?)
}

fn parse_schemes(key: &str, v: &str) -> Result<Vec<Scheme>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim() {
            "TMAC" => Ok(Scheme::Tmac),
            "DMDDA-like" => Ok(Scheme::DmddaLike),
            "FTS-like" => Ok(Scheme::FtsLike),
            "NoFusion" => Ok(Scheme::NoFusion),
            other => Err(bad(key, format!("unknown scheme `{other}`"))),
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: lineno + 1,
                    text: raw.to_string(),
                });
            };
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.scenario.validate()?;
        cfg.latency.validate()?;
        if cfg.sweep.values.is_empty() {
            return Err(bad("sweep_values", "value list must be non-empty"));
        }
        if cfg.sweep.seeds_per_point < 1 {
            return Err(bad("sweep_seeds", "must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let s = &mut self.scenario;
        match key {
            // scenario
            "vehicle_count" => s.vehicle_count = parse_usize(key, v)?,
            "lane_count" => s.lane_count = parse_usize(key, v)?,
            "span_m" => s.span_m = parse_f64(key, v)?,
            "speed_range_kmh" => s.speed_range_kmh = parse_pair(key, v)?,
            "bandwidth_W" => s.bandwidth_w = parse_f64(key, v)?,
            "subchannel_budget_K" => s.subchannel_budget_k = parse_usize(key, v)?,
            "tx_power_Pt" => s.tx_power_pt = parse_f64(key, v)?,
            "noise_psd_N0" => s.noise_psd_n0 = parse_f64(key, v)?,
            "local_data_A" => s.local_data_a = parse_f64(key, v)?,
            "cycles_per_bit_beta" => s.cycles_per_bit_beta = parse_f64(key, v)?,
            "cpu_range_F" => s.cpu_range_f = parse_pair(key, v)?,
            "energy_budget_ET" => s.energy_budget_et = parse_f64(key, v)?,
            "eta" => s.eta = parse_f64(key, v)?,
            "rho_min" => s.rho_min = parse_f64(key, v)?,
            "rho_max" => s.rho_max = parse_f64(key, v)?,
            "tau_t" => s.tau_t = parse_f64(key, v)?,
            "tau_c" => s.tau_c = parse_f64(key, v)?,
            "epsilon_j" => s.epsilon_j = parse_f64(key, v)?,
            "comm_range_m" => s.comm_range_m = parse_f64(key, v)?,
            "network_k_budget" => s.network_k_budget = parse_bool(key, v)?,
            "rng_seed" => s.rng_seed = parse_u64(key, v)?,
            "ego_index" => s.ego_index = Some(parse_usize(key, v)?),
            // channel
            "path_loss_exponent" => self.channel.path_loss_exponent = parse_f64(key, v)?,
            "ref_gain_g0" => self.channel.ref_gain_g0 = parse_f64(key, v)?,
            "fading_enabled" => self.channel.fading_enabled = parse_bool(key, v)?,
            // compression calibration
            "beta_map" => self.rd.beta_map = parse_beta_map(key, v)?,
            "rd_set" => self.rd.operating_set = RdOperatingSet::new(parse_list(key, v)?)?,
            // latency
            "L_up" => self.latency.l_up = parse_f64(key, v)?,
            "L_down" => self.latency.l_down = parse_f64(key, v)?,
            "L_ft" => self.latency.l_ft = parse_f64(key, v)?,
            "Lhat_up" => self.latency.lhat_up = parse_f64(key, v)?,
            "Lhat_down" => self.latency.lhat_down = parse_f64(key, v)?,
            "Lhat_inf" => self.latency.lhat_inf = parse_f64(key, v)?,
            "frames_per_packet" => self.latency.frames_per_packet = parse_usize(key, v)?,
            "finetune_frames" => self.latency.finetune_frames = parse_usize(key, v)?,
            // fine-tuning demo
            "frame_dim" => self.demo.frame_dim = parse_usize(key, v)?,
            "latent_dim" => self.demo.latent_dim = parse_usize(key, v)?,
            "frame_count" => self.demo.frame_count = parse_usize(key, v)?,
            "frame_correlation" => self.demo.frame_correlation = parse_f64(key, v)?,
            "pretrain_steps" => self.demo.pretrain_steps = parse_usize(key, v)?,
            "finetune_steps" => self.demo.finetune_steps = parse_usize(key, v)?,
            "learning_rate" => self.demo.learning_rate = parse_f64(key, v)?,
            "finetune_frames_m" => self.demo.finetune_frames_m = parse_usize(key, v)?,
            // sweep
            "sweep_param" => {
                self.sweep.param = SweepParam::parse(v)
                    .ok_or_else(|| bad(key, format!("unknown sweep parameter `{v}`")))?
            }
            "sweep_values" => self.sweep.values = parse_list(key, v)?,
            "sweep_seeds" => self.sweep.seeds_per_point = parse_usize(key, v)?,
            "sweep_schemes" => self.sweep.schemes = parse_schemes(key, v)?,
            // solver
            "max_rounds" => self.max_rounds = Some(parse_usize(key, v)?),
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// Scenario with the swept parameter set to `value`.
    pub fn scenario_at(&self, param: SweepParam, value: f64) -> ScenarioConfig {
        let mut s = self.scenario.clone();
        match param {
            SweepParam::VehicleCount => s.vehicle_count = value.round() as usize,
            SweepParam::BandwidthW => s.bandwidth_w = value,
            SweepParam::TxPowerPt => s.tx_power_pt = value,
            SweepParam::SpanM => s.span_m = value,
        }
        s
    }
}
