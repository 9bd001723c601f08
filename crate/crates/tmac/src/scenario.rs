//! Reproducible highway scenario generation.
//!
//! Vehicles are placed on parallel lanes (3.5 m lane width) over a
//! configurable longitudinal span. Pairwise distances are Euclidean in this
//! plane; the normalized distance divides by the communication range and
//! clamps to [0, 1].

use crate::mat::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const LANE_WIDTH_M: f64 = 3.5;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid config field {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("vehicle index {index} out of range for {count} vehicles")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Scenario and radio parameters. Field names match the config-file keys
/// (see [`crate::config`]) modulo case.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub vehicle_count: usize,
    pub lane_count: usize,
    pub span_m: f64,
    pub speed_range_kmh: (f64, f64),
    /// Total OFDM bandwidth W in Hz.
    pub bandwidth_w: f64,
    /// Sub-channel budget K per ego.
    pub subchannel_budget_k: usize,
    /// Transmit power P_t in watts.
    pub tx_power_pt: f64,
    /// Noise power spectral density N_0 in W/Hz.
    pub noise_psd_n0: f64,
    /// Local sensing data rate A_j in bits/s.
    pub local_data_a: f64,
    /// CPU cycles needed per bit of processed data.
    pub cycles_per_bit_beta: f64,
    /// Per-vehicle CPU capacity range F_j in Hz.
    pub cpu_range_f: (f64, f64),
    /// Energy budget E^T per decision epoch in joules.
    pub energy_budget_et: f64,
    /// Compression priority constant, in (0, 1].
    pub eta: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Transmission duration per epoch in seconds.
    pub tau_t: f64,
    /// Processing duration per epoch in seconds.
    pub tau_c: f64,
    /// Processing energy in joules per bit-second.
    pub epsilon_j: f64,
    pub comm_range_m: f64,
    /// When true, the sub-channel budget K caps the total link count of the
    /// whole network instead of the links into each ego.
    pub network_k_budget: bool,
    pub rng_seed: u64,
    /// Ego override; default picks the vehicle closest to the span midpoint.
    pub ego_index: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            vehicle_count: 10,
            lane_count: 6,
            span_m: 200.0,
            speed_range_kmh: (0.0, 50.0),
            bandwidth_w: 200e6,
            subchannel_budget_k: 4,
            tx_power_pt: 8e-3,
            noise_psd_n0: 1e-17,
            local_data_a: 40e6,
            cycles_per_bit_beta: 100.0,
            cpu_range_f: (1e9, 3e9),
            energy_budget_et: 1000.0,
            eta: 0.6,
            rho_min: 0.2,
            rho_max: 1.0,
            tau_t: 0.1,
            tau_c: 0.1,
            epsilon_j: 1e-6,
            comm_range_m: 200.0,
            network_k_budget: false,
            rng_seed: 7,
            ego_index: None,
        }
    }
}

impl ScenarioConfig {
    /// Default parameters with CPU capacity raised so that the per-ego
    /// compute budget F_j/beta - A_j is positive. With the literal defaults
    /// above, processing the local data alone already exceeds F_j/beta, which
    /// makes every scenario infeasible; the shipped experiment configs use
    /// this calibration.
    pub fn calibrated() -> Self {
        ScenarioConfig {
            cpu_range_f: (4e10, 6e10),
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ScenarioError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::InvalidConfig {
                    field,
                    reason: format!("must be strictly positive and finite, got {v}"),
                })
            }
        }
        if self.vehicle_count < 1 {
            return Err(ScenarioError::InvalidConfig {
                field: "vehicle_count",
                reason: "must be >= 1".into(),
            });
        }
        if self.lane_count < 1 {
            return Err(ScenarioError::InvalidConfig {
                field: "lane_count",
                reason: "must be >= 1".into(),
            });
        }
        positive("span_m", self.span_m)?;
        positive("bandwidth_W", self.bandwidth_w)?;
        if self.subchannel_budget_k < 1 {
            return Err(ScenarioError::InvalidConfig {
                field: "subchannel_budget_K",
                reason: "must be >= 1".into(),
            });
        }
        positive("tx_power_Pt", self.tx_power_pt)?;
        positive("noise_psd_N0", self.noise_psd_n0)?;
        positive("local_data_A", self.local_data_a)?;
        positive("cycles_per_bit_beta", self.cycles_per_bit_beta)?;
        positive("energy_budget_ET", self.energy_budget_et)?;
        positive("tau_t", self.tau_t)?;
        positive("tau_c", self.tau_c)?;
        positive("epsilon_j", self.epsilon_j)?;
        positive("comm_range_m", self.comm_range_m)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ScenarioError::InvalidConfig {
                field: "eta",
                reason: format!("must be in (0, 1], got {}", self.eta),
            });
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max && self.rho_max <= 1.0) {
            return Err(ScenarioError::InvalidConfig {
                field: "rho_min",
                reason: format!(
                    "need 0 < rho_min <= rho_max <= 1, got ({}, {})",
                    self.rho_min, self.rho_max
                ),
            });
        }
        // The compression window [max(rho_min, eta e^-L), rho_max] must be
        // non-empty at L = 0, otherwise every nearby link is infeasible.
        if self.eta > self.rho_max {
            return Err(ScenarioError::InvalidConfig {
                field: "eta",
                reason: format!(
                    "eta ({}) must not exceed rho_max ({})",
                    self.eta, self.rho_max
                ),
            });
        }
        if self.speed_range_kmh.0 > self.speed_range_kmh.1 || self.speed_range_kmh.0 < 0.0 {
            return Err(ScenarioError::InvalidConfig {
                field: "speed_range_kmh",
                reason: format!("invalid range {:?}", self.speed_range_kmh),
            });
        }
        if !(self.cpu_range_f.0 > 0.0 && self.cpu_range_f.0 <= self.cpu_range_f.1) {
            return Err(ScenarioError::InvalidConfig {
                field: "cpu_range_F",
                reason: format!("invalid range {:?}", self.cpu_range_f),
            });
        }
        if let Some(e) = self.ego_index {
            if e >= self.vehicle_count {
                return Err(ScenarioError::InvalidConfig {
                    field: "ego_index",
                    reason: format!("{} >= vehicle_count {}", e, self.vehicle_count),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    pub lane: usize,
    pub position_m: f64,
    pub speed_kmh: f64,
    /// Local sensing data rate A_i in bits/s.
    pub local_data_bps: f64,
    /// CPU capacity F_i in Hz.
    pub cpu_hz: f64,
}

/// Immutable snapshot of one generated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub vehicles: Vec<Vehicle>,
    pub ego_index: usize,
    pub distance_m: Mat,
    /// Normalized distances L_ij = min(dist_ij / comm_range, 1).
    pub norm_distance: Mat,
}

impl ScenarioState {
    pub fn n(&self) -> usize {
        self.vehicles.len()
    }
}

fn vehicle_xy(v: &Vehicle) -> (f64, f64) {
    (v.position_m, (v.lane as f64 + 0.5) * LANE_WIDTH_M)
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<ScenarioState, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = cfg.vehicle_count;
    let mut vehicles = Vec::with_capacity(n);
    for id in 0..n {
        let lane = rng.gen_range(0..cfg.lane_count);
        let position_m = rng.gen_range(0.0..=cfg.span_m);
        let speed_kmh = rng.gen_range(cfg.speed_range_kmh.0..=cfg.speed_range_kmh.1);
        let cpu_hz = rng.gen_range(cfg.cpu_range_f.0..=cfg.cpu_range_f.1);
        vehicles.push(Vehicle {
            id,
            lane,
            position_m,
            speed_kmh,
            local_data_bps: cfg.local_data_a,
            cpu_hz,
        });
    }

    let mut distance_m = Mat::zeros(n);
    let mut norm_distance = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (xi, yi) = vehicle_xy(&vehicles[i]);
            let (xj, yj) = vehicle_xy(&vehicles[j]);
            let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
            distance_m.set(i, j, d);
            norm_distance.set(i, j, (d / cfg.comm_range_m).min(1.0));
        }
    }

    let ego_index = match cfg.ego_index {
        Some(e) => e,
        None => {
            let mid = cfg.span_m / 2.0;
            let mut best = 0;
            for (i, v) in vehicles.iter().enumerate() {
                if (v.position_m - mid).abs() < (vehicles[best].position_m - mid).abs() {
                    best = i;
                }
            }
            best
        }
    };

    Ok(ScenarioState {
        vehicles,
        ego_index,
        distance_m,
        norm_distance,
    })
}

/// L_ij = min(dist_ij / comm_range, 1), zero on the diagonal.
pub fn normalized_distance(state: &ScenarioState, i: usize, j: usize) -> Result<f64, ScenarioError> {
    let n = state.n();
    if i >= n || j >= n {
        return Err(ScenarioError::IndexOutOfRange {
            index: i.max(j),
            count: n,
        });
    }
    if i == j {
        return Ok(0.0);
    }
    Ok(state.norm_distance.get(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vehicle_degenerate() {
        let cfg = ScenarioConfig {
            vehicle_count: 1,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.norm_distance.get(0, 0), 0.0);
        assert_eq!(s.ego_index, 0);
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let cfg = ScenarioConfig::default();
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_hold_over_seeds() {
        for seed in 0..100 {
            let cfg = ScenarioConfig {
                vehicle_count: 10,
                rng_seed: seed,
                ..ScenarioConfig::default()
            };
            let s = generate_scenario(&cfg).unwrap();
            for v in &s.vehicles {
                assert!(v.position_m >= 0.0 && v.position_m <= cfg.span_m);
                assert!(v.lane < cfg.lane_count);
                assert!(v.speed_kmh >= cfg.speed_range_kmh.0 && v.speed_kmh <= cfg.speed_range_kmh.1);
                assert!(v.cpu_hz >= cfg.cpu_range_f.0 && v.cpu_hz <= cfg.cpu_range_f.1);
            }
            for i in 0..10 {
                for j in 0..10 {
                    let l = s.norm_distance.get(i, j);
                    assert!((0.0..=1.0).contains(&l));
                    assert!(
                        (s.distance_m.get(i, j) - s.distance_m.get(j, i)).abs() < 1e-12,
                        "distance matrix must be symmetric"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_inequality_on_planar_embedding() {
        let cfg = ScenarioConfig {
            rng_seed: 42,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        let n = s.n();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let dij = s.distance_m.get(i, j);
                    let dik = s.distance_m.get(i, k);
                    let dkj = s.distance_m.get(k, j);
                    assert!(dij <= dik + dkj + 1e-9);
                }
            }
        }
    }

    #[test]
    fn normalized_distance_examples() {
        let cfg = ScenarioConfig {
            vehicle_count: 2,
            ..ScenarioConfig::default()
        };
        let mut s = generate_scenario(&cfg).unwrap();
        assert_eq!(normalized_distance(&s, 0, 0).unwrap(), 0.0);
        // dist = 100 m, range = 200 m -> 0.5
        s.distance_m.set(0, 1, 100.0);
        s.norm_distance.set(0, 1, (100.0 / cfg.comm_range_m).min(1.0));
        assert_eq!(normalized_distance(&s, 0, 1).unwrap(), 0.5);
        // dist = comm_range -> 1.0
        s.norm_distance.set(1, 0, (200.0 / cfg.comm_range_m).min(1.0));
        assert_eq!(normalized_distance(&s, 1, 0).unwrap(), 1.0);
        assert!(normalized_distance(&s, 0, 5).is_err());
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = ScenarioConfig {
            rho_min: 0.9,
            rho_max: 0.5,
            ..ScenarioConfig::default()
        };
        match generate_scenario(&cfg) {
            Err(ScenarioError::InvalidConfig { field, .. }) => assert_eq!(field, "rho_min"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn ego_defaults_to_midpoint_and_is_overridable() {
        let cfg = ScenarioConfig {
            rng_seed: 3,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        let mid = cfg.span_m / 2.0;
        for v in &s.vehicles {
            assert!(
                (s.vehicles[s.ego_index].position_m - mid).abs() <= (v.position_m - mid).abs() + 1e-12
            );
        }
        let cfg2 = ScenarioConfig {
            ego_index: Some(4),
            ..cfg
        };
        assert_eq!(generate_scenario(&cfg2).unwrap().ego_index, 4);
    }
}
