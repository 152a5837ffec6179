//! Experiment configuration and random stream derivation.
//!
//! A [`ScenarioConfig`] is plain data, deserialized from JSON or built in
//! code. [`ScenarioConfig::validate`] checks every invariant and produces an
//! immutable [`ValidatedScenario`], which is what the rest of the crate
//! consumes. All randomness in a run is derived from the single
//! `master_seed` through [`derive_stream_seed`], one independent stream per
//! [`Stream`], so that for example changing the penetration rate never
//! perturbs the simulated traffic.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ConfigError, Error, Result};

pub const SECONDS_PER_DAY: u64 = 86_400;

const DEFAULT_SCENARIO_JSON: &str = include_str!("../data/default_scenario.json");

/// Parking zone, in overflow priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneId {
    /// Designated truck parking spaces.
    Green,
    /// Spaces where trucks may park legally but which are not truck spaces.
    Yellow,
    /// Spaces where truck parking is illegal.
    Red,
}

impl ZoneId {
    pub const ALL: [ZoneId; 3] = [ZoneId::Green, ZoneId::Yellow, ZoneId::Red];

    pub fn as_str(self) -> &'static str {
        match self {
            ZoneId::Green => "green",
            ZoneId::Yellow => "yellow",
            ZoneId::Red => "red",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ZoneId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "green" => Ok(ZoneId::Green),
            "yellow" => Ok(ZoneId::Yellow),
            "red" => Ok(ZoneId::Red),
            other => Err(format!(
                "unknown zone `{other}` (expected green|yellow|red)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneCapacities {
    pub green: u32,
    pub yellow: u32,
    pub red: u32,
}

impl ZoneCapacities {
    pub fn get(&self, zone: ZoneId) -> u32 {
        match zone {
            ZoneId::Green => self.green,
            ZoneId::Yellow => self.yellow,
            ZoneId::Red => self.red,
        }
    }

    pub fn total(&self) -> u32 {
        self.green + self.yellow + self.red
    }
}

/// Piecewise-constant arrival intensity: one rate per hour of day (trucks
/// per hour), scaled by a factor per day of week. Day 0 of a scenario is a
/// Monday.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalProfile {
    pub hourly_rates: Vec<f64>,
    pub weekday_multipliers: Vec<f64>,
}

impl ArrivalProfile {
    /// Intensity in trucks per hour at `t_s` seconds after scenario start.
    pub fn rate_at(&self, t_s: f64) -> f64 {
        let day = (t_s / SECONDS_PER_DAY as f64).floor() as usize;
        let hour = ((t_s % SECONDS_PER_DAY as f64) / 3600.0).floor() as usize;
        self.hourly_rates[hour.min(23)] * self.weekday_multipliers[day % 7]
    }

    pub fn max_rate(&self) -> f64 {
        let rate = self.hourly_rates.iter().copied().fold(0.0, f64::max);
        let mult = self.weekday_multipliers.iter().copied().fold(0.0, f64::max);
        rate * mult
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationComponent {
    pub weight: f64,
    pub mean_minutes: f64,
    pub stddev_minutes: f64,
}

/// Gaussian mixture over parking durations, truncated below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationMixture {
    pub components: Vec<DurationComponent>,
    pub min_duration_minutes: f64,
}

fn default_grid_step() -> u64 {
    60
}

fn default_eval_step() -> u64 {
    300
}

fn default_horizon() -> u32 {
    22
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub capacities: ZoneCapacities,
    pub arrivals: ArrivalProfile,
    pub durations: DurationMixture,
    #[serde(default = "default_horizon")]
    pub horizon_days: u32,
    pub master_seed: u64,
    #[serde(default = "default_grid_step")]
    pub grid_step_s: u64,
    #[serde(default = "default_eval_step")]
    pub eval_step_s: u64,
}

impl ScenarioConfig {
    /// The scenario shipped in `data/default_scenario.json`.
    pub fn default_scenario() -> ScenarioConfig {
        Self::from_json(DEFAULT_SCENARIO_JSON).expect("bundled default scenario parses")
    }

    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Checks every invariant and returns the first violation found.
    pub fn validate(&self) -> Result<ValidatedScenario, ConfigError> {
        let c = &self.capacities;
        if c.green < 1 {
            return Err(ConfigError::new("capacities.green", "must be >= 1"));
        }

        let a = &self.arrivals;
        if a.hourly_rates.len() != 24 {
            return Err(ConfigError::new(
                "arrivals.hourly_rates",
                format!("must have 24 entries, found {}", a.hourly_rates.len()),
            ));
        }
        for (i, r) in a.hourly_rates.iter().enumerate() {
            if !r.is_finite() || *r < 0.0 {
                return Err(ConfigError::new(
                    format!("arrivals.hourly_rates[{i}]"),
                    "must be finite and >= 0",
                ));
            }
        }
        if !a.hourly_rates.iter().any(|r| *r > 0.0) {
            return Err(ConfigError::new(
                "arrivals.hourly_rates",
                "must contain at least one rate > 0",
            ));
        }
        if a.weekday_multipliers.len() != 7 {
            return Err(ConfigError::new(
                "arrivals.weekday_multipliers",
                format!("must have 7 entries, found {}", a.weekday_multipliers.len()),
            ));
        }
        for (i, m) in a.weekday_multipliers.iter().enumerate() {
            if !m.is_finite() || *m < 0.0 {
                return Err(ConfigError::new(
                    format!("arrivals.weekday_multipliers[{i}]"),
                    "must be finite and >= 0",
                ));
            }
        }

        let d = &self.durations;
        if d.components.is_empty() {
            return Err(ConfigError::new(
                "durations.components",
                "must contain at least one component",
            ));
        }
        for (i, comp) in d.components.iter().enumerate() {
            let checks = [
                ("weight", comp.weight),
                ("mean_minutes", comp.mean_minutes),
                ("stddev_minutes", comp.stddev_minutes),
            ];
            for (name, value) in checks {
                if !value.is_finite() || value <= 0.0 {
                    return Err(ConfigError::new(
                        format!("durations.components[{i}].{name}"),
                        "must be > 0",
                    ));
                }
            }
        }
        let weight_sum: f64 = d.components.iter().map(|c| c.weight).sum();
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::new(
                "durations.components",
                format!("weights must sum to 1 (sum is {weight_sum})"),
            ));
        }
        if !d.min_duration_minutes.is_finite() || d.min_duration_minutes <= 0.0 {
            return Err(ConfigError::new(
                "durations.min_duration_minutes",
                "must be > 0",
            ));
        }

        if self.horizon_days < 1 {
            return Err(ConfigError::new("horizon_days", "must be >= 1"));
        }
        if self.grid_step_s < 1 {
            return Err(ConfigError::new("grid_step_s", "must be >= 1"));
        }
        if SECONDS_PER_DAY % self.grid_step_s != 0 {
            return Err(ConfigError::new("grid_step_s", "must divide 86400"));
        }
        if self.eval_step_s < self.grid_step_s || self.eval_step_s % self.grid_step_s != 0 {
            return Err(ConfigError::new(
                "eval_step_s",
                "must be a positive multiple of grid_step_s",
            ));
        }
        if SECONDS_PER_DAY % self.eval_step_s != 0 {
            return Err(ConfigError::new("eval_step_s", "must divide 86400"));
        }

        let fingerprint = fingerprint_of(self);
        Ok(ValidatedScenario {
            config: self.clone(),
            fingerprint,
        })
    }
}

fn fingerprint_of(config: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// A configuration whose invariants have been checked. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    config: ScenarioConfig,
    fingerprint: String,
}

impl ValidatedScenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// SHA-256 of the canonical JSON encoding of the configuration, hex.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn capacities(&self) -> ZoneCapacities {
        self.config.capacities
    }

    pub fn horizon_days(&self) -> u32 {
        self.config.horizon_days
    }

    pub fn horizon_s(&self) -> u64 {
        u64::from(self.config.horizon_days) * SECONDS_PER_DAY
    }

    pub fn grid_step_s(&self) -> u64 {
        self.config.grid_step_s
    }

    pub fn eval_step_s(&self) -> u64 {
        self.config.eval_step_s
    }

    pub fn master_seed(&self) -> u64 {
        self.config.master_seed
    }

    pub fn stream_seed(&self, stream: Stream) -> u64 {
        derive_stream_seed(self.config.master_seed, stream as u64)
    }

    /// Same scenario with a different master seed.
    pub fn with_master_seed(&self, seed: u64) -> ValidatedScenario {
        let mut config = self.config.clone();
        config.master_seed = seed;
        let fingerprint = fingerprint_of(&config);
        ValidatedScenario {
            config,
            fingerprint,
        }
    }
}

/// Named random sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 0,
    Durations = 1,
    /// Reserved: zone choice is deterministic in the current model.
    ZoneTieBreaks = 2,
    AppUsers = 3,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// `master_seed XOR (stream_id * 0x9E3779B97F4A7C15)` with wrapping
/// multiplication.
pub fn derive_stream_seed(master_seed: u64, stream_id: u64) -> u64 {
    master_seed ^ stream_id.wrapping_mul(GOLDEN_GAMMA)
}

/// Fraction of trucks that run the observing app.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct PenetrationRate(f64);

impl PenetrationRate {
    pub fn new(p: f64) -> Result<Self, ConfigError> {
        if p.is_finite() && p > 0.0 && p <= 1.0 {
            Ok(Self(p))
        } else {
            Err(ConfigError::new("penetration", "p must be in (0,1]"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for PenetrationRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component() -> ScenarioConfig {
        let mut c = ScenarioConfig::default_scenario();
        c.capacities.green = 100;
        c.durations = DurationMixture {
            components: vec![
                DurationComponent {
                    weight: 0.6,
                    mean_minutes: 45.0,
                    stddev_minutes: 15.0,
                },
                DurationComponent {
                    weight: 0.4,
                    mean_minutes: 600.0,
                    stddev_minutes: 90.0,
                },
            ],
            min_duration_minutes: 5.0,
        };
        c.horizon_days = 22;
        c
    }

    #[test]
    fn default_scenario_is_valid() {
        let c = ScenarioConfig::default_scenario();
        let v = c.validate().unwrap();
        assert_eq!(v.horizon_days(), 22);
        assert_eq!(v.capacities().green, 100);
        let w: f64 = c.durations.components.iter().map(|c| c.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
        two_component().validate().unwrap();
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut c = two_component();
        c.durations.components[0].weight = 0.5;
        c.durations.components[1].weight = 0.6;
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("weights must sum to 1"), "{err}");
    }

    #[test]
    fn error_names_field_path() {
        let mut c = two_component();
        c.durations.components[1].stddev_minutes = 0.0;
        let err = c.validate().unwrap_err();
        assert_eq!(
            err.to_string(),
            "durations.components[1].stddev_minutes must be > 0"
        );
    }

    #[test]
    fn step_constraints() {
        let mut c = two_component();
        c.eval_step_s = 90;
        assert_eq!(c.validate().unwrap_err().path, "eval_step_s");
        c.eval_step_s = 300;
        c.horizon_days = 0;
        assert_eq!(c.validate().unwrap_err().path, "horizon_days");
    }

    #[test]
    fn penetration_bounds() {
        let err = PenetrationRate::new(0.0).unwrap_err();
        assert!(err.to_string().contains("p must be in (0,1]"));
        assert!(PenetrationRate::new(1.0).is_ok());
        assert!(PenetrationRate::new(1.01).is_err());
        assert!(PenetrationRate::new(f64::NAN).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(&ScenarioConfig::default_scenario().to_json_pretty()).unwrap();
        value["colour"] = serde_json::json!("blue");
        assert!(ScenarioConfig::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn optional_fields_default() {
        let mut value: serde_json::Value =
            serde_json::from_str(&ScenarioConfig::default_scenario().to_json_pretty()).unwrap();
        let obj = value.as_object_mut().unwrap();
        obj.remove("grid_step_s");
        obj.remove("eval_step_s");
        let c = ScenarioConfig::from_json(&value.to_string()).unwrap();
        assert_eq!((c.grid_step_s, c.eval_step_s), (60, 300));
    }

    #[test]
    fn validation_is_idempotent() {
        let v = ScenarioConfig::default_scenario().validate().unwrap();
        let again = v.config().validate().unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn stream_seed_values() {
        assert_eq!(derive_stream_seed(0, 0), 0);
        assert_eq!(derive_stream_seed(0, 1), 0x9E37_79B9_7F4A_7C15);
        // 3 * gamma wraps to 0xDAA66D2C7DDF743F; 42 = 0x2A.
        assert_eq!(derive_stream_seed(42, 3), 0xDAA6_6D2C_7DDF_7415);
    }

    #[test]
    fn stream_seeds_distinct() {
        for master in [0u64, 1, 42, u64::MAX, 0x9E37_79B9_7F4A_7C15] {
            let seeds: Vec<u64> = (0..4).map(|s| derive_stream_seed(master, s)).collect();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert_ne!(seeds[i], seeds[j]);
                }
            }
        }
    }
}
