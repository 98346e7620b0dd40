//! Scenario configuration (JSON, `schema: 1`) and named presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::design::{Criterion, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::estimation::SnrReference;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Relaxed design + probabilistic quantization, repeats allowed.
    Proposed,
    /// Greedy smallest-singular-value selection.
    M1,
    /// Top-M nodes of the relaxed design, no repeats.
    M3,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::M1 => "m1",
            Method::M3 => "m3",
        }
    }

    pub(crate) fn stream_id(&self) -> u64 {
        match self {
            Method::Proposed => 0,
            Method::M1 => 1,
            Method::M3 => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Method::Proposed),
            "m1" => Ok(Method::M1),
            "m3" => Ok(Method::M3),
            _ => Err(invalid(format!("unknown method `{s}` (expected proposed, m1 or m3)"))),
        }
    }
}

/// Signal-to-noise ratio in dB; JSON accepts a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDb(pub f64);

impl SnrDb {
    pub const NOISELESS: SnrDb = SnrDb(f64::INFINITY);
}

impl fmt::Display for SnrDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) if x.is_finite() => Ok(SnrDb(x)),
            Raw::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") => Ok(SnrDb::NOISELESS),
            _ => Err(serde::de::Error::custom("snr_db must be a finite number or \"inf\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    WattsStrogatz {
        n: usize,
        k: usize,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    RandomGeometric {
        n: usize,
        radius: f64,
        kernel_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        path: String,
    },
}

fn default_step() -> usize {
    1
}

fn default_mean() -> f64 {
    1.0
}

fn default_std() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub bandwidth_min: usize,
    pub bandwidth_max: usize,
    #[serde(default = "default_step")]
    pub bandwidth_step: usize,
    #[serde(default = "default_mean")]
    pub coeff_mean: f64,
    #[serde(default = "default_std")]
    pub coeff_std: f64,
    pub snr_db_grid: Vec<SnrDb>,
    #[serde(default)]
    pub snr_reference: SnrReference,
}

impl SignalSpec {
    pub fn bandwidths(&self) -> Vec<usize> {
        (self.bandwidth_min..=self.bandwidth_max).step_by(self.bandwidth_step.max(1)).collect()
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_budget_rule() -> usize {
    4
}

fn default_trials() -> usize {
    200
}

fn default_methods() -> Vec<Method> {
    vec![Method::Proposed, Method::M1, Method::M3]
}

fn default_criterion() -> Criterion {
    Criterion::AOpt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub scenario: String,
    pub graph: GraphSpec,
    pub signal: SignalSpec,
    /// Budget per trial is `budget_rule * K`.
    #[serde(default = "default_budget_rule")]
    pub budget_rule: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not need the graph; `bandwidth_max <= N` is checked
    /// once the graph exists.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        let s = &self.signal;
        if s.bandwidth_min == 0 || s.bandwidth_min > s.bandwidth_max {
            return Err(invalid("need 1 <= bandwidth_min <= bandwidth_max"));
        }
        if s.bandwidth_step == 0 {
            return Err(invalid("bandwidth_step must be positive"));
        }
        if s.snr_db_grid.is_empty() {
            return Err(invalid("snr_db_grid is empty"));
        }
        if !(s.coeff_std >= 0.0) || !s.coeff_mean.is_finite() {
            return Err(invalid("coefficient distribution must have finite mean and nonnegative std"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.budget_rule == 0 {
            return Err(invalid("budget_rule must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        Ok(())
    }

    /// A named preset: graph `g1-paper`, `g1-desk`, `g2-paper` or
    /// `g2-desk`, with signal model `f1` (bandwidth sweep at 10 dB) or `f2`
    /// (bandwidth 15, SNR sweep).
    pub fn preset(graph: &str, signal: &str) -> Result<Self> {
        let graph_spec = match graph {
            "g1-paper" => GraphSpec::WattsStrogatz { n: 1000, k: 5, beta: 0.1, seed: None },
            "g1-desk" => GraphSpec::WattsStrogatz { n: 200, k: 5, beta: 0.1, seed: None },
            "g2-paper" => GraphSpec::RandomGeometric { n: 500, radius: 0.6, kernel_width: 0.3, seed: None },
            "g2-desk" => GraphSpec::RandomGeometric { n: 200, radius: 0.6, kernel_width: 0.3, seed: None },
            other => return Err(invalid(format!("unknown graph preset `{other}`"))),
        };
        let signal_spec = match signal {
            "f1" => SignalSpec {
                bandwidth_min: 10,
                bandwidth_max: 20,
                bandwidth_step: 1,
                coeff_mean: 1.0,
                coeff_std: 0.5,
                snr_db_grid: vec![SnrDb(10.0)],
                snr_reference: SnrReference::Samples,
            },
            "f2" => SignalSpec {
                bandwidth_min: 15,
                bandwidth_max: 15,
                bandwidth_step: 1,
                coeff_mean: 1.0,
                coeff_std: 0.5,
                snr_db_grid: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0].into_iter().map(SnrDb).collect(),
                snr_reference: SnrReference::Samples,
            },
            other => return Err(invalid(format!("unknown signal preset `{other}`"))),
        };
        Ok(ScenarioConfig {
            schema: SCHEMA_VERSION,
            scenario: format!("{graph}-{signal}"),
            graph: graph_spec,
            signal: signal_spec,
            budget_rule: 4,
            trials: 200,
            methods: default_methods(),
            criterion: Criterion::AOpt,
            master_seed: 2017,
            solver: SolverOptions::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": "t",
        "graph": {"kind": "random_geometric", "n": 30, "radius": 0.5, "kernel_width": 0.25},
        "signal": {"bandwidth_min": 3, "bandwidth_max": 4, "snr_db_grid": [0, "inf"]}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.trials, 200);
        assert_eq!(cfg.budget_rule, 4);
        assert_eq!(cfg.methods, default_methods());
        assert_eq!(cfg.signal.coeff_std, 0.5);
        assert_eq!(cfg.signal.snr_db_grid[1], SnrDb::NOISELESS);
        assert_eq!(cfg.signal.bandwidths(), vec![3, 4]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let extra = MINIMAL.replacen("\"scenario\"", "\"bogus\": 1, \"scenario\"", 1);
        assert!(ScenarioConfig::from_json(&extra).is_err());
        let extra_graph = MINIMAL.replace("\"n\": 30", "\"n\": 30, \"colour\": 2");
        assert!(ScenarioConfig::from_json(&extra_graph).is_err());
        let extra_signal = MINIMAL.replace("\"bandwidth_min\"", "\"bw\": 1, \"bandwidth_min\"");
        assert!(ScenarioConfig::from_json(&extra_signal).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(ScenarioConfig::from_json(&MINIMAL.replace("[0, \"inf\"]", "[]")).is_err());
        assert!(ScenarioConfig::from_json(&MINIMAL.replace("\"bandwidth_min\": 3", "\"bandwidth_min\": 5")).is_err());
        assert!(ScenarioConfig::from_json(&MINIMAL.replace("\"inf\"", "\"loud\"")).is_err());
    }

    #[test]
    fn presets_round_trip_through_json() {
        for g in ["g1-paper", "g1-desk", "g2-paper", "g2-desk"] {
            for s in ["f1", "f2"] {
                let cfg = ScenarioConfig::preset(g, s).unwrap();
                let text = serde_json::to_string(&cfg).unwrap();
                assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
            }
        }
        assert!(ScenarioConfig::preset("g3", "f1").is_err());
    }
}
