//! Experiment configuration: a single JSON document per experiment.

use std::fmt;
use std::path::{Path, PathBuf};

use qkdsim_core::attacks::{optimal_phi, ClonerSpec, QclConfig};
use qkdsim_core::noise::ChannelSpec;
use qkdsim_core::qec::{hot_qubit_channel, ScalingNoise};
use qkdsim_core::sidechannel::{BiasKind, BiasModel, DetectorModel, SideChannel, DEFAULT_BASELINE, DEFAULT_B_EXPOSURE_US, DEFAULT_TAU_PUMP_US, DEFAULT_TAU_QUENCH_US};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bb84,
    Bbm92,
    Qcl,
    Qec422,
    #[serde(rename = "qec422-scaling")]
    Qec422Scaling,
    SteaneMonitor,
    Sidechannel,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bb84 => "bb84",
            ExperimentKind::Bbm92 => "bbm92",
            ExperimentKind::Qcl => "qcl",
            ExperimentKind::Qec422 => "qec422",
            ExperimentKind::Qec422Scaling => "qec422-scaling",
            ExperimentKind::SteaneMonitor => "steane-monitor",
            ExperimentKind::Sidechannel => "sidechannel",
        }
    }

    /// Keys this experiment reads besides the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Bb84 | ExperimentKind::Bbm92 => &["attack", "channel", "p_d"],
            ExperimentKind::Qcl => &["alpha", "f", "max_iterations", "initial_theta"],
            ExperimentKind::Qec422 => &["channel", "p_d", "m"],
            ExperimentKind::Qec422Scaling => &["lambdas", "p", "p_d", "noise", "circuit_noise", "estimator"],
            ExperimentKind::SteaneMonitor => &["channel", "p_d", "rounds_max"],
            ExperimentKind::Sidechannel => &["sidechannel", "attack", "channel"],
        }
    }

    pub fn default_shots(self) -> u64 {
        match self {
            ExperimentKind::Bb84 | ExperimentKind::Bbm92 => 2000,
            ExperimentKind::Qcl => 500,
            ExperimentKind::Sidechannel => 10_000,
            _ => 100_000,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const COMMON_KEYS: [&str; 6] = ["experiment", "label", "seed", "shots", "workers", "out"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackConfig {
    Pccm {
        theta: f64,
    },
    /// `phi` wins over `tuned_for_p`; with neither, φ is tuned for p = 0.
    Imbalanced {
        psi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tuned_for_p: Option<f64>,
    },
}

impl AttackConfig {
    pub fn to_spec(&self) -> Result<ClonerSpec, CliError> {
        let spec = match *self {
            AttackConfig::Pccm { theta } => ClonerSpec::Pccm { theta },
            AttackConfig::Imbalanced { psi, phi, tuned_for_p } => {
                let phi = match phi {
                    Some(phi) => phi,
                    None => optimal_phi(psi, tuned_for_p.unwrap_or(0.0)).map_err(|e| CliError::config("attack", e))?,
                };
                ClonerSpec::Imbalanced { psi, phi }
            }
        };
        spec.validate().map_err(|e| CliError::config("attack", e))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    Bitflip { p: f64 },
    Depolarizing1 { p: f64 },
    Depolarizing2 { p: f64 },
    Pauli { px: f64, py: f64, pz: f64 },
    TwirledAd { gamma: f64 },
    Dephasing { p: f64 },
    HeraldedErase { p: f64 },
    Deterministic { pauli: String },
    PerQubit { channels: Vec<ChannelConfig> },
    Composite { channels: Vec<ChannelConfig> },
    /// Depolarizing `p` on `n` qubits except `qubit`, which gets `p_hot`.
    HotQubit { n: usize, p: f64, qubit: usize, p_hot: f64 },
}

impl ChannelConfig {
    pub fn to_spec(&self) -> Result<ChannelSpec, CliError> {
        let spec = self.build()?;
        spec.validate().map_err(|e| CliError::config("channel", e))?;
        Ok(spec)
    }

    fn build(&self) -> Result<ChannelSpec, CliError> {
        Ok(match self {
            ChannelConfig::Bitflip { p } => ChannelSpec::BitFlip(*p),
            ChannelConfig::Depolarizing1 { p } => ChannelSpec::Depolarizing1(*p),
            ChannelConfig::Depolarizing2 { p } => ChannelSpec::Depolarizing2(*p),
            ChannelConfig::Pauli { px, py, pz } => ChannelSpec::PauliChannel {
                px: *px,
                py: *py,
                pz: *pz,
            },
            ChannelConfig::TwirledAd { gamma } => ChannelSpec::TwirledAmplitudeDamping(*gamma),
            ChannelConfig::Dephasing { p } => ChannelSpec::Dephasing(*p),
            ChannelConfig::HeraldedErase { p } => ChannelSpec::HeraldedErase(*p),
            ChannelConfig::Deterministic { pauli } => {
                ChannelSpec::DeterministicPauli(pauli.parse().map_err(|e| CliError::config("channel.pauli", e))?)
            }
            ChannelConfig::PerQubit { channels } => {
                ChannelSpec::PerQubit(channels.iter().map(Self::build).collect::<Result<_, _>>()?)
            }
            ChannelConfig::Composite { channels } => {
                ChannelSpec::Composite(channels.iter().map(Self::build).collect::<Result<_, _>>()?)
            }
            ChannelConfig::HotQubit { n, p, qubit, p_hot } => {
                if *qubit >= *n {
                    return Err(CliError::config("channel.qubit", format!("{qubit} is not below n = {n}")));
                }
                hot_qubit_channel(*n, *p, *qubit, *p_hot)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConfig {
    Bitflip,
    Depolarizing,
}

impl NoiseConfig {
    pub fn to_core(self) -> ScalingNoise {
        match self {
            NoiseConfig::Bitflip => ScalingNoise::BitFlip,
            NoiseConfig::Depolarizing => ScalingNoise::Depolarizing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorConfig {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub bright_rate: f64,
    pub dark_rate: f64,
    pub threshold: u32,
    pub spam_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SideChannelConfig {
    Leakage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detector: Option<DetectorConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b_exposure_us: Option<f64>,
        e_exposures_us: Vec<f64>,
    },
    Quench {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau_us: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<[f64; 2]>,
        durations_us: Vec<f64>,
    },
    Pump {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau_us: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<[f64; 2]>,
        durations_us: Vec<f64>,
    },
}

/// A validated side-channel study: the models to evaluate, one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum SideChannelPlan {
    Leakage {
        detector: DetectorModel,
        b_exposure_us: f64,
        e_exposures_us: Vec<f64>,
    },
    Bias { model: BiasModel, durations_us: Vec<f64> },
}

impl SideChannelPlan {
    pub fn channels(&self) -> Vec<(f64, SideChannel)> {
        match self {
            SideChannelPlan::Leakage {
                detector,
                b_exposure_us,
                e_exposures_us,
            } => e_exposures_us
                .iter()
                .map(|&e| {
                    (
                        e,
                        SideChannel::Leakage {
                            detector: *detector,
                            b_exposure_us: *b_exposure_us,
                            e_exposure_us: e,
                        },
                    )
                })
                .collect(),
            SideChannelPlan::Bias { model, durations_us } => durations_us
                .iter()
                .map(|&d| {
                    (
                        d,
                        SideChannel::Bias {
                            model: *model,
                            duration_us: d,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl SideChannelConfig {
    pub fn to_plan(&self) -> Result<SideChannelPlan, CliError> {
        let plan = match self {
            SideChannelConfig::Leakage {
                detector,
                b_exposure_us,
                e_exposures_us,
            } => SideChannelPlan::Leakage {
                detector: detector
                    .map(|d| DetectorModel {
                        bright_rate: d.bright_rate,
                        dark_rate: d.dark_rate,
                        threshold: d.threshold,
                        spam_floor: d.spam_floor,
                    })
                    .unwrap_or_default(),
                b_exposure_us: b_exposure_us.unwrap_or(DEFAULT_B_EXPOSURE_US),
                e_exposures_us: nonempty("sidechannel.e_exposures_us", e_exposures_us)?,
            },
            SideChannelConfig::Quench {
                tau_us,
                baseline,
                durations_us,
            } => SideChannelPlan::Bias {
                model: BiasModel {
                    kind: BiasKind::Quench {
                        tau_us: tau_us.unwrap_or(DEFAULT_TAU_QUENCH_US),
                    },
                    baseline: baseline.unwrap_or(DEFAULT_BASELINE),
                },
                durations_us: nonempty("sidechannel.durations_us", durations_us)?,
            },
            SideChannelConfig::Pump {
                tau_us,
                baseline,
                durations_us,
            } => SideChannelPlan::Bias {
                model: BiasModel {
                    kind: BiasKind::Pump {
                        tau_us: tau_us.unwrap_or(DEFAULT_TAU_PUMP_US),
                    },
                    baseline: baseline.unwrap_or(DEFAULT_BASELINE),
                },
                durations_us: nonempty("sidechannel.durations_us", durations_us)?,
            },
        };
        for (_, ch) in plan.channels() {
            ch.validate().map_err(|e| CliError::config("sidechannel", e))?;
        }
        Ok(plan)
    }
}

fn nonempty(key: &str, v: &[f64]) -> Result<Vec<f64>, CliError> {
    if v.is_empty() {
        return Err(CliError::config(key, "grid must not be empty"));
    }
    Ok(v.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_noise: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidechannel: Option<SideChannelConfig>,
}

impl ExperimentConfig {
    /// Parses and validates a config from a JSON value.
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        let keys: Vec<String> = match &value {
            Value::Object(map) => map.keys().cloned().collect(),
            _ => return Err(CliError::config("<root>", "config must be a JSON object")),
        };
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, e.into_inner())
        })?;
        let allowed = cfg.experiment.keys();
        if let Some(k) = keys
            .iter()
            .find(|k| !COMMON_KEYS.contains(&k.as_str()) && !allowed.contains(&k.as_str()))
        {
            return Err(CliError::config(k, format!("not used by experiment {}", cfg.experiment)));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::config("<root>", e))?;
        Self::from_value(value)
    }

    /// Reads a config file, or the config echoed inside a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("<file>", format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError::config("<root>", e))?;
        Self::from_value(unwrap_manifest(value))
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("default")
    }

    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or(self.experiment.default_shots())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn attack_spec(&self) -> Result<Option<ClonerSpec>, CliError> {
        self.attack.as_ref().map(AttackConfig::to_spec).transpose()
    }

    pub fn channel_spec(&self) -> Result<Option<ChannelSpec>, CliError> {
        self.channel.as_ref().map(ChannelConfig::to_spec).transpose()
    }

    pub fn qcl_config(&self) -> QclConfig {
        let d = QclConfig::default();
        QclConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            f: self.f.unwrap_or(d.f),
            shots_per_eval: self.shots(),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            initial_theta: self.initial_theta.unwrap_or(d.initial_theta),
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(label) = &self.label {
            if label.is_empty() || label.contains(['/', '\\']) || label == "." || label == ".." {
                return Err(CliError::config("label", format!("{label:?} is not a plain directory name")));
            }
        }
        if self.shots == Some(0) {
            return Err(CliError::config("shots", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(CliError::config("workers", "must be positive"));
        }
        if let Some(p_d) = self.p_d {
            if !(0.0..=1.0).contains(&p_d) {
                return Err(CliError::config("p_d", format!("{p_d} outside [0, 1]")));
            }
        }
        self.attack_spec()?;
        self.channel_spec()?;
        match self.experiment {
            ExperimentKind::Qcl => {
                self.qcl_config().validate().map_err(|e| CliError::config("qcl", e))?;
            }
            ExperimentKind::Qec422 => {
                if self.m.as_ref().is_some_and(|m| m.is_empty()) {
                    return Err(CliError::config("m", "must list at least one round count"));
                }
            }
            ExperimentKind::Qec422Scaling => {
                if self.lambdas.as_ref().is_some_and(|l| l.is_empty()) {
                    return Err(CliError::config("lambdas", "grid must not be empty"));
                }
                if let Some(p) = self.p {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(CliError::config("p", format!("{p} outside [0, 1]")));
                    }
                }
                if self.estimator == Some(EstimatorConfig::Exact) && self.circuit_noise == Some(true) {
                    return Err(CliError::config("estimator", "exact enumeration cannot include circuit noise"));
                }
            }
            ExperimentKind::SteaneMonitor => {
                let r = self.rounds_max.unwrap_or(3);
                if !(1..=6).contains(&r) {
                    return Err(CliError::config("rounds_max", format!("{r} outside 1..=6")));
                }
            }
            ExperimentKind::Sidechannel => {
                let sc = self
                    .sidechannel
                    .as_ref()
                    .ok_or_else(|| CliError::config("sidechannel", "required for experiment sidechannel"))?;
                sc.to_plan()?;
            }
            ExperimentKind::Bb84 | ExperimentKind::Bbm92 => {}
        }
        Ok(())
    }
}

/// Manifests carry the resolved config under `config`.
fn unwrap_manifest(value: Value) -> Value {
    match value {
        Value::Object(mut map) if map.contains_key("manifest_version") && map.contains_key("config") => {
            map.remove("config").expect("checked")
        }
        other => other,
    }
}

/// Where a sweep parameter lives in the config document, and whether the
/// target is a grid that takes a one-element list.
pub fn sweep_target(kind: ExperimentKind, param: &str) -> Option<(&'static str, bool)> {
    use ExperimentKind::*;
    let t = match (param, kind) {
        ("seed", _) => ("/seed", false),
        ("shots", _) => ("/shots", false),
        ("theta", Bb84 | Bbm92 | Sidechannel) => ("/attack/theta", false),
        ("psi", Bb84 | Bbm92 | Sidechannel) => ("/attack/psi", false),
        ("phi", Bb84 | Bbm92 | Sidechannel) => ("/attack/phi", false),
        ("tuned_for_p", Bb84 | Bbm92 | Sidechannel) => ("/attack/tuned_for_p", false),
        ("p", Qec422Scaling) => ("/p", false),
        ("p", Bb84 | Bbm92 | Qec422 | SteaneMonitor | Sidechannel) => ("/channel/p", false),
        ("gamma", Bb84 | Bbm92 | Qec422 | SteaneMonitor | Sidechannel) => ("/channel/gamma", false),
        ("p_d", Bb84 | Bbm92 | Qec422 | Qec422Scaling | SteaneMonitor) => ("/p_d", false),
        ("alpha", Qcl) => ("/alpha", false),
        ("f", Qcl) => ("/f", false),
        ("initial_theta", Qcl) => ("/initial_theta", false),
        ("m", Qec422) => ("/m", true),
        ("lambda", Qec422Scaling) => ("/lambdas", true),
        ("rounds_max", SteaneMonitor) => ("/rounds_max", false),
        ("e_exposure_us", Sidechannel) => ("/sidechannel/e_exposures_us", true),
        ("duration_us", Sidechannel) => ("/sidechannel/durations_us", true),
        ("tau_us", Sidechannel) => ("/sidechannel/tau_us", false),
        _ => return None,
    };
    Some(t)
}

/// Sets `param` to `value` in a config document.
pub fn apply_sweep_value(base: &Value, kind: ExperimentKind, param: &str, value: Value) -> Result<Value, CliError> {
    let (pointer, grid) = sweep_target(kind, param)
        .ok_or_else(|| CliError::config("--param", format!("{param} is not sweepable for {kind}")))?;
    let mut doc = base.clone();
    let (parent, leaf) = pointer.rsplit_once('/').expect("pointer has a parent");
    let slot = if parent.is_empty() {
        Some(&mut doc)
    } else {
        doc.pointer_mut(parent)
    };
    let Some(Value::Object(map)) = slot else {
        return Err(CliError::config(
            "--param",
            format!("{param} needs `{}` in the config", parent.trim_start_matches('/')),
        ));
    };
    map.insert(leaf.to_string(), if grid { Value::Array(vec![value]) } else { value });
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_value(v)
    }

    #[test]
    fn minimal_bb84_config_parses_with_defaults() {
        let c = parse(json!({"experiment": "bb84"})).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Bb84);
        assert_eq!(c.seed, 0);
        assert_eq!(c.shots(), 2000);
        assert_eq!(c.label(), "default");
        assert!(c.attack_spec().unwrap().is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let e = parse(json!({"experiment": "bb84", "thetta": 1.0})).unwrap_err();
        assert!(e.to_string().contains("thetta"), "{e}");
        let e = parse(json!({"experiment": "bb84", "attack": {"type": "pccm", "theta": 1.0, "x": 2}})).unwrap_err();
        assert!(e.to_string().contains('x'), "{e}");
    }

    #[test]
    fn keys_of_other_experiments_are_rejected() {
        let e = parse(json!({"experiment": "qcl", "rounds_max": 3})).unwrap_err();
        assert!(e.to_string().contains("rounds_max"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn invalid_values_name_their_key() {
        let cases = [
            (json!({"experiment": "bb84", "attack": {"type": "pccm", "theta": 4.0}}), "attack"),
            (json!({"experiment": "qec422", "channel": {"type": "bitflip", "p": 1.5}}), "channel"),
            (json!({"experiment": "steane-monitor", "rounds_max": 7}), "rounds_max"),
            (json!({"experiment": "bb84", "shots": 0}), "shots"),
            (json!({"experiment": "bb84", "seed": "x"}), "seed"),
            (json!({"experiment": "sidechannel"}), "sidechannel"),
            (json!({"experiment": "qec422-scaling", "lambdas": []}), "lambdas"),
        ];
        for (v, key) in cases {
            let e = parse(v).unwrap_err();
            assert!(e.to_string().contains(key), "{e} should name {key}");
        }
    }

    #[test]
    fn channel_configs_map_to_specs() {
        let c = parse(json!({"experiment": "steane-monitor", "channel":
            {"type": "composite", "channels": [
                {"type": "twirled_ad", "gamma": 0.2},
                {"type": "dephasing", "p": 0.2},
                {"type": "heralded_erase", "p": 0.2}]}}))
        .unwrap();
        assert_eq!(
            c.channel_spec().unwrap().unwrap(),
            ChannelSpec::Composite(vec![
                ChannelSpec::TwirledAmplitudeDamping(0.2),
                ChannelSpec::Dephasing(0.2),
                ChannelSpec::HeraldedErase(0.2),
            ])
        );
        let c = parse(json!({"experiment": "steane-monitor", "channel":
            {"type": "hot_qubit", "n": 7, "p": 0.03, "qubit": 0, "p_hot": 0.3}}))
        .unwrap();
        assert_eq!(c.channel_spec().unwrap().unwrap(), hot_qubit_channel(7, 0.03, 0, 0.3));
    }

    #[test]
    fn imbalanced_phi_defaults_to_tuned_angle() {
        let c = parse(json!({"experiment": "bb84", "attack": {"type": "imbalanced", "psi": 0.5, "tuned_for_p": 0.25}}))
            .unwrap();
        let want = optimal_phi(0.5, 0.25).unwrap();
        assert_eq!(c.attack_spec().unwrap(), Some(ClonerSpec::Imbalanced { psi: 0.5, phi: want }));
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = parse(json!({"experiment": "qec422", "seed": 3, "m": [0, 2], "p_d": 0.01,
            "channel": {"type": "bitflip", "p": 0.1}}))
        .unwrap();
        assert_eq!(parse(c.to_value()).unwrap(), c);
    }

    #[test]
    fn manifests_unwrap_to_their_config() {
        let v = json!({"manifest_version": 1, "config": {"experiment": "qcl", "seed": 9}});
        let c = parse(unwrap_manifest(v)).unwrap();
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn sweep_values_land_at_their_targets() {
        let base = json!({"experiment": "bb84", "attack": {"type": "pccm", "theta": 0.0}});
        let v = apply_sweep_value(&base, ExperimentKind::Bb84, "theta", json!(1.25)).unwrap();
        assert_eq!(v["attack"]["theta"], json!(1.25));
        let base = json!({"experiment": "qec422"});
        let v = apply_sweep_value(&base, ExperimentKind::Qec422, "m", json!(3)).unwrap();
        assert_eq!(v["m"], json!([3]));
        assert!(apply_sweep_value(&base, ExperimentKind::Qec422, "theta", json!(1)).is_err());
        let base = json!({"experiment": "bb84"});
        let e = apply_sweep_value(&base, ExperimentKind::Bb84, "theta", json!(1)).unwrap_err();
        assert!(e.to_string().contains("attack"), "{e}");
    }
}
