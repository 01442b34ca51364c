//! Experiment configuration: a small INI-style text format, strict about
//! what it accepts.
//!
//! A config file describes *what* an experiment is — the instance setting,
//! processing times, simulator knobs, training hyperparameters. How to run
//! it (seeds, paths, output locations) stays on the command line. The
//! canonical rendering of a config is hashed and stamped into every output
//! file, so results can always be traced back to the exact experiment that
//! produced them: unknown sections or keys are hard errors, as a typo that
//! silently fell back to a default would poison that traceability.

use std::fmt;
use std::str::FromStr;

use crate::instance::{GenerateParams, ResourceConfig, Scenario};
use crate::ppo::PpoConfig;
use crate::sim::{SimConfig, TimingConfig};

/// Instance-generation setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceSection {
    pub scenario: Scenario,
    pub orders: u32,
    pub pickers: u32,
    pub shuttles: u32,
    pub dto_stations: u32,
    pub sto_stations: u32,
    pub pack_stations: u32,
    pub horizon_s: u32,
}

/// Simulator knobs beyond the timing table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimSection {
    pub dto_slots_per_station: u32,
    pub sto_slots_per_station: u32,
    pub pack_slots_per_station: u32,
    pub cart_capacity_items: u32,
    pub abort_tardy_fraction: Option<f64>,
}

/// Training hyperparameters plus the network width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpoSection {
    pub gamma: f64,
    pub clip_epsilon: f64,
    pub rollout_steps: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub hidden1: usize,
    pub hidden2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSection {
    pub total_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSection {
    pub episodes: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchSection {
    pub instances: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    pub timing: TimingConfig,
    pub sim: SimSection,
    pub ppo: PpoSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub bench: BenchSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let ppo = PpoConfig::default();
        ExperimentConfig {
            instance: InstanceSection {
                scenario: Scenario::A,
                orders: 330,
                pickers: 5,
                shuttles: 8,
                dto_stations: 1,
                sto_stations: 1,
                pack_stations: 1,
                horizon_s: 3600,
            },
            timing: TimingConfig::default(),
            sim: SimSection {
                dto_slots_per_station: sim.dto_slots_per_station,
                sto_slots_per_station: sim.sto_slots_per_station,
                pack_slots_per_station: sim.pack_slots_per_station,
                cart_capacity_items: sim.cart_capacity_items,
                abort_tardy_fraction: sim.abort_tardy_fraction,
            },
            ppo: PpoSection {
                gamma: ppo.gamma,
                clip_epsilon: ppo.clip_epsilon,
                rollout_steps: ppo.rollout_steps,
                epochs: ppo.epochs,
                minibatch_size: ppo.minibatch_size,
                value_loss_coef: ppo.value_loss_coef,
                entropy_coef: ppo.entropy_coef,
                learning_rate: ppo.learning_rate,
                hidden1: 64,
                hidden2: 64,
            },
            train: TrainSection { total_steps: 750_000 },
            eval: EvalSection { episodes: 100 },
            bench: BenchSection { instances: 300 },
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    UnknownSection { line: usize, section: String },
    UnknownKey { section: &'static str, key: String },
    BadValue { section: &'static str, key: &'static str, message: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, message } => {
                write!(f, "config syntax error on line {line}: {message}")
            }
            ConfigError::UnknownSection { line, section } => {
                write!(f, "unknown config section [{section}] on line {line}")
            }
            ConfigError::UnknownKey { section, key } => {
                write!(f, "unknown key '{key}' in section [{section}]")
            }
            ConfigError::BadValue { section, key, message } => {
                write!(f, "bad value for {section}.{key}: {message}")
            }
            ConfigError::Invalid(m) => write!(f, "invalid configuration: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_as<T: FromStr>(
    section: &'static str,
    key: &'static str,
    value: &str,
) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        section,
        key,
        message: format!("'{value}': {e}"),
    })
}

impl ExperimentConfig {
    /// Sets one key. Shared by the file parser and command-line `--set`
    /// overrides so both accept exactly the same keys.
    pub fn apply_kv(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        match section {
            "instance" => self.apply_instance(key, value),
            "timing" => self.apply_timing(key, value),
            "sim" => self.apply_sim(key, value),
            "ppo" => self.apply_ppo(key, value),
            "train" => match key {
                "total_steps" => {
                    self.train.total_steps = parse_as("train", "total_steps", value)?;
                    Ok(())
                }
                _ => Err(ConfigError::UnknownKey { section: "train", key: key.to_string() }),
            },
            "eval" => match key {
                "episodes" => {
                    self.eval.episodes = parse_as("eval", "episodes", value)?;
                    Ok(())
                }
                _ => Err(ConfigError::UnknownKey { section: "eval", key: key.to_string() }),
            },
            "bench" => match key {
                "instances" => {
                    self.bench.instances = parse_as("bench", "instances", value)?;
                    Ok(())
                }
                _ => Err(ConfigError::UnknownKey { section: "bench", key: key.to_string() }),
            },
            _ => Err(ConfigError::UnknownSection { line: 0, section: section.to_string() }),
        }
    }

    fn apply_instance(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = &mut self.instance;
        match key {
            "scenario" => {
                s.scenario = Scenario::from_str(value).map_err(|e| ConfigError::BadValue {
                    section: "instance",
                    key: "scenario",
                    message: e,
                })?
            }
            "orders" => s.orders = parse_as("instance", "orders", value)?,
            "pickers" => s.pickers = parse_as("instance", "pickers", value)?,
            "shuttles" => s.shuttles = parse_as("instance", "shuttles", value)?,
            "dto_stations" => s.dto_stations = parse_as("instance", "dto_stations", value)?,
            "sto_stations" => s.sto_stations = parse_as("instance", "sto_stations", value)?,
            "pack_stations" => s.pack_stations = parse_as("instance", "pack_stations", value)?,
            "horizon_s" => s.horizon_s = parse_as("instance", "horizon_s", value)?,
            _ => return Err(ConfigError::UnknownKey { section: "instance", key: key.to_string() }),
        }
        Ok(())
    }

    fn apply_timing(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.timing;
        match key {
            "ptg_tour_setup_s" => t.ptg_tour_setup_s = parse_as("timing", "ptg_tour_setup_s", value)?,
            "ptg_pick_per_item_s" => {
                t.ptg_pick_per_item_s = parse_as("timing", "ptg_pick_per_item_s", value)?
            }
            "gtp_retrieval_per_tote_s" => {
                t.gtp_retrieval_per_tote_s = parse_as("timing", "gtp_retrieval_per_tote_s", value)?
            }
            "dto_handling_per_item_s" => {
                t.dto_handling_per_item_s = parse_as("timing", "dto_handling_per_item_s", value)?
            }
            "sto_sort_per_item_s" => {
                t.sto_sort_per_item_s = parse_as("timing", "sto_sort_per_item_s", value)?
            }
            "sto_pack_per_order_s" => {
                t.sto_pack_per_order_s = parse_as("timing", "sto_pack_per_order_s", value)?
            }
            "pack_station_per_order_s" => {
                t.pack_station_per_order_s = parse_as("timing", "pack_station_per_order_s", value)?
            }
            "conveyor_transfer_s" => {
                t.conveyor_transfer_s = parse_as("timing", "conveyor_transfer_s", value)?
            }
            _ => return Err(ConfigError::UnknownKey { section: "timing", key: key.to_string() }),
        }
        Ok(())
    }

    fn apply_sim(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = &mut self.sim;
        match key {
            "dto_slots_per_station" => {
                s.dto_slots_per_station = parse_as("sim", "dto_slots_per_station", value)?
            }
            "sto_slots_per_station" => {
                s.sto_slots_per_station = parse_as("sim", "sto_slots_per_station", value)?
            }
            "pack_slots_per_station" => {
                s.pack_slots_per_station = parse_as("sim", "pack_slots_per_station", value)?
            }
            "cart_capacity_items" => {
                s.cart_capacity_items = parse_as("sim", "cart_capacity_items", value)?
            }
            "abort_tardy_fraction" => {
                s.abort_tardy_fraction = if value == "none" {
                    None
                } else {
                    Some(parse_as("sim", "abort_tardy_fraction", value)?)
                }
            }
            _ => return Err(ConfigError::UnknownKey { section: "sim", key: key.to_string() }),
        }
        Ok(())
    }

    fn apply_ppo(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = &mut self.ppo;
        match key {
            "gamma" => p.gamma = parse_as("ppo", "gamma", value)?,
            "clip_epsilon" => p.clip_epsilon = parse_as("ppo", "clip_epsilon", value)?,
            "rollout_steps" => p.rollout_steps = parse_as("ppo", "rollout_steps", value)?,
            "epochs" => p.epochs = parse_as("ppo", "epochs", value)?,
            "minibatch_size" => p.minibatch_size = parse_as("ppo", "minibatch_size", value)?,
            "value_loss_coef" => p.value_loss_coef = parse_as("ppo", "value_loss_coef", value)?,
            "entropy_coef" => p.entropy_coef = parse_as("ppo", "entropy_coef", value)?,
            "learning_rate" => p.learning_rate = parse_as("ppo", "learning_rate", value)?,
            "hidden1" => p.hidden1 = parse_as("ppo", "hidden1", value)?,
            "hidden2" => p.hidden2 = parse_as("ppo", "hidden2", value)?,
            _ => return Err(ConfigError::UnknownKey { section: "ppo", key: key.to_string() }),
        }
        Ok(())
    }

    /// Parses the INI-style text: `[section]` headers, `key = value`
    /// lines, `#` comment lines. Unset keys keep their defaults.
    pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    message: "unclosed section header".to_string(),
                })?;
                if !matches!(
                    name,
                    "instance" | "timing" | "sim" | "ppo" | "train" | "eval" | "bench"
                ) {
                    return Err(ConfigError::UnknownSection {
                        line: line_no,
                        section: name.to_string(),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            let Some(section) = section.as_deref() else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: "key outside any [section]".to_string(),
                });
            };
            cfg.apply_kv(section, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every key in a fixed order. Parsing the result reproduces
    /// the config exactly; the experiment hash is computed over this text.
    pub fn canonical_render(&self) -> String {
        let i = &self.instance;
        let t = &self.timing;
        let s = &self.sim;
        let p = &self.ppo;
        let abort = match s.abort_tardy_fraction {
            None => "none".to_string(),
            Some(v) => format!("{v}"),
        };
        format!(
            "[instance]\n\
             scenario = {}\n\
             orders = {}\n\
             pickers = {}\n\
             shuttles = {}\n\
             dto_stations = {}\n\
             sto_stations = {}\n\
             pack_stations = {}\n\
             horizon_s = {}\n\
             \n\
             [timing]\n\
             ptg_tour_setup_s = {}\n\
             ptg_pick_per_item_s = {}\n\
             gtp_retrieval_per_tote_s = {}\n\
             dto_handling_per_item_s = {}\n\
             sto_sort_per_item_s = {}\n\
             sto_pack_per_order_s = {}\n\
             pack_station_per_order_s = {}\n\
             conveyor_transfer_s = {}\n\
             \n\
             [sim]\n\
             dto_slots_per_station = {}\n\
             sto_slots_per_station = {}\n\
             pack_slots_per_station = {}\n\
             cart_capacity_items = {}\n\
             abort_tardy_fraction = {}\n\
             \n\
             [ppo]\n\
             gamma = {}\n\
             clip_epsilon = {}\n\
             rollout_steps = {}\n\
             epochs = {}\n\
             minibatch_size = {}\n\
             value_loss_coef = {}\n\
             entropy_coef = {}\n\
             learning_rate = {}\n\
             hidden1 = {}\n\
             hidden2 = {}\n\
             \n\
             [train]\n\
             total_steps = {}\n\
             \n\
             [eval]\n\
             episodes = {}\n\
             \n\
             [bench]\n\
             instances = {}\n",
            i.scenario.as_str(),
            i.orders,
            i.pickers,
            i.shuttles,
            i.dto_stations,
            i.sto_stations,
            i.pack_stations,
            i.horizon_s,
            t.ptg_tour_setup_s,
            t.ptg_pick_per_item_s,
            t.gtp_retrieval_per_tote_s,
            t.dto_handling_per_item_s,
            t.sto_sort_per_item_s,
            t.sto_pack_per_order_s,
            t.pack_station_per_order_s,
            t.conveyor_transfer_s,
            s.dto_slots_per_station,
            s.sto_slots_per_station,
            s.pack_slots_per_station,
            s.cart_capacity_items,
            abort,
            p.gamma,
            p.clip_epsilon,
            p.rollout_steps,
            p.epochs,
            p.minibatch_size,
            p.value_loss_coef,
            p.entropy_coef,
            p.learning_rate,
            p.hidden1,
            p.hidden2,
            self.train.total_steps,
            self.eval.episodes,
            self.bench.instances,
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.resources().validate().map_err(ConfigError::Invalid)?;
        if self.instance.orders == 0 {
            return Err(ConfigError::Invalid("instance.orders must be at least 1".to_string()));
        }
        self.timing.validate().map_err(ConfigError::Invalid)?;
        self.sim_config().validate().map_err(ConfigError::Invalid)?;
        self.ppo_config().validate().map_err(ConfigError::Invalid)?;
        if self.ppo.hidden1 == 0 || self.ppo.hidden2 == 0 {
            return Err(ConfigError::Invalid("ppo hidden widths must be positive".to_string()));
        }
        if self.eval.episodes == 0 || self.bench.instances == 0 {
            return Err(ConfigError::Invalid(
                "eval.episodes and bench.instances must be positive".to_string(),
            ));
        }
        Ok(())
    }

    pub fn resources(&self) -> ResourceConfig {
        ResourceConfig::new(
            self.instance.pickers,
            self.instance.shuttles,
            self.instance.dto_stations,
            self.instance.sto_stations,
            self.instance.pack_stations,
        )
    }

    pub fn generate_params(&self, seed: u64) -> GenerateParams {
        let mut p =
            GenerateParams::new(self.instance.scenario, self.instance.orders, self.resources(), seed);
        p.horizon_s = self.instance.horizon_s;
        p
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            timing: self.timing,
            dto_slots_per_station: self.sim.dto_slots_per_station,
            sto_slots_per_station: self.sim.sto_slots_per_station,
            pack_slots_per_station: self.sim.pack_slots_per_station,
            cart_capacity_items: self.sim.cart_capacity_items,
            abort_tardy_fraction: self.sim.abort_tardy_fraction,
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            gamma: self.ppo.gamma,
            clip_epsilon: self.ppo.clip_epsilon,
            rollout_steps: self.ppo.rollout_steps,
            epochs: self.ppo.epochs,
            minibatch_size: self.ppo.minibatch_size,
            value_loss_coef: self.ppo.value_loss_coef,
            entropy_coef: self.ppo.entropy_coef,
            learning_rate: self.ppo.learning_rate,
        }
    }

    /// Label like `330-5-8-1-1-1`: orders, pickers, shuttles and the three
    /// workstation counts.
    pub fn setting_label(&self) -> String {
        let i = &self.instance;
        format!(
            "{}-{}-{}-{}-{}-{}",
            i.orders, i.pickers, i.shuttles, i.dto_stations, i.sto_stations, i.pack_stations
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_render_round_trips() {
        let cfg = ExperimentConfig::default();
        let parsed = ExperimentConfig::parse_str(&cfg.canonical_render()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn partial_files_override_defaults() {
        let text = "# tighter experiment\n[instance]\norders = 500\npickers = 3\n\n[ppo]\ngamma = 0.99\n";
        let cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.instance.orders, 500);
        assert_eq!(cfg.instance.pickers, 3);
        assert_eq!(cfg.ppo.gamma, 0.99);
        // Untouched keys keep defaults.
        assert_eq!(cfg.instance.shuttles, 8);
        assert_eq!(cfg.ppo.clip_epsilon, 0.2);
    }

    #[test]
    fn unknown_sections_and_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::parse_str("[nope]\nx = 1\n"),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("[instance]\nworkers = 5\n"),
            Err(ConfigError::UnknownKey { section: "instance", .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("orders = 5\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("[instance]\norders: 5\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("[instance]\norders = many\n"),
            Err(ConfigError::BadValue { section: "instance", key: "orders", .. })
        ));
    }

    #[test]
    fn apply_kv_matches_file_parsing() {
        let mut by_kv = ExperimentConfig::default();
        by_kv.apply_kv("timing", "conveyor_transfer_s", "45").unwrap();
        by_kv.apply_kv("sim", "abort_tardy_fraction", "0.5").unwrap();
        let by_file = ExperimentConfig::parse_str(
            "[timing]\nconveyor_transfer_s = 45\n[sim]\nabort_tardy_fraction = 0.5\n",
        )
        .unwrap();
        assert_eq!(by_kv, by_file);
        assert_eq!(by_kv.sim.abort_tardy_fraction, Some(0.5));
        by_kv.apply_kv("sim", "abort_tardy_fraction", "none").unwrap();
        assert_eq!(by_kv.sim.abort_tardy_fraction, None);
    }

    #[test]
    fn invalid_values_fail_validation() {
        assert!(ExperimentConfig::parse_str("[instance]\npickers = 0\n").is_err());
        assert!(ExperimentConfig::parse_str("[timing]\nconveyor_transfer_s = -1\n").is_err());
        assert!(ExperimentConfig::parse_str("[ppo]\ngamma = 1.5\n").is_err());
    }

    #[test]
    fn setting_label_spells_out_the_resources() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.setting_label(), "330-5-8-1-1-1");
    }
}
