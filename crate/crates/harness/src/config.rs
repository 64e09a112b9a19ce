//! Run configuration: nested TOML sections over the simulator defaults, named
//! profiles, and diagnostics that point at the offending line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use usv_auv_core::fim::PlannerConfig;
use usv_auv_core::mission::{MissionConfig, MissionSetup, RewardWeights, UsvMode};
use usv_auv_core::rl::{OptimizerKind, Td3Hyper};
use usv_auv_core::sea::SeaConfig;
use usv_auv_core::usbl::UsblConfig;

use crate::error::{HarnessError, Result};

/// Preset applied underneath the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Profile {
    /// Full scale: 450 episodes, 60 sensor nodes.
    #[default]
    Full,
    /// Desk scale: 120 episodes, 30 sensor nodes, 50 × 50 wave grid.
    Desk,
    /// One AUV, five nodes in a calm 50 × 50 m box.
    Toy,
}

impl Profile {
    pub fn config(self) -> RunConfig {
        let mut c = RunConfig::default();
        match self {
            Profile::Full => {}
            Profile::Desk => {
                c.mission.n_poi = 30;
                c.sea.nx = 50;
                c.sea.ny = 50;
                c.td3.episodes = 120;
                c.td3.optimizer = OptimizerKind::Adam;
            }
            Profile::Toy => {
                c.mission.x_max = 50.0;
                c.mission.y_max = 50.0;
                c.mission.n_poi = 5;
                c.mission.n_auv = 1;
                c.mission.episode_steps = 200;
                c.sea.enabled = false;
                c.td3.episodes = 200;
                c.td3.steps_per_episode = 200;
                c.run.eval_modes = vec![
                    UsvMode::Fim,
                    UsvMode::Fixed { x: 0.0, y: 0.0 },
                    UsvMode::Fixed { x: 25.0, y: 25.0 },
                ];
                c.plan.auvs = vec![[10.0, 20.0], [40.0, 30.0]];
            }
        }
        c
    }
}

/// Policy used by `eval` and evaluation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Deterministic actor loaded from a checkpoint.
    Actor,
    Random,
    Greedy,
    Lawnmower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepRun {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub usv_mode: UsvMode,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub eval_episodes: usize,
    pub eval_modes: Vec<UsvMode>,
    pub policy: PolicyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub lawnmower_spacing: f64,
    pub lawnmower_margin: f64,
    pub lawnmower_speed: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            usv_mode: UsvMode::Fim,
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: PathBuf::from("runs"),
            eval_episodes: 5,
            eval_modes: vec![
                UsvMode::Fim,
                UsvMode::Fixed { x: 0.0, y: 0.0 },
                UsvMode::Fixed { x: 100.0, y: 100.0 },
            ],
            policy: PolicyKind::Actor,
            checkpoint: None,
            lawnmower_spacing: 30.0,
            lawnmower_margin: 15.0,
            lawnmower_speed: 1.0,
        }
    }
}

/// Inputs of the `plan` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    /// Horizontal AUV positions; all AUVs sit at `mission.depth`.
    pub auvs: Vec<[f64; 2]>,
    /// Brute-force cross-check lattice spacing (m); 0 disables it.
    pub oracle_grid: f64,
    /// Optimisations timed to report the runtime.
    pub repeat: usize,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            auvs: vec![[25.0, 93.0], [95.0, 40.0]],
            oracle_grid: 0.0,
            repeat: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// `energy`, `safety`, `tracking`, `nit` or a dotted `section.key`.
    pub key: String,
    pub values: Vec<f64>,
    pub run: SweepRun,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            key: String::new(),
            values: Vec::new(),
            run: SweepRun::Train,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DumpSection {
    /// Snapshot times (s).
    pub times: Vec<f64>,
}

impl Default for DumpSection {
    fn default() -> Self {
        Self {
            times: vec![25.0, 50.0, 75.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mission: MissionConfig,
    pub reward: RewardWeights,
    pub sea: SeaConfig,
    pub usbl: UsblConfig,
    pub planner: PlannerConfig,
    pub td3: Td3Hyper,
    pub run: RunSection,
    pub plan: PlanSection,
    pub sweep: SweepSection,
    pub dump: DumpSection,
}

impl RunConfig {
    pub fn setup(&self, usv_mode: UsvMode) -> MissionSetup {
        MissionSetup {
            mission: self.mission.clone(),
            reward: self.reward.clone(),
            sea: self.sea.clone(),
            usbl: self.usbl.clone(),
            planner: self.planner.clone(),
            usv_mode,
        }
    }

    /// The fully resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises to TOML")
    }

    /// Short digest of everything except the seed list and output directory,
    /// so an echo re-run from a different directory lands on the same id.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.run.seeds.clear();
        c.run.output_dir = PathBuf::new();
        let h = Sha256::digest(c.to_toml().as_bytes());
        hex::encode(&h[..5])
    }

    /// Copy with one numeric key replaced. `energy`, `safety` and `tracking`
    /// name the reward scales, `nit` the planner generations; anything else is
    /// a dotted `section.key` path.
    pub fn with_override(&self, key: &str, value: f64) -> Result<RunConfig> {
        let path = match key {
            "energy" => "reward.energy_scale",
            "safety" => "reward.safety_scale",
            "tracking" => "reward.tracking_scale",
            "nit" => "planner.nit",
            other => other,
        };
        let (section, field) = path
            .split_once('.')
            .ok_or_else(|| HarnessError::Config(format!("sweep key `{key}` must be a preset or `section.key`")))?;
        let mut root = toml::Table::try_from(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        let slot = root
            .get_mut(section)
            .and_then(|s| s.as_table_mut())
            .and_then(|t| t.get_mut(field))
            .ok_or_else(|| HarnessError::Config(format!("unknown sweep key `{path}`")))?;
        *slot = match slot {
            toml::Value::Integer(_) if value.fract() == 0.0 && value >= 0.0 => toml::Value::Integer(value as i64),
            toml::Value::Float(_) => toml::Value::Float(value),
            _ => return Err(HarnessError::Config(format!("sweep key `{path}` cannot take the value {value}"))),
        };
        root.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))
    }
}

/// A configuration together with the text it came from, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    file: String,
    text: String,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl Loaded {
    /// Profile defaults overlaid with `path`, if given.
    pub fn load(path: Option<&Path>, profile: Profile) -> Result<Self> {
        let base = profile.config();
        let Some(path) = path else {
            return Ok(Self {
                config: base,
                file: "<defaults>".into(),
                text: String::new(),
            });
        };
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_text(&text, &path.display().to_string(), profile)
    }

    pub fn from_text(text: &str, file: &str, profile: Profile) -> Result<Self> {
        let at = |e: toml::de::Error| {
            let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
            HarnessError::ConfigAt {
                file: file.into(),
                line,
                message: e.message().trim().to_string(),
            }
        };
        // The strict pass reports unknown keys and type errors with a span.
        toml::from_str::<RunConfig>(text).map_err(at)?;
        let overlay: toml::Table = text.parse().map_err(at)?;
        let mut root = toml::Table::try_from(profile.config()).map_err(|e| HarnessError::Config(e.to_string()))?;
        merge(&mut root, overlay);
        let config = root.try_into().map_err(at)?;
        Ok(Self {
            config,
            file: file.into(),
            text: text.to_string(),
        })
    }

    pub fn file(&self) -> &str {
        &self.file
    }

    /// Line of `key` inside `[section]`, or of the section header.
    fn locate(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let mut current = String::new();
        let mut header = None;
        for (n, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = name.trim().to_string();
                if current == section {
                    header = Some(n + 1);
                }
                continue;
            }
            if current != section {
                continue;
            }
            let Some(k) = key else { continue };
            if let Some(rest) = line.strip_prefix(k) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
        header
    }

    /// Keys written in `[section]` of the source text.
    fn keys_in(&self, section: &str) -> Vec<String> {
        let mut current = String::new();
        let mut out = Vec::new();
        for raw in self.text.lines() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = name.trim().to_string();
            } else if current == section {
                if let Some((k, _)) = line.split_once('=') {
                    out.push(k.trim().to_string());
                }
            }
        }
        out
    }

    fn blame(&self, sections: &[&str], message: String) -> HarnessError {
        let mentions = |m: &str, k: &str| m.split(|c: char| !(c.is_alphanumeric() || c == '_')).any(|w| w == k);
        for s in sections {
            for k in self.keys_in(s) {
                if mentions(&message, &k) {
                    if let Some(line) = self.locate(s, Some(&k)) {
                        return self.at(line, message);
                    }
                }
            }
        }
        match sections.iter().find_map(|s| self.locate(s, None)) {
            Some(line) => self.at(line, message),
            None => HarnessError::Config(message),
        }
    }

    fn at(&self, line: usize, message: String) -> HarnessError {
        HarnessError::ConfigAt {
            file: self.file.clone(),
            line,
            message,
        }
    }

    /// Range and cross-field checks on the merged configuration.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let msg = |e: usv_auv_core::Error| match e {
            usv_auv_core::Error::Config(m) => m,
            other => other.to_string(),
        };
        let checks: [(&[&str], usv_auv_core::Result<()>); 7] = [
            (&["mission"], c.mission.validate()),
            (&["reward"], c.reward.validate()),
            (&["sea"], c.sea.validate()),
            (&["usbl"], c.usbl.validate()),
            (&["planner"], c.planner.validate()),
            (&["td3"], c.td3.validate()),
            (&["planner", "run", "mission"], c.setup(c.run.usv_mode).validate()),
        ];
        for (sections, r) in checks {
            r.map_err(|e| self.blame(sections, msg(e)))?;
        }
        if c.td3.steps_per_episode != c.mission.episode_steps {
            return Err(self.blame(
                &["td3", "mission"],
                format!(
                    "td3.steps_per_episode ({}) must equal mission.episode_steps ({})",
                    c.td3.steps_per_episode, c.mission.episode_steps
                ),
            ));
        }
        if c.run.seeds.is_empty() {
            return Err(self.blame(&["run"], "run.seeds must not be empty".into()));
        }
        if c.run.eval_episodes == 0 {
            return Err(self.blame(&["run"], "run.eval_episodes must be positive".into()));
        }
        for m in &c.run.eval_modes {
            c.setup(*m).validate().map_err(|e| self.blame(&["run"], format!("eval_modes: {}", msg(e))))?;
        }
        if !(c.plan.oracle_grid >= 0.0) || c.plan.repeat == 0 {
            return Err(self.blame(&["plan"], "plan.oracle_grid must be >= 0 and plan.repeat positive".into()));
        }
        if c.dump.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(self.blame(&["dump"], "dump.times must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Parse a comma-separated seed list such as `0,1,2`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad seed `{t}` in `{s}`")))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        return Err(HarnessError::Config("the seed list is empty".into()));
    }
    Ok(seeds)
}

/// Parse `x,y` into a horizontal position.
pub fn parse_point(s: &str) -> Result<[f64; 2]> {
    let bad = || HarnessError::Config(format!("expected `x,y`, got `{s}`"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    Ok([x, y])
}

/// Parse `key=v1,v2,...`.
pub fn parse_sweep(s: &str) -> Result<(String, Vec<f64>)> {
    let bad = || HarnessError::Config(format!("sweep must look like `key=v1,v2`, got `{s}`"));
    let (k, vs) = s.split_once('=').ok_or_else(bad)?;
    let values = vs
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    if k.trim().is_empty() || values.is_empty() {
        return Err(bad());
    }
    Ok((k.trim().to_string(), values))
}
