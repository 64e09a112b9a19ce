//! Multi-AUV underwater data-collection environment.
//!
//! Each AUV observes a normalised state (other AUVs, its target sensor node,
//! its own position, the network overflow ratio and its border flag) and
//! commands a normalised speed and heading. Sea disturbance, sensor-node
//! buffers, the acoustic data link and the USV's USBL positioning are advanced
//! in a fixed order every step; see [`MissionEnv::step`].

mod link;
mod metrics;
mod policy;
mod reward;

pub use link::{link_rate, snr_db, thorp_db_per_km};
pub use metrics::{collect_metrics, AuvStep, EpisodeMetrics, StepRecord, Transfer};
pub use policy::{action_for, GreedyTarget, Lawnmower, Policy, RandomPolicy};
pub use reward::{reward, RewardInputs, RewardTerms, RewardWeights};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::fim::{self, Bounds, PlannerConfig};
use crate::rng;
use crate::sea::{SeaConfig, SeaState, WaveGrid};
use crate::usbl::{self, AuvTruth, UsblConfig, UsvState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub x_max: f64,
    pub y_max: f64,
    pub n_poi: usize,
    /// AUV cruise depth (m).
    pub depth: f64,
    /// Mission step (s).
    pub dt: f64,
    pub episode_steps: usize,
    pub v_min: f64,
    pub v_max: f64,
    /// AUV–sensor-node service radius (m).
    pub comm_range: f64,
    pub collision_dist: f64,
    pub usv_speed_max: f64,
    pub n_auv: usize,
    pub sn_capacity_bits: u64,
    /// Data generation per sensor node (bits/s).
    pub sn_fill_rate: f64,
    /// Initial buffer fill is uniform in `[0, sn_init_fill_max] · capacity`.
    pub sn_init_fill_max: f64,
    pub hotel_power_w: f64,
    /// Propulsion power coefficient: power = hotel + coeff · speed³.
    pub propulsion_coeff: f64,
    pub source_level_db: f64,
    pub noise_level_db: f64,
    pub bandwidth_hz: f64,
    pub link_freq_khz: f64,
    /// Fraction of the surface wave velocity felt at cruise depth.
    pub wave_drift_beta: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            x_max: 200.0,
            y_max: 200.0,
            n_poi: 60,
            depth: 120.0,
            dt: 10.0,
            episode_steps: 1000,
            v_min: 0.5,
            v_max: 2.0,
            comm_range: 15.0,
            collision_dist: 12.0,
            usv_speed_max: 5.0,
            n_auv: 2,
            sn_capacity_bits: 4_000_000,
            sn_fill_rate: 1_000.0,
            sn_init_fill_max: 0.5,
            hotel_power_w: 25.0,
            propulsion_coeff: 35.0,
            source_level_db: 135.0,
            noise_level_db: 50.0,
            bandwidth_hz: 5_000.0,
            link_freq_khz: 12.0,
            wave_drift_beta: 0.2,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_max", self.x_max),
            ("y_max", self.y_max),
            ("depth", self.depth),
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("comm_range", self.comm_range),
            ("collision_dist", self.collision_dist),
            ("usv_speed_max", self.usv_speed_max),
            ("bandwidth_hz", self.bandwidth_hz),
            ("link_freq_khz", self.link_freq_khz),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("mission.{name} must be positive, got {v}")));
            }
        }
        if !(1..=4).contains(&self.n_auv) {
            return Err(Error::Config(format!("mission.n_auv must be in 1..=4, got {}", self.n_auv)));
        }
        if self.n_poi == 0 || self.episode_steps == 0 || self.sn_capacity_bits == 0 {
            return Err(Error::Config("mission.n_poi, episode_steps and sn_capacity_bits must be positive".into()));
        }
        if !(self.v_min >= 0.0 && self.v_min <= self.v_max) {
            return Err(Error::Config(format!(
                "mission speed bounds must satisfy 0 <= v_min <= v_max, got {} / {}",
                self.v_min, self.v_max
            )));
        }
        if !(self.collision_dist < self.x_max.min(self.y_max) / 4.0) {
            return Err(Error::Config("mission.collision_dist must be below a quarter of the area side".into()));
        }
        if !(0.0..=1.0).contains(&self.sn_init_fill_max) {
            return Err(Error::Config("mission.sn_init_fill_max must lie in [0, 1]".into()));
        }
        let non_negative = [
            ("sn_fill_rate", self.sn_fill_rate),
            ("hotel_power_w", self.hotel_power_w),
            ("propulsion_coeff", self.propulsion_coeff),
            ("wave_drift_beta", self.wave_drift_beta),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("mission.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Length of each AUV's state vector.
    pub fn state_dim(&self) -> usize {
        6 + 2 * (self.n_auv - 1)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::area(self.x_max, self.y_max)
    }

    fn norm_b(&self) -> f64 {
        self.x_max.hypot(self.y_max)
    }

    pub fn power(&self, speed: f64) -> f64 {
        self.hotel_power_w + self.propulsion_coeff * speed.powi(3)
    }
}

/// How the USV chooses its position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum UsvMode {
    /// Re-planned every step by maximising the FIM determinant.
    Fim,
    Fixed { x: f64, y: f64 },
}

impl fmt::Display for UsvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsvMode::Fim => write!(f, "fim"),
            UsvMode::Fixed { x, y } => write!(f, "fixed:{x},{y}"),
        }
    }
}

impl FromStr for UsvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "fim" {
            return Ok(UsvMode::Fim);
        }
        let bad = || Error::Config(format!("usv mode must be `fim` or `fixed:x,y`, got `{s}`"));
        let rest = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let (x, y) = rest.split_once(',').ok_or_else(bad)?;
        let x: f64 = x.trim().parse().map_err(|_| bad())?;
        let y: f64 = y.trim().parse().map_err(|_| bad())?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad());
        }
        Ok(UsvMode::Fixed { x, y })
    }
}

impl TryFrom<String> for UsvMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<UsvMode> for String {
    fn from(m: UsvMode) -> String {
        m.to_string()
    }
}

/// Everything needed to build an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionSetup {
    pub mission: MissionConfig,
    pub reward: RewardWeights,
    pub sea: SeaConfig,
    pub usbl: UsblConfig,
    pub planner: PlannerConfig,
    pub usv_mode: UsvMode,
}

impl Default for MissionSetup {
    fn default() -> Self {
        Self {
            mission: MissionConfig::default(),
            reward: RewardWeights::default(),
            sea: SeaConfig::default(),
            usbl: UsblConfig::default(),
            planner: PlannerConfig::default(),
            usv_mode: UsvMode::Fim,
        }
    }
}

impl MissionSetup {
    pub fn validate(&self) -> Result<()> {
        self.mission.validate()?;
        self.reward.validate()?;
        if self.sea.enabled {
            self.sea.validate()?;
        }
        self.usbl.validate()?;
        self.planner.validate()?;
        if let Some(b) = self.planner.bounds {
            let m = &self.mission;
            if b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > m.x_max || b.y_max > m.y_max || b.x_min > b.x_max || b.y_min > b.y_max {
                return Err(Error::Config("planner.bounds must lie inside the mission area".into()));
            }
        }
        if let UsvMode::Fixed { x, y } = self.usv_mode {
            if !(0.0..=self.mission.x_max).contains(&x) || !(0.0..=self.mission.y_max).contains(&y) {
                return Err(Error::Config(format!("fixed USV position ({x}, {y}) lies outside the mission area")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorNode {
    pub x: f64,
    pub y: f64,
    pub buffer: u64,
    pub capacity: u64,
    /// Bits generated per mission step.
    pub fill_per_step: u64,
    pub overflowed: bool,
    pub serviced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuvAgentState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub heading: f64,
    pub target: Option<usize>,
    pub energy_step: f64,
    pub trajectory_len: f64,
    pub border: bool,
}

/// `(speed, heading)` for a normalised action; components are clamped first.
pub fn map_action(a: [f64; 2], cfg: &MissionConfig) -> (f64, f64) {
    let v = clamp_unit(a[0]);
    let th = clamp_unit(a[1]);
    (cfg.v_min + (v + 1.0) * (cfg.v_max - cfg.v_min) / 2.0, PI * th)
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

fn sq_dist(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    (ax - bx).powi(2) + (ay - by).powi(2)
}

/// Greedy target assignment. AUVs flagged in `reassign`, in index order, take
/// the nearest unserviced node that no other AUV holds, ties going to the lower
/// node index. With no free node an AUV keeps its current target, or if it has
/// none, takes the nearest unserviced (else nearest) node outright.
pub fn assign_targets(auvs: &[[f64; 2]], nodes: &[SensorNode], targets: &mut [Option<usize>], reassign: &[bool]) {
    let mut held: Vec<usize> = targets
        .iter()
        .zip(reassign)
        .filter(|(_, &r)| !r)
        .filter_map(|(t, _)| *t)
        .filter(|&t| !nodes[t].serviced)
        .collect();
    let nearest = |p: [f64; 2], ok: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, n) in nodes.iter().enumerate() {
            if !ok(i) {
                continue;
            }
            let d = sq_dist(p[0], p[1], n.x, n.y);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    };
    for k in 0..auvs.len() {
        if !reassign[k] {
            continue;
        }
        let free = nearest(auvs[k], &|i| !nodes[i].serviced && !held.contains(&i));
        match free {
            Some(i) => {
                targets[k] = Some(i);
                held.push(i);
            }
            None if targets[k].is_none() => {
                targets[k] = nearest(auvs[k], &|i| !nodes[i].serviced).or_else(|| nearest(auvs[k], &|_| true));
            }
            None => {}
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub states: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
}

const SPAWN_ATTEMPTS: usize = 1000;

/// The data-collection environment. Construct with [`MissionEnv::new`], then
/// [`reset`](MissionEnv::reset) before stepping.
#[derive(Debug, Clone)]
pub struct MissionEnv {
    setup: MissionSetup,
    seed: u64,
    step_idx: usize,
    nodes: Vec<SensorNode>,
    auvs: Vec<AuvAgentState>,
    usv: [f64; 2],
    waypoint: Option<[f64; 2]>,
    estimates: Vec<[f64; 2]>,
    sea: SeaState,
    custom_sea: bool,
    /// Wave snapshots at every mission step. The tidal field does not depend
    /// on the episode seed, so it is simulated once and replayed afterwards.
    wave_frames: Arc<Vec<WaveGrid>>,
    recording: Vec<WaveGrid>,
    meas_rng: rand_chacha::ChaCha8Rng,
    initial_bits: Vec<u64>,
    filled_bits: Vec<u64>,
    delivered_bits: Vec<u64>,
    log: Vec<StepRecord>,
    active: bool,
}

impl MissionEnv {
    pub fn new(setup: MissionSetup) -> Result<Self> {
        setup.validate()?;
        Ok(Self {
            setup,
            seed: 0,
            step_idx: 0,
            nodes: Vec::new(),
            auvs: Vec::new(),
            usv: [0.0, 0.0],
            waypoint: None,
            estimates: Vec::new(),
            sea: SeaState::calm(),
            custom_sea: false,
            wave_frames: Arc::new(Vec::new()),
            recording: Vec::new(),
            meas_rng: rng::stream(0, 2),
            initial_bits: Vec::new(),
            filled_bits: Vec::new(),
            delivered_bits: Vec::new(),
            log: Vec::new(),
            active: false,
        })
    }

    pub fn setup(&self) -> &MissionSetup {
        &self.setup
    }

    pub fn config(&self) -> &MissionConfig {
        &self.setup.mission
    }

    pub fn state_dim(&self) -> usize {
        self.setup.mission.state_dim()
    }

    pub fn n_auv(&self) -> usize {
        self.setup.mission.n_auv
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn auvs(&self) -> &[AuvAgentState] {
        &self.auvs
    }

    pub fn usv(&self) -> [f64; 2] {
        self.usv
    }

    pub fn sea(&self) -> &SeaState {
        &self.sea
    }

    pub fn step_index(&self) -> usize {
        self.step_idx
    }

    pub fn time(&self) -> f64 {
        self.step_idx as f64 * self.setup.mission.dt
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        collect_metrics(&self.log, self.setup.mission.dt)
    }

    /// Per sensor node: bits at reset, bits generated since, bits delivered since.
    pub fn ledger(&self) -> (&[u64], &[u64], &[u64]) {
        (&self.initial_bits, &self.filled_bits, &self.delivered_bits)
    }

    /// Replace the sea (e.g. a hand-built vortex field in tests); applies until the next reset.
    pub fn set_sea(&mut self, sea: SeaState) {
        self.sea = sea;
        self.custom_sea = true;
    }

    /// Overwrite one AUV's position (tests and scripted scenarios).
    pub fn place_auv(&mut self, k: usize, x: f64, y: f64) {
        self.auvs[k].x = x;
        self.auvs[k].y = y;
    }

    pub fn n_overflow(&self) -> usize {
        self.nodes.iter().filter(|n| n.overflowed && !n.serviced).count()
    }

    /// Start a new episode; everything random is drawn from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<Vec<f64>>> {
        let m = self.setup.mission.clone();
        let mut env_rng = rng::stream(seed, 1);
        self.seed = seed;
        self.step_idx = 0;
        self.meas_rng = rng::stream(seed, 2);
        self.log.clear();

        let fill_per_step = (m.sn_fill_rate * m.dt).round() as u64;
        self.nodes = (0..m.n_poi)
            .map(|_| {
                let x = env_rng.random_range(0.0..=m.x_max);
                let y = env_rng.random_range(0.0..=m.y_max);
                let frac = env_rng.random_range(0.0..=m.sn_init_fill_max);
                let buffer = ((m.sn_capacity_bits as f64) * frac).floor() as u64;
                SensorNode {
                    x,
                    y,
                    buffer,
                    capacity: m.sn_capacity_bits,
                    fill_per_step,
                    overflowed: false,
                    serviced: false,
                }
            })
            .collect();
        self.initial_bits = self.nodes.iter().map(|n| n.buffer).collect();
        self.filled_bits = vec![0; m.n_poi];
        self.delivered_bits = vec![0; m.n_poi];

        let min_sep2 = (2.0 * m.collision_dist).powi(2);
        let mut starts: Vec<[f64; 2]> = Vec::with_capacity(m.n_auv);
        let mut attempts = 0;
        while starts.len() < m.n_auv {
            attempts += 1;
            if attempts > SPAWN_ATTEMPTS {
                return Err(Error::Config(format!(
                    "could not place {} AUVs {} m apart after {SPAWN_ATTEMPTS} attempts",
                    m.n_auv,
                    2.0 * m.collision_dist
                )));
            }
            let p = [env_rng.random_range(0.0..=m.x_max), env_rng.random_range(0.0..=m.y_max)];
            if starts.iter().all(|q| sq_dist(p[0], p[1], q[0], q[1]) >= min_sep2) {
                starts.push(p);
            }
        }
        self.auvs = starts
            .iter()
            .map(|p| AuvAgentState {
                x: p[0],
                y: p[1],
                speed: 0.0,
                heading: 0.0,
                target: None,
                energy_step: 0.0,
                trajectory_len: 0.0,
                border: false,
            })
            .collect();
        self.reassign(&vec![true; m.n_auv]);

        self.sea = SeaState::from_config(&self.setup.sea, m.x_max, m.y_max, &mut env_rng)?;
        self.custom_sea = false;
        self.recording.clear();
        if let Some(grid) = self.sea.grid() {
            if self.replaying() {
                self.sea.replace_grid(self.wave_frames[0].clone());
            } else {
                self.recording.push(grid.clone());
            }
        }

        self.usv = match self.setup.usv_mode {
            UsvMode::Fim => [m.x_max / 2.0, m.y_max / 2.0],
            UsvMode::Fixed { x, y } => [x, y],
        };
        self.waypoint = None;
        let fixes = self.take_fixes()?;
        self.estimates = fixes.iter().map(|f| f.0).collect();
        self.active = true;
        Ok(self.states())
    }

    fn replaying(&self) -> bool {
        self.wave_frames.len() == self.setup.mission.episode_steps + 1
    }

    fn advance_sea(&mut self, t: f64) -> Result<()> {
        if self.custom_sea || self.sea.grid().is_none() {
            return self.sea.advance_to(t);
        }
        if self.replaying() {
            self.sea.replace_grid(self.wave_frames[self.step_idx].clone());
            return Ok(());
        }
        self.sea.advance_to(t)?;
        if let Some(grid) = self.sea.grid() {
            if self.recording.len() == self.step_idx {
                self.recording.push(grid.clone());
            }
            if self.recording.len() == self.setup.mission.episode_steps + 1 {
                self.wave_frames = Arc::new(std::mem::take(&mut self.recording));
            }
        }
        Ok(())
    }

    fn reassign(&mut self, which: &[bool]) {
        let pos: Vec<[f64; 2]> = self.auvs.iter().map(|a| [a.x, a.y]).collect();
        let mut targets: Vec<Option<usize>> = self.auvs.iter().map(|a| a.target).collect();
        assign_targets(&pos, &self.nodes, &mut targets, which);
        for (a, t) in self.auvs.iter_mut().zip(targets) {
            a.target = t;
        }
    }

    fn target_pos(&self, k: usize) -> [f64; 2] {
        match self.auvs[k].target {
            Some(t) => [self.nodes[t].x, self.nodes[t].y],
            None => [self.auvs[k].x, self.auvs[k].y],
        }
    }

    /// Current state vectors, one per AUV.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let m = &self.setup.mission;
        let nb = m.norm_b();
        let rho = self.n_overflow() as f64 / m.n_poi as f64;
        (0..self.auvs.len())
            .map(|k| {
                let me = &self.auvs[k];
                let mut s = Vec::with_capacity(m.state_dim());
                for (j, o) in self.auvs.iter().enumerate() {
                    if j != k {
                        s.push((o.x - me.x) / nb);
                        s.push((o.y - me.y) / nb);
                    }
                }
                let t = self.target_pos(k);
                s.push((t[0] - me.x) / nb);
                s.push((t[1] - me.y) / nb);
                s.push(me.x / nb);
                s.push(me.y / nb);
                s.push(rho);
                s.push(if me.border { 1.0 } else { 0.0 });
                s
            })
            .collect()
    }

    /// USBL fixes of every AUV from the current USV position: `(estimate, error)`.
    fn take_fixes(&mut self) -> Result<Vec<([f64; 2], f64)>> {
        let sample = self.sea.sample(self.usv[0], self.usv[1])?;
        let usv = UsvState {
            x: self.usv[0],
            y: self.usv[1],
            eta: sample.eta,
        };
        let wave_speed = sample.wave_vel.0.hypot(sample.wave_vel.1);
        let depth = self.setup.mission.depth;
        let mut out = Vec::with_capacity(self.auvs.len());
        for (k, a) in self.auvs.iter().enumerate() {
            let truth = AuvTruth { x: a.x, y: a.y, z: depth };
            let est = usbl::fix(&usv, &truth, k, &self.setup.usbl, wave_speed, &mut self.meas_rng)?;
            out.push(([est.x_hat, est.y_hat], est.error.unwrap_or(f64::NAN)));
        }
        Ok(out)
    }

    /// Advance one mission step.
    ///
    /// Order: AUV kinematics (disturbance sampled before the sea advances),
    /// sea advance, buffer fill, data transfer at the new positions, target
    /// reassignment, USV planning and motion, USBL fixes, rewards.
    pub fn step(&mut self, actions: &[[f64; 2]]) -> Result<StepOutcome> {
        if !self.active {
            return Err(Error::SimulationFault {
                step: self.step_idx,
                what: "step called on an inactive episode; call reset first".into(),
            });
        }
        let n = self.auvs.len();
        if actions.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: actions.len(),
            });
        }
        let m = self.setup.mission.clone();
        let step = self.step_idx;
        let fault = |what: String| Error::SimulationFault { step, what };

        let mut moved = vec![0.0; n];
        for (k, &a) in actions.iter().enumerate() {
            let (v, th) = map_action(a, &m);
            let (c, s) = (th.cos(), th.sin());
            let auv = &self.auvs[k];
            let px = auv.x + v * m.dt * c;
            let py = auv.y + v * m.dt * s;
            let border = !(0.0..=m.x_max).contains(&px) || !(0.0..=m.y_max).contains(&py);
            let sample = self.sea.sample(auv.x, auv.y)?;
            let drift_x = sample.turb_vel.0 + m.wave_drift_beta * sample.wave_vel.0;
            let drift_y = sample.turb_vel.1 + m.wave_drift_beta * sample.wave_vel.1;
            let nx = (auv.x + (v * c + drift_x) * m.dt).clamp(0.0, m.x_max);
            let ny = (auv.y + (v * s + drift_y) * m.dt).clamp(0.0, m.y_max);
            if !nx.is_finite() || !ny.is_finite() {
                return Err(fault(format!("non-finite position for AUV {k}")));
            }
            moved[k] = (nx - auv.x).hypot(ny - auv.y);
            let auv = &mut self.auvs[k];
            auv.x = nx;
            auv.y = ny;
            auv.speed = v;
            auv.heading = th;
            auv.border = border;
            auv.energy_step = m.power(v);
            auv.trajectory_len += moved[k];
        }

        self.step_idx += 1;
        let t = self.time();
        self.advance_sea(t)?;

        let mut newly_overflowed = false;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if node.serviced {
                continue;
            }
            let room = node.capacity - node.buffer;
            let add = node.fill_per_step.min(room);
            node.buffer += add;
            self.filled_bits[i] += add;
            if node.buffer == node.capacity && !node.overflowed {
                node.overflowed = true;
                newly_overflowed = true;
            }
        }

        let mut transfers = Vec::new();
        let mut serviced = Vec::new();
        let mut transmitted = vec![false; n];
        for (k, sent) in transmitted.iter_mut().enumerate() {
            let Some(j) = self.auvs[k].target else { continue };
            let node = &mut self.nodes[j];
            if node.serviced {
                continue;
            }
            let d = (node.x - self.auvs[k].x).hypot(node.y - self.auvs[k].y);
            let capacity = (link_rate(d, &m) * m.dt).floor() as u64;
            if capacity == 0 {
                continue;
            }
            let bits = capacity.min(node.buffer);
            node.buffer -= bits;
            self.delivered_bits[j] += bits;
            if bits > 0 {
                transfers.push(Transfer { auv: k, sn: j, bits });
            }
            if node.buffer == 0 {
                node.serviced = true;
                node.overflowed = false;
                serviced.push(j);
                *sent = true;
            }
        }
        if newly_overflowed {
            self.reassign(&vec![true; n]);
        } else if !serviced.is_empty() {
            let which: Vec<bool> = self
                .auvs
                .iter()
                .map(|a| a.target.is_none_or(|t| self.nodes[t].serviced))
                .collect();
            self.reassign(&which);
        }

        if let UsvMode::Fim = self.setup.usv_mode {
            let est: Vec<AuvTruth> = self
                .estimates
                .iter()
                .map(|e| AuvTruth {
                    x: e[0].clamp(0.0, m.x_max),
                    y: e[1].clamp(0.0, m.y_max),
                    z: m.depth,
                })
                .collect();
            let plan_seed = rng::mix(rng::mix(self.setup.planner.seed, self.seed), step as u64);
            let wp = fim::plan_waypoint_seeded(&est, &self.setup.usbl, &self.setup.planner, m.bounds(), plan_seed)?;
            let (dx, dy) = (wp.x - self.usv[0], wp.y - self.usv[1]);
            let dist = dx.hypot(dy);
            let reach = m.usv_speed_max * m.dt;
            if dist <= reach {
                self.usv = [wp.x, wp.y];
            } else {
                self.usv = [self.usv[0] + dx * reach / dist, self.usv[1] + dy * reach / dist];
            }
            self.waypoint = Some([wp.x, wp.y]);
        }
        let fixes = self.take_fixes()?;
        self.estimates = fixes.iter().map(|f| f.0).collect();

        let n_overflow = self.n_overflow();
        let mut collisions = 0;
        let mut rewards = Vec::with_capacity(n);
        let mut auv_records = Vec::with_capacity(n);
        for k in 0..n {
            let me = &self.auvs[k];
            let neighbours: Vec<f64> = self
                .auvs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, o)| (o.x - me.x).hypot(o.y - me.y))
                .collect();
            collisions += self.auvs[k + 1..]
                .iter()
                .filter(|o| (o.x - me.x).hypot(o.y - me.y) < m.collision_dist)
                .count();
            let tp = self.target_pos(k);
            let terms = reward(
                &RewardInputs {
                    d_target: (tp[0] - me.x).hypot(tp[1] - me.y),
                    n_overflow,
                    transmitted: transmitted[k],
                    energy_w: me.energy_step,
                    neighbour_dists: &neighbours,
                    border: me.border,
                },
                &self.setup.reward,
            );
            rewards.push(terms.total);
            auv_records.push(AuvStep {
                x: me.x,
                y: me.y,
                action: actions[k],
                speed: me.speed,
                heading: me.heading,
                border: me.border,
                moved: moved[k],
                energy_w: me.energy_step,
                target: me.target.unwrap_or(usize::MAX),
                reward: terms,
                pos_error: Some(fixes[k].1),
            });
        }

        let states = self.states();
        if let Some(k) = states.iter().position(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(fault(format!("non-finite state for AUV {k}")));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(fault("non-finite reward".into()));
        }
        self.log.push(StepRecord {
            step,
            t,
            auvs: auv_records,
            usv: self.usv,
            waypoint: self.waypoint,
            transfers,
            serviced,
            n_overflow,
            collisions,
        });
        let done = self.step_idx >= m.episode_steps;
        if done {
            self.active = false;
        }
        Ok(StepOutcome { states, rewards, done })
    }
}
