//! Scripted and random reference policies.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::{MissionConfig, MissionEnv};
use crate::rng;

/// Something that chooses one action per AUV each step.
pub trait Policy {
    /// Called after every environment reset.
    fn reset(&mut self, _env: &MissionEnv) {}

    fn act(&mut self, env: &MissionEnv, states: &[Vec<f64>]) -> Vec<[f64; 2]>;
}

/// Normalised action that commands `speed` along `heading`; inverse of
/// [`map_action`](super::map_action) inside the speed range.
pub fn action_for(speed: f64, heading: f64, cfg: &MissionConfig) -> [f64; 2] {
    let span = cfg.v_max - cfg.v_min;
    let v = if span > 0.0 {
        2.0 * (speed - cfg.v_min) / span - 1.0
    } else {
        -1.0
    };
    let wrapped = (heading + PI).rem_euclid(2.0 * PI) - PI;
    [v.clamp(-1.0, 1.0), (wrapped / PI).clamp(-1.0, 1.0)]
}

/// Uniform actions in `[-1, 1]²`.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, 0xACE),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, env: &MissionEnv, _states: &[Vec<f64>]) -> Vec<[f64; 2]> {
        (0..env.n_auv())
            .map(|_| [self.rng.random_range(-1.0..=1.0), self.rng.random_range(-1.0..=1.0)])
            .collect()
    }
}

/// Heads straight for the assigned node, slowing so as not to overshoot.
#[derive(Debug, Clone, Default)]
pub struct GreedyTarget;

impl Policy for GreedyTarget {
    fn act(&mut self, env: &MissionEnv, _states: &[Vec<f64>]) -> Vec<[f64; 2]> {
        let cfg = env.config();
        (0..env.n_auv())
            .map(|k| {
                let a = &env.auvs()[k];
                let t = a.target.map_or([a.x, a.y], |i| [env.nodes()[i].x, env.nodes()[i].y]);
                let (dx, dy) = (t[0] - a.x, t[1] - a.y);
                let speed = (dx.hypot(dy) / cfg.dt).clamp(cfg.v_min, cfg.v_max);
                action_for(speed, dy.atan2(dx), cfg)
            })
            .collect()
    }
}

/// Formation lawnmower sweep. The AUVs follow one boustrophedon pattern with
/// fixed lateral offsets `spacing` apart. The cursor is shared and advanced by
/// AUV 0; followers that fall behind their slot speed up to catch it.
#[derive(Debug, Clone)]
pub struct Lawnmower {
    pub spacing: f64,
    pub margin: f64,
    pub speed: f64,
    lanes: Vec<[f64; 2]>,
    cursor: usize,
}

impl Lawnmower {
    pub fn new(spacing: f64, margin: f64, speed: f64) -> Self {
        Self {
            spacing,
            margin,
            speed,
            lanes: Vec::new(),
            cursor: 0,
        }
    }

    fn build(&mut self, cfg: &MissionConfig) {
        let n = cfg.n_auv as f64;
        let stride = self.spacing * n;
        let (x_lo, x_hi) = (self.margin, cfg.x_max - self.margin);
        let y_top = cfg.y_max - self.margin - self.spacing * (n - 1.0);
        let mut ys = Vec::new();
        let mut y = self.margin;
        while y <= y_top + 1e-9 {
            ys.push(y);
            y += stride;
        }
        if ys.is_empty() {
            ys.push(cfg.y_max / 2.0);
        }
        let mut pts = Vec::new();
        for (i, &y) in ys.iter().enumerate() {
            if i % 2 == 0 {
                pts.push([x_lo, y]);
                pts.push([x_hi, y]);
            } else {
                pts.push([x_hi, y]);
                pts.push([x_lo, y]);
            }
        }
        // Retrace the pattern backwards so the sweep never jumps across the area.
        let back: Vec<[f64; 2]> = pts.iter().rev().skip(1).take(pts.len().saturating_sub(2)).copied().collect();
        pts.extend(back);
        self.lanes = pts;
    }

    fn slot(&self, k: usize, cfg: &MissionConfig) -> [f64; 2] {
        let p = self.lanes[self.cursor];
        [p[0], (p[1] + self.spacing * k as f64).min(cfg.y_max)]
    }
}

impl Policy for Lawnmower {
    fn reset(&mut self, env: &MissionEnv) {
        let cfg = env.config().clone();
        self.build(&cfg);
        let lead = &env.auvs()[0];
        self.cursor = (0..self.lanes.len())
            .min_by(|&i, &j| {
                let di = (self.lanes[i][0] - lead.x).hypot(self.lanes[i][1] - lead.y);
                let dj = (self.lanes[j][0] - lead.x).hypot(self.lanes[j][1] - lead.y);
                di.total_cmp(&dj)
            })
            .unwrap_or(0);
    }

    fn act(&mut self, env: &MissionEnv, _states: &[Vec<f64>]) -> Vec<[f64; 2]> {
        let cfg = env.config();
        if self.lanes.is_empty() {
            self.reset(env);
        }
        let reach = self.speed * cfg.dt;
        let lead = &env.auvs()[0];
        for _ in 0..self.lanes.len() {
            let g = self.slot(0, cfg);
            if (g[0] - lead.x).hypot(g[1] - lead.y) > reach {
                break;
            }
            self.cursor = (self.cursor + 1) % self.lanes.len();
        }
        let g0 = self.slot(0, cfg);
        let lead_gap = (g0[0] - lead.x).hypot(g0[1] - lead.y);
        (0..env.n_auv())
            .map(|k| {
                let a = &env.auvs()[k];
                let g = self.slot(k, cfg);
                let (dx, dy) = (g[0] - a.x, g[1] - a.y);
                let speed = if dx.hypot(dy) > lead_gap + reach { cfg.v_max } else { self.speed };
                action_for(speed, dy.atan2(dx), cfg)
            })
            .collect()
    }
}
