//! Extreme-sea disturbance model.
//!
//! Two independent pieces are combined here:
//!
//! * a linear shallow-water tide on a staggered (Arakawa C) grid. Elevation
//!   `eta` lives at cell centres `(i·dx, j·dy)`; `u[i,j]` sits on the face
//!   between cells `i` and `i+1`, `v[i,j]` on the face between rows `j` and
//!   `j+1`. Outer faces are walls (zero normal velocity). When the tidal
//!   forcing amplitude is non-zero the `x = 0` column is driven as
//!   `eta0 · sin(omega · t)`.
//! * analytic Gaussian-core vortices giving turbulent velocity and vorticity
//!   at any point.
//!
//! The time stepping is forward-backward: momentum is advanced with the old
//! elevation, continuity with the freshly updated velocities. This is what
//! makes the scheme stable under `dt ≤ min(dx, dy) / sqrt(2 g h)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sea-state settings shared by the mission environment and the dump tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeaConfig {
    /// Master switch: `false` gives a perfectly calm sea.
    pub enabled: bool,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub dt_sub: f64,
    pub depth_h: f64,
    pub g: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub vortices: bool,
    /// Edge length of the square tiles that each receive one vortex.
    pub vortex_tile: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for SeaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            nx: 51,
            ny: 51,
            dx: 4.0,
            dy: 4.0,
            dt_sub: 0.05,
            depth_h: 120.0,
            g: 9.81,
            amplitude: 5.0,
            omega: 2.0 * PI / 43_200.0,
            vortices: true,
            vortex_tile: 100.0,
            gamma_min: 30.0,
            gamma_max: 60.0,
            delta_min: 10.0,
            delta_max: 20.0,
        }
    }
}

impl SeaConfig {
    pub fn forcing(&self) -> TideForcing {
        TideForcing {
            amplitude: self.amplitude,
            omega: self.omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_min > self.gamma_max || !self.gamma_min.is_finite() {
            return Err(Error::Config("gamma_min must not exceed gamma_max".into()));
        }
        if !(self.delta_min > 0.0) || self.delta_min > self.delta_max {
            return Err(Error::Config("vortex core radii must satisfy 0 < delta_min <= delta_max".into()));
        }
        if !(self.vortex_tile > 0.0) {
            return Err(Error::Config("vortex_tile must be positive".into()));
        }
        WaveGrid::new(self).map(|_| ())
    }
}

/// Boundary elevation forcing `amplitude · sin(omega · t)` on the `x = 0` edge.
/// A zero amplitude turns the edge into an ordinary wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TideForcing {
    pub amplitude: f64,
    pub omega: f64,
}

impl TideForcing {
    pub const NONE: TideForcing = TideForcing {
        amplitude: 0.0,
        omega: 0.0,
    };

    fn is_active(&self) -> bool {
        self.amplitude != 0.0
    }
}

/// Elevation and velocity fields of the tidal solver.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    dt_sub: f64,
    depth_h: f64,
    g: f64,
    t0: f64,
    steps: u64,
    eta: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl WaveGrid {
    /// A flat, quiescent grid. Fails if the CFL bound or the grid shape is violated.
    pub fn new(cfg: &SeaConfig) -> Result<Self> {
        if cfg.nx < 3 || cfg.ny < 3 {
            return Err(Error::Config(format!(
                "wave grid must be at least 3x3, got {}x{}",
                cfg.nx, cfg.ny
            )));
        }
        for (name, val) in [
            ("dx", cfg.dx),
            ("dy", cfg.dy),
            ("dt_sub", cfg.dt_sub),
            ("depth_h", cfg.depth_h),
            ("g", cfg.g),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        let limit = cfg.dx.min(cfg.dy) / (2.0 * cfg.g * cfg.depth_h).sqrt();
        if cfg.dt_sub > limit {
            return Err(Error::Config(format!(
                "CFL violated: dt_sub = {} exceeds {:.5}",
                cfg.dt_sub, limit
            )));
        }
        let n = cfg.nx * cfg.ny;
        Ok(Self {
            nx: cfg.nx,
            ny: cfg.ny,
            dx: cfg.dx,
            dy: cfg.dy,
            dt_sub: cfg.dt_sub,
            depth_h: cfg.depth_h,
            g: cfg.g,
            t0: 0.0,
            steps: 0,
            eta: vec![0.0; n],
            u: vec![0.0; n],
            v: vec![0.0; n],
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn dt_sub(&self) -> f64 {
        self.dt_sub
    }

    /// Simulated time in seconds.
    pub fn t(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt_sub
    }

    /// Substeps taken since construction.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Mutable elevation, row-major with `x` fastest. Used to set initial conditions.
    pub fn eta_mut(&mut self) -> &mut [f64] {
        &mut self.eta
    }

    /// Face velocities (see module docs for the staggering).
    pub fn u_faces(&self) -> &[f64] {
        &self.u
    }

    pub fn v_faces(&self) -> &[f64] {
        &self.v
    }

    pub fn eta_at(&self, i: usize, j: usize) -> f64 {
        self.eta[self.idx(i, j)]
    }

    /// `u` averaged to the cell centre `(i, j)`.
    pub fn u_center(&self, i: usize, j: usize) -> f64 {
        let right = self.u[self.idx(i, j)];
        let left = if i > 0 { self.u[self.idx(i - 1, j)] } else { 0.0 };
        0.5 * (left + right)
    }

    pub fn v_center(&self, i: usize, j: usize) -> f64 {
        let top = self.v[self.idx(i, j)];
        let bottom = if j > 0 { self.v[self.idx(i, j - 1)] } else { 0.0 };
        0.5 * (bottom + top)
    }

    /// Sum of elevation over all cells.
    pub fn eta_sum(&self) -> f64 {
        self.eta.iter().sum()
    }

    /// Spatial extent `(x_max, y_max)` of the cell-centre lattice.
    pub fn extent(&self) -> (f64, f64) {
        ((self.nx - 1) as f64 * self.dx, (self.ny - 1) as f64 * self.dy)
    }

    /// Advance one substep.
    pub fn step(&mut self, forcing: &TideForcing) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        let cx = self.g * self.dt_sub / self.dx;
        let cy = self.g * self.dt_sub / self.dy;

        // momentum: interior faces only, the outer faces stay at zero
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx - 1 {
                self.u[row + i] -= cx * (self.eta[row + i + 1] - self.eta[row + i]);
            }
        }
        for j in 0..ny - 1 {
            let row = j * nx;
            for i in 0..nx {
                self.v[row + i] -= cy * (self.eta[row + nx + i] - self.eta[row + i]);
            }
        }

        // continuity with constant depth
        let hx = self.depth_h * self.dt_sub / self.dx;
        let hy = self.depth_h * self.dt_sub / self.dy;
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let du = self.u[k] - if i > 0 { self.u[k - 1] } else { 0.0 };
                let dv = self.v[k] - if j > 0 { self.v[k - nx] } else { 0.0 };
                self.eta[k] -= hx * du + hy * dv;
            }
        }

        self.steps += 1;
        if forcing.is_active() {
            let boundary = forcing.amplitude * (forcing.omega * self.t()).sin();
            for j in 0..ny {
                self.eta[j * nx] = boundary;
            }
        }

        let total: f64 = self.eta.iter().chain(&self.u).chain(&self.v).sum();
        if !total.is_finite() {
            return Err(Error::NumericalBlowup { step: self.steps });
        }
        Ok(())
    }

    /// Substep until `t()` reaches `target_time`; returns the number of substeps taken.
    pub fn advance_to(&mut self, target_time: f64, forcing: &TideForcing) -> Result<u64> {
        let remaining = target_time - self.t();
        if remaining < -1e-9 * self.dt_sub {
            return Err(Error::Config(format!(
                "advance_to target {target_time} precedes current time {}",
                self.t()
            )));
        }
        // tolerate representation error in t so that 10 s / 0.05 s is 200, not 201
        let n = (remaining / self.dt_sub - 1e-9).ceil().max(0.0) as u64;
        for _ in 0..n {
            self.step(forcing)?;
        }
        Ok(n)
    }

    /// Bilinear interpolation of `(eta, u, v)` at a continuous position.
    pub fn interpolate(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let (xe, ye) = self.extent();
        if !(x >= 0.0 && x <= xe && y >= 0.0 && y <= ye) {
            return Err(Error::Domain { x, y });
        }
        let fx = x / self.dx;
        let fy = y / self.dy;
        let i0 = (fx.floor() as usize).min(self.nx - 2);
        let j0 = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let blend = |f: &dyn Fn(usize, usize) -> f64| {
            let a = f(i0, j0) * (1.0 - tx) + f(i0 + 1, j0) * tx;
            let b = f(i0, j0 + 1) * (1.0 - tx) + f(i0 + 1, j0 + 1) * tx;
            a * (1.0 - ty) + b * ty
        };
        Ok((
            blend(&|i, j| self.eta_at(i, j)),
            blend(&|i, j| self.u_center(i, j)),
            blend(&|i, j| self.v_center(i, j)),
        ))
    }
}

/// Gaussian-core vortex: intensity `gamma` (m²/s), core radius `delta` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub x0: f64,
    pub y0: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl VortexSpec {
    pub fn new(x0: f64, y0: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !gamma.is_finite() {
            return Err(Error::Config(format!(
                "vortex needs delta > 0 and finite gamma (got delta={delta}, gamma={gamma})"
            )));
        }
        Ok(Self { x0, y0, gamma, delta })
    }

    /// Induced velocity at `(x, y)`. The centre returns the limit value 0.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let rx = x - self.x0;
        let ry = y - self.y0;
        let r2 = rx * rx + ry * ry;
        if r2 == 0.0 {
            return (0.0, 0.0);
        }
        // 1 - exp(-r²/δ²) without cancellation near the core
        let core = -(-r2 / (self.delta * self.delta)).exp_m1();
        let k = self.gamma / (2.0 * PI * r2) * core;
        (-k * ry, k * rx)
    }

    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        let rx = x - self.x0;
        let ry = y - self.y0;
        let d2 = self.delta * self.delta;
        self.gamma / (PI * d2) * (-(rx * rx + ry * ry) / d2).exp()
    }
}

/// Disturbance sampled at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SeaSample {
    pub eta: f64,
    pub wave_vel: (f64, f64),
    pub turb_vel: (f64, f64),
    pub vorticity: f64,
}

/// Superposed turbulent velocity and vorticity of all vortices.
pub fn turbulence(vortices: &[VortexSpec], x: f64, y: f64) -> ((f64, f64), f64) {
    vortices.iter().fold(((0.0, 0.0), 0.0), |((vx, vy), w), vt| {
        let (ux, uy) = vt.velocity(x, y);
        ((vx + ux, vy + uy), w + vt.vorticity(x, y))
    })
}

/// Wave fields interpolated from `grid` plus analytic turbulence at `(x, y)`.
pub fn sample_sea(grid: &WaveGrid, vortices: &[VortexSpec], x: f64, y: f64) -> Result<SeaSample> {
    let (eta, u, v) = grid.interpolate(x, y)?;
    let (turb_vel, vorticity) = turbulence(vortices, x, y);
    Ok(SeaSample {
        eta,
        wave_vel: (u, v),
        turb_vel,
        vorticity,
    })
}

/// One vortex per `tile × tile` square covering `[0, x_max] × [0, y_max]`,
/// centres uniform inside the tile, `gamma` and `delta` uniform in their ranges.
pub fn place_vortices<R: Rng + ?Sized>(
    cfg: &SeaConfig,
    x_max: f64,
    y_max: f64,
    rng: &mut R,
) -> Vec<VortexSpec> {
    let tiles_x = (x_max / cfg.vortex_tile).ceil().max(1.0) as usize;
    let tiles_y = (y_max / cfg.vortex_tile).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(tiles_x * tiles_y);
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let x_lo = tx as f64 * cfg.vortex_tile;
            let y_lo = ty as f64 * cfg.vortex_tile;
            let x_hi = (x_lo + cfg.vortex_tile).min(x_max);
            let y_hi = (y_lo + cfg.vortex_tile).min(y_max);
            let x0 = rng.random_range(x_lo..=x_hi);
            let y0 = rng.random_range(y_lo..=y_hi);
            let gamma = rng.random_range(cfg.gamma_min..=cfg.gamma_max);
            let delta = rng.random_range(cfg.delta_min..=cfg.delta_max);
            out.push(VortexSpec { x0, y0, gamma, delta });
        }
    }
    out
}

/// Wave grid plus vortex field, advanced together by the mission environment.
#[derive(Debug, Clone)]
pub struct SeaState {
    grid: Option<WaveGrid>,
    vortices: Vec<VortexSpec>,
    forcing: TideForcing,
}

impl SeaState {
    /// A calm sea: no waves, no vortices.
    pub fn calm() -> Self {
        Self {
            grid: None,
            vortices: Vec::new(),
            forcing: TideForcing::NONE,
        }
    }

    pub fn new(grid: Option<WaveGrid>, vortices: Vec<VortexSpec>, forcing: TideForcing) -> Self {
        Self { grid, vortices, forcing }
    }

    /// Build the sea for a `x_max × y_max` mission area from `cfg`.
    pub fn from_config<R: Rng + ?Sized>(cfg: &SeaConfig, x_max: f64, y_max: f64, rng: &mut R) -> Result<Self> {
        if !cfg.enabled {
            return Ok(Self::calm());
        }
        let grid = WaveGrid::new(cfg)?;
        let vortices = if cfg.vortices {
            place_vortices(cfg, x_max, y_max, rng)
        } else {
            Vec::new()
        };
        Ok(Self::new(Some(grid), vortices, cfg.forcing()))
    }

    pub fn grid(&self) -> Option<&WaveGrid> {
        self.grid.as_ref()
    }

    pub fn vortices(&self) -> &[VortexSpec] {
        &self.vortices
    }

    /// Swap in a precomputed wave state (e.g. a replayed snapshot).
    pub fn replace_grid(&mut self, grid: WaveGrid) {
        self.grid = Some(grid);
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if let Some(grid) = self.grid.as_mut() {
            grid.advance_to(t, &self.forcing)?;
        }
        Ok(())
    }

    /// Sample with the query clamped into the wave-grid extent, so positions
    /// on the mission boundary remain valid when the lattice is slightly smaller.
    pub fn sample(&self, x: f64, y: f64) -> Result<SeaSample> {
        let (turb_vel, vorticity) = turbulence(&self.vortices, x, y);
        let (eta, wave_vel) = match &self.grid {
            Some(grid) => {
                let (xe, ye) = grid.extent();
                let (e, u, v) = grid.interpolate(x.clamp(0.0, xe), y.clamp(0.0, ye))?;
                (e, (u, v))
            }
            None => (0.0, (0.0, 0.0)),
        };
        Ok(SeaSample {
            eta,
            wave_vel,
            turb_vel,
            vorticity,
        })
    }
}
