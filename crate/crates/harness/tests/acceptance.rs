//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The binary reports rather than gates: it exits 0 once every selected
//! criterion has been run. Set `ACCEPTANCE_STRICT=1` to exit non-zero when any
//! criterion fails. Numeric arguments select criteria (`cargo test --test
//! acceptance -- 5 7`); any other argument filters by name.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use tempfile::TempDir;
use usv_auv_core::fim::{grid_oracle, plan_waypoint, plan_waypoint_seeded, PlannerConfig};
use usv_auv_core::mission::{
    collect_metrics, reward, AuvStep, EpisodeMetrics, MissionEnv, RewardInputs, RewardTerms, RewardWeights, StepRecord, Transfer,
    UsvMode,
};
use usv_auv_core::rl::{self, actor_gradient, critic_gradient, Mlp, OutputActivation};
use usv_auv_core::sea::{SeaConfig, TideForcing, VortexSpec, WaveGrid};
use usv_auv_core::usbl::{self, AuvTruth, UsblConfig, UsvState};
use usv_auv_core::{rng, stats};
use usv_auv_harness::commands::{eval, train};
use usv_auv_harness::{PolicyKind, Profile, RunConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_of(ms: &[EpisodeMetrics], f: impl Fn(&EpisodeMetrics) -> f64) -> f64 {
    stats::mean(&ms.iter().map(f).collect::<Vec<_>>())
}

fn random_auvs<R: Rng>(r: &mut R, m: usize, depth: f64) -> Vec<AuvTruth> {
    (0..m)
        .map(|_| AuvTruth {
            x: r.random_range(0.0..=200.0),
            y: r.random_range(0.0..=200.0),
            z: depth,
        })
        .collect()
}

fn fim_oracle() -> Outcome {
    let cfg = RunConfig::default();
    let bounds = cfg.mission.bounds();
    let mut worst = f64::INFINITY;
    let mut slowest = 0.0_f64;
    for m in 2..=4usize {
        for k in 0..10u64 {
            let seed = rng::mix(m as u64, k);
            let auvs = random_auvs(&mut rng::stream(seed, 0xC1), m, cfg.mission.depth);
            let started = Instant::now();
            let wp = plan_waypoint_seeded(&auvs, &cfg.usbl, &cfg.planner, bounds, seed).map_err(|e| e.to_string())?;
            slowest = slowest.max(started.elapsed().as_secs_f64());
            let grid = grid_oracle(&auvs, &cfg.usbl, bounds, 1.0, cfg.planner.standoff_r_min).map_err(|e| e.to_string())?;
            worst = worst.min(wp.det / grid.det);
        }
    }
    check(
        worst >= 0.99 && slowest < 2.0 && cfg.planner.nit == 24,
        format!(
            "30 scenarios (m = 2, 3, 4), worst det / 1 m grid max = {worst:.6} (need >= 0.99), slowest plan {:.2} ms (need < 2 s)",
            slowest * 1e3
        ),
    )
}

fn positioning_order() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.run.policy = PolicyKind::Lawnmower;
    cfg.run.eval_episodes = 100;
    let modes = [
        UsvMode::Fim,
        UsvMode::Fixed { x: 100.0, y: 100.0 },
        UsvMode::Fixed { x: 0.0, y: 0.0 },
    ];
    let res = eval::evaluate(&cfg, 0, &modes, None, None).map_err(|e| e.to_string())?;
    let err: Vec<f64> = res.iter().map(|r| mean_of(&r.episodes, |m| m.pos_err_mean_m)).collect();
    let margin_centre = 1.0 - err[0] / err[1];
    let margin_corner = 1.0 - err[0] / err[2];
    check(
        margin_centre >= 0.10 && margin_corner >= 0.10,
        format!(
            "lawnmower patrol, 100 episodes per mode: mean error fim {:.3} m, fixed(100,100) {:.3} m, fixed(0,0) {:.3} m; \
             margins {:.1}% and {:.1}% (need >= 10%)",
            err[0],
            err[1],
            err[2],
            100.0 * margin_centre,
            100.0 * margin_corner
        ),
    )
}

/// USBL fixes per AUV behind each scenario's mean positioning error.
const FIXES: usize = 1000;

fn iteration_trend() -> Outcome {
    let cfg = RunConfig::default();
    let bounds = cfg.mission.bounds();
    let nits = [6usize, 12, 18, 24];
    let mut det = vec![Vec::new(); nits.len()];
    let mut err = vec![Vec::new(); nits.len()];
    for k in 0..30u64 {
        let m = 2 + (k % 3) as usize;
        let seed = rng::mix(0xC3, k);
        let auvs = random_auvs(&mut rng::stream(seed, 0), m, cfg.mission.depth);
        for (n, &nit) in nits.iter().enumerate() {
            let planner = PlannerConfig {
                nit,
                ..cfg.planner.clone()
            };
            let wp = plan_waypoint_seeded(&auvs, &cfg.usbl, &planner, bounds, seed).map_err(|e| e.to_string())?;
            let usv = UsvState { x: wp.x, y: wp.y, eta: 0.0 };
            // Same noise draws at every nit.
            let mut r = rng::stream(seed, 1);
            let mut errors = Vec::with_capacity(FIXES * m);
            for _ in 0..FIXES {
                for (id, auv) in auvs.iter().enumerate() {
                    let fix = usbl::fix(&usv, auv, id, &cfg.usbl, 0.0, &mut r).map_err(|e| e.to_string())?;
                    errors.push(fix.error.unwrap());
                }
            }
            det[n].push(wp.det);
            err[n].push(stats::mean(&errors));
        }
    }
    let xs: Vec<f64> = nits.iter().map(|&n| n as f64).collect();
    let det_means: Vec<f64> = det.iter().map(|d| stats::mean(d)).collect();
    let err_means: Vec<f64> = err.iter().map(|e| stats::mean(e)).collect();
    let rho_det = stats::spearman(&xs, &det_means);
    let rho_err = stats::spearman(&xs, &err_means);
    check(
        rho_det >= 0.8 && rho_err <= -0.8,
        format!(
            "30 scenarios, nit 6/12/18/24: mean det {:?}, mean error {:?} m; spearman det {rho_det:.3} (need >= 0.8), error {rho_err:.3} (need <= -0.8)",
            det_means.iter().map(|d| format!("{d:.6e}")).collect::<Vec<_>>(),
            err_means.iter().map(|e| format!("{e:.5}")).collect::<Vec<_>>()
        ),
    )
}

fn planner_runtime() -> Outcome {
    let cfg = RunConfig::default();
    let auvs: Vec<AuvTruth> = [[25.0, 93.0], [95.0, 40.0]]
        .iter()
        .map(|p| AuvTruth {
            x: p[0],
            y: p[1],
            z: cfg.mission.depth,
        })
        .collect();
    let runs = 50;
    let mut worst = 0.0_f64;
    let started = Instant::now();
    for _ in 0..runs {
        let t = Instant::now();
        plan_waypoint(&auvs, &cfg.usbl, &cfg.planner, cfg.mission.bounds()).map_err(|e| e.to_string())?;
        worst = worst.max(t.elapsed().as_secs_f64());
    }
    let mean_ms = started.elapsed().as_secs_f64() * 1e3 / runs as f64;
    check(
        cfg.planner.nit == 24 && cfg.planner.pop_size == 30 && worst <= 0.2,
        format!(
            "nit 24, pop 30, m = 2: mean {mean_ms:.3} ms, worst {:.3} ms over {runs} runs (need <= 200 ms)",
            worst * 1e3
        ),
    )
}

fn line_pulse(grid: &mut WaveGrid, cx: f64, width: f64) {
    let (nx, dx) = (grid.nx(), grid.dx());
    for (k, e) in grid.eta_mut().iter_mut().enumerate() {
        let x = (k % nx) as f64 * dx;
        *e = (-((x - cx) / width).powi(2)).exp();
    }
}

/// Position of the elevation maximum right of `from` along row 1, refined by a parabola.
fn crest(grid: &WaveGrid, from: f64) -> f64 {
    let i0 = (from / grid.dx()).ceil() as usize;
    let i = (i0..grid.nx() - 1)
        .max_by(|&a, &b| grid.eta_at(a, 1).total_cmp(&grid.eta_at(b, 1)))
        .unwrap();
    let (l, c, r) = (grid.eta_at(i - 1, 1), grid.eta_at(i, 1), grid.eta_at(i + 1, 1));
    let shift = 0.5 * (l - r) / (l - 2.0 * c + r);
    (i as f64 + shift) * grid.dx()
}

fn wave_physics() -> Outcome {
    let base = SeaConfig::default();
    let mut grid = WaveGrid::new(&SeaConfig { nx: 40, ny: 30, ..base.clone() }).map_err(|e| e.to_string())?;
    let (nx, dx, dy) = (grid.nx(), grid.dx(), grid.dy());
    for (k, e) in grid.eta_mut().iter_mut().enumerate() {
        let x = (k % nx) as f64 * dx;
        let y = (k / nx) as f64 * dy;
        *e = (-((x - 70.0).powi(2) + (y - 50.0).powi(2)) / 144.0).exp();
    }
    let before = grid.eta_sum();
    for _ in 0..1000 {
        grid.step(&TideForcing::NONE).map_err(|e| e.to_string())?;
    }
    let drift = ((grid.eta_sum() - before) / before).abs();

    let mut line = WaveGrid::new(&SeaConfig { nx: 300, ny: 4, ..base.clone() }).map_err(|e| e.to_string())?;
    // Centred pulse; both halves stay clear of the walls until t = 17 s.
    line_pulse(&mut line, 600.0, 20.0);
    line.advance_to(3.0, &TideForcing::NONE).map_err(|e| e.to_string())?;
    let x1 = crest(&line, 600.0);
    line.advance_to(13.0, &TideForcing::NONE).map_err(|e| e.to_string())?;
    let x2 = crest(&line, 600.0);
    let speed = (x2 - x1) / 10.0;
    let c = (base.g * base.depth_h).sqrt();
    let speed_err = (speed - c).abs() / c;

    let mut flat = WaveGrid::new(&base).map_err(|e| e.to_string())?;
    for _ in 0..1000 {
        flat.step(&TideForcing::NONE).map_err(|e| e.to_string())?;
    }
    let still = flat.eta().iter().chain(flat.u_faces()).chain(flat.v_faces()).all(|&v| v == 0.0);
    check(
        drift <= 1e-6 && speed_err <= 0.05 && still,
        format!(
            "sum(eta) drift {drift:.2e} over 1000 substeps (need <= 1e-6); crest speed {speed:.3} m/s vs sqrt(gh) {c:.3} ({:.2}%, need <= 5%); zero state fixed: {still}",
            100.0 * speed_err
        ),
    )
}

fn vortex_field() -> Outcome {
    let (gamma, delta) = (45.0, 12.0);
    let vt = VortexSpec::new(30.0, -20.0, gamma, delta).map_err(|e| e.to_string())?;
    let n = 4096;
    let r = 20.0 * delta;
    let circulation: f64 = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            let (vx, vy) = vt.velocity(vt.x0 + r * th.cos(), vt.y0 + r * th.sin());
            (-th.sin() * vx + th.cos() * vy) * r * 2.0 * PI / n as f64
        })
        .sum();
    // Polar midpoint rule out to 8 core radii.
    let (nr, nth) = (4000, 64);
    let dr = 8.0 * delta / nr as f64;
    let mut integral = 0.0;
    for i in 0..nr {
        let rr = (i as f64 + 0.5) * dr;
        for k in 0..nth {
            let th = 2.0 * PI * k as f64 / nth as f64;
            integral += vt.vorticity(vt.x0 + rr * th.cos(), vt.y0 + rr * th.sin()) * rr * dr * 2.0 * PI / nth as f64;
        }
    }
    let circ_err = (circulation - gamma).abs() / gamma;
    let int_err = (integral - gamma).abs() / gamma;
    let centre_vel = vt.velocity(vt.x0, vt.y0);
    let centre_w = vt.vorticity(vt.x0, vt.y0);
    let expect_w = gamma / (PI * delta * delta);
    check(
        circ_err <= 0.01 && int_err <= 0.01 && centre_vel == (0.0, 0.0) && centre_w == expect_w,
        format!(
            "circulation at 20 delta {circulation:.6} ({:.2e} rel), vorticity integral {integral:.6} ({:.2e} rel), \
             centre velocity {centre_vel:?}, centre vorticity {centre_w} vs {expect_w}",
            circ_err, int_err
        ),
    )
}

fn usbl_inversion() -> Outcome {
    let noiseless = UsblConfig {
        sigma_phase: 0.0,
        sigma_range: 0.0,
        ..UsblConfig::default()
    };
    let mut r = rng::stream(0xC7, 0);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let usv = UsvState {
            x: r.random_range(0.0..200.0),
            y: r.random_range(0.0..200.0),
            eta: r.random_range(-5.0..5.0),
        };
        let auv = AuvTruth {
            x: r.random_range(0.0..200.0),
            y: r.random_range(0.0..200.0),
            z: r.random_range(20.0..200.0),
        };
        let id = r.random_range(0..noiseless.freqs.len());
        let est = usbl::fix(&usv, &auv, id, &noiseless, 0.0, &mut r).map_err(|e| e.to_string())?;
        worst = worst.max(est.error.unwrap());
    }
    let cfg = UsblConfig::default();
    let usv = UsvState { x: 100.0, y: 100.0, eta: 0.0 };
    let auv = AuvTruth { x: 140.0, y: 70.0, z: 120.0 };
    let (px, py, s) = usbl::true_phases(&usv, &auv, 0, &cfg).map_err(|e| e.to_string())?;
    let (mut ex, mut ey, mut es) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..10_000 {
        let m = usbl::measure(&usv, &auv, 0, &cfg, &mut r).map_err(|e| e.to_string())?;
        ex.push(m.dphi_x - px);
        ey.push(m.dphi_y - py);
        es.push(m.slant - s);
    }
    let rel = |xs: &[f64], want: f64| (stats::std_dev(xs) - want).abs() / want;
    let (rx, ry, rs) = (rel(&ex, cfg.sigma_phase), rel(&ey, cfg.sigma_phase), rel(&es, cfg.sigma_range));
    check(
        worst <= 1e-9 && rx <= 0.05 && ry <= 0.05 && rs <= 0.05,
        format!(
            "noiseless round trip worst {worst:.2e} m over 1000 geometries (need <= 1e-9); noise std recovered to {:.2}% / {:.2}% (phase x/y), {:.2}% (range) over 10^4 samples (need <= 5%)",
            100.0 * rx,
            100.0 * ry,
            100.0 * rs
        ),
    )
}

/// Largest relative gap between analytic and central-difference gradients.
fn fd_gap(net: &Mlp, analytic: &[f64], f: impl Fn(&Mlp) -> f64) -> f64 {
    let base = net.params();
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for (i, &an) in analytic.iter().enumerate() {
        let mut probe = net.clone();
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params(&p).unwrap();
        let up = f(&probe);
        p[i] = base[i] - h;
        probe.set_params(&p).unwrap();
        let fd = (up - f(&probe)) / (2.0 * h);
        // Parameters behind inactive rectifiers have exactly zero gradient.
        let scale = an.abs().max(fd.abs());
        if scale > 1e-8 {
            worst = worst.max((an - fd).abs() / scale);
        }
    }
    worst
}

fn td3_numerics() -> Outcome {
    let mut r = rng::stream(0xC8, 0);
    let (sd, ad, n) = (8, 2, 16);
    let actor = Mlp::new(&[sd, 24, 24, ad], OutputActivation::Tanh, &mut r);
    let critic = Mlp::new(&[sd + ad, 24, 24, 1], OutputActivation::Identity, &mut r);
    let s = Array2::from_shape_simple_fn((n, sd), || r.random_range(-1.0..1.0));
    let a = Array2::from_shape_simple_fn((n, ad), || r.random_range(-1.0..1.0));
    let y = Array1::from_shape_simple_fn(n, || r.random_range(-2.0..2.0));
    let (gc, _) = critic_gradient(&critic, s.view(), a.view(), &y).map_err(|e| e.to_string())?;
    let critic_gap = fd_gap(&critic, &gc.flat(), |c| critic_gradient(c, s.view(), a.view(), &y).unwrap().1);
    let (ga, _) = actor_gradient(&actor, &critic, s.view()).map_err(|e| e.to_string())?;
    let actor_gap = fd_gap(&actor, &ga.flat(), |p| actor_gradient(p, &critic, s.view()).unwrap().1);

    // 10^4 environment steps on the toy task with a binding smoothing clip.
    let mut cfg = Profile::Toy.config();
    cfg.td3.episodes = 50;
    cfg.td3.target_noise_clip = 0.05;
    let mut env = MissionEnv::new(cfg.setup(UsvMode::Fim)).map_err(|e| e.to_string())?;
    let out = rl::train(&mut env, &cfg.td3, 8, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let c = out.agent.counters;
    let d = out.agent.diagnostics;
    let delay = cfg.td3.policy_delay as u64;
    let ratio_ok = c.actor_updates == c.critic_updates / delay;
    let rows_ok = d.target_rows == c.critic_updates * cfg.td3.batch as u64;
    check(
        critic_gap <= 1e-4
            && actor_gap <= 1e-4
            && out.env_steps == 10_000
            && d.min_target_violations == 0
            && d.clip_violations == 0
            && d.max_abs_perturbation <= cfg.td3.target_noise_clip
            && rows_ok
            && ratio_ok,
        format!(
            "gradient gap critic {critic_gap:.2e}, actor {actor_gap:.2e} (need <= 1e-4); {} env steps, {} target rows checked: \
             {} min-target and {} clip violations, max |perturbation| {:.4} (clip {}); {} critic / {} actor updates (delay {delay})",
            out.env_steps,
            d.target_rows,
            d.min_target_violations,
            d.clip_violations,
            d.max_abs_perturbation,
            cfg.td3.target_noise_clip,
            c.critic_updates,
            c.actor_updates
        ),
    )
}

fn toy_learning() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut cfg = Profile::Toy.config();
    cfg.run.output_dir = dir.path().to_path_buf();
    let seed = 1;
    let started = Instant::now();
    let (_, outcome, _) = train::train_seed(&cfg, seed, false).map_err(|e| e.to_string())?;
    let runtime = started.elapsed().as_secs_f64();
    let n = outcome.curves.len();
    let final_arpt = stats::mean(&outcome.curves[n - 20..].iter().map(|c| c.arpt).collect::<Vec<_>>());

    cfg.run.eval_episodes = 20;
    cfg.run.policy = PolicyKind::Random;
    let random = eval::evaluate(&cfg, seed, &[UsvMode::Fim], None, None).map_err(|e| e.to_string())?;
    let random_arpt = mean_of(&random[0].episodes, |m| m.arpt);
    cfg.run.policy = PolicyKind::Actor;
    let learned =
        eval::evaluate(&cfg, seed, &[UsvMode::Fim], Some(&outcome.agent.actor), None).map_err(|e| e.to_string())?;
    let good = learned[0].episodes.iter().filter(|m| m.ssn >= 4).count();
    let gain = (final_arpt - random_arpt) / random_arpt.abs();
    check(
        gain >= 0.5 && good * 5 >= learned[0].episodes.len() * 4 && runtime <= 1200.0,
        format!(
            "final-20 ARPT {final_arpt:.3} vs random {random_arpt:.3} (+{:.0}%, need >= 50%); SSN >= 4 in {good}/{} rollouts \
             (need >= 80%); {runtime:.0} s (need <= 1200 s)",
            100.0 * gain,
            learned[0].episodes.len()
        ),
    )
}

fn desk_run() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut cfg = Profile::Desk.config();
    cfg.run.output_dir = dir.path().to_path_buf();
    let seed = 0;
    let started = Instant::now();
    let (_, outcome, _) = train::train_seed(&cfg, seed, false).map_err(|e| e.to_string())?;
    let runtime = started.elapsed().as_secs_f64();

    cfg.run.policy = PolicyKind::Random;
    let random = eval::evaluate(&cfg, seed, &[UsvMode::Fim], None, None).map_err(|e| e.to_string())?;
    let random_ssn = mean_of(&random[0].episodes, |m| m.ssn as f64);
    cfg.run.policy = PolicyKind::Actor;
    let learned =
        eval::evaluate(&cfg, seed, &[UsvMode::Fim], Some(&outcome.agent.actor), None).map_err(|e| e.to_string())?;
    let learned_ssn = mean_of(&learned[0].episodes, |m| m.ssn as f64);
    let d = &outcome.detector;
    let ratio = learned_ssn / random_ssn;
    check(
        d.fired() && ratio >= 2.0 && runtime <= 7200.0,
        format!(
            "{} episodes in {runtime:.0} s; convergence detector fired: {} (streak {} of {} needed, last MA25 slopes \
             arpt/sdr/ec/ssn {:?}, need |slope| < {}); SSN {learned_ssn:.1} vs random {random_ssn:.1} (x{ratio:.2}, need >= 2)",
            outcome.curves.len(),
            d.fired(),
            d.streak(),
            d.patience,
            d.last_slopes().iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            d.threshold
        ),
    )
}

fn golden_step(auvs: Vec<AuvStep>, step: usize, bits: u64, serviced: Vec<usize>, collisions: usize) -> StepRecord {
    StepRecord {
        step,
        t: (step + 1) as f64 * 10.0,
        auvs,
        usv: [0.0, 0.0],
        waypoint: None,
        transfers: if bits > 0 {
            vec![Transfer { auv: 0, sn: 4, bits }]
        } else {
            Vec::new()
        },
        serviced,
        n_overflow: 0,
        collisions,
    }
}

fn golden_auv(moved: f64, energy_w: f64, total: f64, err: f64, border: bool) -> AuvStep {
    AuvStep {
        x: 0.0,
        y: 0.0,
        action: [0.0, 0.0],
        speed: 0.0,
        heading: 0.0,
        border,
        moved,
        energy_w,
        target: 0,
        reward: RewardTerms {
            total,
            ..RewardTerms::default()
        },
        pos_error: Some(err),
    }
}

fn goldens() -> Outcome {
    let w = RewardWeights::default();
    let base = RewardInputs {
        d_target: 10.0,
        n_overflow: 4,
        transmitted: false,
        energy_w: 50.0,
        neighbour_dists: &[40.0],
        border: false,
    };
    let r1 = reward(&base, &w).total;
    let r2 = reward(&RewardInputs { transmitted: true, ..base.clone() }, &w).total;
    let r3 = reward(&RewardInputs { neighbour_dists: &[10.0], ..base.clone() }, &w).total;
    let rewards_ok = (r1 - -10.45).abs() < 1e-12 && (r2 - 1.55).abs() < 1e-12 && (r3 - -22.45).abs() < 1e-12;

    let log = vec![
        golden_step(vec![golden_auv(4.0, 50.0, -2.0, 1.0, false), golden_auv(6.0, 70.0, -4.0, 3.0, false)], 0, 2_000_000, vec![], 0),
        golden_step(vec![golden_auv(5.0, 40.0, 10.0, 2.0, false), golden_auv(5.0, 40.0, -1.0, 2.0, false)], 1, 0, vec![4], 0),
        golden_step(vec![golden_auv(0.0, 25.0, -3.0, 4.0, true), golden_auv(3.0, 45.0, -6.0, 2.0, false)], 2, 1_000_000, vec![9], 1),
    ];
    let m = collect_metrics(&log, 10.0);
    // 3 Mbit over 30 s; power sums 120, 80, 70; reward sums -6, 9, -9;
    // path lengths 9 and 14; six fixes totalling 14 m; one border event and one collision.
    let metrics_ok = m.sdr_mbps == 0.1
        && m.ec_w == 90.0
        && m.arpt == -2.0
        && m.ssn == 2
        && m.traj_lens == vec![9.0, 14.0]
        && (m.pos_err_mean_m - 14.0 / 6.0).abs() < 1e-15
        && m.violations == 2;
    check(
        rewards_ok && metrics_ok,
        format!(
            "rewards {r1} / {r2} / {r3} (expect -10.45 / 1.55 / -22.45); metrics sdr {} ec {} arpt {} ssn {} traj {:?} err {:.6} violations {}",
            m.sdr_mbps, m.ec_w, m.arpt, m.ssn, m.traj_lens, m.pos_err_mean_m, m.violations
        ),
    )
}

const BIN: &str = env!("CARGO_BIN_EXE_usv-auv");

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("usv-auv {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn run_dirs(root: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map(|rd| rd.map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs
}

/// Outputs covered by the bit-identity requirement.
fn artefacts(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") || n.ends_with(".jsonl") || n.ends_with(".bin"))
        .collect();
    names.sort();
    names
}

fn determinism() -> Outcome {
    let t = TempDir::new().map_err(|e| e.to_string())?;
    let root = t.path();
    fs::write(
        root.join("tiny.toml"),
        "[mission]\nepisode_steps = 40\n\n[td3]\nepisodes = 4\nsteps_per_episode = 40\nwarmup_steps = 30\nbatch = 16\nhidden = 16\n\n[run]\neval_episodes = 2\n",
    )
    .map_err(|e| e.to_string())?;
    fs::write(root.join("sea.toml"), "[sea]\nnx = 20\nny = 20\n\n[dump]\ntimes = [0, 25, 50]\n").map_err(|e| e.to_string())?;

    let toy = ["--profile", "toy", "--config", "tiny.toml"];
    cli(root, &[&["train"][..], &toy, &["--seeds", "4,5", "--out", "first/train"]].concat())?;
    let ck = run_dirs(&root.join("first/train"))[0].join("checkpoint.bin");
    let ck = ck.to_string_lossy().into_owned();
    cli(root, &[&["eval"][..], &toy, &["--seeds", "4,5", "--checkpoint", &ck, "--out", "first/eval"]].concat())?;
    cli(root, &["plan", "--auv", "25,93", "--auv", "95,40", "--oracle-grid", "2", "--out", "first/plan"])?;
    cli(
        root,
        &[&["sweep"][..], &toy, &["--sweep", "energy=0.5,2", "--run", "train", "--seeds", "6", "--out", "first/sweep"]].concat(),
    )?;
    cli(root, &["simulate-sea", "--config", "sea.toml", "--out", "first/sea"])?;

    let mut compared = 0;
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for cmd in ["train", "eval", "plan", "sweep", "sea"] {
        let sub = if cmd == "sea" { "simulate-sea" } else { cmd };
        for first in run_dirs(&root.join("first").join(cmd)) {
            let echo = first.join("config.resolved").to_string_lossy().into_owned();
            let out = root.join("second").join(cmd);
            let out_s = out.to_string_lossy().into_owned();
            cli(root, &[sub, "--config", &echo, "--out", &out_s])?;
            let second = out.join(first.file_name().unwrap());
            runs += 1;
            for name in artefacts(&first) {
                compared += 1;
                let same = fs::read(first.join(&name)).ok() == fs::read(second.join(&name)).ok();
                if !same {
                    mismatches.push(format!("{cmd}/{name}"));
                }
            }
        }
    }
    check(
        mismatches.is_empty() && runs >= 7 && compared > 0,
        format!(
            "{runs} run directories from train/eval/plan/sweep/simulate-sea re-run from config.resolved: {compared} CSV/JSONL/checkpoint files compared, mismatches {mismatches:?}"
        ),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "FIM oracle equivalence", fim_oracle),
        (2, "positioning-error ordering", positioning_order),
        (3, "iteration trend", iteration_trend),
        (4, "planner runtime", planner_runtime),
        (5, "wave solver physics", wave_physics),
        (6, "vortex field", vortex_field),
        (7, "USBL inversion", usbl_inversion),
        (8, "TD3 numerics", td3_numerics),
        (9, "toy-task learning", toy_learning),
        (10, "desk-scale system run", desk_run),
        (11, "reward and metric goldens", goldens),
        (12, "determinism from config echo", determinism),
    ];
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: usize, name: &str| {
        args.is_empty() || args.iter().any(|a| a.parse::<usize>().map_or_else(|_| name.contains(a.as_str()), |n| n == id))
    };
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    panic::set_hook(Box::new(|_| {}));

    let (mut passed, mut failed) = (0, 0);
    for (id, name, run) in criteria {
        if !selected(id, name) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("PASS  [{id:2}] {name}: {detail} [{secs:.1} s]");
            }
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{id:2}] {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
