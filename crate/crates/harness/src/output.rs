//! Run directories and the CSV/JSON shapes written into them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use usv_auv_core::mission::{EpisodeMetrics, StepRecord, UsvMode};
use usv_auv_core::stats;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

pub const METRICS_HEADER: &str =
    "episode,seed,sdr_mbps,ec_w,arpt,ssn,traj_len_auv1,traj_len_auv2,traj_len_auv3,traj_len_auv4,pos_err_mean_m,violations";

pub const POS_ERROR_HEADER: &str = "t,auv_id,error_m,mode";

/// `<output_dir>/<run_id>/`, created on demand.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub id: String,
    pub path: PathBuf,
}

impl RunDir {
    /// Directory for one seed; the echoed config carries only that seed.
    pub fn for_seed(cfg: &RunConfig, command: &str, seed: u64) -> Result<Self> {
        let mut echo = cfg.clone();
        echo.run.seeds = vec![seed];
        let id = format!("{command}-seed{seed}-{}", cfg.digest());
        Self::create(&cfg.run.output_dir, id, &echo)
    }

    /// Directory for a command spanning every seed.
    pub fn for_all(cfg: &RunConfig, command: &str) -> Result<Self> {
        let id = format!("{command}-{}", cfg.digest());
        Self::create(&cfg.run.output_dir, id, cfg)
    }

    fn create(root: &Path, id: String, echo: &RunConfig) -> Result<Self> {
        let path = root.join(&id);
        std::fs::create_dir_all(&path).map_err(|e| HarnessError::io(&path, e))?;
        let dir = Self { id, path };
        dir.write("config.resolved", &echo.to_toml())?;
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.file(name);
        std::fs::write(&p, contents).map_err(|e| HarnessError::io(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("report serialises");
        s.push('\n');
        self.write(name, &s)
    }
}

/// One `metrics.csv` row; AUVs beyond the fleet leave their column empty.
pub fn metrics_row(episode: usize, seed: u64, m: &EpisodeMetrics) -> String {
    let mut s = format!("{episode},{seed},{},{},{},{}", m.sdr_mbps, m.ec_w, m.arpt, m.ssn);
    for k in 0..4 {
        s.push(',');
        if let Some(l) = m.traj_lens.get(k) {
            write!(s, "{l}").unwrap();
        }
    }
    write!(s, ",{},{}", m.pos_err_mean_m, m.violations).unwrap();
    s
}

/// Step records as JSON lines, each tagged with its episode and USV mode.
pub fn append_jsonl(out: &mut String, episode: usize, mode: UsvMode, log: &[StepRecord]) {
    #[derive(Serialize)]
    struct Line<'a> {
        episode: usize,
        mode: String,
        #[serde(flatten)]
        rec: &'a StepRecord,
    }
    let mode = mode.to_string();
    for rec in log {
        let line = Line {
            episode,
            mode: mode.clone(),
            rec,
        };
        out.push_str(&serde_json::to_string(&line).expect("step record serialises"));
        out.push('\n');
    }
}

/// Positioning-error trace rows for one episode; the mode column uses
/// [`mode_label`] so it never contains a comma.
pub fn append_pos_errors(out: &mut String, mode: UsvMode, log: &[StepRecord]) {
    let mode = mode_label(mode);
    for rec in log {
        for (k, a) in rec.auvs.iter().enumerate() {
            if let Some(e) = a.pos_error {
                writeln!(out, "{},{k},{e},{mode}", rec.t).unwrap();
            }
        }
    }
}

/// File-name friendly form of a USV mode, e.g. `fixed_100_100`.
pub fn mode_label(mode: UsvMode) -> String {
    mode.to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Mean, sample standard deviation and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: stats::mean(xs),
            std: stats::std_dev(xs),
            n: xs.len(),
        }
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Small magnitudes such as acoustic rates in Mbps keep three significant digits.
        let scale = self.mean.abs().max(self.std.abs());
        let digits = if scale > 0.0 && scale < 1.0 {
            (2 - scale.log10().floor() as i32).clamp(2, 8) as usize
        } else {
            2
        };
        write!(f, "{:.*}±{:.*}", digits, self.mean, digits, self.std)
    }
}

/// Per-metric summaries over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub sdr_mbps: Summary,
    pub ec_w: Summary,
    pub arpt: Summary,
    pub ssn: Summary,
    pub pos_err_mean_m: Summary,
    pub violations: Summary,
}

impl MetricSummary {
    pub fn of(ms: &[EpisodeMetrics]) -> Self {
        let col = |f: &dyn Fn(&EpisodeMetrics) -> f64| Summary::of(&ms.iter().map(f).collect::<Vec<_>>());
        Self {
            sdr_mbps: col(&|m| m.sdr_mbps),
            ec_w: col(&|m| m.ec_w),
            arpt: col(&|m| m.arpt),
            ssn: col(&|m| m.ssn as f64),
            pos_err_mean_m: col(&|m| m.pos_err_mean_m),
            violations: col(&|m| m.violations as f64),
        }
    }
}
