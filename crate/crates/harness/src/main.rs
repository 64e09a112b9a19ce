use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use usv_auv_harness::config::{parse_point, parse_seeds, parse_sweep};
use usv_auv_harness::{commands, HarnessError, Loaded, PolicyKind, Profile, Result, SweepRun};

/// Cooperative USV–AUV data collection: training, evaluation, waypoint
/// planning, parameter sweeps and sea-state dumps.
#[derive(Debug, Parser)]
#[command(name = "usv-auv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file overriding the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,

    /// Comma-separated seed list, e.g. `0,1,2`.
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// Output root; each run writes a subdirectory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `fim` or `fixed:x,y`. Repeatable for `eval`.
    #[arg(long = "usv-mode", global = true)]
    usv_mode: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one TD3 policy per seed.
    Train,
    /// Roll out a policy under each USV mode.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<PolicyKind>,
        /// Episodes per seed and mode.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Plan one USV waypoint and print it as JSON.
    Plan {
        /// AUV position `x,y`; repeat once per AUV.
        #[arg(long = "auv")]
        auvs: Vec<String>,
        /// Cross-check against a brute-force lattice with this spacing (m).
        #[arg(long)]
        oracle_grid: Option<f64>,
        #[arg(long)]
        nit: Option<usize>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long)]
        planner_seed: Option<u64>,
        /// Optimisations to time.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Run every seed at each value of one configuration key.
    Sweep {
        /// `key=v1,v2,...`; keys: energy, safety, tracking, nit or `section.key`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, value_enum)]
        run: Option<SweepRun>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Dump wave and vortex fields at the requested times.
    SimulateSea {
        /// Comma-separated times in seconds.
        #[arg(long)]
        times: Option<String>,
    },
}

fn resolve(cli: &Cli) -> Result<Loaded> {
    let mut l = Loaded::load(cli.config.as_deref(), cli.profile.unwrap_or_default())?;
    let c = &mut l.config;
    if let Some(s) = &cli.seeds {
        c.run.seeds = parse_seeds(s)?;
    }
    if let Some(o) = &cli.out {
        c.run.output_dir = o.clone();
    }
    let modes = cli
        .usv_mode
        .iter()
        .map(|m| m.parse().map_err(HarnessError::Core))
        .collect::<Result<Vec<_>>>()?;
    match &cli.command {
        Command::Eval { .. } => {
            if !modes.is_empty() {
                c.run.eval_modes = modes;
            }
        }
        _ => match modes.as_slice() {
            [] => {}
            [m] => c.run.usv_mode = *m,
            _ => return Err(HarnessError::Config("--usv-mode may be repeated only for eval".into())),
        },
    }
    match &cli.command {
        Command::Train => {}
        Command::Eval { checkpoint, policy, episodes }
        | Command::Sweep {
            checkpoint,
            policy,
            episodes,
            ..
        } => {
            if let Some(p) = checkpoint {
                c.run.checkpoint = Some(p.clone());
            }
            if let Some(p) = policy {
                c.run.policy = *p;
            }
            if let Some(n) = episodes {
                c.run.eval_episodes = *n;
            }
            if let Command::Sweep { sweep, run, .. } = &cli.command {
                if let Some(s) = sweep {
                    let (key, values) = parse_sweep(s)?;
                    c.sweep.key = key;
                    c.sweep.values = values;
                }
                if let Some(r) = run {
                    c.sweep.run = *r;
                }
            }
        }
        Command::Plan {
            auvs,
            oracle_grid,
            nit,
            pop,
            planner_seed,
            repeat,
        } => {
            if !auvs.is_empty() {
                c.plan.auvs = auvs.iter().map(|a| parse_point(a)).collect::<Result<_>>()?;
            }
            if let Some(g) = oracle_grid {
                c.plan.oracle_grid = *g;
            }
            if let Some(n) = nit {
                c.planner.nit = *n;
            }
            if let Some(p) = pop {
                c.planner.pop_size = *p;
            }
            if let Some(s) = planner_seed {
                c.planner.seed = *s;
            }
            if let Some(r) = repeat {
                c.plan.repeat = *r;
            }
        }
        Command::SimulateSea { times } => {
            if let Some(t) = times {
                c.dump.times = t
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse()
                            .map_err(|_| HarnessError::Config(format!("bad time `{v}` in --times")))
                    })
                    .collect::<Result<_>>()?;
            }
        }
    }
    l.validate()?;
    Ok(l)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?.config;
    match cli.command {
        Command::Train => commands::train::run(&cfg),
        Command::Eval { .. } => commands::eval::run(&cfg),
        Command::Plan { .. } => commands::plan::run(&cfg),
        Command::Sweep { .. } => commands::sweep::run(&cfg),
        Command::SimulateSea { .. } => commands::sea::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
