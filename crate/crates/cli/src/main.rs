use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use haica::harness::{emit_results, parse_sp_grid, replay, run_sweep, ExperimentConfig};
use haica::kitchen::{Layout, Tile};

#[derive(Parser)]
#[command(name = "haica", version, about = "Two-agent kitchen experiments with belief resonance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep over layouts and SP pairs and write the results.
    Run(RunArgs),
    /// Re-run one episode of a finished sweep and print its trace.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        episode: usize,
    },
    /// Parse a layout file and report what it contains.
    ValidateLayout { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated layout names or files, replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    layouts: Option<Vec<String>>,
    /// SP grid as start:stop:step.
    #[arg(long)]
    sp_grid: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    max_steps: Option<u32>,
    #[arg(long)]
    order_blind: bool,
    #[arg(long)]
    swapped_integration: bool,
    #[arg(long)]
    solo: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(layouts) = &self.layouts {
            cfg.layouts = layouts.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(grid) = &self.sp_grid {
            cfg.sp_grid = parse_sp_grid(grid)?;
        }
        if let Some(n) = self.episodes {
            cfg.episodes_per_cell = n;
        }
        if let Some(n) = self.max_steps {
            cfg.max_steps = Some(n);
        }
        cfg.conditions.order_blind_agent2 |= self.order_blind;
        cfg.conditions.swapped_integration |= self.swapped_integration;
        cfg.conditions.solo |= self.solo;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        cfg.validate()?;
        Ok(())
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    args.apply(&mut cfg)?;
    // Relative layout files are resolved against the config's directory.
    let base = args.config.parent().unwrap_or(Path::new("."));
    for name in cfg.layouts.iter_mut() {
        let candidate = base.join(&*name);
        if haica::kitchen::builtin_layout(name).is_err() && !Path::new(name).exists() && candidate.exists() {
            *name = candidate.to_string_lossy().into_owned();
        }
    }
    let results = run_sweep(&cfg, args.jobs)?;
    let written = emit_results(&results, &args.out)?;
    let rewards: Vec<f64> = results.results.iter().map(|r| r.record.total_reward).collect();
    let mean = rewards.iter().sum::<f64>() / rewards.len().max(1) as f64;
    println!(
        "{} episodes, condition {}, mean reward {:.2}, mean decision time {:.6}s",
        results.results.len(),
        cfg.conditions.label(),
        mean,
        results.mean_decision_time()
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn show_replay(manifest: &Path, episode: usize) -> Result<()> {
    let result = replay(manifest, episode)?;
    for step in result.trace.iter().flatten() {
        println!("{step}");
    }
    let r = &result.record;
    println!(
        "episode {} layout {} sp ({}, {}) seed {}: reward {} in {} steps, success {}",
        r.id, r.layout, r.sp_agent1, r.sp_agent2, r.seed, r.total_reward, r.steps_used, r.success
    );
    Ok(())
}

fn validate_layout(file: &Path) -> Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let layout = Layout::parse(&text)?;
    let count = |pred: fn(Tile) -> bool| layout.positions().filter(|(_, t)| pred(*t)).count();
    let domain = format!("{:?}", layout.domain).to_lowercase();
    println!("{}: {domain} layout, {}x{}", layout.name, layout.width, layout.height);
    if let Some(task) = layout.task {
        println!("  task: {task}");
    }
    println!("  spawns: {}", layout.spawns.len());
    println!("  pots: {}, cutting boards: {}", layout.pots.len(), layout.boards.len());
    println!(
        "  dispensers: {}, serve tiles: {}, placed items: {}",
        count(|t| matches!(t, Tile::Dispenser(_))),
        count(|t| t == Tile::ServeTile),
        layout.initial_items.len()
    );
    println!("  floor regions: {}", layout.component_count());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Replay { manifest, episode } => show_replay(manifest, *episode),
        Command::ValidateLayout { file } => validate_layout(file),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
