use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use terrasample::experiment::{compare_baselines, comparison_csv, run_pipeline, ExperimentConfig};
use terrasample::local::{train_clone, CloneConfig, NavLimits, Outcome, SteeringNet};
use terrasample::planner::rollout::{waypoints_csv, waypoints_from_csv};
use terrasample::planner::train::curve_csv;
use terrasample::planner::{plan_waypoints, train, PolicyParams, TrainConfig};
use terrasample::pnm::{GrayImage, RgbImage};
use terrasample::scoremap::{render_scoremap, DrivabilityTable};
use terrasample::sim::{feedback_to_csv, obstacles_from_pgm, ContinuousPose, SimWorld};
use terrasample::texture::{segment, SegmentConfig};
use terrasample::local::navigate;
use terrasample::local::train::rounds_csv;
use terrasample::{ClassMap, Error, GridPose, Result, ScoreMap};

#[derive(Parser)]
#[command(name = "terrasample", version, about = "Terrain-aware informative sampling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster image patches into terrain classes.
    Segment(SegmentArgs),
    /// Turn a class map and a drivability table into a scoremap.
    RenderScoremap(RenderArgs),
    /// Train the coverage policy on a scoremap.
    TrainPlanner(TrainPlannerArgs),
    /// Roll out a trained policy greedily and emit waypoints.
    Plan(PlanArgs),
    /// Train the steering network by cloning the scripted expert.
    TrainLocal(TrainLocalArgs),
    /// Follow waypoints in the simulator with a steering network.
    Navigate(NavigateArgs),
    /// Run the closed loop end to end.
    RunPipeline(PipelineArgs),
    /// Discounted returns of the trained policy against the baselines.
    CompareBaselines(CompareArgs),
}

#[derive(Args)]
struct Start {
    #[arg(long, default_value_t = 0)]
    start_x: usize,
    #[arg(long, default_value_t = 0)]
    start_y: usize,
}

impl Start {
    fn pose(&self) -> GridPose {
        GridPose::new(self.start_x, self.start_y)
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct PlanConfig {
    horizon: usize,
    stride: usize,
    start: GridPose,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            horizon: 40,
            stride: 4,
            start: GridPose::new(0, 0),
        }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct CompareConfig {
    horizon: usize,
    gamma: f64,
    trials: usize,
    start: GridPose,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            horizon: 150,
            gamma: 0.95,
            trials: 20,
            start: GridPose::new(0, 0),
        }
    }
}

fn override_start(start: GridPose, x: Option<usize>, y: Option<usize>) -> GridPose {
    GridPose::new(x.unwrap_or(start.x), y.unwrap_or(start.y))
}

#[derive(Args)]
struct SegmentArgs {
    /// Input image (PPM).
    #[arg(long)]
    image: PathBuf,
    /// JSON segmentation config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Class map (PGM, one pixel per cell).
    #[arg(long)]
    classmap: PathBuf,
    /// Drivability table (JSON); every class at the prior when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; a PGM preview is written next to it.
    #[arg(long, default_value = "scoremap.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainPlannerArgs {
    #[arg(long)]
    scoremap: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    iterations: Option<usize>,
    /// Rollouts per iteration.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    start_x: Option<usize>,
    #[arg(long)]
    start_y: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    scoremap: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    start_x: Option<usize>,
    #[arg(long)]
    start_y: Option<usize>,
    #[arg(long, default_value = "waypoints.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainLocalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    episodes_per_round: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Drivability table used for the terrain inputs.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct NavigateArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    classmap: PathBuf,
    /// Obstacle grid (PGM, nonzero = occupied).
    #[arg(long)]
    obstacles: Option<PathBuf>,
    #[arg(long)]
    waypoints: PathBuf,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Navigation limits (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[command(flatten)]
    start: Start,
    #[arg(long, default_value_t = 0.0)]
    heading: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    loop_count: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scoremap: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    start_x: Option<usize>,
    #[arg(long)]
    start_y: Option<usize>,
    #[arg(long, default_value = "comparison.csv")]
    out: PathBuf,
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(T::default()),
    }
}

fn table_or_default(path: Option<&Path>) -> Result<DrivabilityTable> {
    path.map_or_else(|| Ok(DrivabilityTable::default()), DrivabilityTable::read)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn run_segment(a: &SegmentArgs) -> Result<()> {
    let mut cfg: SegmentConfig = load(a.config.as_deref())?;
    cfg.k = a.k.unwrap_or(cfg.k);
    cfg.patch_size = a.patch_size.unwrap_or(cfg.patch_size);
    let seg = segment(&RgbImage::read(&a.image)?, &cfg, a.seed)?;
    create_dir(&a.out)?;
    seg.class_map.to_pgm().write(&a.out.join("classmap.pgm"))?;
    seg.model.write(&a.out.join("kmeans.json"))
}

fn run_render(a: &RenderArgs) -> Result<()> {
    let class_map = ClassMap::from_pgm(&GrayImage::read(&a.classmap)?)?;
    let table = match (&a.table, &a.config) {
        (Some(t), _) => DrivabilityTable::read(t)?,
        (None, c) => load(c.as_deref())?,
    };
    let map = render_scoremap(&class_map, &table);
    write(&a.out, map.to_csv())?;
    map.to_pgm().write(&a.out.with_extension("pgm"))
}

fn run_train_planner(a: &TrainPlannerArgs) -> Result<()> {
    let mut cfg: TrainConfig = load(a.config.as_deref())?;
    cfg.seed = a.seed;
    cfg.iterations = a.iterations.unwrap_or(cfg.iterations);
    cfg.m = a.m.unwrap_or(cfg.m);
    cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
    cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
    cfg.start = GridPose::new(a.start_x.unwrap_or(cfg.start.x), a.start_y.unwrap_or(cfg.start.y));
    let out = train(&ScoreMap::read_csv(&a.scoremap)?, &cfg)?;
    create_dir(&a.out)?;
    out.params.write(&a.out.join("policy.json"))?;
    write(&a.out.join("curve.csv"), curve_csv(&out.curve))
}

fn run_plan(a: &PlanArgs) -> Result<()> {
    let cfg: PlanConfig = load(a.config.as_deref())?;
    let start = override_start(cfg.start, a.start_x, a.start_y);
    let policy = PolicyParams::read(&a.policy)?;
    let map = ScoreMap::read_csv(&a.scoremap)?;
    let waypoints = plan_waypoints(
        &policy,
        &map,
        start,
        a.horizon.unwrap_or(cfg.horizon),
        a.stride.unwrap_or(cfg.stride),
    )?;
    write(&a.out, waypoints_csv(&waypoints))
}

fn run_train_local(a: &TrainLocalArgs) -> Result<()> {
    let mut cfg: CloneConfig = load(a.config.as_deref())?;
    cfg.seed = a.seed;
    cfg.dagger_rounds = a.rounds.unwrap_or(cfg.dagger_rounds);
    cfg.episodes_per_round = a.episodes_per_round.unwrap_or(cfg.episodes_per_round);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    let out = train_clone(&cfg, &table_or_default(a.table.as_deref())?)?;
    create_dir(&a.out)?;
    out.net.write(&a.out.join("net.json"))?;
    out.dataset.write_csv(&a.out.join("dataset.csv"))?;
    write(&a.out.join("rounds.csv"), rounds_csv(&out.rounds))
}

fn run_navigate(a: &NavigateArgs) -> Result<()> {
    let mut limits: NavLimits = load(a.config.as_deref())?;
    limits.max_steps = a.max_steps.unwrap_or(limits.max_steps);
    let net = SteeringNet::read(&a.net)?;
    let class_map = ClassMap::from_pgm(&GrayImage::read(&a.classmap)?)?;
    let obstacles = match &a.obstacles {
        Some(p) => obstacles_from_pgm(&GrayImage::read(p)?),
        None => vec![false; class_map.width() * class_map.height()],
    };
    let (sx, sy) = a.start.pose().center();
    let world = SimWorld::new(class_map.clone(), obstacles, ContinuousPose::new(sx, sy, a.heading))?;
    let text = std::fs::read_to_string(&a.waypoints).map_err(|e| Error::io(&a.waypoints, e))?;
    let waypoints = waypoints_from_csv(&text)?;
    let table = table_or_default(a.table.as_deref())?;
    let nav = navigate(&net, &world, &waypoints, &limits, &table, &CloneConfig::default().local)?;
    create_dir(&a.out)?;
    nav.trajectory.write_csv(&class_map, &a.out.join("trajectory.csv"))?;
    write(&a.out.join("feedback.csv"), feedback_to_csv(&nav.feedback))?;
    match nav.outcome {
        Outcome::Completed => println!("completed {} waypoints, {} collisions", waypoints.len(), nav.collisions()),
        Outcome::Stuck { waypoint } => println!("stuck before waypoint {waypoint}, {} collisions", nav.collisions()),
    }
    Ok(())
}

fn run_pipeline_cmd(a: &PipelineArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::read(&a.config).map_err(|e| e.in_stage("config"))?;
    cfg.seed = a.seed;
    cfg.loop_count = a.loop_count.unwrap_or(cfg.loop_count);
    if let Some(dir) = &a.output_dir {
        cfg.output_dir = dir.clone();
    }
    let report = run_pipeline(&cfg)?;
    for it in &report.iterations {
        println!(
            "iteration {}: {} waypoints, {} skipped, path reward {:.3}",
            it.iteration,
            it.waypoints.len(),
            it.skipped.len(),
            it.path.total_reward
        );
    }
    Ok(())
}

fn run_compare(a: &CompareArgs) -> Result<()> {
    let cfg: CompareConfig = load(a.config.as_deref())?;
    let policy = PolicyParams::read(&a.policy)?;
    let map = ScoreMap::read_csv(&a.scoremap)?;
    let rows = compare_baselines(
        &map,
        &policy,
        override_start(cfg.start, a.start_x, a.start_y),
        a.horizon.unwrap_or(cfg.horizon),
        a.gamma.unwrap_or(cfg.gamma),
        a.trials.unwrap_or(cfg.trials),
        a.seed,
    )?;
    for r in &rows {
        println!("{:<16} mean {:.4} std {:.4}", r.method.label(), r.mean, r.std);
    }
    write(&a.out, comparison_csv(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, result) = match &cli.command {
        Command::Segment(a) => ("segment", run_segment(a)),
        Command::RenderScoremap(a) => ("render-scoremap", run_render(a)),
        Command::TrainPlanner(a) => ("train-planner", run_train_planner(a)),
        Command::Plan(a) => ("plan", run_plan(a)),
        Command::TrainLocal(a) => ("train-local", run_train_local(a)),
        Command::Navigate(a) => ("navigate", run_navigate(a)),
        Command::RunPipeline(a) => ("run-pipeline", run_pipeline_cmd(a)),
        Command::CompareBaselines(a) => ("compare-baselines", run_compare(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Stage { stage, source }) => {
            eprintln!("error in stage {stage}: {source}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error in stage {stage}: {e}");
            ExitCode::FAILURE
        }
    }
}
