//! The closed loop: segment the aerial image, render a scoremap, plan a
//! coverage path, drive it in the simulator, and feed the traversal
//! statistics back into the drivability table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::{ClassMap, GridPose, ScoreMap};
use crate::local::navigate::{navigate, NavLimits, Navigation, Outcome};
use crate::local::train::{rounds_csv, train_clone, CloneConfig};
use crate::local::SteeringNet;
use crate::planner::rollout::{greedy_rollout, plan_waypoints, waypoints_csv, Rollout};
use crate::planner::train::{curve_csv, train, TrainConfig};
use crate::pnm::{GrayImage, RgbImage};
use crate::scoremap::{render_scoremap, DrivabilityTable};
use crate::sim::{feedback_to_csv, obstacles_from_pgm, ContinuousPose, SimWorld, Trajectory, TraversalFeedback};
use crate::texture::{segment, SegmentConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Aerial image (PPM).
    pub image: PathBuf,
    /// Obstacle grid (PGM, nonzero = occupied) aligned with the class map.
    pub obstacles: Option<PathBuf>,
    /// Classes whose cells are all obstacles (added to `obstacles`).
    pub blocked_classes: Vec<usize>,
    pub loop_count: usize,
    pub segment: SegmentConfig,
    /// Initial drivability table.
    pub table: DrivabilityTable,
    pub planner: TrainConfig,
    pub waypoint_stride: usize,
    /// Pretrained steering net; trained with `local` when absent.
    pub net: Option<PathBuf>,
    pub local: CloneConfig,
    pub limits: NavLimits,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            image: PathBuf::from("image.ppm"),
            obstacles: None,
            blocked_classes: Vec::new(),
            loop_count: 2,
            segment: SegmentConfig::default(),
            table: DrivabilityTable::default(),
            planner: TrainConfig {
                horizon: 40,
                ..TrainConfig::default()
            },
            waypoint_stride: 4,
            net: None,
            local: CloneConfig::default(),
            limits: NavLimits::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn check_inputs(&self) -> Result<()> {
        for path in std::iter::once(&self.image).chain(&self.obstacles).chain(&self.net) {
            if !path.exists() {
                return Err(Error::param(format!("input file {} does not exist", path.display())));
            }
        }
        if self.waypoint_stride == 0 {
            return Err(Error::param("waypoint stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub path: Rollout,
    pub waypoints: Vec<GridPose>,
    /// Waypoints given up on after getting stuck.
    pub skipped: Vec<usize>,
    pub feedback: Vec<TraversalFeedback>,
    pub table: DrivabilityTable,
    pub scoremap: ScoreMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub class_map: ClassMap,
    pub initial_scoremap: ScoreMap,
    pub iterations: Vec<IterationReport>,
}

impl PipelineReport {
    /// Cells of `class` along the planned path of each iteration (start
    /// cell included).
    pub fn path_class_counts(&self, class: usize) -> Vec<usize> {
        self.iterations
            .iter()
            .map(|it| it.path.visited().iter().filter(|c| self.class_map.get(**c) == class).count())
            .collect()
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn write_scoremap(dir: &Path, stem: &str, map: &ScoreMap) -> Result<()> {
    write(dir, &format!("{stem}.csv"), &map.to_csv())?;
    map.to_pgm().write(&dir.join(format!("{stem}.pgm")))
}

/// `step,x,y,reward,class_id` along a planned path.
pub fn path_csv(path: &Rollout, class_map: &ClassMap) -> String {
    let mut out = String::from("step,x,y,reward,class_id\n");
    let rewards = std::iter::once(0.0).chain(path.rewards());
    for (i, (cell, r)) in path.visited().into_iter().zip(rewards).enumerate() {
        let _ = writeln!(out, "{i},{},{},{r},{}", cell.x, cell.y, class_map.get(cell));
    }
    out
}

/// Drives the waypoints in order; a waypoint the robot gets stuck on is
/// skipped and driving resumes toward the next one from where it stopped.
fn drive_with_skips(
    net: &SteeringNet,
    world: &SimWorld,
    waypoints: &[GridPose],
    limits: &NavLimits,
    table: &DrivabilityTable,
    config: &CloneConfig,
) -> Result<(Trajectory, Vec<TraversalFeedback>, Vec<usize>)> {
    let mut world = world.clone();
    let mut trajectory = Trajectory::starting_at(&world);
    let mut feedback: Vec<TraversalFeedback> = Vec::new();
    let mut skipped = Vec::new();
    let mut next = 0;
    while next < waypoints.len() {
        let nav: Navigation = navigate(net, &world, &waypoints[next..], limits, table, &config.local)?;
        trajectory.extend_from(&nav.trajectory);
        merge_feedback(&mut feedback, &nav.feedback);
        world = nav.world;
        match nav.outcome {
            Outcome::Completed => break,
            Outcome::Stuck { waypoint } => {
                skipped.push(next + waypoint);
                next += waypoint + 1;
            }
        }
    }
    Ok((trajectory, feedback, skipped))
}

fn merge_feedback(into: &mut Vec<TraversalFeedback>, more: &[TraversalFeedback]) {
    for fb in more {
        match into.iter_mut().find(|f| f.class_id == fb.class_id) {
            Some(f) => {
                let steps = f.steps + fb.steps;
                f.progress_rate = (f.progress_rate * f.steps as f64 + fb.progress_rate * fb.steps as f64) / steps as f64;
                f.obstacle_incidents += fb.obstacle_incidents;
                f.steps = steps;
            }
            None => into.push(*fb),
        }
    }
    into.sort_by_key(|f| f.class_id);
}

pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineReport> {
    config.check_inputs().map_err(|e| e.in_stage("config"))?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("config"))?;

    let seg = RgbImage::read(&config.image)
        .and_then(|image| segment(&image, &config.segment, config.seed))
        .map_err(|e| e.in_stage("segment"))?;
    let class_map = seg.class_map;
    class_map
        .to_pgm()
        .write(&dir.join("classmap.pgm"))
        .and_then(|_| seg.model.write(&dir.join("kmeans.json")))
        .map_err(|e| e.in_stage("segment"))?;

    let mut table = config.table.clone();
    let initial = render_scoremap(&class_map, &table);
    write_scoremap(dir, "scoremap_0", &initial)
        .and_then(|_| table.write(&dir.join("table_0.json")))
        .map_err(|e| e.in_stage("render-scoremap"))?;
    let mut report = PipelineReport {
        class_map: class_map.clone(),
        initial_scoremap: initial.clone(),
        iterations: Vec::new(),
    };
    if config.loop_count == 0 {
        return Ok(report);
    }

    let world = build_world(config, &class_map).map_err(|e| e.in_stage("world"))?;
    let net = match &config.net {
        Some(path) => SteeringNet::read(path),
        None => {
            let local = CloneConfig {
                seed: config.seed,
                ..config.local.clone()
            };
            train_clone(&local, &config.table).and_then(|out| {
                out.net.write(&dir.join("net.json"))?;
                write(dir, "clone_rounds.csv", &rounds_csv(&out.rounds))?;
                Ok(out.net)
            })
        }
    }
    .map_err(|e| e.in_stage("train-local"))?;

    let mut scoremap = initial;
    for iteration in 1..=config.loop_count {
        let planner_cfg = TrainConfig {
            seed: config.seed.wrapping_add(iteration as u64),
            ..config.planner.clone()
        };
        let trained = train(&scoremap, &planner_cfg).map_err(|e| e.in_stage("train-planner"))?;
        let path = greedy_rollout(&trained.params, &scoremap, planner_cfg.start, planner_cfg.horizon)
            .map_err(|e| e.in_stage("plan"))?;
        let waypoints = plan_waypoints(
            &trained.params,
            &scoremap,
            planner_cfg.start,
            planner_cfg.horizon,
            config.waypoint_stride,
        )
        .map_err(|e| e.in_stage("plan"))?;
        trained
            .params
            .write(&dir.join(format!("policy_{iteration}.json")))
            .and_then(|_| write(dir, &format!("curve_{iteration}.csv"), &curve_csv(&trained.curve)))
            .and_then(|_| write(dir, &format!("path_{iteration}.csv"), &path_csv(&path, &class_map)))
            .and_then(|_| write(dir, &format!("waypoints_{iteration}.csv"), &waypoints_csv(&waypoints)))
            .map_err(|e| e.in_stage("plan"))?;

        let (trajectory, feedback, skipped) =
            drive_with_skips(&net, &world, &waypoints, &config.limits, &table, &config.local)
                .map_err(|e| e.in_stage("navigate"))?;
        trajectory
            .write_csv(&class_map, &dir.join(format!("trajectory_{iteration}.csv")))
            .and_then(|_| write(dir, &format!("feedback_{iteration}.csv"), &feedback_to_csv(&feedback)))
            .map_err(|e| e.in_stage("navigate"))?;

        for fb in &feedback {
            table.update(fb).map_err(|e| e.in_stage("update-drivability"))?;
        }
        scoremap = render_scoremap(&class_map, &table);
        table
            .write(&dir.join(format!("table_{iteration}.json")))
            .and_then(|_| write_scoremap(dir, &format!("scoremap_{iteration}"), &scoremap))
            .map_err(|e| e.in_stage("update-drivability"))?;
        report.iterations.push(IterationReport {
            iteration,
            path,
            waypoints,
            skipped,
            feedback,
            table: table.clone(),
            scoremap: scoremap.clone(),
        });
    }
    Ok(report)
}

fn build_world(config: &ExperimentConfig, class_map: &ClassMap) -> Result<SimWorld> {
    let mut obstacles = match &config.obstacles {
        Some(path) => {
            let image = GrayImage::read(path)?;
            if image.width() != class_map.width() || image.height() != class_map.height() {
                return Err(Error::ShapeMismatch(format!(
                    "obstacle grid is {}x{}, class map is {}x{}",
                    image.width(),
                    image.height(),
                    class_map.width(),
                    class_map.height()
                )));
            }
            obstacles_from_pgm(&image)
        }
        None => vec![false; class_map.width() * class_map.height()],
    };
    for (o, c) in obstacles.iter_mut().zip(class_map.classes()) {
        if config.blocked_classes.contains(c) {
            *o = true;
        }
    }
    let (sx, sy) = config.planner.start.center();
    SimWorld::new(class_map.clone(), obstacles, ContinuousPose::new(sx, sy, 0.0))
}
