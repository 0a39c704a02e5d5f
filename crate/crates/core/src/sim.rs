//! Deterministic grid simulator with a unicycle robot.
//!
//! Cell `(i, j)` covers `[i, i+1) x [j, j+1)` in continuous cell units.
//! Headings are radians, counterclockwise positive, normalized to `[-π, π)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::{ClassMap, GridPose};
use crate::pnm::GrayImage;
use crate::{Error, Result};

/// Ray-march resolution in cells.
pub const RAY_STEP: f64 = 0.1;

pub fn normalize_angle(a: f64) -> f64 {
    let wrapped = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPose {
    pub px: f64,
    pub py: f64,
    pub heading: f64,
}

impl ContinuousPose {
    pub fn new(px: f64, py: f64, heading: f64) -> Self {
        Self {
            px,
            py,
            heading: normalize_angle(heading),
        }
    }

    pub fn cell(&self) -> (i64, i64) {
        (self.px.floor() as i64, self.py.floor() as i64)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.px - x).hypot(self.py - y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Largest steering change per step, radians.
    pub max_steering: f64,
    /// Distance advanced per step, cells.
    pub speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_steering: PI / 4.0,
            speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub pose: ContinuousPose,
    pub collided: bool,
    /// Cell the robot moved into, or the in-bounds cell it was blocked by.
    /// Off-map attempts report the current cell.
    pub cell: GridPose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimWorld {
    class_map: ClassMap,
    obstacles: Vec<bool>,
    robot: ContinuousPose,
    step_count: usize,
}

impl SimWorld {
    pub fn new(class_map: ClassMap, obstacles: Vec<bool>, robot: ContinuousPose) -> Result<Self> {
        if obstacles.len() != class_map.width() * class_map.height() {
            return Err(Error::ShapeMismatch(format!(
                "obstacle grid has {} cells, class map has {}",
                obstacles.len(),
                class_map.width() * class_map.height()
            )));
        }
        let mut world = Self {
            class_map,
            obstacles,
            robot,
            step_count: 0,
        };
        world.place_robot(robot)?;
        Ok(world)
    }

    /// Free world with a single terrain class.
    pub fn open(width: usize, height: usize, robot: ContinuousPose) -> Result<Self> {
        let class_map = ClassMap::new(width, height, 1, vec![0; width * height])?;
        Self::new(class_map, vec![false; width * height], robot)
    }

    pub fn width(&self) -> usize {
        self.class_map.width()
    }

    pub fn height(&self) -> usize {
        self.class_map.height()
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.class_map
    }

    pub fn obstacles(&self) -> &[bool] {
        &self.obstacles
    }

    pub fn robot(&self) -> ContinuousPose {
        self.robot
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Moves the robot without simulating; the target must be free.
    pub fn place_robot(&mut self, pose: ContinuousPose) -> Result<()> {
        if self.blocked_at(pose.px, pose.py) {
            return Err(Error::InvalidState(format!(
                "robot pose ({}, {}) is off-map or inside an obstacle",
                pose.px, pose.py
            )));
        }
        self.robot = ContinuousPose::new(pose.px, pose.py, pose.heading);
        Ok(())
    }

    pub fn in_bounds(&self, px: f64, py: f64) -> bool {
        px >= 0.0 && py >= 0.0 && px < self.width() as f64 && py < self.height() as f64
    }

    pub fn is_obstacle(&self, cell: GridPose) -> bool {
        self.obstacles[cell.y * self.width() + cell.x]
    }

    pub fn set_obstacle(&mut self, cell: GridPose, occupied: bool) -> Result<()> {
        let robot_cell = self.robot.cell();
        if occupied && robot_cell == (cell.x as i64, cell.y as i64) {
            return Err(Error::InvalidState("cannot place an obstacle under the robot".into()));
        }
        let w = self.width();
        self.obstacles[cell.y * w + cell.x] = occupied;
        Ok(())
    }

    /// Off-map points count as blocked.
    pub fn blocked_at(&self, px: f64, py: f64) -> bool {
        if !self.in_bounds(px, py) {
            return true;
        }
        self.obstacles[py.floor() as usize * self.width() + px.floor() as usize]
    }

    pub fn class_at(&self, cell: GridPose) -> usize {
        self.class_map.get(cell)
    }

    fn cell_of(&self, px: f64, py: f64) -> GridPose {
        GridPose::new(px.floor() as usize, py.floor() as usize)
    }

    /// One unicycle step: turn by `steering`, then advance `speed` along the
    /// new heading. A move into an obstacle or off the map leaves the
    /// position unchanged (the turn still applies) and reports a collision.
    pub fn step(&mut self, config: &SimConfig, steering: f64) -> Result<StepResult> {
        if !(steering.abs() <= config.max_steering + 1e-12) {
            return Err(Error::param(format!(
                "steering {steering} exceeds the limit {}",
                config.max_steering
            )));
        }
        if !(config.speed > 0.0) {
            return Err(Error::param("speed must be positive"));
        }
        let heading = normalize_angle(self.robot.heading + steering);
        let tx = self.robot.px + config.speed * heading.cos();
        let ty = self.robot.py + config.speed * heading.sin();
        self.step_count += 1;
        let current = self.cell_of(self.robot.px, self.robot.py);
        if self.blocked_at(tx, ty) {
            self.robot.heading = heading;
            let cell = if self.in_bounds(tx, ty) {
                self.cell_of(tx, ty)
            } else {
                current
            };
            return Ok(StepResult {
                pose: self.robot,
                collided: true,
                cell,
            });
        }
        self.robot = ContinuousPose {
            px: tx,
            py: ty,
            heading,
        };
        Ok(StepResult {
            pose: self.robot,
            collided: false,
            cell: self.cell_of(tx, ty),
        })
    }

    /// Marches a ray from `origin` at `heading + angle_offset` in
    /// [`RAY_STEP`] increments. Returns the midpoint of the sample interval
    /// holding the hit (so the error against the true hit distance is at most
    /// half a step), or `max_range` when nothing is hit.
    pub fn ray_cast(&self, origin: &ContinuousPose, angle_offset: f64, max_range: f64) -> Result<f64> {
        if !(max_range > 0.0) {
            return Err(Error::param("ray range must be positive"));
        }
        if self.blocked_at(origin.px, origin.py) {
            return Err(Error::InvalidState(format!(
                "ray origin ({}, {}) is off-map or inside an obstacle",
                origin.px, origin.py
            )));
        }
        let angle = origin.heading + angle_offset;
        let (dx, dy) = (angle.cos(), angle.sin());
        let mut prev = 0.0;
        let mut k = 1usize;
        loop {
            // the last interval is cut short at max_range
            let d = (k as f64 * RAY_STEP).min(max_range);
            if self.blocked_at(origin.px + d * dx, origin.py + d * dy) {
                return Ok(0.5 * (prev + d));
            }
            if d >= max_range {
                return Ok(max_range);
            }
            prev = d;
            k += 1;
        }
    }

    /// Cell reached by the last free sample of a ray of length `range`.
    pub fn ray_end_cell(&self, origin: &ContinuousPose, angle_offset: f64, range: f64) -> GridPose {
        let angle = origin.heading + angle_offset;
        let mut d = (range - 0.5 * RAY_STEP).max(0.0);
        loop {
            let (x, y) = (origin.px + d * angle.cos(), origin.py + d * angle.sin());
            if !self.blocked_at(x, y) || d <= 0.0 {
                return self.cell_of(x.max(0.0), y.max(0.0));
            }
            d = (d - RAY_STEP).max(0.0);
        }
    }

    pub fn obstacles_pgm(&self) -> GrayImage {
        let pixels = self.obstacles.iter().map(|&o| if o { 255 } else { 0 }).collect();
        GrayImage::new(self.width(), self.height(), 255, pixels).expect("shape matches")
    }
}

/// Reads an obstacle grid from a PGM: nonzero is occupied.
pub fn obstacles_from_pgm(image: &GrayImage) -> Vec<bool> {
    image.pixels().iter().map(|&p| p != 0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub pose: ContinuousPose,
    pub collided: bool,
    pub cell: GridPose,
}

/// Sequence of robot states; entry 0 is the initial state and every later
/// entry is the outcome of one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn starting_at(world: &SimWorld) -> Self {
        let pose = world.robot();
        let (cx, cy) = pose.cell();
        Self {
            points: vec![TrajectoryPoint {
                pose,
                collided: false,
                cell: GridPose::new(cx as usize, cy as usize),
            }],
        }
    }

    pub fn push(&mut self, step: &StepResult) {
        self.points.push(TrajectoryPoint {
            pose: step.pose,
            collided: step.collided,
            cell: step.cell,
        });
    }

    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn collisions(&self) -> usize {
        self.points.iter().filter(|p| p.collided).count()
    }

    pub fn extend_from(&mut self, other: &Trajectory) {
        self.points.extend(other.points.iter().skip(1).copied());
    }

    pub fn to_csv(&self, class_map: &ClassMap) -> String {
        let mut out = String::from("step,px,py,heading,collided,cell_x,cell_y,class_id\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i,
                p.pose.px,
                p.pose.py,
                p.pose.heading,
                u8::from(p.collided),
                p.cell.x,
                p.cell.y,
                class_map.get(p.cell)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != "step,px,py,heading,collided,cell_x,cell_y,class_id" {
            return Err(Error::parse("trajectory csv", format!("unexpected header {header:?}")));
        }
        let bad = |n: usize, msg: &str| Error::parse("trajectory csv", format!("row {n}: {msg}"));
        let mut points = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 8 {
                return Err(bad(n + 1, "expected 8 columns"));
            }
            let f = |i: usize| cols[i].parse::<f64>().map_err(|e| bad(n + 1, &e.to_string()));
            let u = |i: usize| cols[i].parse::<usize>().map_err(|e| bad(n + 1, &e.to_string()));
            points.push(TrajectoryPoint {
                pose: ContinuousPose {
                    px: f(1)?,
                    py: f(2)?,
                    heading: f(3)?,
                },
                collided: u(4)? != 0,
                cell: GridPose::new(u(5)?, u(6)?),
            });
        }
        Ok(Self { points })
    }

    pub fn write_csv(&self, class_map: &ClassMap, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv(class_map)).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalFeedback {
    pub class_id: usize,
    /// Reduction in distance to the goal per step, cells/step.
    pub progress_rate: f64,
    pub obstacle_incidents: usize,
    pub steps: usize,
}

/// Per-class traversal statistics. Each step is attributed to the class of
/// the cell it entered (or was blocked by); the progress of a step is the
/// decrease in Euclidean distance to the goal cell's center.
pub fn measure_feedback(
    trajectory: &Trajectory,
    goal: GridPose,
    class_map: &ClassMap,
) -> Result<Vec<TraversalFeedback>> {
    if trajectory.points.is_empty() {
        return Err(Error::param("trajectory is empty"));
    }
    let (gx, gy) = goal.center();
    // class -> (progress sum, incidents, steps)
    let mut acc: BTreeMap<usize, (f64, usize, usize)> = BTreeMap::new();
    for pair in trajectory.points.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let progress = prev.pose.distance_to(gx, gy) - cur.pose.distance_to(gx, gy);
        let entry = acc.entry(class_map.get(cur.cell)).or_default();
        entry.0 += progress;
        entry.1 += usize::from(cur.collided);
        entry.2 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(class_id, (progress, incidents, steps))| TraversalFeedback {
            class_id,
            progress_rate: progress / steps as f64,
            obstacle_incidents: incidents,
            steps,
        })
        .collect())
}

pub fn feedback_to_csv(rows: &[TraversalFeedback]) -> String {
    let mut out = String::from("class_id,progress_rate,obstacle_incidents,steps\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.class_id, r.progress_rate, r.obstacle_incidents, r.steps
        );
    }
    out
}

pub fn feedback_from_csv(text: &str) -> Result<Vec<TraversalFeedback>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "class_id,progress_rate,obstacle_incidents,steps" {
        return Err(Error::parse("feedback csv", format!("unexpected header {header:?}")));
    }
    let bad = |n: usize, msg: &str| Error::parse("feedback csv", format!("row {n}: {msg}"));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad(n + 1, "expected 4 columns"));
            }
            let u = |i: usize| cols[i].parse::<usize>().map_err(|e| bad(n + 1, &e.to_string()));
            Ok(TraversalFeedback {
                class_id: u(0)?,
                progress_rate: cols[1].parse().map_err(|e: std::num::ParseFloatError| bad(n + 1, &e.to_string()))?,
                obstacle_incidents: u(2)?,
                steps: u(3)?,
            })
        })
        .collect()
}
