//! Behavioral cloning with data aggregation: the expert drives round 0, later
//! rounds let the net drive and relabel every visited state with the expert.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::local::bins::smooth_labels;
use crate::local::expert::expert_action;
use crate::local::navigate::{drive, navigate, NavLimits};
use crate::local::net::{LossWeights, SteeringNet};
use crate::local::observation::{LocalConfig, Observation};
use crate::local::world::{generate_episode, Episode, WorldGenConfig};
use crate::scoremap::DrivabilityTable;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CloneConfig {
    pub dagger_rounds: usize,
    pub episodes_per_round: usize,
    /// Passes over the aggregated dataset per round.
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Label smoothing mass.
    pub smoothing: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    /// Train on each sample and its left-right mirror image.
    pub mirror_augment: bool,
    /// Worlds used to score each round.
    pub validation_episodes: usize,
    pub limits: NavLimits,
    pub world: WorldGenConfig,
    pub local: LocalConfig,
}

impl Default for CloneConfig {
    fn default() -> Self {
        Self {
            dagger_rounds: 5,
            episodes_per_round: 40,
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 32,
            smoothing: 0.2,
            lambda1: 1e-4,
            lambda2: 0.1,
            seed: 0,
            mirror_augment: true,
            validation_episodes: 50,
            limits: NavLimits::default(),
            world: WorldGenConfig::default(),
            local: LocalConfig::default(),
        }
    }
}

impl CloneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dagger_rounds == 0 || self.episodes_per_round == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("rounds, episodes, epochs and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning rate must be positive and finite"));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::param("loss weights must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(Error::param("smoothing must lie in [0, 1)"));
        }
        self.local.validate()
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }
}

/// Observation/label pairs; labels are smoothed distributions over bins.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloneDataset {
    pub m: usize,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
}

impl CloneDataset {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, obs: &Observation, label: Vec<f64>) {
        self.inputs.push(obs.to_vec());
        self.labels.push(label);
    }

    pub fn extend(&mut self, other: CloneDataset) {
        self.inputs.extend(other.inputs);
        self.labels.extend(other.labels);
    }

    /// Each sample followed by its mirror image (reflected observation,
    /// reversed label).
    pub fn mirror_augmented(&self) -> Result<Self> {
        let mut out = Self::new(self.m);
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let obs = Observation::from_slice(x, self.m)?;
            out.inputs.push(x.clone());
            out.labels.push(y.clone());
            out.inputs.push(obs.mirrored().to_vec());
            out.labels.push(y.iter().rev().copied().collect());
        }
        Ok(out)
    }

    fn header(m: usize) -> String {
        let n = 2 * m + 1;
        let mut cols: Vec<String> = (0..n).map(|i| format!("ray_{i}")).collect();
        cols.push("goal_bearing".into());
        cols.push("goal_distance".into());
        cols.extend((0..n).map(|i| format!("terrain_{i}")));
        cols.extend((0..n).map(|i| format!("label_{i}")));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::header(self.m);
        out.push('\n');
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let row: Vec<String> = x.iter().chain(y).map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("dataset csv", "missing header"))?;
        let labels = header.split(',').filter(|c| c.starts_with("label_")).count();
        if labels == 0 || labels % 2 == 0 {
            return Err(Error::parse("dataset csv", "header must list an odd number of label columns"));
        }
        let m = (labels - 1) / 2;
        if header != Self::header(m) {
            return Err(Error::parse("dataset csv", "unexpected header"));
        }
        let obs_len = Observation::len_for(m);
        let mut data = Self::new(m);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::parse("dataset csv", e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != obs_len + labels {
                return Err(Error::parse("dataset csv", format!("row has {} values", values.len())));
            }
            data.inputs.push(values[..obs_len].to_vec());
            data.labels.push(values[obs_len..].to_vec());
        }
        Ok(data)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mini-batch gradient descent on the clone loss. Samples are shuffled per
/// epoch; with `mirror_pairs` the data is taken to alternate sample/mirror
/// and the pairs are kept together so symmetry is preserved exactly.
/// Returns the mean per-sample loss of the last epoch.
pub fn fit(
    net: &mut SteeringNet,
    data: &CloneDataset,
    config: &CloneConfig,
    mirror_pairs: bool,
    rng: &mut rng::Rng,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::param("cannot fit an empty dataset"));
    }
    let group = if mirror_pairs { 2 } else { 1 };
    let mut order: Vec<usize> = (0..data.len() / group).collect();
    let weights = config.loss_weights();
    let mut last = 0.0;
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let idx: Vec<usize> = chunk.iter().flat_map(|&g| g * group..(g + 1) * group).collect();
            let xs: Vec<&[f64]> = idx.iter().map(|&i| data.inputs[i].as_slice()).collect();
            let ys: Vec<&[f64]> = idx.iter().map(|&i| data.labels[i].as_slice()).collect();
            let (loss, grad) = net.clone_loss(&xs, &ys, weights)?;
            total += loss;
            let step = config.learning_rate / idx.len() as f64;
            for (p, g) in net.params_mut().iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        if !net.is_finite() || !total.is_finite() {
            return Err(Error::Diverged {
                stage: "local planner epoch",
                index: epoch,
            });
        }
        last = total / data.len() as f64;
    }
    Ok(last)
}

/// Expert-labeled samples from one episode; `learner` drives when given,
/// otherwise the expert does.
pub fn collect_episode(
    episode: &Episode,
    learner: Option<&SteeringNet>,
    table: &DrivabilityTable,
    config: &CloneConfig,
) -> Result<CloneDataset> {
    let local = &config.local;
    let bins = local.bins()?;
    let mut data = CloneDataset::new(local.m);
    drive(&episode.world, &[episode.goal], &config.limits, table, local, |world, obs, goal| {
        let c = expert_action(world, &world.robot(), goal, table, local)?;
        data.push(obs, smooth_labels(&bins, c, config.smoothing)?);
        match learner {
            Some(net) => net.argmax(&obs.to_vec()),
            None => bins.index_of(c),
        }
    })?;
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalStats {
    pub episodes: usize,
    /// Fraction of episodes reaching the goal.
    pub success_rate: f64,
    /// Fraction of episodes with no collision at all.
    pub collision_free_rate: f64,
    /// Fraction reaching the goal without any collision.
    pub clean_success_rate: f64,
}

pub fn evaluate(net: &SteeringNet, episodes: &[Episode], table: &DrivabilityTable, config: &CloneConfig) -> Result<EvalStats> {
    let runs = episodes
        .par_iter()
        .map(|ep| navigate(net, &ep.world, &[ep.goal], &config.limits, table, &config.local))
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len().max(1) as f64;
    let count = |f: &dyn Fn(&crate::local::navigate::Navigation) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / n;
    Ok(EvalStats {
        episodes: runs.len(),
        success_rate: count(&|r| r.completed()),
        collision_free_rate: count(&|r| r.collisions() == 0),
        clean_success_rate: count(&|r| r.completed() && r.collisions() == 0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub episodes: usize,
    pub new_samples: usize,
    pub dataset_size: usize,
    pub loss: f64,
    pub validation: EvalStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloneOutcome {
    pub net: SteeringNet,
    pub rounds: Vec<RoundStats>,
    pub dataset: CloneDataset,
}

pub fn rounds_csv(rounds: &[RoundStats]) -> String {
    let mut out = String::from("round,episodes,new_samples,dataset_size,loss,success_rate,collision_free_rate,clean_success_rate\n");
    for r in rounds {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.episodes,
            r.new_samples,
            r.dataset_size,
            r.loss,
            r.validation.success_rate,
            r.validation.collision_free_rate,
            r.validation.clean_success_rate
        );
    }
    out
}

/// Validation worlds for `config`: a stream family disjoint from training.
pub fn validation_episodes(config: &CloneConfig) -> Result<Vec<Episode>> {
    (0..config.validation_episodes as u64)
        .map(|i| generate_episode(&config.world, config.seed, (1 << 40) + i))
        .collect()
}

pub fn train_clone(config: &CloneConfig, table: &DrivabilityTable) -> Result<CloneOutcome> {
    config.validate()?;
    let local = &config.local;
    let mut net = if config.mirror_augment {
        SteeringNet::mirror_symmetric(local.m, local.hidden, config.seed)?
    } else {
        SteeringNet::random(local.observation_len(), local.hidden, 2 * local.m + 1, config.seed)
    };
    let validation = validation_episodes(config)?;
    let mut dataset = CloneDataset::new(local.m);
    let mut rounds = Vec::with_capacity(config.dagger_rounds);
    let mut shuffle_rng = rng::stream(config.seed, 1 << 41);
    for round in 0..config.dagger_rounds {
        let learner = (round > 0).then_some(&net);
        let base = (round * config.episodes_per_round) as u64;
        let collected = (0..config.episodes_per_round as u64)
            .into_par_iter()
            .map(|e| {
                let ep = generate_episode(&config.world, config.seed, base + e)?;
                collect_episode(&ep, learner, table, config)
            })
            .collect::<Result<Vec<_>>>()?;
        let new_samples: usize = collected.iter().map(CloneDataset::len).sum();
        for part in collected {
            dataset.extend(part);
        }
        let loss = if config.mirror_augment {
            fit(&mut net, &dataset.mirror_augmented()?, config, true, &mut shuffle_rng)
        } else {
            fit(&mut net, &dataset, config, false, &mut shuffle_rng)
        }
        .map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged {
                stage: "local planner round",
                index: round,
            },
            other => other,
        })?;
        rounds.push(RoundStats {
            round,
            episodes: config.episodes_per_round,
            new_samples,
            dataset_size: dataset.len(),
            loss,
            validation: evaluate(&net, &validation, table, config)?,
        });
    }
    Ok(CloneOutcome { net, rounds, dataset })
}
