//! Discrete-steering local navigation trained by imitation of a scripted
//! expert with data aggregation.

pub mod bins;
pub mod net;
pub mod observation;
pub mod expert;
pub mod world;
pub mod navigate;
pub mod train;

pub use bins::{smooth_labels, SteeringBins};
pub use expert::expert_action;
pub use navigate::{navigate, navigate_expert, NavLimits, Navigation, Outcome};
pub use net::{LossWeights, SteeringNet};
pub use observation::{observe, LocalConfig, Observation};
pub use train::{train_clone, CloneConfig, CloneDataset, CloneOutcome, RoundStats};
pub use world::{generate_episode, Episode, WorldGenConfig};
