//! Policy-gradient coverage planning on a scoremap.

pub mod baseline;
pub mod features;
pub mod gradient;
pub mod policy;
pub mod rollout;
pub mod train;

pub use baseline::baseline_boustrophedon;
pub use features::{extract_features, FeatureConfig, FeatureLayout, MultiResFeature, PlannerState};
pub use gradient::{policy_gradient, policy_gradient_with_baseline, surrogate_objective};
pub use policy::{action_distribution, feasible_actions, Action, PolicyParams};
pub use rollout::{discounted_return, greedy_rollout, plan_waypoints, random_walk, rollout, Rollout, RolloutStep};
pub use train::{train, train_from, CurvePoint, TrainConfig, TrainOutcome};
