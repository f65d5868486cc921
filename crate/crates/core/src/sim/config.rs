use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrtConfig {
    /// Maximum edge length added per iteration.
    pub step: f64,
    pub neighbor_radius: f64,
    pub budget: usize,
    pub goal_tolerance: f64,
    /// Probability of sampling the goal before a first solution exists.
    pub goal_bias: f64,
    /// Return the straight segment without sampling when it is free.
    pub direct_shortcut: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub rrt: RrtConfig,
    /// Spacing of collision samples along segments.
    pub sample_resolution: f64,
    pub position_tolerance: f64,
    pub yaw_tolerance_deg: f64,
    pub grasp_radius: f64,
    /// Half side of the gripper's collision cube.
    pub gripper_half: f64,
    /// Clearance between the robot body and a pushed face.
    pub push_margin: f64,
    /// Height difference treated as level ground.
    pub height_tolerance: f64,
    /// How far a released object may sit above a surface and still land on it.
    pub settle_tolerance: f64,
}

pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../assets/sim.json");

impl Default for SimConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG_JSON).expect("shipped simulator config parses")
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn yaw_tolerance(&self) -> f64 {
        self.yaw_tolerance_deg.to_radians()
    }
}
