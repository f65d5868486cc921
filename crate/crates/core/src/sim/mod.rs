//! Deterministic 2.5D kinematic world: oriented boxes with heights, a support
//! relation, an arm or quadruped robot, declarative mechanisms and per-task
//! success predicates.

mod arm;
mod config;
mod mechanisms;
mod quadruped;
mod rrt;

pub use config::{RrtConfig, SimConfig, DEFAULT_CONFIG_JSON};
pub use quadruped::WalkSpace;
pub use rrt::{path_cost, plan_path, segment_free, FreeSpace, PathPlan, PlanError};

use crate::geometry::{Aabb3, Vec3};
use crate::planscript::{Environment, SkillFault, SkillOutput, Value};
use crate::scene::{Embodiment, ObjectSpec, SceneConfig, TaskId, GROUND};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillErrorKind {
    OutOfWorkspace,
    GapTooWide,
    StepTooHigh,
    OverMassLimit,
    PathNotFound,
    NothingToGrasp,
    InvalidTarget,
    UnknownObject,
}

impl SkillErrorKind {
    pub const ALL: [SkillErrorKind; 8] = [
        SkillErrorKind::OutOfWorkspace,
        SkillErrorKind::GapTooWide,
        SkillErrorKind::StepTooHigh,
        SkillErrorKind::OverMassLimit,
        SkillErrorKind::PathNotFound,
        SkillErrorKind::NothingToGrasp,
        SkillErrorKind::InvalidTarget,
        SkillErrorKind::UnknownObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SkillErrorKind::OutOfWorkspace => "out_of_workspace",
            SkillErrorKind::GapTooWide => "gap_too_wide",
            SkillErrorKind::StepTooHigh => "step_too_high",
            SkillErrorKind::OverMassLimit => "over_mass_limit",
            SkillErrorKind::PathNotFound => "path_not_found",
            SkillErrorKind::NothingToGrasp => "nothing_to_grasp",
            SkillErrorKind::InvalidTarget => "invalid_target",
            SkillErrorKind::UnknownObject => "unknown_object",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds raised when a robot capability limit is violated.
    pub fn is_constraint_violation(self) -> bool {
        matches!(
            self,
            SkillErrorKind::OutOfWorkspace
                | SkillErrorKind::GapTooWide
                | SkillErrorKind::StepTooHigh
                | SkillErrorKind::OverMassLimit
        )
    }
}

impl fmt::Display for SkillErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillError {
    pub kind: SkillErrorKind,
    pub detail: String,
    /// Offending quantities, e.g. `gap` and `limit`.
    pub values: BTreeMap<String, f64>,
}

impl SkillError {
    pub fn new(kind: SkillErrorKind, detail: impl Into<String>) -> Self {
        SkillError { kind, detail: detail.into(), values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }
}

impl fmt::Display for SkillError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

impl std::error::Error for SkillError {}

impl From<SkillError> for SkillFault {
    fn from(e: SkillError) -> Self {
        SkillFault { kind: e.kind.as_str().to_string(), detail: e.detail, values: e.values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub position: Vec3,
    pub yaw: f64,
    /// Name of the surface the robot stands on, or `ground`.
    pub support: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub object: String,
    /// Object center minus end-effector position.
    pub offset: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub position: Vec3,
    pub closed: bool,
    pub held: Vec<Attachment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub cube_lifted: bool,
    pub button_pressed: bool,
    pub gap_spanned_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub objects: Vec<ObjectSpec>,
    /// Magnetically merged groups; members move as one rigid body.
    pub groups: Vec<Vec<String>>,
    pub robot: RobotPose,
    pub gripper: Option<Gripper>,
    pub flags: Flags,
    pub step: u64,
}

impl WorldState {
    pub fn initial(scene: &SceneConfig) -> Self {
        let robot = &scene.robot;
        let gripper = (robot.embodiment == Embodiment::Arm)
            .then(|| Gripper { position: robot.home(), closed: false, held: vec![] });
        WorldState {
            objects: scene.objects.clone(),
            groups: vec![],
            robot: RobotPose { position: robot.base_position, yaw: robot.base_yaw, support: scene.robot_support() },
            gripper,
            flags: Flags::default(),
            step: 0,
        }
    }

    pub fn object(&self, name: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    /// Members of the rigid group containing `name` (the object alone if it
    /// is not merged).
    pub fn group_of(&self, name: &str) -> Vec<String> {
        self.groups
            .iter()
            .find(|g| g.iter().any(|m| m == name))
            .cloned()
            .unwrap_or_else(|| vec![name.to_string()])
    }

    pub fn held_names(&self) -> Vec<String> {
        self.gripper.as_ref().map(|g| g.held.iter().map(|a| a.object.clone()).collect()).unwrap_or_default()
    }

    pub fn is_held(&self, name: &str) -> bool {
        self.gripper.as_ref().is_some_and(|g| g.held.iter().any(|a| a.object == name))
    }

    /// Short content hash used as the trace snapshot id.
    pub fn snapshot_id(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// Pairs of objects whose boxes overlap by more than `tol` in both the
    /// horizontal footprint and the vertical interval. Held objects and
    /// members of the same merged group are exempt.
    pub fn interpenetrations(&self, tol: f64) -> Vec<(String, String, f64)> {
        let held = self.held_names();
        let mut out = Vec::new();
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if held.contains(&a.name) || held.contains(&b.name) || self.group_of(&a.name).contains(&b.name) {
                    continue;
                }
                let planar = a.footprint().penetration(&b.footprint());
                let vertical = a.top().min(b.top()) - a.bottom().max(b.bottom());
                if planar > tol && vertical > tol {
                    out.push((a.name.clone(), b.name.clone(), planar.min(vertical)));
                }
            }
        }
        out
    }
}

/// A scene plus its evolving state. Implements the plan-script environment.
#[derive(Debug, Clone)]
pub struct World {
    pub scene: SceneConfig,
    pub config: SimConfig,
    pub state: WorldState,
    /// Seed for the next path-planning query; advanced per query.
    plan_counter: u64,
}

impl World {
    pub fn new(scene: SceneConfig, config: SimConfig) -> Self {
        let state = WorldState::initial(&scene);
        World { scene, config, state, plan_counter: 0 }
    }

    fn next_seed(&mut self) -> u64 {
        let s = self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(self.plan_counter);
        self.plan_counter += 1;
        s
    }

    pub fn object(&self, name: &str) -> Result<&ObjectSpec, SkillError> {
        self.state
            .object(name)
            .ok_or_else(|| SkillError::new(SkillErrorKind::UnknownObject, format!("no object named `{name}`")))
    }

    pub fn get_position(&self, name: &str) -> Result<Vec3, SkillError> {
        Ok(self.object(name)?.position)
    }

    /// World-frame extents of the object's box, or of its merged group.
    pub fn get_size(&self, name: &str) -> Result<Vec3, SkillError> {
        let o = self.object(name)?;
        if self.state.group_of(name).len() == 1 {
            let h = o.footprint().aabb_half();
            return Ok(Vec3::new(2.0 * h.x, 2.0 * h.y, o.size.z));
        }
        Ok(self.group_aabb(name).extent())
    }

    pub fn group_aabb(&self, name: &str) -> Aabb3 {
        self.state
            .group_of(name)
            .iter()
            .filter_map(|m| self.state.object(m))
            .map(|o| o.aabb())
            .reduce(|a, b| a.union(&b))
            .expect("group has members")
    }

    /// Dispatches a mutating or query skill by name.
    pub fn execute(&mut self, skill: &str, args: &[Value]) -> Result<SkillOutput, SkillError> {
        if !self.scene.robot.has_skill(skill) {
            return Err(SkillError::new(
                SkillErrorKind::InvalidTarget,
                format!("`{skill}` is not available to the {}", self.scene.robot.embodiment),
            ));
        }
        let name_arg = |i: usize| match args.get(i) {
            Some(Value::Name { value }) => Ok(value.as_str()),
            _ => Err(SkillError::new(SkillErrorKind::InvalidTarget, format!("argument {} must be an object name", i + 1))),
        };
        let vec_arg = |i: usize| match args.get(i) {
            Some(Value::Vector { value, .. }) => Ok(Vec3::from_array(*value)),
            _ => Err(SkillError::new(SkillErrorKind::InvalidTarget, format!("argument {} must be a position", i + 1))),
        };
        let as_value = |v: Vec3| Some(Value::vector(v.to_array(), crate::planscript::Unit::Meter));
        let out = match skill {
            "get_position" => return Ok(SkillOutput { value: as_value(self.get_position(name_arg(0)?)?), phases: vec![] }),
            "get_size" => return Ok(SkillOutput { value: as_value(self.get_size(name_arg(0)?)?), phases: vec![] }),
            "open_gripper" => self.open_gripper()?,
            "close_gripper" => self.close_gripper()?,
            "move_to_position" => self.move_to_position(vec_arg(0)?)?,
            "walk_to_position" => self.walk_to_position(vec_arg(0)?)?,
            "climb_to_position" => self.climb_to_position(vec_arg(0)?)?,
            "push_to_position" => {
                let yaw = match args.get(2) {
                    Some(Value::Scalar { value, .. }) => *value,
                    _ => return Err(SkillError::new(SkillErrorKind::InvalidTarget, "yaw must be a scalar")),
                };
                self.push_to_position(name_arg(0)?, vec_arg(1)?, yaw)?
            }
            other => return Err(SkillError::new(SkillErrorKind::InvalidTarget, format!("unknown skill `{other}`"))),
        };
        self.state.step += 1;
        self.apply_mechanisms();
        Ok(SkillOutput { value: None, phases: out })
    }

    pub fn is_success(&self, check: &str) -> bool {
        let s = &self.state;
        match check.split_once(':') {
            Some(("holding", obj)) => s.gripper.as_ref().is_some_and(|g| g.closed) && s.is_held(obj),
            Some(("standing_on", surf)) => s.robot.support == surf,
            Some(("flag", "button_pressed")) => s.flags.button_pressed,
            Some(("flag", "cube_lifted")) => s.flags.cube_lifted,
            _ => false,
        }
    }

    pub fn task_success(&self, task: TaskId) -> bool {
        self.is_success(task.success_check())
    }

    /// Objects whose pose differs from the initial scene.
    pub fn moved_objects(&self) -> Vec<String> {
        self.scene
            .objects
            .iter()
            .filter(|o0| {
                self.state.object(&o0.name).is_some_and(|o| {
                    o.position.distance(&o0.position) > 1e-9 || (o.yaw - o0.yaw).abs() > 1e-9
                })
            })
            .map(|o| o.name.clone())
            .collect()
    }

    /// Height of the top surface directly under `p`, or the floor.
    pub fn surface_under(&self, p: crate::geometry::Vec2, exclude: &[String]) -> (f64, String) {
        self.state
            .objects
            .iter()
            .filter(|o| !exclude.contains(&o.name) && o.footprint().contains(p))
            .map(|o| (o.top(), o.name.clone()))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((0.0, GROUND.to_string()))
    }

    /// Drops `names` (moved as one body) onto the highest surface below
    /// them, within the settle tolerance of their current bottom.
    fn settle(&mut self, names: &[String]) {
        let tol = self.config.settle_tolerance;
        let mut dz = f64::NEG_INFINITY;
        for n in names {
            let o = self.state.object(n).expect("settling known object");
            let fp = o.footprint();
            let bottom = o.bottom();
            let support = self
                .state
                .objects
                .iter()
                .filter(|s| !names.contains(&s.name))
                .filter(|s| s.top() <= bottom + tol && s.footprint().penetration(&fp) > 1e-9)
                .map(|s| s.top())
                .fold(0.0_f64, f64::max);
            dz = dz.max(support - bottom);
        }
        if dz.is_finite() && dz.abs() > 0.0 {
            let riders = self.riders(names);
            for n in names.iter().chain(riders.iter()) {
                let i = self.state.index(n).unwrap();
                self.state.objects[i].position.z += dz;
            }
        }
    }

    /// Objects resting only on members of `base` (transitively).
    fn riders(&self, base: &[String]) -> Vec<String> {
        let mut moving: Vec<String> = base.to_vec();
        let mut out = Vec::new();
        loop {
            let mut added = false;
            for o in &self.state.objects {
                if moving.contains(&o.name) || o.has_tag("fixed") || self.state.is_held(&o.name) {
                    continue;
                }
                let fp = o.footprint();
                let supports: Vec<&ObjectSpec> = self
                    .state
                    .objects
                    .iter()
                    .filter(|s| s.name != o.name && (s.top() - o.bottom()).abs() <= 1e-3 && s.footprint().penetration(&fp) > 1e-9)
                    .collect();
                if !supports.is_empty() && supports.iter().all(|s| moving.contains(&s.name)) {
                    moving.push(o.name.clone());
                    out.push(o.name.clone());
                    added = true;
                }
            }
            if !added {
                return out;
            }
        }
    }

    fn translate(&mut self, names: &[String], d: Vec3) {
        for n in names {
            if let Some(i) = self.state.index(n) {
                self.state.objects[i].position = self.state.objects[i].position + d;
            }
        }
    }
}

impl Environment for World {
    fn invoke(&mut self, skill: &str, args: &[Value]) -> Result<SkillOutput, SkillFault> {
        self.execute(skill, args).map_err(SkillFault::from)
    }

    fn snapshot_id(&self) -> String {
        self.state.snapshot_id()
    }
}
