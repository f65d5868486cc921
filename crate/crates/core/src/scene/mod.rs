//! World, robot, constraint and task model, plus the natural-language
//! renderers that turn a scene into the pipeline's query text.

mod catalog;
mod render;
mod validate;

use crate::geometry::{Aabb3, Obb2, Vec2, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use catalog::{builtin_task, builtin_tasks, discriminative_variants, TASK_SLUGS};
pub use render::{compose_query, render_constraint_description, render_environment_description};
pub use validate::{validate_scene, ValidationReport, Violation};

pub const SCHEMA_VERSION: u32 = 1;

/// Name used for the implicit floor surface.
pub const GROUND: &str = "ground";

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed scene file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    pub position: Vec3,
    pub size: Vec3,
    #[serde(default)]
    pub yaw: f64,
    pub mass: f64,
    #[serde(default)]
    pub material: String,
    #[serde(default)]
    pub graspable_offset: Vec3,
    #[serde(default)]
    pub is_support_surface: bool,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl ObjectSpec {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn footprint(&self) -> Obb2 {
        Obb2::new(self.position.xy(), Vec2::new(self.size.x, self.size.y), self.yaw)
    }

    pub fn aabb(&self) -> Aabb3 {
        let h = self.footprint().aabb_half();
        Aabb3::from_center_half(self.position, Vec3::new(h.x, h.y, self.size.z / 2.0))
    }

    pub fn bottom(&self) -> f64 {
        self.position.z - self.size.z / 2.0
    }

    pub fn top(&self) -> f64 {
        self.position.z + self.size.z / 2.0
    }

    pub fn graspable_point(&self) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        let o = self.graspable_offset;
        self.position + Vec3::new(o.x * c - o.y * s, o.x * s + o.y * c, o.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embodiment {
    Arm,
    Quadruped,
}

impl Embodiment {
    /// The full skill repertoire of the embodiment.
    pub fn legal_skills(self) -> &'static [&'static str] {
        match self {
            Embodiment::Arm => &["get_position", "get_size", "open_gripper", "close_gripper", "move_to_position"],
            Embodiment::Quadruped => {
                &["get_position", "get_size", "walk_to_position", "climb_to_position", "push_to_position"]
            }
        }
    }
}

impl fmt::Display for Embodiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embodiment::Arm => "arm",
            Embodiment::Quadruped => "quadruped",
        })
    }
}

/// Order in which the arm executes the axes of a `move_to_position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionOrder {
    #[default]
    Straight,
    Xyz,
    Xzy,
    Yxz,
    Yzx,
    Zxy,
    Zyx,
}

impl MotionOrder {
    /// Axis indices (0 = x, 1 = y, 2 = z) in execution order, or `None` for a
    /// single straight-line segment.
    pub fn axes(self) -> Option<[usize; 3]> {
        match self {
            MotionOrder::Straight => None,
            MotionOrder::Xyz => Some([0, 1, 2]),
            MotionOrder::Xzy => Some([0, 2, 1]),
            MotionOrder::Yxz => Some([1, 0, 2]),
            MotionOrder::Yzx => Some([1, 2, 0]),
            MotionOrder::Zxy => Some([2, 0, 1]),
            MotionOrder::Zyx => Some([2, 1, 0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub embodiment: Embodiment,
    pub skills: Vec<String>,
    /// Arm mount point, or the quadruped's starting base position.
    pub base_position: Vec3,
    #[serde(default)]
    pub base_yaw: f64,
    #[serde(default)]
    pub workspace_center: Option<Vec3>,
    #[serde(default)]
    pub workspace_radius: Option<f64>,
    /// Arm only: initial end-effector position.
    #[serde(default)]
    pub end_effector_home: Option<Vec3>,
    #[serde(default)]
    pub motion_order: MotionOrder,
    #[serde(default)]
    pub gap_limit: Option<f64>,
    #[serde(default)]
    pub climb_step_limit: Option<f64>,
    #[serde(default)]
    pub push_mass_limit: Option<f64>,
    /// Quadruped only: half of the body width, used to inflate obstacles.
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl RobotSpec {
    pub fn has_skill(&self, name: &str) -> bool {
        self.skills.iter().any(|s| s == name)
    }

    pub fn workspace(&self) -> Option<(Vec3, f64)> {
        Some((self.workspace_center?, self.workspace_radius?))
    }

    pub fn home(&self) -> Vec3 {
        self.end_effector_home.unwrap_or(self.base_position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Environment,
    Robot,
}

/// Checkable rule behind a constraint sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintRule {
    /// The object's graspable point must lie inside the arm workspace.
    WorkspaceReach { object: String },
    /// The horizontal gap between two surfaces must not exceed the gap limit.
    GapWidth { from: String, to: String },
    /// The object's top must be within one climbing step of the ground.
    ClimbHeight { object: String },
    /// The object's mass must not exceed the pushing limit.
    PushMass { object: String },
    /// The object may be dragged but never lifted.
    CannotLift { object: String },
    /// Only flat faces of these objects stick together.
    MagneticFaces { objects: Vec<String> },
}

impl ConstraintRule {
    pub fn objects(&self) -> Vec<&str> {
        match self {
            ConstraintRule::WorkspaceReach { object }
            | ConstraintRule::ClimbHeight { object }
            | ConstraintRule::PushMass { object }
            | ConstraintRule::CannotLift { object } => vec![object],
            ConstraintRule::GapWidth { from, to } => vec![from, to],
            ConstraintRule::MagneticFaces { objects } => objects.iter().map(String::as_str).collect(),
        }
    }

    /// Whether the limit this rule describes blocks the direct plan in `scene`.
    /// Environment facts are always in force.
    pub fn is_activated(&self, scene: &SceneConfig) -> bool {
        let robot = &scene.robot;
        match self {
            ConstraintRule::WorkspaceReach { object } => match (scene.object(object), robot.workspace()) {
                (Some(o), Some((c, r))) => o.graspable_point().distance(&c) > r,
                _ => false,
            },
            ConstraintRule::GapWidth { from, to } => match (scene.object(from), scene.object(to), robot.gap_limit) {
                (Some(a), Some(b), Some(limit)) => footprint_gap(a, b) > limit,
                _ => false,
            },
            ConstraintRule::ClimbHeight { object } => match (scene.object(object), robot.climb_step_limit) {
                (Some(o), Some(limit)) => o.top() > limit,
                _ => false,
            },
            ConstraintRule::PushMass { object } => match (scene.object(object), robot.push_mass_limit) {
                (Some(o), Some(limit)) => o.mass > limit,
                _ => false,
            },
            ConstraintRule::CannotLift { .. } | ConstraintRule::MagneticFaces { .. } => true,
        }
    }
}

/// Horizontal clearance between the world-aligned footprints of two objects.
pub fn footprint_gap(a: &ObjectSpec, b: &ObjectSpec) -> f64 {
    let (ba, bb) = (a.footprint().aabb(), b.footprint().aabb());
    let dx = (bb.min.x - ba.max.x).max(ba.min.x - bb.max.x).max(0.0);
    let dy = (bb.min.y - ba.max.y).max(ba.min.y - bb.max.y).max(0.0);
    dx.hypot(dy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub id: String,
    pub kind: ConstraintKind,
    pub text: String,
    pub predicate: ConstraintRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Lever,
    MagneticAttach,
    Bridge,
    Button,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    pub role: String,
    pub object: String,
}

/// Declarative mechanism. The trigger and effect are fixed by `kind`; roles
/// name the participating objects and `params` tune the trigger geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismRule {
    pub id: String,
    pub kind: MechanismKind,
    pub participants: Vec<Participant>,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, f64>,
}

impl MechanismRule {
    pub fn role(&self, role: &str) -> Option<&str> {
        self.participants.iter().find(|p| p.role == role).map(|p| p.object.as_str())
    }

    pub fn roles(&self, role: &str) -> Vec<&str> {
        self.participants.iter().filter(|p| p.role == role).map(|p| p.object.as_str()).collect()
    }

    pub fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Roles each kind requires.
    pub fn required_roles(&self) -> &'static [&'static str] {
        match self.kind {
            MechanismKind::Lever => &["lever", "fulcrum", "support", "load"],
            MechanismKind::MagneticAttach => &["block"],
            MechanismKind::Bridge => &["bridge", "edge_a", "edge_b"],
            MechanismKind::Button => &["button"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorExtent {
    pub min: Vec2,
    pub max: Vec2,
}

impl FloorExtent {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub objects: Vec<ObjectSpec>,
    pub robot: RobotSpec,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub mechanisms: Vec<MechanismRule>,
    pub floor_extent: FloorExtent,
}

impl SceneConfig {
    pub fn object(&self, name: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// Object the given one rests on, by geometry: the highest object whose
    /// top meets this object's bottom (within 1 mm) under its footprint.
    pub fn resting_on(&self, obj: &ObjectSpec) -> Option<&ObjectSpec> {
        let fp = obj.footprint();
        self.objects
            .iter()
            .filter(|o| o.name != obj.name)
            .filter(|o| (o.top() - obj.bottom()).abs() <= 1e-3 && o.footprint().penetration(&fp) > 1e-6)
            .max_by(|a, b| a.top().total_cmp(&b.top()))
    }

    /// Surface the robot base stands on: the highest support surface under
    /// the base whose top matches the base height, else the ground.
    pub fn robot_support(&self) -> String {
        let p = self.robot.base_position;
        self.objects
            .iter()
            .filter(|o| o.is_support_surface && o.footprint().contains(p.xy()) && (o.top() - p.z).abs() <= 1e-3)
            .max_by(|a, b| a.top().total_cmp(&b.top()))
            .map(|o| o.name.clone())
            .unwrap_or_else(|| GROUND.to_string())
    }
}

/// The six benchmark tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskId {
    MilkReaching,
    CanGrasping,
    ButtonPressing,
    SofaTraversing,
    SofaClimbing,
    CubeLifting,
}

impl TaskId {
    pub const ALL: [TaskId; 6] = [
        TaskId::MilkReaching,
        TaskId::CanGrasping,
        TaskId::ButtonPressing,
        TaskId::SofaTraversing,
        TaskId::SofaClimbing,
        TaskId::CubeLifting,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            TaskId::MilkReaching => "milk-reaching",
            TaskId::CanGrasping => "can-grasping",
            TaskId::ButtonPressing => "button-pressing",
            TaskId::SofaTraversing => "sofa-traversing",
            TaskId::SofaClimbing => "sofa-climbing",
            TaskId::CubeLifting => "cube-lifting",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TaskId::MilkReaching => "Milk-Reaching",
            TaskId::CanGrasping => "Can-Grasping",
            TaskId::ButtonPressing => "Button-Pressing",
            TaskId::SofaTraversing => "Sofa-Traversing",
            TaskId::SofaClimbing => "Sofa-Climbing",
            TaskId::CubeLifting => "Cube-Lifting",
        }
    }

    /// Success predicate identifier that a task file must declare.
    pub fn success_check(self) -> &'static str {
        match self {
            TaskId::MilkReaching => "holding:milk",
            TaskId::CanGrasping => "holding:can",
            TaskId::ButtonPressing => "flag:button_pressed",
            TaskId::SofaTraversing => "standing_on:sofa_b",
            TaskId::SofaClimbing => "standing_on:sofa",
            TaskId::CubeLifting => "flag:cube_lifted",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TaskId {
    type Err = SceneError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.slug() == s || t.title().eq_ignore_ascii_case(s))
            .ok_or_else(|| SceneError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub schema_version: u32,
    pub id: TaskId,
    #[serde(default)]
    pub variant: Option<String>,
    pub instruction: String,
    pub scene: SceneConfig,
    pub success_check: String,
    /// Key of the gold annotation for this task (variant).
    pub gold: String,
}

impl TaskSpec {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&v)?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SceneError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task serializes")
    }

    /// Unique name of the task or variant, e.g. `sofa-traversing-small-gap`.
    pub fn slug(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}-{}", self.id.slug(), v),
            None => self.id.slug().to_string(),
        }
    }
}

/// Scene file wrapper carrying the schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema_version: u32,
    pub scene: SceneConfig,
}

impl SceneFile {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&v)?;
        Ok(serde_json::from_value(v)?)
    }
}

/// Loads a scene from either a task file or a bare scene file.
pub fn load_scene_or_task(text: &str) -> Result<SceneConfig, SceneError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    check_version(&v)?;
    if v.get("instruction").is_some() {
        Ok(serde_json::from_value::<TaskSpec>(v)?.scene)
    } else {
        Ok(serde_json::from_value::<SceneFile>(v)?.scene)
    }
}

fn check_version(v: &serde_json::Value) -> Result<(), SceneError> {
    let found = v.get("schema_version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(SceneError::SchemaVersion { found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loader_rejects_unknown_fields() {
        let task = builtin_task("milk-reaching").unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&task.to_json()).unwrap();
        v["scene"]["objects"][0]["colour"] = serde_json::json!("red");
        assert!(matches!(TaskSpec::from_json(&v.to_string()), Err(SceneError::Malformed(_))));
    }

    #[test]
    fn loader_checks_schema_version() {
        let task = builtin_task("milk-reaching").unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&task.to_json()).unwrap();
        v["schema_version"] = serde_json::json!(7);
        assert!(matches!(TaskSpec::from_json(&v.to_string()), Err(SceneError::SchemaVersion { found: 7 })));
    }

    #[test]
    fn task_id_parse() {
        assert_eq!("sofa-climbing".parse::<TaskId>().unwrap(), TaskId::SofaClimbing);
        assert_eq!("Cube-Lifting".parse::<TaskId>().unwrap(), TaskId::CubeLifting);
        assert!("bogus-task".parse::<TaskId>().is_err());
    }

    #[test]
    fn shipped_constraints_are_activated() {
        for task in builtin_tasks() {
            for c in &task.scene.constraints {
                if matches!(c.predicate, ConstraintRule::CannotLift { .. } | ConstraintRule::MagneticFaces { .. }) {
                    continue;
                }
                let expect = task.variant.is_none();
                assert_eq!(c.predicate.is_activated(&task.scene), expect, "{} {}", task.slug(), c.id);
            }
        }
    }

    #[test]
    fn graspable_point_rotates_with_object() {
        let mut o = builtin_task("milk-reaching").unwrap().scene.object("hammer").unwrap().clone();
        o.yaw = std::f64::consts::FRAC_PI_2;
        let g = o.graspable_point();
        assert!((g.x - o.position.x).abs() < 1e-9);
        assert!((g.y - (o.position.y + o.graspable_offset.x)).abs() < 1e-9);
    }
}
