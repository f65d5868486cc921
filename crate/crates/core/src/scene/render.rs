use super::{ConstraintKind, Constraint, Embodiment, ObjectSpec, SceneConfig, TaskSpec, GROUND};
use crate::geometry::Vec3;
use std::fmt::Write as _;

fn v3(v: Vec3) -> String {
    format!("[{:.2}, {:.2}, {:.2}]", v.x, v.y, v.z)
}

fn object_paragraph(scene: &SceneConfig, o: &ObjectSpec, out: &mut String) {
    let support = scene.resting_on(o).map(|s| s.name.as_str()).unwrap_or(GROUND);
    let _ = write!(out, "There is a {} on the {}. ", o.name, support);
    let _ = write!(
        out,
        "The {}'s position is {} m, its size (width, length, height) is {} m, its yaw is {:.2} rad and its mass is {:.2} kg.",
        o.name,
        v3(o.position),
        v3(o.size),
        o.yaw,
        o.mass
    );
    if !o.material.is_empty() {
        let _ = write!(out, " It is made of {}.", o.material);
    }
    if scene.robot.embodiment == Embodiment::Arm && !o.has_tag("fixed") {
        let _ = write!(out, " Its graspable point is {} m.", v3(o.graspable_point()));
    }
    let mut props: Vec<&str> = o.tags.iter().map(String::as_str).collect();
    if o.is_support_surface {
        props.push("can be stood on");
    }
    if !props.is_empty() {
        let _ = write!(out, " Properties: {}.", props.join(", "));
    }
    out.push('\n');
}

fn robot_sentence(scene: &SceneConfig) -> String {
    let r = &scene.robot;
    match r.embodiment {
        Embodiment::Arm => format!(
            "The robot is a robotic arm mounted at {} m; its gripper starts open at {} m.\n",
            v3(r.base_position),
            v3(r.home())
        ),
        Embodiment::Quadruped => format!(
            "The robot is a quadrupedal robot on the {} at {} m, facing yaw {:.2} rad.\n",
            scene.robot_support(),
            v3(r.base_position),
            r.base_yaw
        ),
    }
}

/// Environment description: one paragraph per object in scene order,
/// followed by the robot placement sentence.
pub fn render_environment_description(scene: &SceneConfig) -> String {
    let mut out = String::new();
    for o in &scene.objects {
        object_paragraph(scene, o, &mut out);
    }
    out.push_str(&robot_sentence(scene));
    out
}

/// One sentence per constraint; environment before robot, then by id.
pub fn render_constraint_description(constraints: &[Constraint]) -> String {
    let mut sorted: Vec<&Constraint> = constraints.iter().collect();
    sorted.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
    let mut out = String::new();
    for c in sorted {
        let label = match c.kind {
            ConstraintKind::Environment => "environment",
            ConstraintKind::Robot => "robot",
        };
        let _ = writeln!(out, "- ({}) {}", label, c.text.trim());
    }
    out
}

/// Query text `L`: task instruction, scene description and constraints, in
/// that order under labeled headers. The constraint section is omitted when
/// there are no constraints.
pub fn compose_query(task: &TaskSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Task:\n{}\n", task.instruction.trim());
    let _ = write!(out, "Scene:\n{}", render_environment_description(&task.scene));
    let constraints = render_constraint_description(&task.scene.constraints);
    if !constraints.is_empty() {
        let _ = write!(out, "\nConstraints:\n{}", constraints);
    }
    out
}
