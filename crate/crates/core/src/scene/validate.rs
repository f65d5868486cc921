use super::{Embodiment, SceneConfig};
use serde::Serialize;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Interpenetration tolerated between initially placed objects.
const PENETRATION_TOL: f64 = 1e-3;

pub fn validate_scene(scene: &SceneConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut names = BTreeSet::new();

    for (i, o) in scene.objects.iter().enumerate() {
        let path = format!("objects[{i}]({})", o.name);
        if o.name.is_empty() || !o.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            report.push(&path, "name must be a non-empty identifier");
        }
        if !names.insert(o.name.as_str()) {
            report.push(&path, format!("duplicate object name `{}`", o.name));
        }
        if !(o.position.is_finite() && o.size.is_finite() && o.graspable_offset.is_finite() && o.yaw.is_finite()) {
            report.push(&path, "non-finite component");
        }
        if !(o.size.x > 0.0 && o.size.y > 0.0 && o.size.z > 0.0) {
            report.push(&path, "size components must be > 0");
        }
        if o.mass.is_nan() || o.mass < 0.0 {
            report.push(&path, "mass must be >= 0");
        }
        if !(-PI..PI).contains(&o.yaw) {
            report.push(&path, "yaw must lie in [-pi, pi)");
        }
    }

    for (i, a) in scene.objects.iter().enumerate() {
        for b in &scene.objects[i + 1..] {
            let planar = a.footprint().penetration(&b.footprint());
            let vertical = a.top().min(b.top()) - a.bottom().max(b.bottom());
            if planar > PENETRATION_TOL && vertical > PENETRATION_TOL {
                report.push(
                    format!("objects({},{})", a.name, b.name),
                    format!("objects interpenetrate by {:.4} m", planar.min(vertical)),
                );
            }
        }
    }

    let robot = &scene.robot;
    let legal = robot.embodiment.legal_skills();
    for s in &robot.skills {
        if !legal.contains(&s.as_str()) {
            report.push("robot.skills", format!("skill `{s}` is not available to the {}", robot.embodiment));
        }
    }
    if !robot.base_position.is_finite() {
        report.push("robot.base_position", "non-finite component");
    }
    if !scene.floor_extent.contains(robot.base_position.xy()) {
        report.push("robot.base_position", "robot base lies outside floor_extent");
    }
    let mut positive = |name: &str, v: Option<f64>| match v {
        Some(x) if x > 0.0 && x.is_finite() => {}
        Some(_) => report.push(format!("robot.{name}"), "limit must be > 0"),
        None => report.push(format!("robot.{name}"), format!("required for the {}", robot.embodiment)),
    };
    match robot.embodiment {
        Embodiment::Arm => {
            positive("workspace_radius", robot.workspace_radius);
            if robot.workspace_center.is_none() {
                report.push("robot.workspace_center", "required for the arm");
            }
        }
        Embodiment::Quadruped => {
            positive("gap_limit", robot.gap_limit);
            positive("climb_step_limit", robot.climb_step_limit);
            positive("push_mass_limit", robot.push_mass_limit);
            positive("half_width", robot.half_width);
        }
    }

    for (i, c) in scene.constraints.iter().enumerate() {
        let path = format!("constraints[{i}]({})", c.id);
        if c.text.trim().is_empty() {
            report.push(&path, "constraint text is empty");
        }
        for o in c.predicate.objects() {
            if !names.contains(o) {
                report.push(&path, format!("unknown object `{o}`"));
            }
        }
    }

    for (i, m) in scene.mechanisms.iter().enumerate() {
        let path = format!("mechanisms[{i}]({})", m.id);
        for p in &m.participants {
            if !names.contains(p.object.as_str()) {
                report.push(&path, format!("participant `{}` does not exist", p.object));
            }
        }
        for role in m.required_roles() {
            if m.role(role).is_none() {
                report.push(&path, format!("missing role `{role}`"));
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::builtin_tasks;

    #[test]
    fn shipped_scenes_are_clean() {
        for task in builtin_tasks() {
            let r = validate_scene(&task.scene);
            assert!(r.is_clean(), "{}: {}", task.slug(), r);
        }
    }

    #[test]
    fn duplicate_name_reported_once() {
        let mut scene = crate::scene::builtin_task("milk-reaching").unwrap().scene;
        let mut dup = scene.objects[1].clone();
        dup.position.x += 5.0;
        let name = dup.name.clone();
        scene.objects.push(dup);
        let r = validate_scene(&scene);
        assert_eq!(r.violations.len(), 1, "{r}");
        assert!(r.violations[0].message.contains(&name));
    }

    #[test]
    fn negative_size_reported() {
        let mut scene = crate::scene::builtin_task("sofa-climbing").unwrap().scene;
        scene.objects[0].size.y = -0.2;
        let r = validate_scene(&scene);
        assert_eq!(r.violations.len(), 1, "{r}");
    }

    #[test]
    fn wrong_embodiment_skill_reported() {
        let mut scene = crate::scene::builtin_task("milk-reaching").unwrap().scene;
        scene.robot.skills.push("climb_to_position".into());
        assert_eq!(validate_scene(&scene).violations.len(), 1);
    }

    #[test]
    fn interpenetration_reported() {
        let mut scene = crate::scene::builtin_task("sofa-climbing").unwrap().scene;
        let a = scene.objects.iter().position(|o| o.name == "small_box").unwrap();
        let b = scene.objects.iter().position(|o| o.name == "large_box").unwrap();
        scene.objects[a].position.x = scene.objects[b].position.x;
        scene.objects[a].position.y = scene.objects[b].position.y;
        let r = validate_scene(&scene);
        assert!(r.violations.iter().any(|v| v.message.contains("interpenetrate")));
    }
}
