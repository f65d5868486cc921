use super::{SceneError, TaskSpec};

/// Slugs of the six benchmark tasks, in report column order.
pub const TASK_SLUGS: [&str; 6] =
    ["milk-reaching", "can-grasping", "button-pressing", "sofa-traversing", "sofa-climbing", "cube-lifting"];

const SOURCES: [(&str, &str); 8] = [
    ("milk-reaching", include_str!("../../assets/tasks/milk-reaching.json")),
    ("can-grasping", include_str!("../../assets/tasks/can-grasping.json")),
    ("button-pressing", include_str!("../../assets/tasks/button-pressing.json")),
    ("sofa-traversing", include_str!("../../assets/tasks/sofa-traversing.json")),
    ("sofa-climbing", include_str!("../../assets/tasks/sofa-climbing.json")),
    ("cube-lifting", include_str!("../../assets/tasks/cube-lifting.json")),
    ("sofa-traversing-small-gap", include_str!("../../assets/tasks/sofa-traversing-small-gap.json")),
    ("sofa-climbing-low-sofa", include_str!("../../assets/tasks/sofa-climbing-low-sofa.json")),
];

/// Looks up a shipped task or discriminative variant by slug.
pub fn builtin_task(slug: &str) -> Result<TaskSpec, SceneError> {
    let slug = match slug.parse::<super::TaskId>() {
        Ok(id) => id.slug(),
        Err(_) => slug,
    };
    let (_, text) = SOURCES
        .iter()
        .find(|(s, _)| *s == slug)
        .ok_or_else(|| SceneError::UnknownTask(slug.to_string()))?;
    TaskSpec::from_json(text)
}

/// The six benchmark tasks followed by the two discriminative variants.
pub fn builtin_tasks() -> Vec<TaskSpec> {
    SOURCES.iter().map(|(_, t)| TaskSpec::from_json(t).expect("shipped task parses")).collect()
}

/// Variant pairs for the discriminative experiment, as
/// (family, [(variant slug, scene needs a tool)]).
pub fn discriminative_variants() -> Vec<(&'static str, [(&'static str, bool); 2])> {
    vec![
        ("sofa-traversing", [("sofa-traversing", true), ("sofa-traversing-small-gap", false)]),
        ("sofa-climbing", [("sofa-climbing", true), ("sofa-climbing-low-sofa", false)]),
    ]
}
