use crate::llm::{ChatMessage, Stage};
use crate::scene::RobotSpec;
use std::path::Path;

pub const GRAMMAR: &str = include_str!("../../assets/prompts/grammar.txt");

const BUILTIN: [(Stage, &str); 4] = [
    (Stage::Analyzer, include_str!("../../assets/prompts/analyzer.txt")),
    (Stage::Planner, include_str!("../../assets/prompts/planner.txt")),
    (Stage::Calculator, include_str!("../../assets/prompts/calculator.txt")),
    (Stage::Coder, include_str!("../../assets/prompts/coder.txt")),
];

pub fn skill_doc(name: &str) -> Option<&'static str> {
    Some(match name {
        "get_position" => "get_position(object): returns the object's center [x, y, z] in meters.",
        "get_size" => "get_size(object): returns the object's size [width, length, height] in meters; for objects attached together, the size of the whole assembly.",
        "open_gripper" => "open_gripper(): opens the gripper; a held object is released and settles onto the surface below it.",
        "close_gripper" => "close_gripper(): closes the gripper and grasps the object whose graspable point is within 0.04 m of the gripper.",
        "move_to_position" => "move_to_position(position): moves the gripper and anything it holds to the position, one axis at a time in the robot's motion order. Objects in the way are pushed along.",
        "walk_to_position" => "walk_to_position(position): walks to the position along a planned collision-free path. The robot cannot cross gaps wider than its gap limit.",
        "climb_to_position" => "climb_to_position(position): climbs in a straight line onto the surface at the position, without path planning. Each rise must be within the climbing limit.",
        "push_to_position" => "push_to_position(object, position, yaw): pushes the object to the position and yaw. The robot first rotates the object, then pushes it along y, then along x.",
        _ => return None,
    })
}

pub fn render_skills(robot: &RobotSpec) -> String {
    robot.skills.iter().filter_map(|s| skill_doc(s)).map(|d| format!("- {d}\n")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    /// Splits a template file on its `[system]` and `[user]` marker lines.
    pub fn parse(text: &str) -> Option<Self> {
        let (_, rest) = text.split_once("[system]\n")?;
        let (system, user) = rest.split_once("\n[user]\n")?;
        Some(PromptTemplate { system: system.trim_end().to_string(), user: user.trim_end().to_string() })
    }

    /// Replaces each `{{key}}` placeholder. Unknown placeholders are left as is.
    pub fn render(&self, vars: &[(&str, &str)]) -> Vec<ChatMessage> {
        let fill = |t: &str| {
            vars.iter().fold(t.to_string(), |acc, (k, v)| acc.replace(&format!("{{{{{k}}}}}"), v))
        };
        vec![ChatMessage::system(fill(&self.system)), ChatMessage::user(fill(&self.user))]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    pub analyzer: PromptTemplate,
    pub planner: PromptTemplate,
    pub calculator: PromptTemplate,
    pub coder: PromptTemplate,
}

impl PromptSet {
    pub fn get(&self, stage: Stage) -> &PromptTemplate {
        match stage {
            Stage::Analyzer => &self.analyzer,
            Stage::Planner => &self.planner,
            Stage::Calculator => &self.calculator,
            Stage::Coder => &self.coder,
        }
    }

    fn from_texts(mut load: impl FnMut(Stage) -> std::io::Result<String>) -> std::io::Result<Self> {
        let mut get = |stage| {
            let text = load(stage)?;
            PromptTemplate::parse(&text).ok_or_else(|| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{stage} template lacks [system]/[user] markers"))
            })
        };
        Ok(PromptSet {
            analyzer: get(Stage::Analyzer)?,
            planner: get(Stage::Planner)?,
            calculator: get(Stage::Calculator)?,
            coder: get(Stage::Coder)?,
        })
    }

    /// Reads `<stage>.txt` files from `dir`.
    pub fn load(dir: &Path) -> std::io::Result<Self> {
        Self::from_texts(|stage| std::fs::read_to_string(dir.join(format!("{stage}.txt"))))
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::from_texts(|stage| Ok(BUILTIN.iter().find(|(s, _)| *s == stage).unwrap().1.to_string()))
            .expect("built-in templates are well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planscript::SIGNATURES;

    #[test]
    fn every_skill_documented() {
        for s in SIGNATURES {
            assert!(skill_doc(s.name).unwrap().starts_with(&format!("{}(", s.name)));
        }
    }

    #[test]
    fn templates_carry_their_obligations() {
        let p = PromptSet::default();
        assert!(p.analyzer.system.contains("Analysis:") && p.analyzer.system.contains("Description:"));
        assert!(p.planner.system.contains("{{skills}}") && p.planner.system.contains("Plan:"));
        assert!(p.calculator.system.contains("Rules:") && p.calculator.system.contains("Answer:"));
        assert!(p.coder.system.contains("{{grammar}}") && p.coder.user.contains("{{plan}}"));
    }

    #[test]
    fn render_substitutes() {
        let t = PromptTemplate::parse("[system]\nskills: {{skills}}\n[user]\n{{description}}\n\n{{plan}}\n").unwrap();
        let m = t.render(&[("skills", "S"), ("description", "D"), ("plan", "P")]);
        assert_eq!(m[0].content, "skills: S");
        assert_eq!(m[1].content, "D\n\nP");
    }
}
