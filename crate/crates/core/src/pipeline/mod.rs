//! The Analyzer → Planner → Calculator → Coder chain and its ablations.

mod parse;
mod prompts;

pub use parse::{extract_script, parse_answer, parse_concepts, parse_param_value, parse_plan_steps, parse_two_section};
pub use prompts::{render_skills, skill_doc, PromptSet, PromptTemplate, GRAMMAR};

use crate::llm::{Backend, CompletionRequest, LlmError, Session, Stage, Transcript};
use crate::planscript::{parse as parse_script, static_check, Unit};
use crate::scene::{compose_query, RobotSpec, TaskSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyConcept {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub related_constraint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerOutput {
    pub analysis: String,
    pub concepts: Vec<KeyConcept>,
    pub description_section: String,
}

impl AnalyzerOutput {
    pub fn from_response(text: &str) -> Result<Self, StageError> {
        let (analysis, description_section) = parse_two_section(text, "Analysis:", "Description:")?;
        Ok(AnalyzerOutput { analysis, concepts: parse_concepts(&description_section), description_section })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub skill: String,
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSkeleton {
    pub description: String,
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamValue {
    Scalar { value: f64, unit: Unit },
    Vector { value: [f64; 3], unit: Unit },
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (text, unit) = match self {
            ParamValue::Scalar { value, unit } => (format!("{value}"), unit),
            ParamValue::Vector { value: [x, y, z], unit } => (format!("[{x}, {y}, {z}]"), unit),
        };
        match unit {
            Unit::None => f.write_str(&text),
            u => write!(f, "{text} {}", u.suffix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterizedStep {
    pub step: PlanStep,
    pub parameters: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterizedPlan {
    pub steps: Vec<ParameterizedStep>,
}

impl ParameterizedPlan {
    /// Numbered plan lines with parameters appended after a `|`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!("{}. {}", s.step.index, s.step.skill));
            if !s.step.arguments.is_empty() {
                out.push(' ');
                out.push_str(&s.step.arguments);
            }
            if !s.parameters.is_empty() {
                let ps: Vec<String> = s.parameters.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                out.push_str(" | ");
                out.push_str(&ps.join("; "));
            }
            out.push('\n');
        }
        out
    }
}

const MOTION_SKILLS: [&str; 4] = ["move_to_position", "walk_to_position", "climb_to_position", "push_to_position"];

fn parameter_names(skill: &str) -> &'static [&'static str] {
    match skill {
        "push_to_position" => &["target", "yaw"],
        "move_to_position" | "walk_to_position" | "climb_to_position" => &["target"],
        _ => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AblationConfig {
    pub use_analyzer: bool,
    pub use_planner: bool,
    pub use_calculator: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Full,
    NoAnalyzer,
    NoCalculator,
    PlannerCoder,
    CoderOnly,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Full, Method::NoAnalyzer, Method::NoCalculator, Method::PlannerCoder, Method::CoderOnly];

    pub fn slug(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::NoAnalyzer => "no-analyzer",
            Method::NoCalculator => "no-calculator",
            Method::PlannerCoder => "planner-coder",
            Method::CoderOnly => "coder-only",
        }
    }

    pub fn config(self) -> AblationConfig {
        let (a, p, c) = match self {
            Method::Full => (true, true, true),
            Method::NoAnalyzer => (false, true, true),
            Method::NoCalculator => (true, true, false),
            Method::PlannerCoder => (false, true, false),
            Method::CoderOnly => (false, false, false),
        };
        AblationConfig { use_analyzer: a, use_planner: p, use_calculator: c }
    }

    /// The method with this stage wiring, if it is one of the five.
    pub fn from_config(c: AblationConfig) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.config() == c)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.slug() == s).ok_or_else(|| {
            let names: Vec<_> = Method::ALL.iter().map(|m| m.slug()).collect();
            format!("unknown method `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("missing section `{label}`")]
    MissingSection { label: String },
    #[error("step {step} uses unknown skill `{skill}`")]
    UnknownSkill { step: usize, skill: String },
    #[error("plan has no steps")]
    EmptyPlan,
    #[error("plan step {found} out of order (expected {expected})")]
    NonContiguous { found: usize, expected: usize },
    #[error("answer refers to step {step} but the plan has {steps} steps")]
    StepIndexMismatch { step: usize, steps: usize },
    #[error("parameter `{name}` of step {step} is not numeric")]
    NonNumeric { step: usize, name: String },
    #[error("parameter `{name}` is not accepted by step {step}")]
    UnknownParameter { step: usize, name: String },
    #[error("motion step {step} has no target")]
    MissingTarget { step: usize },
    #[error("script rejected: {diagnostic}")]
    Script { diagnostic: String },
}

impl StageError {
    fn is_format(&self) -> bool {
        matches!(self, StageError::MissingSection { .. } | StageError::Script { .. })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {error}")]
pub struct PipelineFailure {
    pub stage: Stage,
    pub error: StageError,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings { model_id: "gpt-4".into(), temperature: 0.0, max_tokens: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub query: String,
    pub augmented_query: Option<String>,
    pub analyzer: Option<AnalyzerOutput>,
    pub skeleton: Option<PlanSkeleton>,
    pub plan: Option<ParameterizedPlan>,
    pub source: String,
    pub transcript: Transcript,
}

/// L* is L followed by the Analyzer's description section.
pub fn augment_description(query: &str, out: &AnalyzerOutput) -> String {
    if out.description_section.is_empty() {
        return query.to_string();
    }
    let sep = if query.ends_with('\n') { "\n" } else { "\n\n" };
    format!("{query}{sep}Key concepts:\n{}\n", out.description_section)
}

fn format_reminder(stage: Stage) -> String {
    match stage {
        Stage::Analyzer => "Your reply could not be parsed. Answer again with an `Analysis:` section followed by a `Description:` section.".into(),
        Stage::Planner => "Your reply could not be parsed. Answer again with a `Description:` section followed by a `Plan:` section of numbered steps.".into(),
        Stage::Calculator => "Your reply could not be parsed. Answer again with a `Description:` section followed by an `Answer:` section.".into(),
        Stage::Coder => "Reply with the script only, in a ```plan fenced block.".into(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub prompts: PromptSet,
    pub settings: ModelSettings,
}

impl Pipeline {
    fn request(&self, messages: Vec<crate::llm::ChatMessage>) -> CompletionRequest {
        CompletionRequest {
            model_id: self.settings.model_id.clone(),
            temperature: self.settings.temperature,
            messages,
            max_tokens: self.settings.max_tokens,
        }
    }

    /// Calls `stage` and parses the reply; a format failure earns one reprompt
    /// carrying the diagnostic.
    fn call<T>(
        &self,
        session: &mut Session,
        stage: Stage,
        vars: &[(&str, &str)],
        parse: impl Fn(&str) -> Result<T, StageError>,
    ) -> Result<T, StageError> {
        let messages = self.prompts.get(stage).render(vars);
        let first = session.complete(stage, self.request(messages.clone()))?;
        match parse(&first) {
            Err(e) if e.is_format() => {
                let mut retry = messages;
                retry.push(crate::llm::ChatMessage::assistant(first));
                retry.push(crate::llm::ChatMessage::user(format!("{e}. {}", format_reminder(stage))));
                let second = session.complete(stage, self.request(retry))?;
                parse(&second)
            }
            other => other,
        }
    }

    pub fn run_analyzer(&self, session: &mut Session, query: &str) -> Result<AnalyzerOutput, StageError> {
        self.call(session, Stage::Analyzer, &[("query", query)], AnalyzerOutput::from_response)
    }

    /// Returns the skeleton together with the raw response text.
    pub fn run_planner(&self, session: &mut Session, description: &str, robot: &RobotSpec) -> Result<(PlanSkeleton, String), StageError> {
        let skills = render_skills(robot);
        let (desc, plan, raw) = self.call(session, Stage::Planner, &[("skills", &skills), ("description", description)], |t| {
            let (d, p) = parse_two_section(t, "Description:", "Plan:")?;
            Ok((d, p, t.to_string()))
        })?;
        let steps = parse_plan_steps(&plan)?;
        if steps.is_empty() {
            return Err(StageError::EmptyPlan);
        }
        if let Some(bad) = steps.iter().find(|s| !robot.has_skill(&s.skill)) {
            return Err(StageError::UnknownSkill { step: bad.index, skill: bad.skill.clone() });
        }
        Ok((PlanSkeleton { description: desc, steps }, raw))
    }

    pub fn run_calculator(
        &self,
        session: &mut Session,
        description: &str,
        skeleton: &PlanSkeleton,
        robot: &RobotSpec,
    ) -> Result<ParameterizedPlan, StageError> {
        let skills = render_skills(robot);
        let plan_text: String = skeleton
            .steps
            .iter()
            .map(|s| if s.arguments.is_empty() { format!("{}. {}\n", s.index, s.skill) } else { format!("{}. {} {}\n", s.index, s.skill, s.arguments) })
            .collect();
        let answer = self.call(
            session,
            Stage::Calculator,
            &[("skills", &skills), ("description", description), ("plan", plan_text.trim_end())],
            |t| parse_two_section(t, "Description:", "Answer:").map(|(_, a)| a),
        )?;
        let mut params = parse_answer(&answer)?;
        if let Some(&step) = params.keys().find(|&&k| k == 0 || k > skeleton.steps.len()) {
            return Err(StageError::StepIndexMismatch { step, steps: skeleton.steps.len() });
        }
        let mut steps = Vec::new();
        for s in &skeleton.steps {
            let p = params.remove(&s.index).unwrap_or_default();
            let allowed = parameter_names(&s.skill);
            if let Some(name) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(StageError::UnknownParameter { step: s.index, name: name.clone() });
            }
            if MOTION_SKILLS.contains(&s.skill.as_str()) && !p.contains_key("target") {
                return Err(StageError::MissingTarget { step: s.index });
            }
            steps.push(ParameterizedStep { step: s.clone(), parameters: p });
        }
        Ok(ParameterizedPlan { steps })
    }

    /// Returns script source that parses and passes the static check.
    pub fn run_coder(&self, session: &mut Session, description: &str, plan: &str, robot: &RobotSpec) -> Result<String, StageError> {
        let skills = render_skills(robot);
        self.call(
            session,
            Stage::Coder,
            &[("skills", &skills), ("grammar", GRAMMAR.trim_end()), ("description", description), ("plan", plan)],
            |t| {
                let source = extract_script(t);
                let program = parse_script(&source).map_err(|e| StageError::Script { diagnostic: e.to_string() })?;
                let report = static_check(&program, robot);
                if !report.is_clean() {
                    return Err(StageError::Script { diagnostic: report.to_string().trim_end().replace('\n', "; ") });
                }
                Ok(source)
            },
        )
    }

    pub fn run(&self, task: &TaskSpec, backend: &dyn Backend, method: Method) -> Result<PipelineOutput, PipelineFailure> {
        let mut session = Session::new(backend, &task.slug(), method.slug());
        match self.run_stages(task, &mut session, method) {
            Ok(mut out) => {
                out.transcript = session.into_transcript();
                Ok(out)
            }
            Err((stage, error)) => Err(PipelineFailure { stage, error, transcript: session.into_transcript() }),
        }
    }

    fn run_stages(&self, task: &TaskSpec, session: &mut Session, method: Method) -> Result<PipelineOutput, (Stage, StageError)> {
        let config = method.config();
        let robot = &task.scene.robot;
        let query = compose_query(task);
        let mut out = PipelineOutput {
            query: query.clone(),
            augmented_query: None,
            analyzer: None,
            skeleton: None,
            plan: None,
            source: String::new(),
            transcript: Transcript::default(),
        };
        let at = |stage| move |e| (stage, e);

        let description = if config.use_analyzer {
            let a = self.run_analyzer(session, &query).map_err(at(Stage::Analyzer))?;
            let augmented = augment_description(&query, &a);
            out.analyzer = Some(a);
            out.augmented_query = Some(augmented.clone());
            augmented
        } else {
            query.clone()
        };

        let coder_plan = if config.use_planner {
            let (skeleton, raw) = self.run_planner(session, &description, robot).map_err(at(Stage::Planner))?;
            let text = if config.use_calculator {
                let plan = self.run_calculator(session, &description, &skeleton, robot).map_err(at(Stage::Calculator))?;
                let rendered = plan.render();
                out.plan = Some(plan);
                rendered
            } else {
                raw
            };
            out.skeleton = Some(skeleton);
            text
        } else {
            "No plan is given. Write the script directly from the task above.".to_string()
        };

        out.source = self.run_coder(session, &description, coder_plan.trim_end(), robot).map_err(at(Stage::Coder))?;
        Ok(out)
    }
}

/// Runs `method` on `task` with the default prompts and model settings.
pub fn run_pipeline(task: &TaskSpec, backend: &dyn Backend, method: Method) -> Result<PipelineOutput, PipelineFailure> {
    Pipeline::default().run(task, backend, method)
}
