use super::{classify_error, GoldSet};
use crate::llm::{Backend, Transcript};
use crate::pipeline::{AnalyzerOutput, Method, Pipeline};
use crate::planscript::{interpret, parse, skill_token_string, static_check, ExecutionTrace, Limits};
use crate::scene::TaskSpec;
use crate::sim::{SimConfig, World};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    None,
    ToolUse,
    Logical,
    Numerical,
    StageFailure,
}

impl FailureClass {
    pub const ALL: [FailureClass; 5] =
        [FailureClass::None, FailureClass::ToolUse, FailureClass::Logical, FailureClass::Numerical, FailureClass::StageFailure];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureClass::None => "none",
            FailureClass::ToolUse => "tool_use",
            FailureClass::Logical => "logical",
            FailureClass::Numerical => "numerical",
            FailureClass::StageFailure => "stage_failure",
        }
    }
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One end-to-end run. The transcript and trace are stored in their own
/// files next to `record.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub task: String,
    pub gold: String,
    pub method: Method,
    pub seed: u64,
    #[serde(skip)]
    pub transcript: Transcript,
    pub script: Option<String>,
    #[serde(skip)]
    pub trace: Option<ExecutionTrace>,
    pub success: bool,
    pub failure_class: FailureClass,
    pub stage_error: Option<String>,
    pub analyzer: Option<AnalyzerOutput>,
    /// Objects grasped or displaced during execution.
    pub manipulated: Vec<String>,
    /// Mutating-call token string of the script.
    pub skill_tokens: Option<String>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub trace: ExecutionTrace,
    pub success: bool,
    pub manipulated: Vec<String>,
    pub skill_tokens: String,
}

/// Objects displaced from their initial pose plus objects named in a
/// `grasped …` phase.
pub fn manipulated_objects(world: &World, trace: &ExecutionTrace) -> Vec<String> {
    let mut set: BTreeSet<String> = world.moved_objects().into_iter().collect();
    for call in trace.calls() {
        for p in &call.phases {
            if let Some(name) = p.strip_prefix("grasped ") {
                set.insert(name.to_string());
            }
        }
    }
    set.into_iter().collect()
}

/// Parses, checks and runs `source` in a fresh world for `task`.
pub fn execute_script(task: &TaskSpec, source: &str, config: &SimConfig) -> Result<Execution, String> {
    let program = parse(source).map_err(|e| format!("parse error at {e}"))?;
    let report = static_check(&program, &task.scene.robot);
    if !report.is_clean() {
        return Err(format!("static check failed: {}", report.to_string().trim_end()));
    }
    let mut world = World::new(task.scene.clone(), *config);
    let trace = interpret(&program, &mut world, Limits::default());
    Ok(Execution {
        success: world.is_success(&task.success_check),
        manipulated: manipulated_objects(&world, &trace),
        skill_tokens: skill_token_string(&program),
        trace,
    })
}

/// Everything a trial needs besides the task and the backend.
#[derive(Debug, Clone, Default)]
pub struct Harness {
    pub pipeline: Pipeline,
    pub sim: SimConfig,
    pub gold: GoldSet,
}

impl Harness {
    pub fn run_trial(&self, task: &TaskSpec, method: Method, backend: &dyn Backend, seed: u64) -> TrialRecord {
        let start = Instant::now();
        let mut record = TrialRecord {
            task: task.slug(),
            gold: task.gold.clone(),
            method,
            seed,
            transcript: Transcript::default(),
            script: None,
            trace: None,
            success: false,
            failure_class: FailureClass::StageFailure,
            stage_error: None,
            analyzer: None,
            manipulated: vec![],
            skill_tokens: None,
            wall_ms: 0,
        };
        match self.pipeline.run(task, backend, method) {
            Err(f) => {
                record.stage_error = Some(f.to_string());
                record.transcript = f.transcript;
            }
            Ok(out) => {
                record.transcript = out.transcript;
                record.analyzer = out.analyzer;
                match execute_script(task, &out.source, &self.sim.with_seed(seed)) {
                    Err(e) => record.stage_error = Some(e),
                    Ok(exec) => {
                        record.success = exec.success;
                        record.manipulated = exec.manipulated;
                        record.skill_tokens = Some(exec.skill_tokens);
                        record.trace = Some(exec.trace);
                        record.failure_class = FailureClass::None;
                    }
                }
                record.script = Some(out.source);
            }
        }
        if record.trace.is_some() && !record.success {
            record.failure_class = match self.gold.get(&record.gold) {
                Ok(g) => classify_error(&record, g).unwrap_or(FailureClass::Logical),
                Err(_) => FailureClass::Logical,
            };
        }
        record.wall_ms = start.elapsed().as_millis() as u64;
        record
    }
}
