use super::{score_key_concepts, EvalError, FailureClass, GoldSet, Ratio, TrialRecord};
use crate::pipeline::{AnalyzerOutput, Method};
use crate::scene::TASK_SLUGS;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub method: Method,
    pub cells: Vec<Option<Ratio>>,
    pub average: Option<Ratio>,
}

/// Methods by tasks, with an average column over the defined cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportTable {
    pub tasks: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    fn build(methods: &[Method], tasks: &[String], cell: impl Fn(Method, &str) -> Option<Ratio>) -> Self {
        let rows = methods
            .iter()
            .map(|&m| {
                let cells: Vec<Option<Ratio>> = tasks.iter().map(|t| cell(m, t)).collect();
                let defined: Vec<Ratio> = cells.iter().flatten().copied().collect();
                ReportRow { method: m, average: Ratio::mean(&defined), cells }
            })
            .collect();
        ReportTable { tasks: tasks.to_vec(), rows }
    }

    /// Success rate per cell: successes over trials.
    pub fn success(records: &[TrialRecord], methods: &[Method], tasks: &[String]) -> Self {
        Self::build(methods, tasks, |m, t| {
            let rs: Vec<_> = records.iter().filter(|r| r.method == m && r.task == t).collect();
            (!rs.is_empty()).then(|| Ratio::new(rs.iter().filter(|r| r.success).count() as u128, rs.len() as u128))
        })
    }

    /// Key-concept accuracy for methods that run the Analyzer. A trial whose
    /// Analyzer failed counts as an output without concepts.
    pub fn key_concepts(records: &[TrialRecord], methods: &[Method], tasks: &[String], gold: &GoldSet) -> Self {
        let methods: Vec<Method> = methods.iter().copied().filter(|m| m.config().use_analyzer).collect();
        Self::build(&methods, tasks, |m, t| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.method == m && r.task == t).collect();
            let g = gold.get(&rs.first()?.gold).ok()?;
            let outputs: Vec<AnalyzerOutput> = rs
                .iter()
                .map(|r| {
                    r.analyzer.clone().unwrap_or(AnalyzerOutput {
                        analysis: String::new(),
                        concepts: vec![],
                        description_section: String::new(),
                    })
                })
                .collect();
            score_key_concepts(&outputs, &g.key_concept)
        })
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["Method".to_string()];
        h.extend(self.tasks.iter().cloned());
        h.push("Average".into());
        h
    }
}

fn cell(r: Option<Ratio>) -> String {
    r.map(|r| r.to_string()).unwrap_or_else(|| "n/a".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(EvalError::UnsupportedFormat(s.to_string())),
        }
    }
}

const ERROR_CLASSES: [FailureClass; 4] = [FailureClass::ToolUse, FailureClass::Logical, FailureClass::Numerical, FailureClass::StageFailure];

fn task_rank(t: &str) -> (usize, &str) {
    let base = TASK_SLUGS.iter().position(|s| t.starts_with(s)).unwrap_or(TASK_SLUGS.len());
    (base, t)
}

struct Tables {
    success: ReportTable,
    concepts: ReportTable,
    /// (method, task or None for the mean over tasks, class) -> count
    errors: Vec<(Method, Option<String>, [Ratio; 4])>,
}

fn tables(records: &[TrialRecord], gold: &GoldSet) -> Tables {
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| records.iter().any(|r| r.method == *m)).collect();
    let mut tasks: Vec<String> = records.iter().map(|r| r.task.clone()).collect();
    tasks.sort_by(|a, b| task_rank(a).cmp(&task_rank(b)));
    tasks.dedup();
    let mut errors = Vec::new();
    for &m in &methods {
        let mut per_task = Vec::new();
        for t in &tasks {
            let counts = ERROR_CLASSES.map(|c| {
                Ratio::new(records.iter().filter(|r| r.method == m && &r.task == t && r.failure_class == c).count() as u128, 1)
            });
            per_task.push(counts);
            errors.push((m, Some(t.clone()), counts));
        }
        let mean = std::array::from_fn(|i| Ratio::mean(&per_task.iter().map(|c| c[i]).collect::<Vec<_>>()).unwrap_or(Ratio::new(0, 1)));
        errors.push((m, None, mean));
    }
    Tables {
        success: ReportTable::success(records, &methods, &tasks),
        concepts: ReportTable::key_concepts(records, &methods, &tasks, gold),
        errors,
    }
}

fn markdown_table(out: &mut String, t: &ReportTable) {
    let h = t.header();
    let _ = writeln!(out, "| {} |", h.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(h.len()));
    for r in &t.rows {
        let mut cells = vec![r.method.slug().to_string()];
        cells.extend(r.cells.iter().map(|c| cell(*c)));
        cells.push(cell(r.average));
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
}

/// Success table, key-concept table and error breakdown in one document.
pub fn render_report(records: &[TrialRecord], gold: &GoldSet, format: ReportFormat) -> Result<String, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let t = tables(records, gold);
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            out.push_str("## Success rate\n\n");
            markdown_table(&mut out, &t.success);
            out.push_str("\n## Key-concept accuracy\n\n");
            if t.concepts.rows.is_empty() {
                out.push_str("No method ran the Analyzer.\n");
            } else {
                markdown_table(&mut out, &t.concepts);
            }
            out.push_str("\n## Error breakdown\n\n| Method | Task |");
            for c in ERROR_CLASSES {
                let _ = write!(out, " {c} |");
            }
            out.push('\n');
            out.push_str(&"|---".repeat(2 + ERROR_CLASSES.len()));
            out.push_str("|\n");
            for (m, task, counts) in &t.errors {
                let label = task.as_deref().unwrap_or("mean per task");
                let cs: Vec<String> = counts.iter().map(|c| if task.is_some() { c.format(0) } else { c.to_string() }).collect();
                let _ = writeln!(out, "| {} | {} | {} |", m.slug(), label, cs.join(" | "));
            }
        }
        ReportFormat::Csv => {
            out.push_str("table,method,task,metric,value\n");
            for (name, table) in [("success", &t.success), ("key_concept", &t.concepts)] {
                for r in &table.rows {
                    for (task, c) in table.tasks.iter().zip(&r.cells) {
                        let _ = writeln!(out, "{name},{},{task},rate,{}", r.method.slug(), cell(*c));
                    }
                    let _ = writeln!(out, "{name},{},average,rate,{}", r.method.slug(), cell(r.average));
                }
            }
            for (m, task, counts) in &t.errors {
                for (c, v) in ERROR_CLASSES.iter().zip(counts) {
                    match task {
                        Some(task) => {
                            let _ = writeln!(out, "errors,{},{task},{c},{}", m.slug(), v.format(0));
                        }
                        None => {
                            let _ = writeln!(out, "errors,{},mean,{c},{v}", m.slug());
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Writes `report.<ext>` into `dir` for each format.
pub fn emit_report(dir: &Path, records: &[TrialRecord], gold: &GoldSet, formats: &[ReportFormat]) -> Result<Vec<PathBuf>, EvalError> {
    let mut paths = Vec::new();
    for &f in formats {
        let text = render_report(records, gold, f)?;
        let path = dir.join(format!("report.{}", f.extension()));
        std::fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}
