use crate::divergence::first_divergence;
use crate::{backend, BackendArgs, Failure, Format, Outcome};
use anyhow::{anyhow, Context};
use std::path::{Path, PathBuf};
use toolcraft::eval::{
    emit_report, execute_script, load_records, persist_records, render_report, run_timestamp, BenchConfig, Harness,
    ReportFormat, TrialRecord,
};
use toolcraft::pipeline::Method;
use toolcraft::planscript::ExecutionTrace;
use toolcraft::scene::{builtin_task, load_scene_or_task, validate_scene, TaskSpec, TASK_SLUGS};
use toolcraft::sim::SimConfig;

fn task(slug: &str) -> Result<TaskSpec, Failure> {
    builtin_task(slug).map_err(|_| {
        Failure::usage(anyhow!("unknown task `{slug}` (expected one of: {})", TASK_SLUGS.join(", ")))
    })
}

fn method(name: &str) -> Result<Method, Failure> {
    name.parse::<Method>().map_err(|_| {
        let all: Vec<&str> = Method::ALL.iter().map(|m| m.slug()).collect();
        Failure::usage(anyhow!("unknown method `{name}` (expected one of: {})", all.join(", ")))
    })
}

fn harness(args: &BackendArgs) -> Result<(Harness, Box<dyn toolcraft::llm::Backend>), Failure> {
    let (backend, settings) = backend::build(args)?;
    let mut h = Harness::default();
    h.pipeline.settings = settings;
    Ok((h, backend))
}

fn summary(r: &TrialRecord) -> String {
    let mut s = format!(
        "{} / {} / seed {}: {} ({} model calls)",
        r.task,
        r.method,
        r.seed,
        if r.success { "success" } else { "failure" },
        r.transcript.entries.len()
    );
    if !r.success {
        s.push_str(&format!("\n  class: {}", r.failure_class.as_str()));
    }
    if let Some(e) = &r.stage_error {
        s.push_str(&format!("\n  {e}"));
    }
    if let Some(e) = r.trace.as_ref().and_then(|t| t.error()) {
        s.push_str(&format!("\n  halted: {e}"));
    }
    s
}

pub fn run(slug: &str, method_name: &str, args: &BackendArgs, seed: u64, out: Option<&Path>) -> Outcome {
    let task = task(slug)?;
    let m = method(method_name)?;
    let (h, backend) = harness(args)?;
    let record = h.run_trial(&task, m, backend.as_ref(), seed);
    println!("{}", summary(&record));
    if let Some(root) = out {
        persist_records(root, std::slice::from_ref(&record)).context("writing trial record")?;
    }
    Ok(record.success)
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    tasks: &[String],
    methods: &[String],
    args: &BackendArgs,
    n: usize,
    seed: u64,
    parallelism: usize,
    out: &Path,
    no_timestamp: bool,
) -> Outcome {
    if n == 0 {
        return Err(Failure::usage(anyhow!("--n must be at least 1")));
    }
    let tasks: Vec<TaskSpec> = if tasks.is_empty() {
        TASK_SLUGS.iter().map(|s| task(s)).collect::<Result<_, _>>()?
    } else {
        tasks.iter().map(|s| task(s)).collect::<Result<_, _>>()?
    };
    let methods: Vec<Method> =
        if methods.is_empty() { Method::ALL.to_vec() } else { methods.iter().map(|m| method(m)).collect::<Result<_, _>>()? };
    let (h, backend) = harness(args)?;
    let config = BenchConfig { n, base_seed: seed, parallelism };
    let result = h.run_benchmark(&tasks, &methods, backend.as_ref(), config);

    let dir = if no_timestamp { out.to_path_buf() } else { out.join(run_timestamp()) };
    let records_dir = dir.join("records");
    std::fs::create_dir_all(&records_dir).with_context(|| format!("creating {}", records_dir.display()))?;
    persist_records(&records_dir, &result.records).context("writing trial records")?;
    emit_report(&dir, &result.records, &h.gold, &[ReportFormat::Csv, ReportFormat::Markdown]).context("writing report")?;
    print!("{}", render_report(&result.records, &h.gold, ReportFormat::Markdown)?);
    eprintln!("wrote {}", dir.display());
    Ok(true)
}

pub fn discriminative(family: &str, method_name: &str, args: &BackendArgs, n: usize) -> Outcome {
    let m = method(method_name)?;
    let (h, backend) = harness(args)?;
    let rates = h.run_discriminative(family, m, backend.as_ref(), n).map_err(Failure::usage)?;
    println!("| Variant | Tool-use rate | Oracle uses tool | Success rate |");
    println!("|---|---|---|---|");
    for r in &rates {
        println!("| {} | {} | {} | {} |", r.variant, r.tool_use_rate, if r.oracle_uses_tool { "yes" } else { "no" }, r.success_rate);
    }
    Ok(true)
}

/// Script text, stored trace and (if present) the record next to them.
fn replay_inputs(path: &Path) -> anyhow::Result<(String, ExecutionTrace, Option<TrialRecord>)> {
    let (script, dir) = if path.is_dir() {
        (path.join("script.plan"), path.to_path_buf())
    } else {
        (path.to_path_buf(), path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")))
    };
    let source = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
    let trace_path = dir.join("trace.json");
    let trace_text = std::fs::read_to_string(&trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let trace = ExecutionTrace::from_json(&trace_text).with_context(|| format!("parsing {}", trace_path.display()))?;
    let record_path = dir.join("record.json");
    let record = if record_path.is_file() {
        let text = std::fs::read_to_string(&record_path)?;
        Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", record_path.display()))?)
    } else {
        None
    };
    Ok((source, trace, record))
}

pub fn replay(path: &Path, slug: Option<&str>, scene: Option<&Path>, seed: Option<u64>) -> Outcome {
    let (source, stored, record) = replay_inputs(path)?;
    let slug = match (slug, &record) {
        (Some(s), _) => s.to_string(),
        (None, Some(r)) => r.task.clone(),
        (None, None) => return Err(Failure::usage(anyhow!("no record.json next to the script; pass --task"))),
    };
    let mut task = task(&slug)?;
    if let Some(p) = scene {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        task.scene = load_scene_or_task(&text).with_context(|| format!("loading {}", p.display()))?;
    }
    let seed = seed.or(record.as_ref().map(|r| r.seed)).unwrap_or(0);
    let exec = match execute_script(&task, &source, &SimConfig::default().with_seed(seed)) {
        Ok(e) => e,
        Err(e) => {
            println!("diverged: the script no longer runs: {e}");
            return Ok(false);
        }
    };
    match first_divergence(&stored, &exec.trace) {
        None => {
            println!("match: {} statements, final snapshot {}", exec.trace.entries.len(), exec.trace.final_snapshot().unwrap_or("-"));
            Ok(true)
        }
        Some(d) => {
            println!("diverged at statement {}: `{}`\n  {}", d.entry + 1, d.source, d.reason);
            Ok(false)
        }
    }
}

pub fn validate(paths: &[PathBuf]) -> Outcome {
    let mut scenes = Vec::new();
    if paths.is_empty() {
        for t in toolcraft::scene::builtin_tasks() {
            scenes.push((t.slug(), t.scene));
        }
    } else {
        for p in paths {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let scene = load_scene_or_task(&text).with_context(|| format!("loading {}", p.display()))?;
            scenes.push((p.display().to_string(), scene));
        }
    }
    let mut clean = true;
    for (name, scene) in &scenes {
        let report = validate_scene(scene);
        if report.is_clean() {
            println!("{name}: ok");
        } else {
            clean = false;
            println!("{name}: {} problem(s)", report.violations.len());
            for v in &report.violations {
                println!("  {v}");
            }
        }
    }
    Ok(clean)
}

pub fn report(records: &Path, format: Format, out: Option<&Path>) -> Outcome {
    if !records.is_dir() {
        return Err(Failure::usage(anyhow!("{} is not a directory", records.display())));
    }
    let root = if records.join("records").is_dir() { records.join("records") } else { records.to_path_buf() };
    let loaded = load_records(&root).with_context(|| format!("loading records from {}", root.display()))?;
    let gold = toolcraft::eval::GoldSet::default();
    let formats: &[ReportFormat] = match format {
        Format::Markdown => &[ReportFormat::Markdown],
        Format::Csv => &[ReportFormat::Csv],
        Format::Both => &[ReportFormat::Markdown, ReportFormat::Csv],
    };
    for &f in formats {
        print!("{}", render_report(&loaded, &gold, f)?);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        emit_report(dir, &loaded, &gold, formats)?;
    }
    Ok(true)
}
