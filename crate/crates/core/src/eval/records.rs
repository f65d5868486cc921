use super::{EvalError, TrialRecord};
use crate::llm::Transcript;
use crate::planscript::ExecutionTrace;
use std::path::{Path, PathBuf};

/// UTC timestamp used as a run directory name.
pub fn run_timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

/// `<root>/<task>/<method>/<seed>`
pub fn record_dir(root: &Path, r: &TrialRecord) -> PathBuf {
    root.join(&r.task).join(r.method.slug()).join(r.seed.to_string())
}

/// Writes `transcript.json`, `script.plan`, `trace.json` and `record.json`
/// per trial. The script and trace files are skipped when absent.
pub fn persist_records(root: &Path, records: &[TrialRecord]) -> Result<(), EvalError> {
    for r in records {
        let dir = record_dir(root, r);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("transcript.json"), r.transcript.to_json())?;
        if let Some(s) = &r.script {
            std::fs::write(dir.join("script.plan"), s)?;
        }
        if let Some(t) = &r.trace {
            std::fs::write(dir.join("trace.json"), t.to_json())?;
        }
        std::fs::write(dir.join("record.json"), serde_json::to_string_pretty(r).expect("record serializes"))?;
    }
    Ok(())
}

fn read_record(dir: &Path) -> Result<TrialRecord, EvalError> {
    let bad = |message: String| EvalError::Record { path: dir.display().to_string(), message };
    let mut r: TrialRecord =
        serde_json::from_str(&std::fs::read_to_string(dir.join("record.json"))?).map_err(|e| bad(e.to_string()))?;
    let transcript = dir.join("transcript.json");
    if transcript.is_file() {
        r.transcript = Transcript::load(&transcript).map_err(|e| bad(e.to_string()))?;
    }
    let trace = dir.join("trace.json");
    if trace.is_file() {
        r.trace = Some(ExecutionTrace::from_json(&std::fs::read_to_string(trace)?).map_err(|e| bad(e.to_string()))?);
    }
    Ok(r)
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        if e.file_type()?.is_dir() {
            out.push(e.path());
        }
    }
    out.sort();
    Ok(out)
}

/// Reads every `<task>/<method>/<seed>/record.json` under `root`.
pub fn load_records(root: &Path) -> Result<Vec<TrialRecord>, EvalError> {
    let mut out = Vec::new();
    for task in sorted_subdirs(root)? {
        for method in sorted_subdirs(&task)? {
            let mut seeds = sorted_subdirs(&method)?;
            seeds.sort_by_key(|p| p.file_name().and_then(|n| n.to_str()).and_then(|n| n.parse::<u64>().ok()));
            for seed in seeds {
                if seed.join("record.json").is_file() {
                    out.push(read_record(&seed)?);
                }
            }
        }
    }
    Ok(out)
}
