use super::{Backend, CallContext, CompletionRequest, LlmError, Stage, Transcript};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
struct Fixture {
    response: String,
    prompt_hash: Option<String>,
}

type FixtureSet = BTreeMap<(Stage, usize), Fixture>;

/// Serves recorded responses keyed by (stage, per-stage call ordinal).
///
/// Fixture sets are looked up by `(task, method)` first and then fall back to
/// a task-independent set, if one was loaded.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    sets: BTreeMap<(String, String), FixtureSet>,
    fallback: Option<FixtureSet>,
    strict: bool,
}

fn parse_file_name(name: &str) -> Option<(u32, Stage)> {
    let stem = name.strip_suffix(".txt")?;
    let (num, stage) = stem.split_once('-')?;
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((num.parse().ok()?, stage.parse().ok()?))
}

/// Reads `NN-<stage>.txt` files, or `transcript.json` when present.
fn load_set(dir: &Path) -> Result<Option<FixtureSet>, LlmError> {
    let transcript = dir.join("transcript.json");
    if transcript.is_file() {
        return Ok(Some(set_from_transcript(&Transcript::load(&transcript)?)));
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        if let Some((n, stage)) = entry.file_name().to_str().and_then(parse_file_name) {
            files.push((n, stage, entry.path()));
        }
    }
    if files.is_empty() {
        return Ok(None);
    }
    files.sort_by_key(|f| f.0);
    let mut set = FixtureSet::new();
    let mut counts: BTreeMap<Stage, usize> = BTreeMap::new();
    for (_, stage, path) in files {
        let ordinal = counts.entry(stage).or_default();
        set.insert((stage, *ordinal), Fixture { response: std::fs::read_to_string(&path)?, prompt_hash: None });
        *ordinal += 1;
    }
    Ok(Some(set))
}

fn set_from_transcript(t: &Transcript) -> FixtureSet {
    let mut set = FixtureSet::new();
    let mut counts: BTreeMap<Stage, usize> = BTreeMap::new();
    for e in &t.entries {
        let ordinal = counts.entry(e.stage).or_default();
        set.insert((e.stage, *ordinal), Fixture { response: e.response.clone(), prompt_hash: Some(e.request.prompt_hash()) });
        *ordinal += 1;
    }
    set
}

impl ReplayBackend {
    /// Loads a fixture directory. A directory holding stage files directly is
    /// used for every trial; otherwise it is read as `<task>/<method>/`.
    pub fn from_dir(root: &Path) -> Result<Self, LlmError> {
        if !root.is_dir() {
            return Err(LlmError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("fixture directory {} not found", root.display()),
            )));
        }
        let mut backend = ReplayBackend::default();
        if let Some(set) = load_set(root)? {
            backend.fallback = Some(set);
            return Ok(backend);
        }
        for task in std::fs::read_dir(root)? {
            let task = task?;
            if !task.file_type()?.is_dir() {
                continue;
            }
            for method in std::fs::read_dir(task.path())? {
                let method = method?;
                if !method.file_type()?.is_dir() {
                    continue;
                }
                if let Some(set) = load_set(&method.path())? {
                    let key = (task.file_name().to_string_lossy().into_owned(), method.file_name().to_string_lossy().into_owned());
                    backend.sets.insert(key, set);
                }
            }
        }
        Ok(backend)
    }

    pub fn from_transcript(transcript: &Transcript) -> Self {
        ReplayBackend { fallback: Some(set_from_transcript(transcript)), ..Default::default() }
    }

    /// Task-independent fixtures from an ordered list of stage responses.
    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = (Stage, S)>,
        S: Into<String>,
    {
        let mut set = FixtureSet::new();
        let mut counts: BTreeMap<Stage, usize> = BTreeMap::new();
        for (stage, text) in responses {
            let ordinal = counts.entry(stage).or_default();
            set.insert((stage, *ordinal), Fixture { response: text.into(), prompt_hash: None });
            *ordinal += 1;
        }
        ReplayBackend { fallback: Some(set), ..Default::default() }
    }

    /// Requires each request's prompt hash to equal the recorded one, where a
    /// hash was recorded.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn has_fixtures(&self, task: &str, method: &str) -> bool {
        self.sets.contains_key(&(task.to_string(), method.to_string())) || self.fallback.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty() && self.fallback.is_none()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, ctx: &CallContext, request: &CompletionRequest) -> Result<String, LlmError> {
        let miss = || LlmError::ReplayMiss { task: ctx.task.clone(), method: ctx.method.clone(), stage: ctx.stage, ordinal: ctx.ordinal };
        let set = self.sets.get(&(ctx.task.clone(), ctx.method.clone())).or(self.fallback.as_ref()).ok_or_else(miss)?;
        let fixture = set.get(&(ctx.stage, ctx.ordinal)).ok_or_else(miss)?;
        if self.strict {
            if let Some(h) = &fixture.prompt_hash {
                if *h != request.prompt_hash() {
                    return Err(LlmError::HashMismatch { stage: ctx.stage, ordinal: ctx.ordinal });
                }
            }
        }
        Ok(fixture.response.clone())
    }
}

/// Returns canned text. Per-stage lists are indexed by call ordinal and the
/// last entry is reused once a list runs out.
#[derive(Debug, Clone, Default)]
pub struct StubBackend {
    default: Option<String>,
    stages: BTreeMap<Stage, Vec<String>>,
    failing: Vec<Stage>,
}

impl StubBackend {
    pub fn fixed(text: impl Into<String>) -> Self {
        StubBackend { default: Some(text.into()), ..Default::default() }
    }

    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(mut self, stage: Stage, responses: &[&str]) -> Self {
        self.stages.insert(stage, responses.iter().map(|s| s.to_string()).collect());
        self
    }

    /// Makes every call for `stage` fail with a transport error.
    pub fn fail(mut self, stage: Stage) -> Self {
        self.failing.push(stage);
        self
    }
}

impl Backend for StubBackend {
    fn complete(&self, ctx: &CallContext, _request: &CompletionRequest) -> Result<String, LlmError> {
        if self.failing.contains(&ctx.stage) {
            return Err(LlmError::Transport { attempts: 1, message: format!("stub configured to fail at {}", ctx.stage) });
        }
        if let Some(list) = self.stages.get(&ctx.stage).filter(|l| !l.is_empty()) {
            return Ok(list[ctx.ordinal.min(list.len() - 1)].clone());
        }
        self.default.clone().ok_or(LlmError::ReplayMiss {
            task: ctx.task.clone(),
            method: ctx.method.clone(),
            stage: ctx.stage,
            ordinal: ctx.ordinal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, Session};

    fn req(text: &str) -> CompletionRequest {
        CompletionRequest { model_id: "m".into(), temperature: 0.0, messages: vec![ChatMessage::user(text)], max_tokens: 8 }
    }

    #[test]
    fn replay_by_stage_and_ordinal() {
        let backend = ReplayBackend::from_responses([
            (Stage::Analyzer, "first"),
            (Stage::Planner, "plan"),
            (Stage::Planner, "plan again"),
        ]);
        let mut s = Session::new(&backend, "t", "full");
        assert_eq!(s.complete(Stage::Analyzer, req("x")).unwrap(), "first");
        assert_eq!(s.complete(Stage::Planner, req("y")).unwrap(), "plan");
        assert_eq!(s.complete(Stage::Planner, req("z")).unwrap(), "plan again");
        assert!(matches!(s.complete(Stage::Planner, req("w")), Err(LlmError::ReplayMiss { ordinal: 2, .. })));
        assert!(matches!(s.complete(Stage::Coder, req("w")), Err(LlmError::ReplayMiss { .. })));
        assert_eq!(s.calls(), 3);
    }

    #[test]
    fn directory_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat");
        std::fs::create_dir(&flat).unwrap();
        std::fs::write(flat.join("01-analyzer.txt"), "A").unwrap();
        std::fs::write(flat.join("02-coder.txt"), "C0").unwrap();
        std::fs::write(flat.join("03-coder.txt"), "C1").unwrap();
        std::fs::write(flat.join("notes.md"), "ignored").unwrap();
        let b = ReplayBackend::from_dir(&flat).unwrap();
        let ctx = |stage, ordinal| CallContext { task: "any".into(), method: "any".into(), stage, ordinal };
        assert_eq!(b.complete(&ctx(Stage::Coder, 1), &req("q")).unwrap(), "C1");

        let nested = dir.path().join("nested");
        std::fs::create_dir_all(nested.join("cube-lifting/full")).unwrap();
        std::fs::write(nested.join("cube-lifting/full/01-planner.txt"), "P").unwrap();
        let b = ReplayBackend::from_dir(&nested).unwrap();
        let c = CallContext { task: "cube-lifting".into(), method: "full".into(), stage: Stage::Planner, ordinal: 0 };
        assert_eq!(b.complete(&c, &req("q")).unwrap(), "P");
        let other = CallContext { task: "milk-reaching".into(), ..c };
        assert!(matches!(b.complete(&other, &req("q")), Err(LlmError::ReplayMiss { .. })));
        assert!(ReplayBackend::from_dir(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn strict_mode_pins_prompts() {
        let stub = StubBackend::fixed("ok");
        let mut s = Session::new(&stub, "t", "m");
        s.complete(Stage::Coder, req("original")).unwrap();
        let t = s.into_transcript();
        let ctx = CallContext { task: "t".into(), method: "m".into(), stage: Stage::Coder, ordinal: 0 };
        let lax = ReplayBackend::from_transcript(&t);
        assert_eq!(lax.complete(&ctx, &req("edited")).unwrap(), "ok");
        let strict = lax.strict(true);
        assert_eq!(strict.complete(&ctx, &req("original")).unwrap(), "ok");
        assert!(matches!(strict.complete(&ctx, &req("edited")), Err(LlmError::HashMismatch { .. })));
    }

    #[test]
    fn stub_reuses_last_response() {
        let stub = StubBackend::new().stage(Stage::Coder, &["a", "b"]);
        let ctx = |ordinal| CallContext { task: "t".into(), method: "m".into(), stage: Stage::Coder, ordinal };
        assert_eq!(stub.complete(&ctx(0), &req("q")).unwrap(), "a");
        assert_eq!(stub.complete(&ctx(5), &req("q")).unwrap(), "b");
        let analyzer = CallContext { stage: Stage::Analyzer, ..ctx(0) };
        assert!(stub.complete(&analyzer, &req("q")).is_err());
    }
}
