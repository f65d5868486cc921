use crate::{BackendArgs, BackendKind, Failure};
use anyhow::{anyhow, Context};
use toolcraft::llm::{Backend, LiveBackend, LiveConfig, ReplayBackend, Stage, StubBackend};
use toolcraft::pipeline::ModelSettings;

const STUB_ANALYZER: &str = "Analysis:\nNo analysis is available from the stub backend.\n\nDescription:\nNone.\n";
const STUB_PLANNER: &str = "Description:\nQuery the scene only.\n\nPlan:\n1. get_position of the first object\n";
const STUB_CALCULATOR: &str = "Description:\nNo motion.\n\nAnswer:\nNo parameters are needed.\n";
const STUB_CODER: &str = "```plan\n# the stub backend performs no actions\n```\n";

/// Builds the selected backend and the model settings sent with each request.
pub fn build(args: &BackendArgs) -> Result<(Box<dyn Backend>, ModelSettings), Failure> {
    let settings = ModelSettings { model_id: args.model.clone(), ..ModelSettings::default() };
    let backend: Box<dyn Backend> = match args.backend {
        BackendKind::Replay => {
            let dir = args.fixture.as_ref().ok_or_else(|| Failure::usage(anyhow!("--backend replay needs --fixture <dir>")))?;
            let replay = ReplayBackend::from_dir(dir).with_context(|| format!("loading fixtures from {}", dir.display()))?;
            if replay.is_empty() {
                return Err(Failure::usage(anyhow!("no fixtures found under {}", dir.display())));
            }
            Box::new(replay.strict(args.strict))
        }
        BackendKind::Stub => Box::new(
            StubBackend::new()
                .stage(Stage::Analyzer, &[STUB_ANALYZER])
                .stage(Stage::Planner, &[STUB_PLANNER])
                .stage(Stage::Calculator, &[STUB_CALCULATOR])
                .stage(Stage::Coder, &[STUB_CODER]),
        ),
        BackendKind::Live => {
            let mut config = LiveConfig { credential_env: args.credential_env.clone(), ..LiveConfig::default() };
            if let Some(e) = &args.endpoint {
                config.endpoint = e.clone();
            }
            Box::new(LiveBackend::new(config)?)
        }
    };
    Ok((backend, settings))
}
