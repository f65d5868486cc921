//! Trials, benchmarks, key-concept scoring, failure classification and
//! report tables.

mod bench;
mod classify;
mod gold;
mod ratio;
mod records;
mod report;
mod scoring;
mod trial;

pub use bench::{run_benchmark, run_discriminative, BenchConfig, BenchmarkResult, VariantRate};
pub use classify::{classify_error, parameter_deviations};
pub use gold::{GoldAnnotation, GoldConcept, GoldParameter, GoldSet};
pub use ratio::Ratio;
pub use records::{load_records, persist_records, record_dir, run_timestamp};
pub use report::{emit_report, render_report, ReportFormat, ReportRow, ReportTable};
pub use scoring::{concept_matches, score_key_concepts};
pub use trial::{execute_script, manipulated_objects, Execution, FailureClass, Harness, TrialRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold annotation for `{0}`")]
    MissingGold(String),
    #[error("record is successful; nothing to classify")]
    Successful,
    #[error("record has no script")]
    NoScript,
    #[error("unknown discriminative family or variant `{0}`")]
    UnknownVariant(String),
    #[error("unsupported report format `{0}`")]
    UnsupportedFormat(String),
    #[error("no records")]
    NoRecords,
    #[error("malformed gold file: {0}")]
    Gold(String),
    #[error("malformed record {path}: {message}")]
    Record { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
