use super::{EvalError, Harness, Ratio, ReportTable, TrialRecord};
use crate::llm::Backend;
use crate::pipeline::Method;
use crate::scene::{builtin_task, discriminative_variants, TaskSpec};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    /// Trials per (task, method).
    pub n: usize,
    /// Trial `i` runs with seed `base_seed + i`.
    pub base_seed: u64,
    pub parallelism: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { n: 10, base_seed: 0, parallelism: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub table: ReportTable,
    pub records: Vec<TrialRecord>,
}

/// Runs `jobs` on a pool of `parallelism` threads, keeping input order.
fn run_parallel<T: Send, R: Send>(jobs: Vec<T>, parallelism: usize, f: impl Fn(T) -> R + Send + Sync) -> Vec<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build().expect("thread pool");
    pool.install(|| jobs.into_par_iter().map(f).collect())
}

impl Harness {
    pub fn run_benchmark(&self, tasks: &[TaskSpec], methods: &[Method], backend: &dyn Backend, config: BenchConfig) -> BenchmarkResult {
        let mut jobs = Vec::new();
        for m in methods {
            for t in tasks {
                for i in 0..config.n {
                    jobs.push((t, *m, config.base_seed + i as u64));
                }
            }
        }
        let records = run_parallel(jobs, config.parallelism, |(t, m, seed)| self.run_trial(t, m, backend, seed));
        let task_names: Vec<String> = tasks.iter().map(TaskSpec::slug).collect();
        BenchmarkResult { table: ReportTable::success(&records, methods, &task_names), records }
    }

    /// Tool-use rate per variant of a discriminative family, beside the gold
    /// expectation. `n == 0` gives an empty result.
    pub fn run_discriminative(&self, family: &str, method: Method, backend: &dyn Backend, n: usize) -> Result<Vec<VariantRate>, EvalError> {
        let variants = discriminative_variants();
        let (_, pair) = variants.iter().find(|(f, _)| *f == family).ok_or_else(|| EvalError::UnknownVariant(family.to_string()))?;
        if n == 0 {
            return Ok(vec![]);
        }
        let mut out = Vec::new();
        for (slug, _) in pair {
            let task = builtin_task(slug).map_err(|_| EvalError::UnknownVariant(slug.to_string()))?;
            let gold = self.gold.get(&task.gold)?;
            let records: Vec<TrialRecord> = (0..n).map(|i| self.run_trial(&task, method, backend, i as u64)).collect();
            let using = records
                .iter()
                .filter(|r| r.manipulated.iter().any(|o| gold.target_object.as_deref() != Some(o.as_str())))
                .count();
            out.push(VariantRate {
                variant: slug.to_string(),
                tool_use_rate: Ratio::new(using as u128, n as u128),
                oracle_uses_tool: gold.oracle_uses_tool,
                success_rate: Ratio::new(records.iter().filter(|r| r.success).count() as u128, n as u128),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariantRate {
    pub variant: String,
    pub tool_use_rate: Ratio,
    pub oracle_uses_tool: bool,
    pub success_rate: Ratio,
}

pub fn run_benchmark(tasks: &[TaskSpec], methods: &[Method], backend: &dyn Backend, config: BenchConfig) -> BenchmarkResult {
    Harness::default().run_benchmark(tasks, methods, backend, config)
}

pub fn run_discriminative(family: &str, method: Method, backend: &dyn Backend, n: usize) -> Result<Vec<VariantRate>, EvalError> {
    Harness::default().run_discriminative(family, method, backend, n)
}
