//! Executes a resolved run and writes its artifacts.
//!
//! Per experiment: `<name>.csv` (the data table) and `<name>.json` (the
//! summary, echoing the run hash). Per run: `manifest.json`. Repeated ids
//! get deterministic `-2`, `-3`, ... suffixes in spec order. Nothing is read
//! back between runs, so deleting the output directory and rerunning
//! reproduces every byte.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};

use crate::jval::JVal;
use crate::run::{run_experiment, ExperimentOutput};
use crate::spec::ResolvedSpec;

/// Environment variable naming the worker thread count (default 1).
pub const THREADS_VAR: &str = "LAB_THREADS";

/// Runs all experiments, honoring the thread-count variable, and reduces
/// results back into spec order.
pub fn execute(specs: &[ResolvedSpec]) -> Result<Vec<ExperimentOutput>> {
    let threads = thread_count()?.min(specs.len().max(1));
    if threads <= 1 {
        return specs.iter().map(run_experiment).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ExperimentOutput>>>> =
        Mutex::new((0..specs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= specs.len() {
                    break;
                }
                let result = run_experiment(&specs[index]);
                slots.lock().unwrap()[index] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, slot)| slot.unwrap_or_else(|| bail_missing(i)))
        .collect()
}

fn bail_missing(index: usize) -> Result<ExperimentOutput> {
    Err(anyhow::anyhow!("experiment {index} produced no result"))
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .with_context(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
            if n == 0 {
                bail!("{THREADS_VAR} must be at least 1");
            }
            Ok(n)
        }
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(err) => Err(err).context(format!("reading {THREADS_VAR}")),
    }
}

/// Artifact names in spec order: the experiment id, suffixed `-2`, `-3`, ...
/// on repetition.
pub fn artifact_names(specs: &[ResolvedSpec]) -> Vec<String> {
    let mut seen: Vec<(&str, usize)> = Vec::new();
    specs
        .iter()
        .map(|spec| {
            let id = spec.payload.id();
            match seen.iter_mut().find(|(known, _)| *known == id) {
                Some((_, count)) => {
                    *count += 1;
                    format!("{id}-{count}")
                }
                None => {
                    seen.push((id, 1));
                    id.to_string()
                }
            }
        })
        .collect()
}

/// Everything the caller needs after a run is written to disk.
pub struct RunReport {
    pub manifest_path: PathBuf,
    /// One console line per experiment, in spec order.
    pub lines: Vec<String>,
    pub passed: bool,
}

/// Writes per-experiment CSV/JSON artifacts and the run manifest.
pub fn write_artifacts(
    specs: &[ResolvedSpec],
    outputs: Vec<ExperimentOutput>,
    hash: &str,
) -> Result<RunReport> {
    let names = artifact_names(specs);
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    let mut all_passed = true;

    for ((spec, output), name) in specs.iter().zip(outputs).zip(&names) {
        std::fs::create_dir_all(&spec.out)
            .with_context(|| format!("creating output directory {}", spec.out.display()))?;
        let csv_path = spec.out.join(format!("{name}.csv"));
        let json_path = spec.out.join(format!("{name}.json"));
        std::fs::write(&csv_path, &output.csv)
            .with_context(|| format!("writing {}", csv_path.display()))?;

        let mut fields: Vec<(&'static str, JVal)> = vec![
            ("id", JVal::str(spec.payload.id())),
            ("name", JVal::str(name.clone())),
            ("spec_hash", JVal::str(hash)),
            (
                "seed",
                match spec.seed {
                    Some(seed) => JVal::UInt(seed),
                    None => JVal::Null,
                },
            ),
        ];
        fields.extend(output.fields);
        fields.push(("passed", JVal::Bool(output.passed)));
        let summary = JVal::Obj(fields);
        std::fs::write(&json_path, summary.render_pretty())
            .with_context(|| format!("writing {}", json_path.display()))?;

        all_passed &= output.passed;
        let verdict = if output.passed { "PASS" } else { "FAIL" };
        lines.push(format!("{name}: {verdict} ({})", output.headline));
        entries.push(JVal::Obj(vec![
            ("id", JVal::str(spec.payload.id())),
            ("name", JVal::str(name.clone())),
            ("passed", JVal::Bool(output.passed)),
            ("summary", JVal::str(format!("{name}.json"))),
            ("table", JVal::str(format!("{name}.csv"))),
        ]));
    }

    let manifest = JVal::Obj(vec![
        ("artifact_version", JVal::str(env!("CARGO_PKG_VERSION"))),
        ("spec_hash", JVal::str(hash)),
        ("experiments", JVal::Arr(entries)),
        ("passed", JVal::Bool(all_passed)),
    ]);
    let manifest_dir = specs.first().map(|s| s.out.clone()).unwrap_or_default();
    let manifest_path = manifest_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest.render_pretty())
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    Ok(RunReport { manifest_path, lines, passed: all_passed })
}
