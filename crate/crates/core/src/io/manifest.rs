//! Run manifests: which tasks, which models, how many windows, which seed.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::series::{load_csv, CsvSchema};
use crate::error::{Error, Result};
use crate::forecasters::ModelId;
use crate::pipeline::{BenchConfig, ModelEntry};
use crate::protocol::AdapterCommand;
use crate::synth::{generate, GenSpec};
use crate::task::{validate_task, Matrix, SeriesFrame, ValueKind};
use crate::TaskSpec;

/// Overrides the manifest seed when set.
pub const SEED_ENV: &str = "TEMPUS_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub tuning: TuningSpec,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    pub tasks: Vec<TaskEntry>,
    pub models: Vec<ModelSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_baseline() -> String {
    ModelId::SeasonalNaive.as_str().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    pub n_tune: usize,
    pub n_test: usize,
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec { n_tune: 3, n_test: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Its `seed` and `stream` are replaced by the run seed and the task's
    /// position in the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenSpec>,
    pub context_len: usize,
    pub horizon: usize,
    #[serde(default = "default_ts_column")]
    pub timestamp_column: String,
    #[serde(default = "default_targets")]
    pub targets: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_kinds: Option<Vec<ValueKind>>,
    #[serde(default)]
    pub frequency: String,
}

fn default_ts_column() -> String {
    "t".into()
}

fn default_targets() -> Vec<String> {
    vec!["y".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Model(ModelId),
    External(ExternalSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    pub name: String,
    #[serde(flatten)]
    pub adapter: AdapterCommand,
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        match self {
            ModelSpec::Model(id) => id.as_str(),
            ModelSpec::External(e) => &e.name,
        }
    }
}

/// Everything needed to run a manifest.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub manifest: Manifest,
    pub manifest_bytes: Vec<u8>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tasks: Vec<TaskSpec>,
    pub models: Vec<ModelEntry>,
}

impl ResolvedRun {
    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            run_id: self.manifest.run_id.clone(),
            n_tune: self.manifest.tuning.n_tune,
            n_test: self.manifest.tuning.n_test,
        }
    }
}

/// `env_value` (normally `TEMPUS_SEED`) wins over the manifest seed.
pub fn effective_seed(manifest_seed: u64, env_value: Option<&str>) -> Result<u64> {
    match env_value {
        None => Ok(manifest_seed),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV}: not an unsigned integer: {v:?}"))),
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for t in &self.tasks {
            if !ids.insert(t.id.as_str()) {
                return Err(Error::Schema(format!("tasks: duplicate id {:?}", t.id)));
            }
            if t.csv.is_some() == t.generator.is_some() {
                return Err(Error::Schema(format!(
                    "tasks: {:?} needs exactly one of csv or generator",
                    t.id
                )));
            }
        }
        let mut names = BTreeSet::new();
        for m in &self.models {
            if !names.insert(m.name()) {
                return Err(Error::Schema(format!("models: duplicate name {:?}", m.name())));
            }
        }
        if !names.contains(self.baseline.as_str()) {
            return Err(Error::Schema(format!(
                "baseline: {:?} is not among the models",
                self.baseline
            )));
        }
        if self.tasks.is_empty() || self.models.is_empty() {
            return Err(Error::Schema("manifest: needs at least one task and one model".into()));
        }
        Ok(())
    }

    /// Reads and validates a manifest, loads or generates every task and
    /// resolves relative paths against the manifest's directory.
    pub fn load(path: impl AsRef<Path>, seed_override: Option<&str>) -> Result<ResolvedRun> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Schema("manifest: not utf-8".into()))?;
        let manifest = Manifest::parse(text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let seed = effective_seed(manifest.seed, seed_override)?;
        let tasks = manifest
            .tasks
            .iter()
            .enumerate()
            .map(|(i, entry)| entry.resolve(base, seed, i as u64))
            .collect::<Result<Vec<_>>>()?;
        let models = manifest
            .models
            .iter()
            .map(|m| match m {
                ModelSpec::Model(id) => ModelEntry::Native(*id),
                ModelSpec::External(e) => ModelEntry::External {
                    name: e.name.clone(),
                    adapter: e.adapter.clone(),
                },
            })
            .collect();
        Ok(ResolvedRun {
            output_dir: base.join(&manifest.output_dir),
            manifest,
            manifest_bytes: bytes,
            seed,
            tasks,
            models,
        })
    }
}

impl TaskEntry {
    fn resolve(&self, base: &Path, seed: u64, stream: u64) -> Result<TaskSpec> {
        let data = match (&self.csv, &self.generator) {
            (Some(csv), None) => {
                let schema = CsvSchema {
                    timestamp_column: self.timestamp_column.clone(),
                    targets: self.targets.clone(),
                    covariates: self.covariates.clone(),
                };
                load_csv(base.join(csv), &schema)?
            }
            (None, Some(gen)) => {
                let spec = GenSpec {
                    seed,
                    stream,
                    ..gen.clone()
                };
                let out = generate(&spec)?;
                SeriesFrame {
                    timestamps: out.t,
                    labels: None,
                    covariates: Matrix::empty(out.y.len()),
                    targets: Matrix::row_vector(out.y),
                }
            }
            _ => unreachable!("checked by Manifest::validate"),
        };
        let mut task = TaskSpec::new(&self.id, self.context_len, self.horizon, data);
        if let Some(kinds) = &self.value_kinds {
            task.value_kinds = kinds.clone();
        }
        task.frequency_label = self.frequency.clone();
        validate_task(task).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("task {:?}: {msg}", self.id)),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{
        "run_id": "demo",
        "seed": 7,
        "tasks": [
            {"id": "g", "generator": {"family": "periodic", "num_points": 200, "period": 12}, "context_len": 24, "horizon": 6}
        ],
        "models": [{"model": "seasonal_naive"}, {"external": {"name": "py", "command": "python3", "args": ["a.py"]}}]
    }"#;

    #[test]
    fn parses_defaults() {
        let m = Manifest::parse(BASIC).unwrap();
        assert_eq!(m.tuning, TuningSpec::default());
        assert_eq!(m.baseline, "seasonal_naive");
        assert_eq!(m.models[1].name(), "py");
    }

    #[test]
    fn rejects_task_with_both_sources() {
        let text = BASIC.replace(r#""id": "g","#, r#""id": "g", "csv": "x.csv","#);
        assert!(matches!(Manifest::parse(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_baseline() {
        let mut m = Manifest::parse(BASIC).unwrap();
        m.tasks.push(m.tasks[0].clone());
        assert!(m.validate().is_err());
        let mut m = Manifest::parse(BASIC).unwrap();
        m.baseline = "ses".into();
        assert!(m.validate().is_err());
    }

    #[test]
    fn missing_csv_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let text = BASIC.replace(
            r#""generator": {"family": "periodic", "num_points": 200, "period": 12}"#,
            r#""csv": "nowhere.csv""#,
        );
        let path = dir.path().join("m.json");
        fs::write(&path, text).unwrap();
        let err = Manifest::load(&path, None).unwrap_err();
        assert!(err.to_string().contains("nowhere.csv"), "{err}");
    }

    #[test]
    fn seed_override() {
        assert_eq!(effective_seed(3, None).unwrap(), 3);
        assert_eq!(effective_seed(3, Some("11")).unwrap(), 11);
        assert!(matches!(effective_seed(3, Some("x")), Err(Error::Usage(_))));
    }

    #[test]
    fn generator_tasks_follow_the_seed() {
        let dir = tempfile::tempdir().unwrap();
        let text = BASIC.replace(r#""period": 12"#, r#""period": 12, "noise_scale": 1.0"#);
        let path = dir.path().join("m.json");
        fs::write(&path, text).unwrap();
        let a = Manifest::load(&path, None).unwrap();
        let b = Manifest::load(&path, None).unwrap();
        let c = Manifest::load(&path, Some("8")).unwrap();
        assert_eq!(a.tasks, b.tasks);
        assert_ne!(a.tasks, c.tasks);
        assert_eq!(a.output_dir, dir.path().join("results"));
    }
}
