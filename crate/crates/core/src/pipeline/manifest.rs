use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::convert::ConvertConfig;
use crate::ontology::{sanitize_local, ProfileName};
use crate::paths::SamplerConfig;
use crate::scenario::Task;
use crate::siamese::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 5 train / 2 test scenarios, 10 rows per table, 200 negatives.
    Desk,
    /// 17 train / 3 test scenarios, 50 rows per table, 4000 negatives.
    Paper,
}

impl FromStr for Preset {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            _ => Err(PipelineError::Validation(format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub rows_per_table: usize,
    pub train_scenarios: usize,
    pub test_scenarios: usize,
    pub max_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertSection {
    pub namespace: String,
    pub prefix_view_columns: bool,
    pub not_null_constraints: bool,
    pub strict: bool,
    pub drop_execution_edges: bool,
}

/// Model hyperparameters. Vocabulary and relation counts come from the
/// data, `num_paths` from the sampler and the seed from the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub fusion_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub negatives: usize,
    /// Precision/recall decision threshold.
    pub threshold: f64,
}

/// Everything a run depends on. One `seed` drives the fixture, the scenario
/// suite, path sampling and model initialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    pub tasks: Vec<String>,
    pub profiles: Vec<ProfileName>,
    pub out: PathBuf,
    /// Run every stage on one thread.
    pub deterministic: bool,
    pub scenarios: ScenarioSection,
    pub convert: ConvertSection,
    pub sampler: SamplerConfig,
    pub model: ModelSection,
    pub eval: EvalSection,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        RunManifest::preset(Preset::Desk).scenarios
    }
}

impl Default for ConvertSection {
    fn default() -> Self {
        let c = ConvertConfig::new(ProfileName::Rddl, "nw");
        ConvertSection {
            namespace: c.namespace,
            prefix_view_columns: c.prefix_view_columns,
            not_null_constraints: c.not_null_constraints,
            strict: c.strict,
            drop_execution_edges: c.drop_execution_edges,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::new(1, 1);
        ModelSection {
            embed_dim: c.embed_dim,
            hidden_dim: c.hidden_dim,
            layers: c.layers,
            fusion_dim: c.fusion_dim,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            epochs: c.epochs,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        RunManifest::preset(Preset::Desk).eval
    }
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest::preset(Preset::Desk)
    }
}

impl RunManifest {
    /// All tasks, both profiles, seed 0, output in `runs/{preset}`.
    pub fn preset(preset: Preset) -> Self {
        let (rows, train, test, negatives, out) = match preset {
            Preset::Desk => (10, 5, 2, 200, "runs/desk"),
            Preset::Paper => (50, 17, 3, 4000, "runs/paper"),
        };
        RunManifest {
            seed: 0,
            tasks: Task::all().into_iter().map(Task::name).collect(),
            profiles: ProfileName::ALL.to_vec(),
            out: PathBuf::from(out),
            deterministic: false,
            scenarios: ScenarioSection {
                rows_per_table: rows,
                train_scenarios: train,
                test_scenarios: test,
                max_attempts: 100,
            },
            convert: ConvertSection::default(),
            sampler: SamplerConfig::default(),
            model: ModelSection::default(),
            eval: EvalSection {
                negatives,
                threshold: 0.5,
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let m: RunManifest =
            toml::from_str(text).map_err(|e| PipelineError::Validation(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are all representable in TOML")
    }

    /// Parsed task list, in manifest order.
    pub fn task_list(&self) -> Result<Vec<Task>, PipelineError> {
        self.tasks
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|e| PipelineError::Validation(format!("{e}")))
            })
            .collect()
    }

    /// `ConvertConfig` for `profile`, before the train/test namespace split.
    pub fn convert_config(&self, profile: ProfileName) -> ConvertConfig {
        let c = &self.convert;
        ConvertConfig {
            prefix_view_columns: c.prefix_view_columns,
            not_null_constraints: c.not_null_constraints,
            strict: c.strict,
            drop_execution_edges: c.drop_execution_edges,
            ..ConvertConfig::new(profile, &c.namespace)
        }
    }

    /// The sampler with the manifest seed.
    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            ..self.sampler.clone()
        }
    }

    pub fn model_config(&self, vocab_size: usize, relations: usize) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            num_paths: self.sampler.num_paths,
            embed_dim: m.embed_dim,
            hidden_dim: m.hidden_dim,
            layers: m.layers,
            fusion_dim: m.fusion_dim,
            learning_rate: m.learning_rate,
            batch_size: m.batch_size,
            epochs: m.epochs,
            seed: self.seed,
            ..ModelConfig::new(vocab_size, relations)
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Validation(m));
        let tasks = self.task_list()?;
        if tasks.is_empty() {
            return bad("no tasks".into());
        }
        if tasks.iter().collect::<BTreeSet<_>>().len() != tasks.len() {
            return bad("duplicate task".into());
        }
        if self.profiles.is_empty() {
            return bad("no profiles".into());
        }
        if self.profiles.iter().collect::<BTreeSet<_>>().len() != self.profiles.len() {
            return bad("duplicate profile".into());
        }
        let s = &self.scenarios;
        for (name, v) in [
            ("scenarios.rows_per_table", s.rows_per_table),
            ("scenarios.train_scenarios", s.train_scenarios),
            ("scenarios.test_scenarios", s.test_scenarios),
            ("scenarios.max_attempts", s.max_attempts),
            ("sampler.num_paths", self.sampler.num_paths),
            ("sampler.max_length", self.sampler.max_length),
            ("sampler.walk_budget", self.sampler.walk_budget),
            ("eval.negatives", self.eval.negatives),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.sampler.max_length > 200 {
            return bad("sampler.max_length must be at most 200".into());
        }
        let ns = &self.convert.namespace;
        if ns.is_empty() || sanitize_local(ns) != *ns {
            return bad(format!("convert.namespace {ns:?} is not a plain name"));
        }
        if !(0.0..=1.0).contains(&self.eval.threshold) {
            return bad("eval.threshold must lie in [0, 1]".into());
        }
        self.model_config(1, 1)
            .validate()
            .map_err(|e| PipelineError::Validation(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut m = RunManifest::preset(Preset::Paper);
        m.seed = 42;
        m.tasks = vec!["join-linear".into()];
        m.model.learning_rate = 2.5e-4;
        let back = RunManifest::from_toml(&m.to_toml()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn missing_sections_take_desk_defaults() {
        let m = RunManifest::from_toml("seed = 3\ntasks = [\"union-linear\"]\n").unwrap();
        assert_eq!(m.seed, 3);
        assert_eq!(m.scenarios, RunManifest::preset(Preset::Desk).scenarios);
        assert_eq!(m.sampler_config().seed, 3);
        assert_eq!(m.model_config(7, 2).seed, 3);
    }

    #[test]
    fn validation() {
        let reject = |f: &dyn Fn(&mut RunManifest)| {
            let mut m = RunManifest::default();
            f(&mut m);
            assert!(
                matches!(m.validate(), Err(PipelineError::Validation(_))),
                "{m:?}"
            );
        };
        reject(&|m| m.tasks = vec!["selection-quadratic".into()]);
        reject(&|m| m.tasks.clear());
        reject(&|m| m.tasks = vec!["join-linear".into(), "join-linear".into()]);
        reject(&|m| m.profiles.clear());
        reject(&|m| m.sampler.num_paths = 0);
        reject(&|m| m.model.epochs = 0);
        reject(&|m| m.eval.threshold = 1.5);
        reject(&|m| m.convert.namespace = "a b".into());
        assert!(RunManifest::from_toml("bogus = 1").is_err());
        assert!(RunManifest::default().validate().is_ok());
    }
}
