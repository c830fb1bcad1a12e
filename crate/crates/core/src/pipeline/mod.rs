//! End-to-end experiment runs driven by a [`RunManifest`].
//!
//! Stages run in order and communicate only through files under the
//! manifest's `out` directory:
//!
//! ```text
//! scenarios/                       gen-scenarios   fixture CSVs, suite manifest, lineage CSVs
//! {task}/{profile}/graphs/         build-kg        populated train and test graphs
//! {task}/{profile}/lineage/        resolve-lineage resolved train graph, test ground truth
//! {task}/{profile}/samples/        sample-paths    vocabulary, training and evaluation samples
//! {task}/{profile}/model/          train           checkpoint, per-epoch loss
//! {task}/{profile}/eval/           evaluate        scores, TaskResult
//! report/                          report          results.tsv, comparison tables
//! ```
//!
//! Each stage directory holds a `checksums.sha256` record with a key over
//! the stage's configuration and its inputs' records, plus the hash of
//! every output. A stage whose record matches and whose outputs are intact
//! is skipped.

mod manifest;
mod record;

use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use thiserror::Error;

use crate::convert::{
    build_graph, ground_truth, resolve_lineage, split_configs, split_scenarios, GroundTruthEdge,
};
use crate::eval::{parse_results, report, report_tsv, TaskResult};
use crate::kgstore::{parse_ntriples_with_relations, serialize_ntriples, KnowledgeGraph};
use crate::ontology::{vocabulary, ProfileName};
use crate::paths::{
    build_eval_set, build_training_set, read_samples, read_vocabulary, write_samples,
    write_vocabulary, PathSample, Vocabulary,
};
use crate::reldb::{
    export_database, load_database, northwind_fixture_with, Database, FixtureConfig,
};
use crate::scenario::{
    generate_suite, parse_manifest, replay_manifest, write_lineage_csv, write_manifest,
    ScenarioSuite, SuiteConfig, Task,
};
use crate::siamese::{read_checkpoint, write_checkpoint, Model};

pub use manifest::{
    ConvertSection, EvalSection, ModelSection, Preset, RunManifest, ScenarioSection,
};
pub use record::{sha256_hex, StageRecord, RECORD_FILE};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid manifest: {0}")]
    Validation(String),
    #[error("stage {stage} failed{}: {cause}", unit_suffix(.unit))]
    Stage {
        stage: Stage,
        unit: String,
        cause: String,
    },
}

fn unit_suffix(unit: &str) -> String {
    if unit.is_empty() {
        String::new()
    } else {
        format!(" for {unit}")
    }
}

impl PipelineError {
    /// 1 for validation errors, 2 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    GenScenarios,
    BuildKg,
    ResolveLineage,
    SamplePaths,
    Train,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::GenScenarios,
        Stage::BuildKg,
        Stage::ResolveLineage,
        Stage::SamplePaths,
        Stage::Train,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenScenarios => "gen-scenarios",
            Stage::BuildKg => "build-kg",
            Stage::ResolveLineage => "resolve-lineage",
            Stage::SamplePaths => "sample-paths",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    fn dir(self) -> &'static str {
        match self {
            Stage::GenScenarios => "scenarios",
            Stage::BuildKg => "graphs",
            Stage::ResolveLineage => "lineage",
            Stage::SamplePaths => "samples",
            Stage::Train => "model",
            Stage::Evaluate => "eval",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Validation(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageEvent {
    pub stage: Stage,
    /// `task/profile`, or empty for run-wide stages.
    pub unit: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub events: Vec<StageEvent>,
    /// Contents of the results file when the report stage was requested.
    pub results: Vec<TaskResult>,
}

impl RunSummary {
    pub fn ran(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.outcome == Outcome::Ran)
            .count()
    }
}

/// Where a manifest's artifacts live.
#[derive(Debug, Clone)]
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn stage_dir(&self, stage: Stage, unit: Option<(Task, ProfileName)>) -> PathBuf {
        match unit {
            Some((t, p)) => self.out.join(t.name()).join(p.as_str()).join(stage.dir()),
            None => self.out.join(stage.dir()),
        }
    }

    pub fn results_file(&self) -> PathBuf {
        self.out.join("report").join("results.tsv")
    }
}

/// Runs every stage.
pub fn run_pipeline(m: &RunManifest) -> Result<RunSummary, PipelineError> {
    run_stages(m, &Stage::ALL, |_| {})
}

/// Runs `stages` (in pipeline order, whatever order they are given in),
/// calling `on_event` as each stage unit finishes or is skipped. Inputs of
/// the first requested stage must already exist.
pub fn run_stages(
    m: &RunManifest,
    stages: &[Stage],
    on_event: impl FnMut(&StageEvent) + Send,
) -> Result<RunSummary, PipelineError> {
    m.validate()?;
    let mut runner = Runner {
        m,
        layout: Layout { out: m.out.clone() },
        units: Vec::new(),
        suite: None,
        events: Vec::new(),
        on_event: Box::new(on_event),
    };
    for t in m.task_list()? {
        for &p in &m.profiles {
            runner.units.push((t, p));
        }
    }
    let mut wanted = stages.to_vec();
    wanted.sort();
    wanted.dedup();
    let go = |runner: &mut Runner| -> Result<RunSummary, PipelineError> {
        fs::create_dir_all(&m.out).map_err(|e| stage_err(wanted[0], "", e))?;
        fs::write(m.out.join("manifest.toml"), m.to_toml())
            .map_err(|e| stage_err(wanted[0], "", e))?;
        for &s in &wanted {
            runner.stage(s)?;
        }
        let results = if wanted.contains(&Stage::Report) {
            let text = fs::read_to_string(runner.layout.results_file())
                .map_err(|e| stage_err(Stage::Report, "", e))?;
            parse_results(&text).map_err(|e| stage_err(Stage::Report, "", e))?
        } else {
            Vec::new()
        };
        Ok(RunSummary {
            events: std::mem::take(&mut runner.events),
            results,
        })
    };
    if wanted.is_empty() {
        return Ok(RunSummary {
            events: vec![],
            results: vec![],
        });
    }
    if m.deterministic {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| stage_err(wanted[0], "", e))?;
        pool.install(|| go(&mut runner))
    } else {
        go(&mut runner)
    }
}

fn stage_err(stage: Stage, unit: &str, e: impl fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage,
        unit: unit.to_string(),
        cause: e.to_string(),
    }
}

fn toml_of<T: serde::Serialize>(v: &T) -> String {
    toml::to_string(v).expect("serializable section")
}

struct Runner<'a> {
    m: &'a RunManifest,
    layout: Layout,
    units: Vec<(Task, ProfileName)>,
    suite: Option<(Database, ScenarioSuite)>,
    events: Vec<StageEvent>,
    on_event: Box<dyn FnMut(&StageEvent) + Send + 'a>,
}

type Unit = (Task, ProfileName);

fn unit_name(u: Option<Unit>) -> String {
    u.map(|(t, p)| format!("{t}/{p}")).unwrap_or_default()
}

impl Runner<'_> {
    fn stage(&mut self, stage: Stage) -> Result<(), PipelineError> {
        match stage {
            Stage::GenScenarios | Stage::Report => self.unit(stage, None),
            _ => {
                for u in self.units.clone() {
                    self.unit(stage, Some(u))?;
                }
                Ok(())
            }
        }
    }

    /// The record of `stage` for `unit`, which must have completed.
    fn input(
        &self,
        stage: Stage,
        unit: Option<Unit>,
        key: &mut record::KeyBuilder,
    ) -> anyhow::Result<()> {
        let dir = self.layout.stage_dir(stage, unit);
        let text = fs::read_to_string(dir.join(RECORD_FILE))
            .with_context(|| format!("missing output of stage {stage} in {}", dir.display()))?;
        key.add(&text);
        Ok(())
    }

    fn key(&self, stage: Stage, unit: Option<Unit>) -> anyhow::Result<String> {
        let m = self.m;
        let mut k = record::KeyBuilder::new(stage.name(), &unit_name(unit));
        k.add(&m.seed.to_string());
        match stage {
            Stage::GenScenarios => {
                k.add(&toml_of(&m.scenarios)).add(&m.tasks.join(","));
            }
            Stage::BuildKg => {
                self.input(Stage::GenScenarios, None, &mut k)?;
                k.add(&toml_of(&m.scenarios)).add(&toml_of(&m.convert));
            }
            Stage::ResolveLineage => {
                self.input(Stage::GenScenarios, None, &mut k)?;
                self.input(Stage::BuildKg, unit, &mut k)?;
            }
            Stage::SamplePaths => {
                self.input(Stage::BuildKg, unit, &mut k)?;
                self.input(Stage::ResolveLineage, unit, &mut k)?;
                k.add(&toml_of(&m.sampler))
                    .add(&m.eval.negatives.to_string());
            }
            Stage::Train => {
                self.input(Stage::SamplePaths, unit, &mut k)?;
                k.add(&toml_of(&m.model))
                    .add(&m.sampler.num_paths.to_string());
            }
            Stage::Evaluate => {
                self.input(Stage::SamplePaths, unit, &mut k)?;
                self.input(Stage::Train, unit, &mut k)?;
                k.add(&m.eval.threshold.to_string());
            }
            Stage::Report => {
                for &u in &self.units {
                    self.input(Stage::Evaluate, Some(u), &mut k)?;
                }
            }
        }
        Ok(k.finish())
    }

    fn unit(&mut self, stage: Stage, unit: Option<Unit>) -> Result<(), PipelineError> {
        let name = unit_name(unit);
        let fail = |e: anyhow::Error| PipelineError::Stage {
            stage,
            unit: name.clone(),
            cause: format!("{e:#}"),
        };
        let key = self.key(stage, unit).map_err(fail)?;
        let dir = self.layout.stage_dir(stage, unit);
        let outcome = if StageRecord::read(&dir).is_some_and(|r| r.is_current(&dir, &key)) {
            Outcome::Skipped
        } else {
            let outputs = self.execute(stage, unit, &dir).map_err(fail)?;
            StageRecord::of_files(&dir, key, &outputs)
                .and_then(|r| fs::write(dir.join(RECORD_FILE), r.render()))
                .map_err(|e| fail(e.into()))?;
            Outcome::Ran
        };
        let ev = StageEvent {
            stage,
            unit: name,
            outcome,
        };
        (self.on_event)(&ev);
        self.events.push(ev);
        Ok(())
    }

    fn execute(
        &mut self,
        stage: Stage,
        unit: Option<Unit>,
        dir: &Path,
    ) -> anyhow::Result<Vec<PathBuf>> {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::create_dir_all(dir)?;
        match (stage, unit) {
            (Stage::GenScenarios, _) => self.gen_scenarios(dir),
            (Stage::Report, _) => self.report(dir),
            (_, None) => unreachable!("per-unit stage without unit"),
            (Stage::BuildKg, Some(u)) => self.build_kg(u, dir),
            (Stage::ResolveLineage, Some(u)) => self.resolve(u, dir),
            (Stage::SamplePaths, Some(u)) => self.sample(u, dir),
            (Stage::Train, Some(u)) => self.train(u, dir),
            (Stage::Evaluate, Some(u)) => self.evaluate(u, dir),
        }
    }

    fn gen_scenarios(&mut self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let m = self.m;
        let db = northwind_fixture_with(&FixtureConfig {
            rows_per_table: m.scenarios.rows_per_table,
            seed: m.seed,
        });
        let suite = generate_suite(
            &db,
            &SuiteConfig {
                seed: m.seed,
                scenarios_per_task: m.scenarios.train_scenarios + m.scenarios.test_scenarios,
                tasks: m.task_list()?,
                max_attempts: m.scenarios.max_attempts,
            },
        )?;
        export_database(&db, dir.join("db"))?;
        fs::write(dir.join("suite.manifest"), write_manifest(&suite))?;
        let lineage = dir.join("lineage");
        fs::create_dir_all(&lineage)?;
        for s in &suite.scenarios {
            for (step, tuples) in s.lineage.iter().enumerate() {
                write_lineage_csv(lineage.join(format!("{}-{}.csv", s.id, step + 1)), tuples)?;
            }
        }
        self.suite = None;
        files_under(dir)
    }

    /// Database and suite as written by gen-scenarios.
    fn suite(&mut self) -> anyhow::Result<&(Database, ScenarioSuite)> {
        if self.suite.is_none() {
            let dir = self.layout.stage_dir(Stage::GenScenarios, None);
            let db = load_database(dir.join("db"))?;
            let text = fs::read_to_string(dir.join("suite.manifest"))?;
            let (seed, entries) = parse_manifest(&text)?;
            let suite = replay_manifest(&db, seed, &entries)?;
            self.suite = Some((db, suite));
        }
        Ok(self.suite.as_ref().expect("loaded above"))
    }

    fn build_kg(&mut self, (task, profile): Unit, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let split = self.split_config();
        let base = self.m.convert_config(profile);
        let (db, suite) = self.suite()?;
        let (train_s, test_s) = split_scenarios(suite, task, &split)?;
        let (train_cfg, test_cfg) = split_configs(&base);
        let (train, _, _) = build_graph(db, &train_s, &train_cfg)?;
        let (test, _, _) = build_graph(db, &test_s, &test_cfg)?;
        let out = [dir.join("train-populated.nt"), dir.join("test.nt")];
        fs::write(&out[0], serialize_ntriples(&train))?;
        fs::write(&out[1], serialize_ntriples(&test))?;
        Ok(out.to_vec())
    }

    fn split_config(&self) -> crate::convert::SplitConfig {
        crate::convert::SplitConfig {
            train_scenarios: self.m.scenarios.train_scenarios,
            test_scenarios: self.m.scenarios.test_scenarios,
        }
    }

    fn resolve(&mut self, (task, profile): Unit, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let split = self.split_config();
        let (train_cfg, test_cfg) = split_configs(&self.m.convert_config(profile));
        let graphs = self.layout.stage_dir(Stage::BuildKg, Some((task, profile)));
        let mut train = read_graph(&graphs.join("train-populated.nt"), profile)?;
        let test = read_graph(&graphs.join("test.nt"), profile)?;
        let (_, suite) = self.suite()?;
        let (train_s, test_s) = split_scenarios(suite, task, &split)?;
        let tuples = |s: &[&crate::scenario::Scenario]| -> Vec<_> {
            s.iter().flat_map(|x| x.all_tuples().cloned()).collect()
        };
        let report = resolve_lineage(&mut train, &tuples(&train_s), &train_cfg)?;
        let truth = ground_truth(&test, &tuples(&test_s), &test_cfg)?;
        if !truth.iter().any(|e| e.relation == "rowDerivedFrom") {
            bail!("test scenarios yield no rowDerivedFrom edges");
        }
        let out = [
            dir.join("train.nt"),
            dir.join("ground-truth.tsv"),
            dir.join("resolution.tsv"),
        ];
        fs::write(&out[0], serialize_ntriples(&train))?;
        fs::write(&out[1], write_ground_truth(&truth))?;
        fs::write(
            &out[2],
            format!(
                "tuples	row_edges	value_edges	column_edges	table_edges
{}	{}	{}	{}	{}
",
                report.tuples,
                report.row_edges,
                report.value_edges,
                report.column_edges,
                report.table_edges
            ),
        )?;
        Ok(out.to_vec())
    }

    fn sample(&mut self, (task, profile): Unit, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let graphs = self.layout.stage_dir(Stage::BuildKg, Some((task, profile)));
        let lineage = self
            .layout
            .stage_dir(Stage::ResolveLineage, Some((task, profile)));
        let train = read_graph(&lineage.join("train.nt"), profile)?;
        let test = read_graph(&graphs.join("test.nt"), profile)?;
        let truth = read_ground_truth(&fs::read_to_string(lineage.join("ground-truth.tsv"))?)?;
        let cfg = self.m.sampler_config();
        let training = build_training_set(&train, &cfg)?;
        let eval = build_eval_set(&test, &truth, self.m.eval.negatives, &cfg)?;
        let out = [
            dir.join("vocabulary.tsv"),
            dir.join("train.samples"),
            dir.join("eval-positives.samples"),
            dir.join("eval-negatives.samples"),
            dir.join("eval-pairs.tsv"),
        ];
        write_vocabulary(fs::File::create(&out[0])?, &Vocabulary::of(&train))?;
        write_samples(
            std::io::BufWriter::new(fs::File::create(&out[1])?),
            &training,
        )?;
        write_samples(fs::File::create(&out[2])?, &eval.positives)?;
        write_samples(fs::File::create(&out[3])?, &eval.negatives)?;
        let mut pairs = String::from("label\tderived\tsource\n");
        for (label, list) in [(1, &eval.positive_pairs), (0, &eval.negative_pairs)] {
            for (d, s) in list {
                pairs.push_str(&format!("{label}\t{d}\t{s}\n"));
            }
        }
        fs::write(&out[4], pairs)?;
        Ok(out.to_vec())
    }

    fn samples(&self, unit: Unit, file: &str) -> anyhow::Result<Vec<PathSample>> {
        let path = self
            .layout
            .stage_dir(Stage::SamplePaths, Some(unit))
            .join(file);
        let f = fs::File::open(&path).with_context(|| path.display().to_string())?;
        Ok(read_samples(BufReader::new(f), self.m.sampler.num_paths)?)
    }

    fn train(&mut self, unit: Unit, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let vocab_path = self
            .layout
            .stage_dir(Stage::SamplePaths, Some(unit))
            .join("vocabulary.tsv");
        let vocab = read_vocabulary(BufReader::new(fs::File::open(vocab_path)?))?;
        let samples = self.samples(unit, "train.samples")?;
        let mut model = Model::new(self.m.model_config(vocab.size(), vocab.relation_count()))?;
        let report = model.train(&samples)?;
        let out = [dir.join("model.ckpt"), dir.join("loss.tsv")];
        write_checkpoint(std::io::BufWriter::new(fs::File::create(&out[0])?), &model)?;
        let mut loss = String::from("epoch\tmean_loss\n");
        for (e, l) in report.epoch_loss.iter().enumerate() {
            loss.push_str(&format!("{}\t{l}\n", e + 1));
        }
        fs::write(&out[1], loss)?;
        Ok(out.to_vec())
    }

    fn evaluate(&mut self, unit: Unit, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let ckpt = self
            .layout
            .stage_dir(Stage::Train, Some(unit))
            .join("model.ckpt");
        let model = read_checkpoint(BufReader::new(fs::File::open(ckpt)?))?;
        let pos = model.predict(&self.samples(unit, "eval-positives.samples")?)?;
        let neg = model.predict(&self.samples(unit, "eval-negatives.samples")?)?;
        let r = TaskResult::from_scores_at(
            &unit.0.name(),
            unit.1,
            self.m.seed,
            &pos,
            &neg,
            self.m.eval.threshold,
        )?;
        let out = [dir.join("scores.tsv"), dir.join("result.tsv")];
        let mut scores = String::from("label\tscore\n");
        for (label, list) in [(1, &pos), (0, &neg)] {
            for s in list.iter() {
                scores.push_str(&format!("{label}\t{s}\n"));
            }
        }
        fs::write(&out[0], scores)?;
        fs::write(
            &out[1],
            format!("{}\n{}\n", TaskResult::TSV_HEADER, r.to_tsv()),
        )?;
        Ok(out.to_vec())
    }

    fn report(&mut self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        let mut results = Vec::new();
        for &u in &self.units {
            let f = self
                .layout
                .stage_dir(Stage::Evaluate, Some(u))
                .join("result.tsv");
            results.extend(parse_results(&fs::read_to_string(f)?)?);
        }
        let mut text = format!("{}\n", TaskResult::TSV_HEADER);
        for r in &results {
            text.push_str(&r.to_tsv());
            text.push('\n');
        }
        let mut out = vec![dir.join("results.tsv")];
        fs::write(&out[0], text)?;
        // The comparison needs both profiles of every task.
        if self.m.profiles.len() == ProfileName::ALL.len() {
            out.push(dir.join("report.txt"));
            out.push(dir.join("report.tsv"));
            fs::write(&out[1], report(&results)?)?;
            fs::write(&out[2], report_tsv(&results)?)?;
        }
        Ok(out)
    }
}

fn read_graph(path: &Path, profile: ProfileName) -> anyhow::Result<KnowledgeGraph> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let g = parse_ntriples_with_relations(&text, &vocabulary(profile).relation_names())
        .with_context(|| path.display().to_string())?;
    Ok(g)
}

pub fn write_ground_truth(edges: &[GroundTruthEdge]) -> String {
    let mut s = String::from("subject\trelation\tobject\n");
    for e in edges {
        s.push_str(&format!("{}\t{}\t{}\n", e.subject, e.relation, e.object));
    }
    s
}

pub fn read_ground_truth(text: &str) -> anyhow::Result<Vec<GroundTruthEdge>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let [s, r, o] = f[..] else {
            bail!("ground truth line {}: expected 3 fields", i + 1);
        };
        out.push(GroundTruthEdge {
            subject: s.into(),
            relation: r.into(),
            object: o.into(),
        });
    }
    Ok(out)
}

/// Every regular file below `dir`, sorted.
fn files_under(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != RECORD_FILE) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
