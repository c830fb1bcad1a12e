use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rddl_lineage::ontology::ProfileName;
use rddl_lineage::pipeline::{run_stages, Outcome, PipelineError, Preset, RunManifest, Stage};
use rddl_lineage::scenario::Task;

/// Row-level lineage discovery over relational-database knowledge graphs.
#[derive(Parser)]
#[command(name = "rddl-lineage", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the fixture database and the transformation scenarios.
    GenScenarios(Common),
    /// Populate train and test graphs for each task and profile.
    BuildKg(Common),
    /// Add lineage edges to the train graphs; record test ground truth.
    ResolveLineage(Common),
    /// Sample edge-type paths for training and evaluation.
    SamplePaths {
        #[command(flatten)]
        common: Common,
        /// Evaluation negatives per task.
        #[arg(long)]
        negatives: Option<usize>,
    },
    /// Train one model per task and profile.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Score the evaluation samples.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Precision/recall decision threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Collect results and write the comparison table.
    Report(Common),
    /// Run every stage, skipping those already complete.
    Run(Common),
    /// Print the resolved manifest as TOML.
    Manifest(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run manifest; flags below override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Base configuration when no manifest is given.
    #[arg(long, value_enum, conflicts_with = "manifest")]
    preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Task name such as `join-projection`, or `all`.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single-threaded execution.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Baseline,
    Rddl,
    Both,
}

impl Common {
    fn manifest(&self) -> Result<RunManifest, PipelineError> {
        let mut m = match &self.manifest {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
                RunManifest::from_toml(&text)?
            }
            None => RunManifest::preset(match self.preset {
                Some(PresetArg::Paper) => Preset::Paper,
                _ => Preset::Desk,
            }),
        };
        if let Some(p) = self.profile {
            m.profiles = match p {
                ProfileArg::Baseline => vec![ProfileName::Baseline],
                ProfileArg::Rddl => vec![ProfileName::Rddl],
                ProfileArg::Both => ProfileName::ALL.to_vec(),
            };
        }
        if let Some(t) = &self.task {
            m.tasks = if t == "all" {
                Task::all().into_iter().map(Task::name).collect()
            } else {
                vec![t.clone()]
            };
        }
        if let Some(s) = self.seed {
            m.seed = s;
        }
        if let Some(o) = &self.out {
            m.out = o.clone();
        }
        m.deterministic |= self.deterministic;
        Ok(m)
    }
}

fn resolve(command: &Command) -> Result<(RunManifest, Vec<Stage>), PipelineError> {
    let one = |c: &Common, s: Stage| Ok((c.manifest()?, vec![s]));
    match command {
        Command::GenScenarios(c) => one(c, Stage::GenScenarios),
        Command::BuildKg(c) => one(c, Stage::BuildKg),
        Command::ResolveLineage(c) => one(c, Stage::ResolveLineage),
        Command::SamplePaths { common, negatives } => {
            let mut m = common.manifest()?;
            if let Some(n) = negatives {
                m.eval.negatives = *n;
            }
            Ok((m, vec![Stage::SamplePaths]))
        }
        Command::Train {
            common,
            epochs,
            learning_rate,
        } => {
            let mut m = common.manifest()?;
            if let Some(e) = epochs {
                m.model.epochs = *e;
            }
            if let Some(lr) = learning_rate {
                m.model.learning_rate = *lr;
            }
            Ok((m, vec![Stage::Train]))
        }
        Command::Evaluate { common, threshold } => {
            let mut m = common.manifest()?;
            if let Some(t) = threshold {
                m.eval.threshold = *t;
            }
            Ok((m, vec![Stage::Evaluate]))
        }
        Command::Report(c) => one(c, Stage::Report),
        Command::Run(c) => Ok((c.manifest()?, Stage::ALL.to_vec())),
        Command::Manifest(c) => Ok((c.manifest()?, vec![])),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (m, stages) = match resolve(&cli.command).and_then(|(m, s)| m.validate().map(|_| (m, s))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if stages.is_empty() {
        print!("{}", m.to_toml());
        return ExitCode::SUCCESS;
    }
    let summary = run_stages(&m, &stages, |ev| {
        let what = match ev.outcome {
            Outcome::Ran => "done",
            Outcome::Skipped => "up to date",
        };
        if ev.unit.is_empty() {
            eprintln!("{}: {what}", ev.stage);
        } else {
            eprintln!("{} {}: {what}", ev.stage, ev.unit);
        }
    });
    match summary {
        Ok(_) if stages.contains(&Stage::Report) => {
            let dir = m.out.join("report");
            let text = std::fs::read_to_string(dir.join("report.txt"))
                .or_else(|_| std::fs::read_to_string(dir.join("results.tsv")))
                .unwrap_or_default();
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
