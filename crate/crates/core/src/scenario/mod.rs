//! Transformation scenarios over a relational database.
//!
//! Nine tasks cross three relational-algebra shapes (selection, join, union)
//! with three math families (projection, linear, nonlinear). A scenario is a
//! chain of four transformations; executing one materializes a derived object
//! and records one [`LineageTuple`] per source cell feeding a target cell.

mod exec;
mod generate;
mod manifest;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kgstore::Literal;
use crate::reldb::{ObjectClass, Relation};

pub use exec::{apply_transformation, execute_transformation, row_level_edges, Executed};
pub use generate::{generate_suite, SuiteConfig, STEPS_PER_SCENARIO};
pub use manifest::{
    parse_manifest, read_lineage_csv, replay_manifest, write_lineage_csv, write_manifest,
    ManifestEntry,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid transformation {output:?}: {msg}")]
    Invalid { output: String, msg: String },
    #[error("transformation {output:?}: {msg}")]
    Math { output: String, msg: String },
    #[error("no foreign-key pair available for a join task")]
    NoForeignKey,
    #[error(
        "scenario {scenario}: could not draw an unambiguous transformation in {attempts} attempts"
    )]
    Exhausted { scenario: String, attempts: usize },
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("lineage file {file}: {msg}")]
    LineageFile { file: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algebra {
    Selection,
    Join,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MathKind {
    Projection,
    Linear,
    Bilinear,
    Power,
    Log,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MathFamily {
    Projection,
    Linear,
    Nonlinear,
}

impl Algebra {
    pub const ALL: [Algebra; 3] = [Algebra::Selection, Algebra::Join, Algebra::Union];

    pub fn as_str(self) -> &'static str {
        match self {
            Algebra::Selection => "selection",
            Algebra::Join => "join",
            Algebra::Union => "union",
        }
    }
}

impl MathKind {
    pub const NONLINEAR: [MathKind; 4] = [
        MathKind::Bilinear,
        MathKind::Power,
        MathKind::Log,
        MathKind::Exp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MathKind::Projection => "projection",
            MathKind::Linear => "linear",
            MathKind::Bilinear => "bilinear",
            MathKind::Power => "power",
            MathKind::Log => "log",
            MathKind::Exp => "exp",
        }
    }

    pub fn family(self) -> MathFamily {
        match self {
            MathKind::Projection => MathFamily::Projection,
            MathKind::Linear => MathFamily::Linear,
            _ => MathFamily::Nonlinear,
        }
    }
}

impl MathFamily {
    pub const ALL: [MathFamily; 3] = [
        MathFamily::Projection,
        MathFamily::Linear,
        MathFamily::Nonlinear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MathFamily::Projection => "projection",
            MathFamily::Linear => "linear",
            MathFamily::Nonlinear => "nonlinear",
        }
    }
}

impl FromStr for Algebra {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Algebra::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algebra {s:?}"))
    }
}

impl FromStr for MathKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [MathKind::Projection, MathKind::Linear]
            .into_iter()
            .chain(MathKind::NONLINEAR)
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown math kind {s:?}"))
    }
}

/// One of the nine evaluation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Task {
    pub algebra: Algebra,
    pub family: MathFamily,
}

impl Task {
    pub fn all() -> Vec<Task> {
        Algebra::ALL
            .into_iter()
            .flat_map(|algebra| {
                MathFamily::ALL
                    .into_iter()
                    .map(move |family| Task { algebra, family })
            })
            .collect()
    }

    pub fn name(self) -> String {
        format!("{}-{}", self.algebra.as_str(), self.family.as_str())
    }

    /// Row label as printed in comparison tables, e.g. `Selection-projection`.
    pub fn label(self) -> String {
        let name = self.name();
        let mut c = name.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => name,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Task {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, ScenarioError> {
        Task::all()
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ScenarioError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformKind {
    pub algebra: Algebra,
    pub math: MathKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Gt,
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> char {
        match self {
            Comparator::Lt => '<',
            Comparator::Gt => '>',
            Comparator::Eq => '=',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub column: String,
    pub cmp: Comparator,
    pub constant: Literal,
}

/// Equi-join `sources[0].left_column = sources[1].right_column`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinCondition {
    pub left_column: String,
    pub right_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub source: usize,
    pub column: String,
}

impl ColumnRef {
    pub fn new(source: usize, column: &str) -> Self {
        ColumnRef {
            source,
            column: column.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnExpr {
    Copy(ColumnRef),
    /// Linear, power, log or exp of one input.
    Unary(MathKind, ColumnRef),
    Bilinear(ColumnRef, ColumnRef),
}

impl ColumnExpr {
    pub fn inputs(&self) -> Vec<&ColumnRef> {
        match self {
            ColumnExpr::Copy(c) | ColumnExpr::Unary(_, c) => vec![c],
            ColumnExpr::Bilinear(a, b) => vec![a, b],
        }
    }
}

/// A derived column. Selection and join columns carry one expression; union
/// columns carry one per source, applied to rows coming from that source.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputColumn {
    pub name: String,
    pub exprs: Vec<ColumnExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationSpec {
    pub kind: TransformKind,
    pub sources: Vec<String>,
    pub filter: Option<Filter>,
    pub join: Option<JoinCondition>,
    pub a: f64,
    pub b: f64,
    pub columns: Vec<OutputColumn>,
    pub output: String,
    pub output_class: ObjectClass,
}

/// `[t1, c1, v1, t2, c2, v2]`: source table/column/value to target
/// table/column/value, values in canonical lexical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineageTuple {
    pub t1: String,
    pub c1: String,
    pub v1: String,
    pub t2: String,
    pub c2: String,
    pub v2: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub task: Task,
    /// 1-based position within its task.
    pub index: usize,
    pub transformations: Vec<TransformationSpec>,
    pub outputs: Vec<Relation>,
    pub lineage: Vec<Vec<LineageTuple>>,
}

impl Scenario {
    pub fn all_tuples(&self) -> impl Iterator<Item = &LineageTuple> {
        self.lineage.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSuite {
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSuite {
    pub fn for_task(&self, task: Task) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().filter(move |s| s.task == task)
    }

    pub fn transformation_count(&self) -> usize {
        self.scenarios.iter().map(|s| s.transformations.len()).sum()
    }

    pub fn tasks(&self) -> Vec<Task> {
        let mut t: Vec<Task> = self.scenarios.iter().map(|s| s.task).collect();
        t.dedup();
        t
    }
}
