//! Database to knowledge graph conversion, lineage injection and the
//! inductive train/test split.

mod lineage;
mod populate;
mod split;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::kgstore::KgError;
use crate::ontology::{Namespace, ProfileName};
use crate::scenario::LineageTuple;

pub use lineage::{resolve_lineage, LineageReport};
pub use populate::{populate_kg, resolve_type, DataTypeRef};
pub use split::{
    build_graph, ground_truth, scenario_database, split_configs, split_scenarios, split_train_test,
    GroundTruthEdge, SplitConfig, TrainTestSplit,
};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("datatypes are not part of the {0} profile")]
    NoDatatypes(ProfileName),
    #[error("foreign key {fk:?} references table {table:?}, which is not in the graph")]
    MissingFkTarget { fk: String, table: String },
    #[error("lineage tuple {tuple}: {msg}")]
    Unresolvable { tuple: String, msg: String },
    #[error("lineage tuple {tuple}: {src} source rows and {dst} target rows (strict mode needs exactly one each)")]
    Ambiguous {
        tuple: String,
        src: usize,
        dst: usize,
    },
    #[error("task {task} has {found} scenarios, split needs {needed}")]
    NotEnoughScenarios {
        task: String,
        found: usize,
        needed: usize,
    },
    #[error(transparent)]
    Kg(#[from] KgError),
}

impl fmt::Display for LineageTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}, {}, {}]",
            self.t1, self.c1, self.v1, self.t2, self.c2, self.v2
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertConfig {
    pub profile: ProfileName,
    /// Emit rows and cell values. Required for row-level lineage.
    pub use_data: bool,
    pub namespace: String,
    /// Name view columns `View_col` like table columns. When false, view
    /// columns get the bare column name.
    pub prefix_view_columns: bool,
    /// Emit NotNullConstraint individuals for non-nullable non-key columns.
    pub not_null_constraints: bool,
    /// Fail on lineage tuples matching more than one row on either side.
    pub strict: bool,
    /// Omit usesTable/generatesRow edges of recorded executions.
    pub drop_execution_edges: bool,
}

impl ConvertConfig {
    pub fn new(profile: ProfileName, namespace: &str) -> Self {
        ConvertConfig {
            profile,
            use_data: true,
            namespace: namespace.to_string(),
            prefix_view_columns: true,
            not_null_constraints: true,
            strict: false,
            drop_execution_edges: false,
        }
    }

    pub fn iris(&self) -> Iris {
        Iris {
            ns: Namespace::new(&self.namespace),
            prefix_view_columns: self.prefix_view_columns,
        }
    }
}

/// IRI scheme for the individuals of one graph.
#[derive(Debug, Clone)]
pub struct Iris {
    pub ns: Namespace,
    pub prefix_view_columns: bool,
}

impl Iris {
    pub fn object(&self, name: &str) -> String {
        self.ns.individual(name)
    }

    pub fn table_column(&self, table: &str, column: &str) -> String {
        self.ns.individual(&format!("{table}_{column}"))
    }

    pub fn view_column(&self, view: &str, column: &str) -> String {
        if self.prefix_view_columns {
            self.table_column(view, column)
        } else {
            self.ns.individual(column)
        }
    }

    pub fn row(&self, object: &str, row: usize) -> String {
        self.ns.individual(&format!("{object}/row/{row}"))
    }

    pub fn cell(&self, object: &str, row: usize, column: &str) -> String {
        self.ns.individual(&format!("{object}/row/{row}/{column}"))
    }

    pub fn datatype(&self, name: &str, length: Option<u32>) -> String {
        match length {
            Some(l) => self.ns.individual(&format!("datatype/{name}_{l}")),
            None => self.ns.individual(&format!("datatype/{name}")),
        }
    }

    pub fn constraint(&self, name: &str) -> String {
        self.ns.individual(&format!("constraint/{name}"))
    }

    pub fn query(&self, object: &str) -> String {
        self.ns.individual(&format!("query/{object}"))
    }

    pub fn execution(&self, object: &str) -> String {
        self.ns.individual(&format!("execution/{object}"))
    }

    pub fn class(&self, name: &str) -> String {
        self.ns.class(name)
    }
}

/// Counts gathered while populating a graph, printed as `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PopulationReport {
    pub triples: usize,
    pub nodes: usize,
    /// Individuals per asserted class.
    pub by_class: BTreeMap<String, usize>,
    /// Triples per relation.
    pub by_relation: BTreeMap<String, usize>,
}

impl PopulationReport {
    pub fn from_graph(g: &crate::kgstore::KnowledgeGraph) -> Self {
        let mut r = PopulationReport {
            triples: g.len(),
            nodes: g.node_count(),
            ..Default::default()
        };
        for t in g.triples() {
            let rel = g.relation_name(t.relation);
            *r.by_relation.entry(rel.to_string()).or_default() += 1;
            if rel == crate::kgstore::RDF_TYPE {
                if let Some(c) = t
                    .object
                    .as_node()
                    .and_then(|c| Namespace::class_of(g.node_iri(c)))
                {
                    *r.by_class.entry(c.to_string()).or_default() += 1;
                }
            }
        }
        r
    }
}

impl fmt::Display for PopulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples={}", self.triples)?;
        writeln!(f, "nodes={}", self.nodes)?;
        for (c, n) in &self.by_class {
            writeln!(f, "class.{c}={n}")?;
        }
        for (r, n) in &self.by_relation {
            writeln!(f, "relation.{r}={n}")?;
        }
        Ok(())
    }
}
