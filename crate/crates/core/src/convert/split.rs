use super::{
    populate_kg, resolve_lineage, ConvertConfig, ConvertError, LineageReport, PopulationReport,
};
use crate::kgstore::KnowledgeGraph;
use crate::ontology::{vocabulary, LINEAGE_PROPERTIES};
use crate::reldb::Database;
use crate::scenario::{LineageTuple, Scenario, ScenarioSuite, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitConfig {
    pub train_scenarios: usize,
    pub test_scenarios: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_scenarios: 17,
            test_scenarios: 3,
        }
    }
}

/// A withheld lineage triple of the test graph, by IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundTruthEdge {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    /// Populated and lineage-resolved.
    pub train: KnowledgeGraph,
    /// Populated only.
    pub test: KnowledgeGraph,
    /// Every lineage triple resolution would add to the test graph, sorted.
    pub ground_truth: Vec<GroundTruthEdge>,
    pub train_report: PopulationReport,
    pub test_report: PopulationReport,
    pub train_lineage: LineageReport,
}

impl TrainTestSplit {
    /// `(source row, derived row)` IRI pairs of the withheld rowDerivedFrom
    /// edges.
    pub fn row_pairs(&self) -> Vec<(String, String)> {
        self.ground_truth
            .iter()
            .filter(|e| e.relation == "rowDerivedFrom")
            .map(|e| (e.object.clone(), e.subject.clone()))
            .collect()
    }
}

/// `db`'s tables plus the outputs of every scenario, as views.
pub fn scenario_database<'a>(
    db: &Database,
    scenarios: impl IntoIterator<Item = &'a Scenario>,
) -> Database {
    let mut out = Database {
        tables: db.tables.clone(),
        views: Default::default(),
    };
    for s in scenarios {
        for o in &s.outputs {
            out.views.insert(o.name().to_string(), o.clone());
        }
    }
    out
}

/// Populates a graph with `db`'s tables and the outputs of `scenarios`,
/// using the profile's relation registry. Returns the graph, its population
/// counts and the scenarios' lineage tuples; lineage is not resolved.
pub fn build_graph(
    db: &Database,
    scenarios: &[&Scenario],
    cfg: &ConvertConfig,
) -> Result<(KnowledgeGraph, PopulationReport, Vec<LineageTuple>), ConvertError> {
    let combined = scenario_database(db, scenarios.iter().copied());
    let mut g = KnowledgeGraph::with_relations(&vocabulary(cfg.profile).relation_names());
    let report = populate_kg(&mut g, &combined, cfg)?;
    let tuples = scenarios
        .iter()
        .flat_map(|s| s.all_tuples().cloned())
        .collect();
    Ok((g, report, tuples))
}

/// The task's scenarios by index: the first `train_scenarios` for training,
/// the next `test_scenarios` for testing.
pub fn split_scenarios<'a>(
    suite: &'a ScenarioSuite,
    task: Task,
    split: &SplitConfig,
) -> Result<(Vec<&'a Scenario>, Vec<&'a Scenario>), ConvertError> {
    let mut scenarios: Vec<&Scenario> = suite.for_task(task).collect();
    scenarios.sort_by_key(|s| s.index);
    let needed = split.train_scenarios + split.test_scenarios;
    if scenarios.len() < needed {
        return Err(ConvertError::NotEnoughScenarios {
            task: task.name(),
            found: scenarios.len(),
            needed,
        });
    }
    let test = scenarios[split.train_scenarios..needed].to_vec();
    scenarios.truncate(split.train_scenarios);
    Ok((scenarios, test))
}

/// Namespaces of the two graphs of a split.
pub fn split_configs(base: &ConvertConfig) -> (ConvertConfig, ConvertConfig) {
    let with = |suffix: &str| ConvertConfig {
        namespace: format!("{}-{suffix}", base.namespace),
        ..base.clone()
    };
    (with("train"), with("test"))
}

/// Every lineage triple that resolving `tuples` would add to `test`,
/// sorted. `test` itself is left unchanged.
pub fn ground_truth(
    test: &KnowledgeGraph,
    tuples: &[LineageTuple],
    cfg: &ConvertConfig,
) -> Result<Vec<GroundTruthEdge>, ConvertError> {
    let mut resolved = test.clone();
    resolve_lineage(&mut resolved, tuples, cfg)?;
    let mut edges: Vec<GroundTruthEdge> = resolved
        .triples()
        .filter(|t| LINEAGE_PROPERTIES.contains(&resolved.relation_name(t.relation)))
        .filter_map(|t| {
            Some(GroundTruthEdge {
                subject: resolved.node_iri(t.subject).to_string(),
                relation: resolved.relation_name(t.relation).to_string(),
                object: resolved.node_iri(t.object.as_node()?).to_string(),
            })
        })
        .collect();
    edges.sort();
    Ok(edges)
}

/// Train graph from the task's first `train_scenarios` scenarios, test graph
/// from the next `test_scenarios`. Each graph gets its own namespace
/// (`{namespace}-train`, `{namespace}-test`) and the profile's relation
/// registry.
pub fn split_train_test(
    db: &Database,
    suite: &ScenarioSuite,
    task: Task,
    split: &SplitConfig,
    base: &ConvertConfig,
) -> Result<TrainTestSplit, ConvertError> {
    let (train_s, test_s) = split_scenarios(suite, task, split)?;
    let (train_cfg, test_cfg) = split_configs(base);
    let (mut train, train_report, train_tuples) = build_graph(db, &train_s, &train_cfg)?;
    let train_lineage = resolve_lineage(&mut train, &train_tuples, &train_cfg)?;
    let (test, test_report, test_tuples) = build_graph(db, &test_s, &test_cfg)?;
    let ground_truth = ground_truth(&test, &test_tuples, &test_cfg)?;
    Ok(TrainTestSplit {
        train,
        test,
        ground_truth,
        train_report,
        test_report,
        train_lineage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::ProfileName;
    use crate::reldb::{northwind_fixture_with, FixtureConfig};
    use crate::scenario::{generate_suite, SuiteConfig};
    use std::collections::BTreeSet;

    #[test]
    fn disjoint_nodes_shared_relations_hidden_lineage() {
        let db = northwind_fixture_with(&FixtureConfig {
            rows_per_table: 8,
            seed: 4,
        });
        let task: Task = "join-linear".parse().unwrap();
        let suite = generate_suite(
            &db,
            &SuiteConfig {
                seed: 5,
                scenarios_per_task: 4,
                tasks: vec![task],
                ..Default::default()
            },
        )
        .unwrap();
        let split = SplitConfig {
            train_scenarios: 3,
            test_scenarios: 1,
        };
        for p in ProfileName::ALL {
            let s =
                split_train_test(&db, &suite, task, &split, &ConvertConfig::new(p, "jl")).unwrap();
            let a: BTreeSet<_> = s.train.node_iris().iter().collect();
            assert!(s.test.node_iris().iter().all(|n| !a.contains(n)));
            assert_eq!(s.train.relation_names(), s.test.relation_names());
            let row = s.test.relation_id("rowDerivedFrom").unwrap();
            assert_eq!(s.test.count_relation(row), 0);
            assert!(s.train_lineage.row_edges > 0);
            // At least one withheld row edge per test transformation.
            let pairs = s.row_pairs();
            let test_scenario = suite.for_task(task).find(|x| x.index == 4).unwrap();
            for out in &test_scenario.outputs {
                let marker = format!(":{}/row/", out.name());
                assert!(
                    pairs.iter().any(|(_, d)| d.contains(&marker)),
                    "{}",
                    out.name()
                );
            }
        }
        assert!(matches!(
            split_train_test(
                &db,
                &suite,
                task,
                &SplitConfig::default(),
                &ConvertConfig::new(ProfileName::Rddl, "x")
            ),
            Err(ConvertError::NotEnoughScenarios { .. })
        ));
    }
}
