//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rddl_lineage::convert::{populate_kg, resolve_lineage, scenario_database, ConvertConfig};
use rddl_lineage::kgstore::{
    Binding, Bindings, KnowledgeGraph, Literal, NodeId, Object, PatternTerm, RelationId,
    RelationTerm, Triple, TriplePattern,
};
use rddl_lineage::ontology::ProfileName;
use rddl_lineage::paths::{PathSample, PAD};
use rddl_lineage::pipeline::{Preset, RunManifest};
use rddl_lineage::reldb::{
    northwind_fixture_with, ColumnDef, DataType, Database, FixtureConfig, Relation, TableDef,
};
use rddl_lineage::scenario::{generate_suite, LineageTuple, SuiteConfig, Task};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One table `T(id integer primary key, name varchar(10) nullable)`.
pub fn toy_db() -> Database {
    let mut db = Database::default();
    db.add_table(Relation::new(TableDef {
        name: "T".into(),
        columns: vec![
            ColumnDef::new("id", DataType::Integer).pk(),
            ColumnDef::varchar("name", 10).nullable(),
        ],
        foreign_keys: vec![],
    }));
    db
}

/// PR-AUC straight from the definition: precision and recall at every
/// distinct score used as a `score >= t` threshold, highest first, and the
/// step area `sum (R_i - R_{i-1}) * P_i`.
pub fn pr_auc_oracle(scored: &[(f64, bool)]) -> f64 {
    let positives = scored.iter().filter(|s| s.1).count() as f64;
    let mut thresholds: Vec<f64> = scored.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scored.iter().filter(|s| s.1 && s.0 >= t).count() as f64;
        let fp = scored.iter().filter(|s| !s.1 && s.0 >= t).count() as f64;
        let recall = tp / positives;
        area += (recall - prev_recall) * (tp / (tp + fp));
        prev_recall = recall;
    }
    area
}

/// Hits@k by explicit ranking: each positive is placed after every
/// negative scoring at least as high.
pub fn hits_oracle(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    let mut hits = 0;
    for &p in pos {
        let mut ranked: Vec<(f64, bool)> = neg.iter().map(|&n| (n, false)).collect();
        ranked.push((p, true));
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let rank = ranked.iter().position(|x| x.1).unwrap() + 1;
        hits += (rank <= k) as usize;
    }
    hits as f64 / pos.len() as f64
}

/// Every variable assignment over the graph's nodes, literal objects and
/// relations under which all patterns are triples of `g`.
pub fn match_oracle(g: &KnowledgeGraph, conj: &[TriplePattern]) -> BTreeSet<Bindings> {
    let mut term_vars = BTreeSet::new();
    let mut rel_vars = BTreeSet::new();
    for p in conj {
        for t in [&p.subject, &p.object] {
            if let PatternTerm::Var(v) = t {
                term_vars.insert(v.clone());
            }
        }
        if let RelationTerm::Var(v) = &p.relation {
            rel_vars.insert(v.clone());
        }
    }
    let mut terms: Vec<Binding> = (0..g.node_count() as u32)
        .map(|i| Binding::Node(NodeId(i)))
        .collect();
    let literals: BTreeSet<Literal> = g
        .triples()
        .filter_map(|t| t.object.as_literal().cloned())
        .collect();
    terms.extend(literals.into_iter().map(Binding::Literal));
    let rels: Vec<Binding> = (0..g.relation_count() as u32)
        .map(|i| Binding::Relation(RelationId(i)))
        .collect();
    let vars: Vec<(String, &Vec<Binding>)> = term_vars
        .into_iter()
        .map(|v| (v, &terms))
        .chain(rel_vars.into_iter().map(|v| (v, &rels)))
        .collect();

    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; vars.len()];
    if vars.iter().any(|(_, d)| d.is_empty()) {
        return out;
    }
    loop {
        let b: Bindings = vars
            .iter()
            .zip(&idx)
            .map(|((name, dom), &i)| (name.clone(), dom[i].clone()))
            .collect();
        if conj.iter().all(|p| holds(g, p, &b)) {
            out.insert(b);
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == vars.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < vars[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn holds(g: &KnowledgeGraph, p: &TriplePattern, b: &Bindings) -> bool {
    let term = |t: &PatternTerm| match t {
        PatternTerm::Var(v) => b[v].clone(),
        PatternTerm::Node(n) => Binding::Node(*n),
        PatternTerm::Literal(l) => Binding::Literal(l.clone()),
    };
    let Binding::Node(subject) = term(&p.subject) else {
        return false;
    };
    let relation = match &p.relation {
        RelationTerm::Var(v) => match &b[v] {
            Binding::Relation(r) => *r,
            _ => return false,
        },
        RelationTerm::Rel(r) => *r,
    };
    let object = match term(&p.object) {
        Binding::Node(n) => Object::Node(n),
        Binding::Literal(l) => Object::Literal(l),
        Binding::Relation(_) => return false,
    };
    g.contains(&Triple {
        subject,
        relation,
        object,
    })
}

/// Random graph over `n` nodes, a few relations and literals, at most
/// `max_triples` triples.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, max_triples: usize) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::with_relations(&["p", "q", "s", "t"]);
    let lits = [
        Literal::integer(1),
        Literal::integer(2),
        Literal::string("1"),
        Literal::boolean(true),
        Literal::decimal(2.5).unwrap(),
    ];
    let count = r.random_range(0..=max_triples);
    for _ in 0..count {
        let s = format!("urn:n{}", r.random_range(0..n));
        let rel = ["p", "q", "s", "t"][r.random_range(0..4)];
        if r.random_bool(0.2) {
            g.add_literal(&s, rel, lits.choose(r).unwrap().clone());
        } else {
            g.add(&s, rel, &format!("urn:n{}", r.random_range(0..n)));
        }
    }
    g
}

/// A random conjunction of 1 to 3 patterns over variables `a`, `b`, `c`
/// and relation variable `p`, with constants drawn from `g`.
pub fn random_conjunction(r: &mut ChaCha8Rng, g: &KnowledgeGraph) -> Vec<TriplePattern> {
    let term = |r: &mut ChaCha8Rng, object: bool| -> PatternTerm {
        let roll = r.random_range(0..10);
        if roll < 7 || g.node_count() == 0 {
            PatternTerm::var(["a", "b", "c"][r.random_range(0..3)])
        } else if object && roll == 9 {
            PatternTerm::Literal(Literal::integer(r.random_range(1..=2)))
        } else {
            PatternTerm::Node(NodeId(r.random_range(0..g.node_count() as u32)))
        }
    };
    (0..r.random_range(1..=3))
        .map(|_| {
            let s = term(r, false);
            let rel = if r.random_bool(0.3) {
                RelationTerm::var("p")
            } else {
                RelationTerm::Rel(RelationId(r.random_range(0..g.relation_count() as u32)))
            };
            let o = term(r, true);
            TriplePattern::new(s, rel, o)
        })
        .collect()
}

/// Row-level lineage by a value join over the database itself: for each
/// tuple, every row of `t2` whose `c2` cell reads `v2` derives from every
/// row of `t1` whose `c1` cell reads `v1`. Returned as (derived, source)
/// row IRIs.
pub fn row_lineage_oracle(
    db: &Database,
    tuples: &[LineageTuple],
    cfg: &ConvertConfig,
) -> BTreeSet<(String, String)> {
    let iris = cfg.iris();
    let rows_with = |table: &str, column: &str, value: &str| -> Vec<usize> {
        let rel = db.object(table).expect("tuple names a database object");
        let c = rel.def.column_index(column).expect("tuple names a column");
        rel.rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row[c].as_ref().is_some_and(|l| l.lexical() == value))
            .map(|(i, _)| i)
            .collect()
    };
    let mut out = BTreeSet::new();
    for t in tuples {
        for i2 in rows_with(&t.t2, &t.c2, &t.v2) {
            for i1 in rows_with(&t.t1, &t.c1, &t.v1) {
                out.insert((iris.row(&t.t2, i2), iris.row(&t.t1, i1)));
            }
        }
    }
    out
}

/// rowDerivedFrom edges that `resolve_lineage` adds, as (derived, source)
/// IRIs.
pub fn resolved_row_edges(
    db: &Database,
    tuples: &[LineageTuple],
    cfg: &ConvertConfig,
) -> BTreeSet<(String, String)> {
    let mut g = KnowledgeGraph::new();
    populate_kg(&mut g, db, cfg).unwrap();
    resolve_lineage(&mut g, tuples, cfg).unwrap();
    let row = g.relation_id("rowDerivedFrom").unwrap();
    g.triples()
        .filter(|t| t.relation == row)
        .map(|t| {
            (
                g.node_iri(t.subject).to_string(),
                g.node_iri(t.object.as_node().unwrap()).to_string(),
            )
        })
        .collect()
}

/// A small database with scenario outputs as views and their lineage.
pub fn scenario_lineage_case(seed: u64) -> (Database, Vec<LineageTuple>) {
    let mut r = rng(seed);
    let db = northwind_fixture_with(&FixtureConfig {
        rows_per_table: r.random_range(3..=6),
        seed,
    });
    let tasks = Task::all();
    let task = tasks[r.random_range(0..tasks.len())];
    let suite = generate_suite(
        &db,
        &SuiteConfig {
            seed,
            scenarios_per_task: 2,
            tasks: vec![task],
            ..Default::default()
        },
    )
    .unwrap();
    let combined = scenario_database(&db, &suite.scenarios);
    let tuples = suite
        .scenarios
        .iter()
        .flat_map(|s| s.all_tuples().cloned())
        .collect();
    (combined, tuples)
}

/// Random tables and views with colliding values, nulls and lexically equal
/// values of different kinds, plus random lineage tuples between them.
pub fn synthetic_lineage_case(seed: u64) -> (Database, Vec<LineageTuple>) {
    let mut r = rng(seed);
    let mut db = Database::default();
    let n_obj = r.random_range(2..=4);
    for k in 0..n_obj {
        let name = format!("O{k}");
        let mut cols = Vec::new();
        for c in 0..r.random_range(1..=3) {
            let col = if r.random_bool(0.5) {
                ColumnDef::new(&format!("n{c}"), DataType::Integer)
            } else {
                ColumnDef::varchar(&format!("s{c}"), 8)
            };
            cols.push(col.nullable());
        }
        let mut rel = Relation::new(TableDef {
            name: name.clone(),
            columns: cols,
            foreign_keys: vec![],
        });
        for _ in 0..r.random_range(1..=12) {
            let row = rel
                .def
                .columns
                .iter()
                .map(|c| {
                    if r.random_bool(0.1) {
                        None
                    } else if c.dtype == DataType::Integer {
                        Some(Literal::integer(r.random_range(0..4)))
                    } else {
                        Some(Literal::string(["x", "y", "1"][r.random_range(0..3)]))
                    }
                })
                .collect();
            rel.rows.push(row);
        }
        if k > 0 && r.random_bool(0.5) {
            db.views.insert(name, rel);
        } else {
            db.add_table(rel);
        }
    }
    let objects: Vec<&Relation> = db.tables.values().chain(db.views.values()).collect();
    let pick = |r: &mut ChaCha8Rng, o: &Relation| -> (String, String) {
        let c = r.random_range(0..o.def.columns.len());
        let value = match o.rows[r.random_range(0..o.rows.len())][c].as_ref() {
            Some(l) => l.lexical().to_string(),
            None => "3".to_string(),
        };
        (o.def.columns[c].name.clone(), value)
    };
    let mut tuples = Vec::new();
    for _ in 0..r.random_range(1..=10) {
        let a = r.random_range(0..objects.len());
        let mut b = r.random_range(0..objects.len() - 1);
        if b >= a {
            b += 1;
        }
        let (c1, v1) = pick(&mut r, objects[a]);
        let (c2, v2) = pick(&mut r, objects[b]);
        tuples.push(LineageTuple {
            t1: objects[a].name().to_string(),
            c1,
            v1,
            t2: objects[b].name().to_string(),
            c2,
            v2,
        });
    }
    (db, tuples)
}

pub fn total_rows(db: &Database) -> usize {
    db.tables
        .values()
        .chain(db.views.values())
        .map(|r| r.rows.len())
        .sum()
}

/// Random sample for a model with `vocab` tokens and `relations`
/// relations: `num_paths` paths with random non-PAD prefixes.
pub fn random_sample(
    r: &mut ChaCha8Rng,
    vocab: u32,
    relations: u32,
    num_paths: usize,
    max_length: usize,
) -> PathSample {
    let paths = (0..num_paths)
        .map(|_| {
            let len = r.random_range(1..=max_length);
            let mut p: Vec<u32> = (0..len).map(|_| r.random_range(1..vocab)).collect();
            p.resize(max_length, PAD);
            p
        })
        .collect();
    PathSample {
        paths,
        relation: r.random_range(0..relations),
        label: r.random_range(0..=1),
    }
}

/// Desk preset manifest for one task.
pub fn desk_manifest(task: &str, profiles: &[ProfileName], seed: u64, out: &Path) -> RunManifest {
    RunManifest {
        seed,
        tasks: vec![task.to_string()],
        profiles: profiles.to_vec(),
        out: out.to_path_buf(),
        ..RunManifest::preset(Preset::Desk)
    }
}

/// Lines of a results file keyed by (task, profile).
pub fn by_profile(
    results: &[rddl_lineage::eval::TaskResult],
) -> BTreeMap<(String, ProfileName), f64> {
    results
        .iter()
        .map(|r| ((r.task.clone(), r.profile), r.hits_at_10))
        .collect()
}
