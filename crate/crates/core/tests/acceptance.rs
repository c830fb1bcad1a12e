//! Acceptance checks. Runs as a plain binary: one line per criterion, exit
//! status 1 if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use rddl_lineage::convert::{populate_kg, ConvertConfig};
use rddl_lineage::eval::{hits_at_k, pr_auc};
use rddl_lineage::kgstore::{
    match_pattern, parse_ntriples, parse_ntriples_with_relations, serialize_ntriples,
    KnowledgeGraph,
};
use rddl_lineage::ontology::{vocabulary, ProfileName};
use rddl_lineage::paths::{build_eval_set, read_samples, read_vocabulary, PathSample};
use rddl_lineage::pipeline::{read_ground_truth, run_pipeline, Layout, Stage};
use rddl_lineage::reldb::{
    export_database, load_database, northwind_fixture, northwind_fixture_with, FixtureConfig,
};
use rddl_lineage::scenario::{generate_suite, SuiteConfig, Task};
use rddl_lineage::siamese::{
    gradient_check, read_checkpoint, write_checkpoint, Model, ModelConfig,
};

use common::*;

const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const LINEAGE_BUDGET: Duration = Duration::from_secs(30);
const GRADIENT_BUDGET: Duration = Duration::from_secs(60);
const DESK_BUDGET: Duration = Duration::from_secs(600);
const GRAD_EPS: f64 = 1e-4;
const GRAD_FLOOR: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-3;
const AUC_TOL: f64 = 1e-12;
const DESK_MIN_AUC: f64 = 0.90;

type Check = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sorted_lines(text: &str) -> Vec<&str> {
    let mut v: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    v.sort_unstable();
    v
}

fn c1_golden_graph() -> Check {
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/schema_toy.nt"),
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let db = toy_db();
    let cfg = ConvertConfig {
        use_data: false,
        ..ConvertConfig::new(ProfileName::Rddl, "toy")
    };
    let mut outputs = Vec::new();
    for _ in 0..3 {
        let mut g = KnowledgeGraph::new();
        populate_kg(&mut g, &db, &cfg).map_err(|e| e.to_string())?;
        outputs.push(serialize_ntriples(&g));
    }
    let elapsed = start.elapsed();
    ensure(sorted_lines(&outputs[0]) == sorted_lines(&golden), || {
        format!("graph differs from golden file:\n{}", outputs[0])
    })?;
    ensure(outputs.iter().all(|o| *o == outputs[0]), || {
        "serialisation differs between runs".into()
    })?;
    ensure(elapsed < GOLDEN_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} triples, 3 identical runs in {elapsed:?}",
        sorted_lines(&golden).len()
    ))
}

fn c2_row_lineage() -> Check {
    let start = Instant::now();
    let cfg = ConvertConfig::new(ProfileName::Rddl, "t");
    let mut edges = 0;
    for i in 0..50u64 {
        let (db, tuples) = if i < 25 {
            scenario_lineage_case(i)
        } else {
            synthetic_lineage_case(i)
        };
        ensure(total_rows(&db) <= 200, || {
            format!("case {i}: {} rows", total_rows(&db))
        })?;
        let expected = row_lineage_oracle(&db, &tuples, &cfg);
        let got = resolved_row_edges(&db, &tuples, &cfg);
        ensure(got == expected, || {
            format!(
                "case {i}: {} edges, oracle {}; missing {:?}, extra {:?}",
                got.len(),
                expected.len(),
                expected.difference(&got).take(3).collect::<Vec<_>>(),
                got.difference(&expected).take(3).collect::<Vec<_>>()
            )
        })?;
        edges += got.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < LINEAGE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "50 databases, {edges} rowDerivedFrom edges, {elapsed:?}"
    ))
}

fn c3_pattern_matching() -> Check {
    let mut r = rng(3);
    let mut answers = 0;
    for i in 0..100 {
        let n = r.random_range(1..=15);
        let g = random_graph(&mut r, n, 500);
        let conj = random_conjunction(&mut r, &g);
        let expected = match_oracle(&g, &conj);
        let got = match_pattern(&g, &conj);
        ensure(got == expected, || {
            format!(
                "graph {i}: {} answers, oracle {} for {conj:?}",
                got.len(),
                expected.len()
            )
        })?;
        answers += got.len();
    }
    Ok(format!(
        "100 graphs, {answers} answers agree with enumeration"
    ))
}

fn c4_gradient() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let cfg = ModelConfig {
            embed_dim: 4,
            hidden_dim: 4,
            layers: 1,
            fusion_dim: 4,
            seed,
            ..ModelConfig::new(12, 4)
        };
        let model = Model::new(cfg.clone()).map_err(|e| e.to_string())?;
        let mut r = rng(seed);
        let sample = random_sample(&mut r, 12, 4, cfg.num_paths, 6);
        let check =
            gradient_check(&model, &sample, GRAD_EPS, GRAD_FLOOR).map_err(|e| e.to_string())?;
        ensure(check.max_relative_error <= GRAD_TOL, || {
            format!(
                "seed {seed}: relative error {:.3e} at parameter {}",
                check.max_relative_error, check.worst_index
            )
        })?;
        worst = worst.max(check.max_relative_error);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < GRADIENT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "5 seeds, max relative error {worst:.2e}, {elapsed:?}"
    ))
}

fn c5_pr_auc() -> Check {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = r.random_range(2..=60);
        // Coarse scores so ties are common.
        let levels = r.random_range(1..=8);
        let mut scored: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                (
                    r.random_range(0..levels) as f64 / levels as f64,
                    r.random_bool(0.4),
                )
            })
            .collect();
        scored[0].1 = true;
        scored[1].1 = false;
        let got = pr_auc(&scored).map_err(|e| e.to_string())?;
        let expected = pr_auc_oracle(&scored);
        let diff = (got - expected).abs();
        ensure(diff <= AUC_TOL, || {
            format!("set {i}: {got} vs oracle {expected}")
        })?;
        worst = worst.max(diff);

        let pos: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
        let neg: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
        for k in [1, 3, 10] {
            let (h, o) = (hits_at_k(&pos, &neg, k), hits_oracle(&pos, &neg, k));
            ensure(h == o, || format!("set {i}: hits@{k} {h} vs oracle {o}"))?;
        }
    }
    Ok(format!("1000 tied score sets, max deviation {worst:.1e}"))
}

fn c6_desk_selection(out: &Path) -> Check {
    let start = Instant::now();
    let mut m = desk_manifest("selection-projection", &[ProfileName::Rddl], 0, out);
    m.deterministic = true;
    let summary = run_pipeline(&m).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let r = summary
        .results
        .iter()
        .find(|r| r.profile == ProfileName::Rddl)
        .ok_or("no rddl result")?;
    ensure(r.pr_auc >= DESK_MIN_AUC, || {
        format!("PR-AUC {:.4}", r.pr_auc)
    })?;
    ensure(elapsed <= DESK_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "PR-AUC {:.4}, precision {:.3}, recall {:.3}, {:.1?}",
        r.pr_auc, r.precision, r.recall, elapsed
    ))
}

fn c7_join_improvement(root: &Path) -> Check {
    let mut deltas = Vec::new();
    for seed in 0..5u64 {
        let m = desk_manifest(
            "join-projection",
            &ProfileName::ALL,
            seed,
            &root.join(format!("seed{seed}")),
        );
        let summary = run_pipeline(&m).map_err(|e| format!("seed {seed}: {e}"))?;
        let hits = by_profile(&summary.results);
        let get = |p| hits.get(&("join-projection".to_string(), p)).copied();
        let (Some(b), Some(r)) = (get(ProfileName::Baseline), get(ProfileName::Rddl)) else {
            return Err(format!("seed {seed}: missing result rows"));
        };
        deltas.push(r - b);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let shown: Vec<String> = deltas.iter().map(|d| format!("{d:+.2}")).collect();
    ensure(mean > 0.0, || {
        format!("mean delta Hits@10 {mean:+.3} ({})", shown.join(" "))
    })?;
    Ok(format!(
        "mean delta Hits@10 {mean:+.3} over seeds 0-4 ({})",
        shown.join(" ")
    ))
}

fn read_sample_file(path: &Path, num_paths: usize) -> Result<Vec<PathSample>, String> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_samples(std::io::BufReader::new(f), num_paths).map_err(|e| e.to_string())
}

fn c8_inductive_isolation(out: &Path) -> Check {
    let m = desk_manifest("selection-projection", &[ProfileName::Rddl], 0, out);
    let unit = Some((
        "selection-projection".parse::<Task>().unwrap(),
        ProfileName::Rddl,
    ));
    let layout = Layout {
        out: out.to_path_buf(),
    };
    let read = |stage: Stage, file: &str| {
        let p = layout.stage_dir(stage, unit).join(file);
        fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))
    };
    let relations = vocabulary(ProfileName::Rddl).relation_names();
    let parse =
        |text: &str| parse_ntriples_with_relations(text, &relations).map_err(|e| e.to_string());
    let train = parse(&read(Stage::ResolveLineage, "train.nt")?)?;
    let test_text = read(Stage::BuildKg, "test.nt")?;
    let test = parse(&test_text)?;

    let train_iris: BTreeSet<&str> = train.node_iris().iter().map(String::as_str).collect();
    let shared: Vec<&str> = test
        .node_iris()
        .iter()
        .map(String::as_str)
        .filter(|i| train_iris.contains(i))
        .collect();
    ensure(shared.is_empty(), || {
        format!(
            "individuals in both graphs: {:?}",
            &shared[..shared.len().min(5)]
        )
    })?;

    let samples = layout.stage_dir(Stage::SamplePaths, unit);
    let vocab = read_vocabulary(std::io::BufReader::new(
        fs::File::open(samples.join("vocabulary.tsv")).map_err(|e| e.to_string())?,
    ))
    .map_err(|e| e.to_string())?;
    let n = m.sampler.num_paths;
    let train_s = read_sample_file(&samples.join("train.samples"), n)?;
    let pos = read_sample_file(&samples.join("eval-positives.samples"), n)?;
    let neg = read_sample_file(&samples.join("eval-negatives.samples"), n)?;
    for s in train_s.iter().chain(&pos).chain(&neg) {
        ensure(s.relation < vocab.relation_count() as u32, || {
            format!("relation {} out of range", s.relation)
        })?;
        ensure(
            s.paths
                .iter()
                .flatten()
                .all(|&t| (t as usize) < vocab.size()),
            || format!("token out of range in {s:?}"),
        )?;
    }

    // Same test graph, triples in a different order.
    let truth = read_ground_truth(&read(Stage::ResolveLineage, "ground-truth.tsv")?)
        .map_err(|e| e.to_string())?;
    let mut lines: Vec<&str> = test_text.lines().collect();
    lines.shuffle(&mut rng(8));
    let permuted = parse(&lines.join("\n"))?;
    let eval = build_eval_set(&permuted, &truth, m.eval.negatives, &m.sampler_config())
        .map_err(|e| e.to_string())?;
    ensure(eval.positives == pos && eval.negatives == neg, || {
        "evaluation samples depend on triple order".into()
    })?;
    Ok(format!(
        "{} train / {} test individuals disjoint, {} samples in range, order-invariant",
        train.node_count(),
        test.node_count(),
        train_s.len() + pos.len() + neg.len()
    ))
}

fn c9_suite_shape() -> Check {
    let suite =
        generate_suite(&northwind_fixture(), &SuiteConfig::default()).map_err(|e| e.to_string())?;
    let n = suite.transformation_count();
    ensure(n == 720, || format!("{n} transformations"))?;
    for t in Task::all() {
        let k = suite.for_task(t).count();
        ensure(k == 20, || format!("{}: {k} scenarios", t.name()))?;
    }
    ensure(Task::all().len() == 9, || "task count".into())?;
    Ok("720 transformations, 9 tasks x 20 scenarios".into())
}

fn c10_round_trips(tmp: &Path) -> Check {
    // N-Triples fixed point.
    let db = northwind_fixture_with(&FixtureConfig {
        rows_per_table: 6,
        seed: 10,
    });
    let mut g = KnowledgeGraph::new();
    populate_kg(&mut g, &db, &ConvertConfig::new(ProfileName::Rddl, "nw"))
        .map_err(|e| e.to_string())?;
    let once = serialize_ntriples(&g);
    let twice = serialize_ntriples(&parse_ntriples(&once).map_err(|e| e.to_string())?);
    ensure(once == twice, || {
        "N-Triples serialisation is not a fixed point".into()
    })?;

    // CSV export and reload.
    let dir = tmp.join("csv");
    export_database(&db, &dir).map_err(|e| e.to_string())?;
    let back = load_database(&dir).map_err(|e| e.to_string())?;
    ensure(back == db, || "database changed across CSV export".into())?;

    // Checkpoint.
    let model = Model::new(ModelConfig {
        seed: 10,
        ..ModelConfig::new(20, 5)
    })
    .map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &model).map_err(|e| e.to_string())?;
    let loaded = read_checkpoint(&bytes[..]).map_err(|e| e.to_string())?;
    let same_bits = loaded.params.len() == model.params.len()
        && loaded
            .params
            .iter()
            .zip(&model.params)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(same_bits && loaded.cfg == model.cfg, || {
        "checkpoint parameters changed".into()
    })?;
    let mut again = Vec::new();
    write_checkpoint(&mut again, &loaded).map_err(|e| e.to_string())?;
    ensure(again == bytes, || "checkpoint bytes changed".into())?;
    Ok(format!(
        "{} triples, {} tables, {} parameters",
        g.len(),
        db.tables.len(),
        model.params.len()
    ))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let desk = tmp.path().join("desk");
    let checks: Vec<Criterion> = vec![
        (
            1,
            "schema graph matches golden file",
            Box::new(c1_golden_graph),
        ),
        (
            2,
            "row lineage matches value-join oracle",
            Box::new(c2_row_lineage),
        ),
        (
            3,
            "pattern matching matches enumeration",
            Box::new(c3_pattern_matching),
        ),
        (
            4,
            "analytic gradient matches finite differences",
            Box::new(c4_gradient),
        ),
        (5, "PR-AUC and Hits@k match oracles", Box::new(c5_pr_auc)),
        (
            6,
            "desk selection-projection PR-AUC",
            Box::new(|| c6_desk_selection(&desk)),
        ),
        (
            7,
            "rddl improves join-projection Hits@10",
            Box::new(|| c7_join_improvement(&tmp.path().join("join"))),
        ),
        (
            8,
            "train and test graphs are isolated",
            Box::new(|| c8_inductive_isolation(&desk)),
        ),
        (9, "default suite shape", Box::new(c9_suite_shape)),
        (
            10,
            "serialisation round trips",
            Box::new(|| c10_round_trips(tmp.path())),
        ),
    ];
    let mut failed = 0;
    for (n, name, check) in &checks {
        match check() {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({detail})");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
