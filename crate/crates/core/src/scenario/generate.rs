use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::exec::{execute_transformation, row_level_edges};
use super::{
    Algebra, ColumnExpr, ColumnRef, Comparator, Filter, JoinCondition, MathFamily, MathKind,
    OutputColumn, Scenario, ScenarioError, ScenarioSuite, Task, TransformKind, TransformationSpec,
};
use crate::reldb::{DataType, Database, ObjectClass, Relation};

pub const STEPS_PER_SCENARIO: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub scenarios_per_task: usize,
    pub tasks: Vec<Task>,
    /// Draws per transformation before giving up on a scenario.
    pub max_attempts: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            scenarios_per_task: 20,
            tasks: Task::all(),
            max_attempts: 100,
        }
    }
}

impl SuiteConfig {
    pub fn with_seed(seed: u64) -> Self {
        SuiteConfig {
            seed,
            ..Default::default()
        }
    }
}

pub fn generate_suite(db: &Database, cfg: &SuiteConfig) -> Result<ScenarioSuite, ScenarioError> {
    let mut scenarios = Vec::new();
    for task in &cfg.tasks {
        if task.algebra == Algebra::Join && db.foreign_keys().is_empty() {
            return Err(ScenarioError::NoForeignKey);
        }
        let task_idx = Task::all().iter().position(|t| t == task).unwrap_or(0) as u64;
        for index in 1..=cfg.scenarios_per_task {
            let mix = cfg.seed
                ^ (task_idx + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
                ^ (index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            let mut rng = ChaCha8Rng::seed_from_u64(mix);
            scenarios.push(generate_scenario(
                db,
                *task,
                index,
                cfg.max_attempts,
                &mut rng,
            )?);
        }
    }
    Ok(ScenarioSuite {
        seed: cfg.seed,
        scenarios,
    })
}

fn generate_scenario(
    db: &Database,
    task: Task,
    index: usize,
    max_attempts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Scenario, ScenarioError> {
    let id = format!("{}-{index:02}", task.name());
    let mut work = db.clone();
    let mut transformations = Vec::new();
    let mut outputs = Vec::new();
    let mut lineage = Vec::new();
    for step in 1..=STEPS_PER_SCENARIO {
        let class = ObjectClass::ALL[(index * STEPS_PER_SCENARIO + step) % ObjectClass::ALL.len()];
        let previous = outputs.last().map(|r: &Relation| r.name().to_string());
        let mut accepted = None;
        for _ in 0..max_attempts {
            let Some(spec) = draw_spec(&work, task, index, step, class, previous.as_deref(), rng)
            else {
                continue;
            };
            let Ok(exec) = execute_transformation(&work, &spec) else {
                continue;
            };
            if exec.relation.rows.is_empty() {
                continue;
            }
            let out = spec.output.as_str();
            let truth: BTreeSet<_> = exec
                .row_sources
                .iter()
                .enumerate()
                .flat_map(|(r, srcs)| srcs.iter().map(move |s| ((out.to_string(), r), s.clone())))
                .collect();
            let mut trial = work.clone();
            trial
                .views
                .insert(spec.output.clone(), exec.relation.clone());
            if row_level_edges(&trial, &exec.tuples) != truth {
                continue;
            }
            accepted = Some((spec, exec, trial));
            break;
        }
        let Some((spec, exec, trial)) = accepted else {
            return Err(ScenarioError::Exhausted {
                scenario: id,
                attempts: max_attempts,
            });
        };
        work = trial;
        transformations.push(spec);
        outputs.push(exec.relation);
        lineage.push(exec.tuples);
    }
    Ok(Scenario {
        id,
        task,
        index,
        transformations,
        outputs,
        lineage,
    })
}

/// Columns whose values are all present and pairwise distinct.
fn eligible(rel: &Relation) -> Vec<(String, DataType)> {
    rel.def
        .columns
        .iter()
        .enumerate()
        .filter(|(i, _)| !rel.rows.is_empty() && rel.column_is_unique(*i))
        .map(|(_, c)| (c.name.clone(), c.dtype))
        .collect()
}

fn numeric(cols: &[(String, DataType)]) -> Vec<(String, DataType)> {
    cols.iter()
        .filter(|(_, t)| t.is_numeric())
        .cloned()
        .collect()
}

fn positive(rel: &Relation, cols: &[(String, DataType)]) -> Vec<(String, DataType)> {
    cols.iter()
        .filter(|(c, _)| {
            let i = rel.def.column_index(c).expect("listed column");
            rel.column_values(i)
                .all(|v| v.as_ref().and_then(|l| l.as_f64()).is_some_and(|x| x > 0.0))
        })
        .cloned()
        .collect()
}

fn round_dp(x: f64, dp: i32) -> f64 {
    let m = 10f64.powi(dp);
    (x * m).round() / m
}

fn round_sig(x: f64, digits: usize) -> f64 {
    format!("{:.*e}", digits - 1, x).parse().expect("float")
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = round_dp(rng.random_range(lo..=hi), 4);
    if rng.random_bool(0.5) {
        -v
    } else {
        v
    }
}

fn pick_math(task: Task, rng: &mut ChaCha8Rng) -> MathKind {
    match task.family {
        MathFamily::Projection => MathKind::Projection,
        MathFamily::Linear => MathKind::Linear,
        MathFamily::Nonlinear => *MathKind::NONLINEAR.choose(rng).expect("non-empty"),
    }
}

fn column_name(base: &str, math: MathKind, taken: &mut BTreeSet<String>) -> String {
    let stem = match math {
        MathKind::Projection => base.to_string(),
        m => format!("{base}_{}", m.as_str()),
    };
    let mut name = stem.clone();
    let mut k = 2;
    while !taken.insert(name.clone()) {
        name = format!("{stem}_{k}");
        k += 1;
    }
    name
}

fn output_name(index: usize, step: usize, math: MathKind, source: &str) -> String {
    let src: String = source
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("s{index:02}t{step}_{}_{src}", math.as_str())
}

fn unary_expr(math: MathKind, r: ColumnRef) -> ColumnExpr {
    match math {
        MathKind::Projection => ColumnExpr::Copy(r),
        m => ColumnExpr::Unary(m, r),
    }
}

/// Candidate columns of `rel` usable by `math` as a single input.
fn usable(rel: &Relation, math: MathKind) -> Vec<(String, DataType)> {
    let e = eligible(rel);
    match math {
        MathKind::Projection => e,
        MathKind::Power | MathKind::Log => positive(rel, &numeric(&e)),
        _ => numeric(&e),
    }
}

fn draw_params(math: MathKind, inputs: &[(&Relation, &str)], rng: &mut ChaCha8Rng) -> (f64, f64) {
    match math {
        MathKind::Projection | MathKind::Log => (1.0, 0.0),
        MathKind::Linear => (
            signed(rng, 0.5, 3.0),
            round_dp(rng.random_range(-50.0..=50.0), 4),
        ),
        MathKind::Bilinear => (signed(rng, 0.5, 3.0), 0.0),
        MathKind::Power => loop {
            let a = round_dp(rng.random_range(0.5..=2.0), 4);
            if (a - 1.0).abs() > 0.1 {
                break (a, 0.0);
            }
        },
        MathKind::Exp => {
            let max = inputs
                .iter()
                .flat_map(|(rel, col)| {
                    let i = rel.def.column_index(col).expect("listed column");
                    rel.column_values(i)
                        .filter_map(|v| v.as_ref().and_then(|l| l.as_f64()))
                        .map(f64::abs)
                        .collect::<Vec<_>>()
                })
                .fold(0.0f64, f64::max)
                .max(1e-9);
            let c = rng.random_range(0.5..=3.0);
            (1.0, round_sig(c / max, 6))
        }
    }
}

fn draw_filter(rel: &Relation, rng: &mut ChaCha8Rng) -> Option<Filter> {
    let n = rel.rows.len();
    if n < 2 {
        return None;
    }
    let mut numeric_cols = Vec::new();
    let mut repeated_cols = Vec::new();
    for (i, c) in rel.def.columns.iter().enumerate() {
        let present = rel.column_values(i).filter(|v| v.is_some()).count();
        if c.dtype.is_numeric() && present >= 2 {
            numeric_cols.push(i);
        } else if !c.dtype.is_numeric() && present == n && !rel.column_is_unique(i) {
            repeated_cols.push(i);
        }
    }
    if !repeated_cols.is_empty() && (numeric_cols.is_empty() || rng.random_bool(0.2)) {
        let ci = *repeated_cols.choose(rng)?;
        let row = rng.random_range(0..n);
        let constant = rel.rows[row][ci].clone()?;
        return Some(Filter {
            column: rel.def.columns[ci].name.clone(),
            cmp: Comparator::Eq,
            constant,
        });
    }
    let ci = *numeric_cols.choose(rng)?;
    let mut values: Vec<_> = rel
        .column_values(ci)
        .flatten()
        .filter_map(|l| l.as_f64().map(|x| (x, l.clone())))
        .collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = values.len();
    let keep = ((m as f64 * rng.random_range(0.5..=0.8)).round() as usize).clamp(1, m - 1);
    let (cmp, constant) = if rng.random_bool(0.5) {
        (Comparator::Gt, values[m - keep - 1].1.clone())
    } else {
        (Comparator::Lt, values[keep].1.clone())
    };
    Some(Filter {
        column: rel.def.columns[ci].name.clone(),
        cmp,
        constant,
    })
}

fn choose_k<T: Clone>(items: &[T], lo: usize, hi: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    if items.is_empty() {
        return vec![];
    }
    let k = rng.random_range(lo..=hi).min(items.len()).max(1);
    items.choose_multiple(rng, k).cloned().collect()
}

fn draw_spec(
    db: &Database,
    task: Task,
    index: usize,
    step: usize,
    class: ObjectClass,
    previous: Option<&str>,
    rng: &mut ChaCha8Rng,
) -> Option<TransformationSpec> {
    let math = pick_math(task, rng);
    let objects: Vec<&str> = db
        .tables
        .keys()
        .chain(db.views.keys())
        .map(String::as_str)
        .collect();
    let mut taken = BTreeSet::new();
    let mut columns = Vec::new();
    let mut filter = None;
    let mut join = None;
    let sources: Vec<String>;
    let param_inputs: Vec<(String, String)>;

    match task.algebra {
        Algebra::Selection => {
            let src = match previous {
                Some(p) if rng.random_bool(0.5) => p,
                _ => objects.choose(rng)?,
            };
            let rel = db.object(src)?;
            filter = Some(draw_filter(rel, rng)?);
            let cols = usable(rel, math);
            if math == MathKind::Bilinear {
                let pair = choose_k(&cols, 2, 2, rng);
                if pair.len() < 2 {
                    return None;
                }
                columns.push(OutputColumn {
                    name: column_name(&format!("{}_x_{}", pair[0].0, pair[1].0), math, &mut taken),
                    exprs: vec![ColumnExpr::Bilinear(
                        ColumnRef::new(0, &pair[0].0),
                        ColumnRef::new(0, &pair[1].0),
                    )],
                });
                param_inputs = vec![];
            } else {
                let hi = if math == MathKind::Projection { 3 } else { 2 };
                let picked = choose_k(&cols, 1, hi, rng);
                if picked.is_empty() {
                    return None;
                }
                for (c, _) in &picked {
                    columns.push(OutputColumn {
                        name: column_name(c, math, &mut taken),
                        exprs: vec![unary_expr(math, ColumnRef::new(0, c))],
                    });
                }
                param_inputs = picked
                    .iter()
                    .map(|(c, _)| (src.to_string(), c.clone()))
                    .collect();
            }
            sources = vec![src.to_string()];
        }
        Algebra::Join => {
            let fks = db.foreign_keys();
            let (child, fk) = *fks.choose(rng)?;
            let (left, right, lc, rc) = if rng.random_bool(0.5) {
                (child, fk.ref_table.as_str(), &fk.column, &fk.ref_column)
            } else {
                (fk.ref_table.as_str(), child, &fk.ref_column, &fk.column)
            };
            join = Some(JoinCondition {
                left_column: lc.clone(),
                right_column: rc.clone(),
            });
            let rels = [db.object(left)?, db.object(right)?];
            if math == MathKind::Bilinear {
                let l = usable(rels[0], math);
                let r = usable(rels[1], math);
                let (l, r) = (l.choose(rng)?, r.choose(rng)?);
                columns.push(OutputColumn {
                    name: column_name(&format!("{}_x_{}", l.0, r.0), math, &mut taken),
                    exprs: vec![ColumnExpr::Bilinear(
                        ColumnRef::new(0, &l.0),
                        ColumnRef::new(1, &r.0),
                    )],
                });
                param_inputs = vec![];
            } else {
                let hi = if math == MathKind::Projection { 2 } else { 1 };
                let mut inputs = Vec::new();
                for (k, rel) in rels.iter().enumerate() {
                    let picked = choose_k(&usable(rel, math), 1, hi, rng);
                    if picked.is_empty() {
                        return None;
                    }
                    for (c, _) in picked {
                        columns.push(OutputColumn {
                            name: column_name(&c, math, &mut taken),
                            exprs: vec![unary_expr(math, ColumnRef::new(k, &c))],
                        });
                        inputs.push((rel.name().to_string(), c));
                    }
                }
                param_inputs = inputs;
            }
            sources = vec![left.to_string(), right.to_string()];
        }
        Algebra::Union => {
            let first = match previous {
                Some(p) if rng.random_bool(0.5) => p,
                _ => objects.choose(rng)?,
            };
            let second = *objects.choose(rng)?;
            if second == first {
                return None;
            }
            let rels = [db.object(first)?, db.object(second)?];
            let per_source = if math == MathKind::Bilinear { 2 } else { 1 };
            let hi = if math == MathKind::Projection { 2 } else { 1 };
            let width = rng.random_range(1..=hi);
            let a_cols = usable(rels[0], math);
            let b_cols = usable(rels[1], math);
            let mut inputs = Vec::new();
            let mut used_a = BTreeSet::new();
            let mut used_b = BTreeSet::new();
            for _ in 0..width {
                let mut pick = |cols: &[(String, DataType)],
                                used: &mut BTreeSet<String>,
                                want: Option<DataType>|
                 -> Option<Vec<String>> {
                    let free: Vec<_> = cols
                        .iter()
                        .filter(|(c, t)| {
                            !used.contains(c)
                                && (math != MathKind::Projection || want.is_none_or(|w| w == *t))
                        })
                        .cloned()
                        .collect();
                    let chosen = choose_k(&free, per_source, per_source, rng);
                    if chosen.len() < per_source {
                        return None;
                    }
                    Some(
                        chosen
                            .into_iter()
                            .map(|(c, _)| {
                                used.insert(c.clone());
                                c
                            })
                            .collect(),
                    )
                };
                let ca = pick(&a_cols, &mut used_a, None)?;
                let want = rels[0].def.column(&ca[0]).map(|c| c.dtype);
                let cb = pick(&b_cols, &mut used_b, want)?;
                let exprs = if math == MathKind::Bilinear {
                    vec![
                        ColumnExpr::Bilinear(ColumnRef::new(0, &ca[0]), ColumnRef::new(0, &ca[1])),
                        ColumnExpr::Bilinear(ColumnRef::new(1, &cb[0]), ColumnRef::new(1, &cb[1])),
                    ]
                } else {
                    vec![
                        unary_expr(math, ColumnRef::new(0, &ca[0])),
                        unary_expr(math, ColumnRef::new(1, &cb[0])),
                    ]
                };
                let base = if math == MathKind::Bilinear {
                    format!("{}_x_{}", ca[0], ca[1])
                } else {
                    ca[0].clone()
                };
                columns.push(OutputColumn {
                    name: column_name(&base, math, &mut taken),
                    exprs,
                });
                inputs.push((first.to_string(), ca[0].clone()));
                inputs.push((second.to_string(), cb[0].clone()));
            }
            param_inputs = inputs;
            sources = vec![first.to_string(), second.to_string()];
        }
    }

    let rel_inputs: Vec<(&Relation, &str)> = param_inputs
        .iter()
        .filter_map(|(t, c)| db.object(t).map(|r| (r, c.as_str())))
        .collect();
    let (a, b) = draw_params(math, &rel_inputs, rng);
    Some(TransformationSpec {
        kind: TransformKind {
            algebra: task.algebra,
            math,
        },
        output: output_name(index, step, math, &sources[0]),
        sources,
        filter,
        join,
        a,
        b,
        columns,
        output_class: class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reldb::{northwind_fixture_with, FixtureConfig};

    fn small_db() -> Database {
        northwind_fixture_with(&FixtureConfig {
            rows_per_table: 10,
            seed: 11,
        })
    }

    #[test]
    fn every_task_generates_four_steps() {
        let db = small_db();
        let cfg = SuiteConfig {
            seed: 3,
            scenarios_per_task: 2,
            ..Default::default()
        };
        let suite = generate_suite(&db, &cfg).unwrap();
        assert_eq!(suite.scenarios.len(), 18);
        assert_eq!(suite.transformation_count(), 72);
        for s in &suite.scenarios {
            assert_eq!(s.transformations.len(), STEPS_PER_SCENARIO);
            for (spec, out) in s.transformations.iter().zip(&s.outputs) {
                assert_eq!(spec.kind.algebra, s.task.algebra);
                assert_eq!(spec.kind.math.family(), s.task.family);
                assert!(!out.rows.is_empty());
            }
        }
    }

    #[test]
    fn deterministic() {
        let db = small_db();
        let cfg = SuiteConfig {
            seed: 9,
            scenarios_per_task: 1,
            ..Default::default()
        };
        assert_eq!(
            generate_suite(&db, &cfg).unwrap(),
            generate_suite(&db, &cfg).unwrap()
        );
    }

    #[test]
    fn join_without_fk_rejected() {
        let mut db = small_db();
        for t in db.tables.values_mut() {
            t.def.foreign_keys.clear();
        }
        let cfg = SuiteConfig {
            tasks: vec!["join-linear".parse().unwrap()],
            scenarios_per_task: 1,
            ..Default::default()
        };
        assert!(matches!(
            generate_suite(&db, &cfg),
            Err(ScenarioError::NoForeignKey)
        ));
    }

    #[test]
    fn output_classes_rotate() {
        let db = small_db();
        let cfg = SuiteConfig {
            tasks: vec![Task::all()[0]],
            scenarios_per_task: 2,
            ..Default::default()
        };
        let suite = generate_suite(&db, &cfg).unwrap();
        let classes: BTreeSet<_> = suite
            .scenarios
            .iter()
            .flat_map(|s| s.outputs.iter().map(|o| o.object_class))
            .collect();
        assert_eq!(classes.len(), ObjectClass::ALL.len());
    }
}
