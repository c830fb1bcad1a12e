use std::collections::{BTreeSet, HashMap};

use super::{
    Algebra, ColumnExpr, ColumnRef, Comparator, Filter, LineageTuple, MathKind, ScenarioError,
    TransformationSpec,
};
use crate::kgstore::Literal;
use crate::reldb::{Cell, ColumnDef, DataType, Database, ExecutionRecord, Relation, TableDef};

/// Result of running one transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Executed {
    pub relation: Relation,
    pub tuples: Vec<LineageTuple>,
    /// For every output row, the `(source object, row index)` pairs it was
    /// computed from.
    pub row_sources: Vec<Vec<(String, usize)>>,
}

fn invalid(spec: &TransformationSpec, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        output: spec.output.clone(),
        msg: msg.into(),
    }
}

fn column_index(
    spec: &TransformationSpec,
    rel: &Relation,
    col: &str,
) -> Result<usize, ScenarioError> {
    rel.def
        .column_index(col)
        .ok_or_else(|| invalid(spec, format!("column {col:?} absent from {:?}", rel.name())))
}

fn check_spec<'a>(
    db: &'a Database,
    spec: &TransformationSpec,
) -> Result<Vec<&'a Relation>, ScenarioError> {
    let expected_sources = match spec.kind.algebra {
        Algebra::Selection => 1,
        Algebra::Join | Algebra::Union => 2,
    };
    if spec.sources.len() != expected_sources {
        return Err(invalid(
            spec,
            format!(
                "{} needs {expected_sources} sources",
                spec.kind.algebra.as_str()
            ),
        ));
    }
    if db.object(&spec.output).is_some() {
        return Err(invalid(spec, "output object already exists"));
    }
    let sources: Vec<&Relation> = spec
        .sources
        .iter()
        .map(|s| {
            db.object(s)
                .ok_or_else(|| invalid(spec, format!("source {s:?} absent")))
        })
        .collect::<Result<_, _>>()?;
    if spec.columns.is_empty() {
        return Err(invalid(spec, "no output columns"));
    }
    let exprs_per_column = if spec.kind.algebra == Algebra::Union {
        2
    } else {
        1
    };
    for col in &spec.columns {
        if col.exprs.len() != exprs_per_column {
            return Err(invalid(
                spec,
                format!("column {:?} needs {exprs_per_column} expressions", col.name),
            ));
        }
        for (k, expr) in col.exprs.iter().enumerate() {
            for r in expr.inputs() {
                if r.source >= sources.len()
                    || (spec.kind.algebra == Algebra::Union && r.source != k)
                {
                    return Err(invalid(spec, format!("bad source index in {:?}", col.name)));
                }
                let rel = sources[r.source];
                let ci = column_index(spec, rel, &r.column)?;
                let def = &rel.def.columns[ci];
                let needs_number = !matches!(expr, ColumnExpr::Copy(_));
                if needs_number && !def.dtype.is_numeric() {
                    return Err(invalid(spec, format!("{:?} is not numeric", r.column)));
                }
                if let ColumnExpr::Unary(MathKind::Power | MathKind::Log, _) = expr {
                    let all_positive = rel
                        .column_values(ci)
                        .flatten()
                        .all(|v| v.as_f64().is_some_and(|x| x > 0.0));
                    if !all_positive {
                        return Err(invalid(
                            spec,
                            format!("{:?} has non-positive values", r.column),
                        ));
                    }
                }
            }
        }
    }
    if let Some(f) = &spec.filter {
        column_index(spec, sources[0], &f.column)?;
    }
    if spec.kind.algebra == Algebra::Join {
        let j = spec
            .join
            .as_ref()
            .ok_or_else(|| invalid(spec, "join without condition"))?;
        let fk_related = db.foreign_keys().iter().any(|(child, fk)| {
            (*child == spec.sources[0]
                && fk.column == j.left_column
                && fk.ref_table == spec.sources[1]
                && fk.ref_column == j.right_column)
                || (*child == spec.sources[1]
                    && fk.column == j.right_column
                    && fk.ref_table == spec.sources[0]
                    && fk.ref_column == j.left_column)
        });
        if !fk_related {
            return Err(invalid(
                spec,
                "join sources are not related by a foreign key",
            ));
        }
    }
    if spec.kind.algebra == Algebra::Union {
        for col in &spec.columns {
            let kinds: Vec<DataType> = col
                .exprs
                .iter()
                .map(|e| output_column_def(&sources, e, "").dtype)
                .collect();
            if kinds[0] != kinds[1] {
                return Err(invalid(
                    spec,
                    format!("union column {:?} types differ", col.name),
                ));
            }
        }
    }
    Ok(sources)
}

fn output_column_def(sources: &[&Relation], expr: &ColumnExpr, name: &str) -> ColumnDef {
    match expr {
        ColumnExpr::Copy(r) => {
            let src = sources[r.source].def.column(&r.column).expect("checked");
            ColumnDef {
                name: name.to_string(),
                is_pk: false,
                is_fk: false,
                ..src.clone()
            }
        }
        _ => {
            let nullable = expr.inputs().iter().any(|r| {
                sources[r.source]
                    .def
                    .column(&r.column)
                    .is_some_and(|c| c.nullable)
            });
            ColumnDef {
                nullable,
                ..ColumnDef::new(name, DataType::Decimal)
            }
        }
    }
}

fn passes(filter: &Filter, cell: &Cell) -> bool {
    let Some(v) = cell else { return false };
    match filter.cmp {
        Comparator::Eq => v == &filter.constant,
        cmp => {
            let ord = match (v.as_f64(), filter.constant.as_f64()) {
                (Some(x), Some(y)) => x.partial_cmp(&y),
                _ => Some(v.lexical().cmp(filter.constant.lexical())),
            };
            match cmp {
                Comparator::Lt => ord == Some(std::cmp::Ordering::Less),
                _ => ord == Some(std::cmp::Ordering::Greater),
            }
        }
    }
}

fn apply_math(
    spec: &TransformationSpec,
    expr: &ColumnExpr,
    inputs: &[&Literal],
) -> Result<Literal, ScenarioError> {
    let num = |l: &Literal| {
        l.as_f64().ok_or_else(|| ScenarioError::Math {
            output: spec.output.clone(),
            msg: format!("non-numeric value {l}"),
        })
    };
    let value = match expr {
        ColumnExpr::Copy(_) => return Ok(inputs[0].clone()),
        ColumnExpr::Bilinear(..) => spec.a * num(inputs[0])? * num(inputs[1])?,
        ColumnExpr::Unary(kind, _) => {
            let x = num(inputs[0])?;
            let positive = |what: &str| {
                if x > 0.0 {
                    Ok(())
                } else {
                    Err(ScenarioError::Math {
                        output: spec.output.clone(),
                        msg: format!("{what} of non-positive value {x}"),
                    })
                }
            };
            match kind {
                MathKind::Projection => x,
                MathKind::Linear => spec.a * x + spec.b,
                MathKind::Power => {
                    positive("power")?;
                    x.powf(spec.a)
                }
                MathKind::Log => {
                    positive("log")?;
                    x.ln()
                }
                MathKind::Exp => (spec.b * x).exp(),
                MathKind::Bilinear => unreachable!("bilinear uses two inputs"),
            }
        }
    };
    Literal::decimal(value).map_err(|e| ScenarioError::Math {
        output: spec.output.clone(),
        msg: e.to_string(),
    })
}

fn query_text(spec: &TransformationSpec) -> String {
    let cols: Vec<String> = spec.columns.iter().map(|c| c.name.clone()).collect();
    let mut q = format!(
        "{} {} FROM {}",
        spec.kind.math.as_str(),
        cols.join(", "),
        spec.sources.join(if spec.kind.algebra == Algebra::Union {
            " UNION ALL "
        } else {
            " JOIN "
        })
    );
    if let Some(j) = &spec.join {
        q.push_str(&format!(" ON {} = {}", j.left_column, j.right_column));
    }
    if let Some(f) = &spec.filter {
        q.push_str(&format!(
            " WHERE {} {} {}",
            f.column,
            f.cmp.symbol(),
            f.constant
        ));
    }
    q
}

/// Runs `spec` against `db` without modifying it.
pub fn execute_transformation(
    db: &Database,
    spec: &TransformationSpec,
) -> Result<Executed, ScenarioError> {
    let sources = check_spec(db, spec)?;

    // Output schema. Union columns take their definition from the first source.
    let columns: Vec<ColumnDef> = spec
        .columns
        .iter()
        .map(|c| output_column_def(&sources, &c.exprs[0], &c.name))
        .collect();
    let mut relation = Relation::new(TableDef {
        name: spec.output.clone(),
        columns,
        foreign_keys: vec![],
    });
    relation.object_class = spec.output_class;
    relation.execution = Some(ExecutionRecord {
        query_text: query_text(spec),
        sources: spec.sources.clone(),
    });

    // Each output row is a vector of (source index, row index) pairs.
    let row_sets: Vec<Vec<(usize, usize)>> = match spec.kind.algebra {
        Algebra::Selection => {
            let filter_idx = spec
                .filter
                .as_ref()
                .map(|f| column_index(spec, sources[0], &f.column))
                .transpose()?;
            (0..sources[0].rows.len())
                .filter(|&r| match (&spec.filter, filter_idx) {
                    (Some(f), Some(ci)) => passes(f, &sources[0].rows[r][ci]),
                    _ => true,
                })
                .map(|r| vec![(0, r)])
                .collect()
        }
        Algebra::Join => {
            let j = spec.join.as_ref().expect("checked");
            let li = column_index(spec, sources[0], &j.left_column)?;
            let ri = column_index(spec, sources[1], &j.right_column)?;
            let mut by_key: HashMap<&Literal, Vec<usize>> = HashMap::new();
            for (r, row) in sources[1].rows.iter().enumerate() {
                if let Some(k) = &row[ri] {
                    by_key.entry(k).or_default().push(r);
                }
            }
            let mut out = Vec::new();
            for (l, row) in sources[0].rows.iter().enumerate() {
                if let Some(k) = &row[li] {
                    for &r in by_key.get(k).into_iter().flatten() {
                        out.push(vec![(0, l), (1, r)]);
                    }
                }
            }
            out
        }
        Algebra::Union => (0..2)
            .flat_map(|s| (0..sources[s].rows.len()).map(move |r| vec![(s, r)]))
            .collect(),
    };

    let mut tuples = Vec::new();
    let mut row_sources = Vec::with_capacity(row_sets.len());
    for set in &row_sets {
        let row_of = |s: usize| -> Option<&Vec<Cell>> {
            set.iter()
                .find(|(src, _)| *src == s)
                .map(|&(src, r)| &sources[src].rows[r])
        };
        let mut out_row = Vec::with_capacity(spec.columns.len());
        let union_source = set[0].0;
        for col in &spec.columns {
            let expr = if spec.kind.algebra == Algebra::Union {
                &col.exprs[union_source]
            } else {
                &col.exprs[0]
            };
            let refs = expr.inputs();
            let mut cells: Vec<(&ColumnRef, &Literal)> = Vec::new();
            for r in &refs {
                let row = row_of(r.source).expect("row present for referenced source");
                let ci = column_index(spec, sources[r.source], &r.column)?;
                if let Some(v) = &row[ci] {
                    cells.push((r, v));
                }
            }
            let cell = if cells.len() == refs.len() {
                let values: Vec<&Literal> = cells.iter().map(|(_, v)| *v).collect();
                Some(apply_math(spec, expr, &values)?)
            } else {
                None
            };
            if let Some(v2) = &cell {
                for (r, v1) in &cells {
                    tuples.push(LineageTuple {
                        t1: spec.sources[r.source].clone(),
                        c1: r.column.clone(),
                        v1: v1.lexical().to_string(),
                        t2: spec.output.clone(),
                        c2: col.name.clone(),
                        v2: v2.lexical().to_string(),
                    });
                }
            }
            out_row.push(cell);
        }
        relation.rows.push(out_row);
        row_sources.push(
            set.iter()
                .map(|&(s, r)| (spec.sources[s].clone(), r))
                .collect(),
        );
    }
    Ok(Executed {
        relation,
        tuples,
        row_sources,
    })
}

/// Executes `spec` and stores its output among `db`'s views.
pub fn apply_transformation(
    db: &mut Database,
    spec: &TransformationSpec,
) -> Result<Vec<LineageTuple>, ScenarioError> {
    let exec = execute_transformation(db, spec)?;
    db.views.insert(spec.output.clone(), exec.relation);
    Ok(exec.tuples)
}

/// Row-level lineage implied by `tuples`, computed by value lookup directly on
/// the database: every row of `t2` holding `v2` in `c2` is derived from every
/// row of `t1` holding `v1` in `c1`. Pairs are `((t2, row), (t1, row))`.
pub fn row_level_edges(
    db: &Database,
    tuples: &[LineageTuple],
) -> BTreeSet<((String, usize), (String, usize))> {
    let lookup = |t: &str, c: &str, v: &str| -> Vec<usize> {
        let Some(rel) = db.object(t) else {
            return vec![];
        };
        let Some(ci) = rel.def.column_index(c) else {
            return vec![];
        };
        let kind = rel.def.columns[ci].dtype.literal_kind();
        let Ok(target) = Literal::new(kind, v) else {
            return vec![];
        };
        rel.rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row[ci].as_ref() == Some(&target))
            .map(|(i, _)| i)
            .collect()
    };
    let mut out = BTreeSet::new();
    for t in tuples {
        let src = lookup(&t.t1, &t.c1, &t.v1);
        let dst = lookup(&t.t2, &t.c2, &t.v2);
        for &d in &dst {
            for &s in &src {
                out.insert(((t.t2.clone(), d), (t.t1.clone(), s)));
            }
        }
    }
    out
}
