//! Line-oriented scenario manifest and lineage-tuple CSV files.
//!
//! One transformation per tab-separated line:
//!
//! ```text
//! scenario  task  step  algebra  math  a=..;b=..  sources  output  class  filter  join  columns
//! ```
//!
//! `sources` are `|`-separated; `filter` is `col>kind:lexical` (or `<`, `=`);
//! `join` is `left=right`; `columns` are `;`-separated `name=expr` entries
//! with `&` between the per-source expressions of a union column. Expressions
//! read `copy(0:col)`, `linear(0:col)` or `bilinear(0:a*1:b)`. Absent fields
//! are `-`. Names are percent-escaped where they clash with the syntax.

use std::fmt::Write as _;
use std::path::Path;

use super::exec::apply_transformation;
use super::{
    ColumnExpr, ColumnRef, Comparator, Filter, JoinCondition, LineageTuple, OutputColumn, Scenario,
    ScenarioError, ScenarioSuite, Task, TransformKind, TransformationSpec,
};
use crate::kgstore::{Literal, LiteralKind};
use crate::reldb::Database;

const HEADER: &str =
    "#scenario\ttask\tstep\talgebra\tmath\tparams\tsources\toutput\tclass\tfilter\tjoin\tcolumns";
const LINEAGE_HEADER: [&str; 6] = ["t1", "c1", "v1", "t2", "c2", "v2"];
const RESERVED: &[char] = &[
    '%', '\t', '\n', '\r', '|', ';', '=', '&', '(', ')', ':', '*', '<', '>',
];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub scenario: String,
    pub task: Task,
    pub step: usize,
    pub spec: TransformationSpec,
}

fn esc(s: &str) -> String {
    if s == "-" {
        return "%2D".to_string();
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if RESERVED.contains(&c) {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn unesc(s: &str) -> Result<String, String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or("truncated escape")?;
            out.push(u8::from_str_radix(hex, 16).map_err(|e| e.to_string())?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|e| e.to_string())
}

fn write_ref(out: &mut String, r: &ColumnRef) {
    let _ = write!(out, "{}:{}", r.source, esc(&r.column));
}

fn write_expr(out: &mut String, e: &ColumnExpr) {
    match e {
        ColumnExpr::Copy(r) => {
            out.push_str("copy(");
            write_ref(out, r);
        }
        ColumnExpr::Unary(m, r) => {
            out.push_str(m.as_str());
            out.push('(');
            write_ref(out, r);
        }
        ColumnExpr::Bilinear(a, b) => {
            out.push_str("bilinear(");
            write_ref(out, a);
            out.push('*');
            write_ref(out, b);
        }
    }
    out.push(')');
}

fn kind_name(k: LiteralKind) -> &'static str {
    match k {
        LiteralKind::String => "string",
        LiteralKind::Integer => "integer",
        LiteralKind::Decimal => "decimal",
        LiteralKind::Boolean => "boolean",
    }
}

fn entry_line(scenario: &Scenario, step: usize, spec: &TransformationSpec) -> String {
    let sources: Vec<String> = spec.sources.iter().map(|s| esc(s)).collect();
    let filter = spec.filter.as_ref().map_or("-".to_string(), |f| {
        format!(
            "{}{}{}:{}",
            esc(&f.column),
            f.cmp.symbol(),
            kind_name(f.constant.kind()),
            esc(f.constant.lexical())
        )
    });
    let join = spec.join.as_ref().map_or("-".to_string(), |j| {
        format!("{}={}", esc(&j.left_column), esc(&j.right_column))
    });
    let mut columns = String::new();
    for (i, c) in spec.columns.iter().enumerate() {
        if i > 0 {
            columns.push(';');
        }
        columns.push_str(&esc(&c.name));
        columns.push('=');
        for (k, e) in c.exprs.iter().enumerate() {
            if k > 0 {
                columns.push('&');
            }
            write_expr(&mut columns, e);
        }
    }
    format!(
        "{}\t{}\t{}\t{}\t{}\ta={};b={}\t{}\t{}\t{}\t{}\t{}\t{}",
        esc(&scenario.id),
        scenario.task.name(),
        step,
        spec.kind.algebra.as_str(),
        spec.kind.math.as_str(),
        spec.a,
        spec.b,
        sources.join("|"),
        esc(&spec.output),
        spec.output_class.class_name(),
        filter,
        join,
        columns
    )
}

pub fn write_manifest(suite: &ScenarioSuite) -> String {
    let mut out = format!("#seed={}\n{HEADER}\n", suite.seed);
    for s in &suite.scenarios {
        for (i, spec) in s.transformations.iter().enumerate() {
            out.push_str(&entry_line(s, i + 1, spec));
            out.push('\n');
        }
    }
    out
}

fn parse_ref(s: &str) -> Result<ColumnRef, String> {
    let (src, col) = s
        .split_once(':')
        .ok_or_else(|| format!("bad column ref {s:?}"))?;
    Ok(ColumnRef {
        source: src
            .parse()
            .map_err(|_| format!("bad source index {src:?}"))?,
        column: unesc(col)?,
    })
}

fn parse_expr(s: &str) -> Result<ColumnExpr, String> {
    let (head, rest) = s
        .split_once('(')
        .ok_or_else(|| format!("bad expression {s:?}"))?;
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("unterminated expression {s:?}"))?;
    match head {
        "copy" => Ok(ColumnExpr::Copy(parse_ref(inner)?)),
        "bilinear" => {
            let (a, b) = inner
                .split_once('*')
                .ok_or_else(|| format!("bilinear needs two inputs: {s:?}"))?;
            Ok(ColumnExpr::Bilinear(parse_ref(a)?, parse_ref(b)?))
        }
        other => Ok(ColumnExpr::Unary(other.parse()?, parse_ref(inner)?)),
    }
}

fn parse_kind(s: &str) -> Result<LiteralKind, String> {
    match s {
        "string" => Ok(LiteralKind::String),
        "integer" => Ok(LiteralKind::Integer),
        "decimal" => Ok(LiteralKind::Decimal),
        "boolean" => Ok(LiteralKind::Boolean),
        other => Err(format!("unknown literal kind {other:?}")),
    }
}

fn parse_filter(s: &str) -> Result<Option<Filter>, String> {
    if s == "-" {
        return Ok(None);
    }
    let pos = s
        .find(['<', '>', '='])
        .ok_or_else(|| format!("bad filter {s:?}"))?;
    let cmp = match &s[pos..pos + 1] {
        "<" => Comparator::Lt,
        ">" => Comparator::Gt,
        _ => Comparator::Eq,
    };
    let (kind, lex) = s[pos + 1..]
        .split_once(':')
        .ok_or_else(|| format!("bad filter constant in {s:?}"))?;
    let constant = Literal::new(parse_kind(kind)?, &unesc(lex)?).map_err(|e| e.to_string())?;
    Ok(Some(Filter {
        column: unesc(&s[..pos])?,
        cmp,
        constant,
    }))
}

fn parse_line(line: &str) -> Result<ManifestEntry, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 12 {
        return Err(format!("expected 12 fields, found {}", f.len()));
    }
    let task: Task = f[1].parse().map_err(|e: ScenarioError| e.to_string())?;
    let step = f[2].parse().map_err(|_| format!("bad step {:?}", f[2]))?;
    let algebra = f[3].parse()?;
    let math = f[4].parse()?;
    let (mut a, mut b) = (None, None);
    for p in f[5].split(';') {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("bad param {p:?}"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad number {v:?}"))?;
        match k {
            "a" => a = Some(v),
            "b" => b = Some(v),
            _ => return Err(format!("unknown param {k:?}")),
        }
    }
    let sources = f[6].split('|').map(unesc).collect::<Result<Vec<_>, _>>()?;
    let join = if f[10] == "-" {
        None
    } else {
        let (l, r) = f[10]
            .split_once('=')
            .ok_or_else(|| format!("bad join {:?}", f[10]))?;
        Some(JoinCondition {
            left_column: unesc(l)?,
            right_column: unesc(r)?,
        })
    };
    let mut columns = Vec::new();
    for c in f[11].split(';') {
        let (name, exprs) = c
            .split_once('=')
            .ok_or_else(|| format!("bad column {c:?}"))?;
        columns.push(OutputColumn {
            name: unesc(name)?,
            exprs: exprs.split('&').map(parse_expr).collect::<Result<_, _>>()?,
        });
    }
    Ok(ManifestEntry {
        scenario: unesc(f[0])?,
        task,
        step,
        spec: TransformationSpec {
            kind: TransformKind { algebra, math },
            sources,
            filter: parse_filter(f[9])?,
            join,
            a: a.ok_or("missing parameter a")?,
            b: b.ok_or("missing parameter b")?,
            columns,
            output: unesc(f[7])?,
            output_class: f[8].parse()?,
        },
    })
}

/// Parses a manifest; returns the suite seed and the entries in file order.
pub fn parse_manifest(text: &str) -> Result<(u64, Vec<ManifestEntry>), ScenarioError> {
    let mut seed = 0;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |msg: String| ScenarioError::Manifest { line: i + 1, msg };
        if let Some(s) = line.strip_prefix("#seed=") {
            seed = s
                .trim()
                .parse()
                .map_err(|_| err(format!("bad seed {s:?}")))?;
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        entries.push(parse_line(line).map_err(err)?);
    }
    Ok((seed, entries))
}

/// Re-executes manifest entries against `db`, one database copy per
/// scenario, and reassembles the suite.
pub fn replay_manifest(
    db: &Database,
    seed: u64,
    entries: &[ManifestEntry],
) -> Result<ScenarioSuite, ScenarioError> {
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut work = db.clone();
    for e in entries {
        let fresh = scenarios.last().is_none_or(|s| s.id != e.scenario);
        if fresh {
            work = db.clone();
            let index = scenarios.iter().filter(|s| s.task == e.task).count() + 1;
            scenarios.push(Scenario {
                id: e.scenario.clone(),
                task: e.task,
                index,
                transformations: vec![],
                outputs: vec![],
                lineage: vec![],
            });
        }
        let tuples = apply_transformation(&mut work, &e.spec)?;
        let s = scenarios.last_mut().expect("pushed above");
        s.transformations.push(e.spec.clone());
        s.outputs.push(work.views[&e.spec.output].clone());
        s.lineage.push(tuples);
    }
    Ok(ScenarioSuite { seed, scenarios })
}

fn lineage_err(path: &Path, e: impl ToString) -> ScenarioError {
    ScenarioError::LineageFile {
        file: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn write_lineage_csv(
    path: impl AsRef<Path>,
    tuples: &[LineageTuple],
) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| lineage_err(path, e))?;
    w.write_record(LINEAGE_HEADER)
        .map_err(|e| lineage_err(path, e))?;
    for t in tuples {
        w.write_record([&t.t1, &t.c1, &t.v1, &t.t2, &t.c2, &t.v2])
            .map_err(|e| lineage_err(path, e))?;
    }
    w.flush().map_err(|e| lineage_err(path, e))
}

pub fn read_lineage_csv(path: impl AsRef<Path>) -> Result<Vec<LineageTuple>, ScenarioError> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| lineage_err(path, e))?;
    let header = r.headers().map_err(|e| lineage_err(path, e))?;
    if header.iter().collect::<Vec<_>>() != LINEAGE_HEADER {
        return Err(lineage_err(path, "header must be t1,c1,v1,t2,c2,v2"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| lineage_err(path, e))?;
        if rec.len() != 6 {
            return Err(lineage_err(
                path,
                format!("expected 6 fields, got {}", rec.len()),
            ));
        }
        out.push(LineageTuple {
            t1: rec[0].to_string(),
            c1: rec[1].to_string(),
            v1: rec[2].to_string(),
            t2: rec[3].to_string(),
            c2: rec[4].to_string(),
            v2: rec[5].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_suite, SuiteConfig};
    use super::*;
    use crate::reldb::{northwind_fixture_with, FixtureConfig};

    fn suite() -> (Database, ScenarioSuite) {
        let db = northwind_fixture_with(&FixtureConfig {
            rows_per_table: 10,
            seed: 2,
        });
        let cfg = SuiteConfig {
            seed: 77,
            scenarios_per_task: 1,
            ..Default::default()
        };
        let s = generate_suite(&db, &cfg).unwrap();
        (db, s)
    }

    #[test]
    fn manifest_round_trip_and_replay() {
        let (db, suite) = suite();
        let text = write_manifest(&suite);
        let (seed, entries) = parse_manifest(&text).unwrap();
        assert_eq!(seed, 77);
        assert_eq!(entries.len(), suite.transformation_count());
        let specs: Vec<_> = suite
            .scenarios
            .iter()
            .flat_map(|s| s.transformations.iter().cloned())
            .collect();
        assert_eq!(
            entries.iter().map(|e| e.spec.clone()).collect::<Vec<_>>(),
            specs
        );
        assert_eq!(replay_manifest(&db, seed, &entries).unwrap(), suite);
    }

    #[test]
    fn escaping_round_trips() {
        for s in ["Order Details", "a|b;c=d&e", "x-y:z", "100%"] {
            assert_eq!(unesc(&esc(s)).unwrap(), s);
            assert!(!esc(s).contains(['|', ';', '&', '\t']));
        }
    }

    #[test]
    fn bad_line_reports_number() {
        let err = parse_manifest("#seed=1\nfoo\tbar\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Manifest { line: 2, .. }));
    }

    #[test]
    fn lineage_csv_round_trip() {
        let (_, suite) = suite();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("l.csv");
        let tuples: Vec<_> = suite.scenarios[0].all_tuples().cloned().collect();
        write_lineage_csv(&path, &tuples).unwrap();
        assert_eq!(read_lineage_csv(&path).unwrap(), tuples);
    }
}
