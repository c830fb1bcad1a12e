use std::collections::BTreeSet;

use super::{ConvertConfig, ConvertError, Iris};
use crate::kgstore::{
    match_pattern, Binding, KnowledgeGraph, Literal, LiteralKind, NodeId, PatternTerm,
    RelationTerm, TriplePattern, RDF_TYPE,
};
use crate::ontology::ProfileName;
use crate::scenario::LineageTuple;

/// Newly added lineage triples, per family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineageReport {
    pub tuples: usize,
    pub row_edges: usize,
    pub value_edges: usize,
    pub column_edges: usize,
    pub table_edges: usize,
}

const LITERAL_KINDS: [LiteralKind; 4] = [
    LiteralKind::String,
    LiteralKind::Integer,
    LiteralKind::Decimal,
    LiteralKind::Boolean,
];

struct Side {
    table: NodeId,
    column: NodeId,
    /// `(row, cell)` pairs whose cell holds the value.
    matches: BTreeSet<(NodeId, NodeId)>,
}

fn node_of(g: &KnowledgeGraph, iri: &str) -> Option<NodeId> {
    g.node_id(iri)
}

fn resolve_side(
    g: &KnowledgeGraph,
    iris: &Iris,
    tuple: &LineageTuple,
    table: &str,
    column: &str,
    value: &str,
) -> Result<Side, ConvertError> {
    let err = |msg: String| ConvertError::Unresolvable {
        tuple: tuple.to_string(),
        msg,
    };
    let has_column = g.require_relation("hasColumn")?;
    let t = node_of(g, &iris.object(table))
        .ok_or_else(|| err(format!("no node for table {table:?}")))?;
    let column_node = [
        iris.table_column(table, column),
        iris.view_column(table, column),
    ]
    .into_iter()
    .filter_map(|iri| node_of(g, &iri))
    .find(|&c| g.objects(t, has_column).any(|o| o.as_node() == Some(c)))
    .ok_or_else(|| err(format!("table {table:?} has no column {column:?}")))?;

    let exact = g.require_relation("exactValue")?;
    let belongs = g.require_relation("belongsToColumn")?;
    let has_cell = g.require_relation("hasCellValue")?;
    let mut matches = BTreeSet::new();
    // The tuple carries a lexical form only; every literal kind that accepts
    // it is tried, and the column conjunct keeps the right one.
    for kind in LITERAL_KINDS {
        let Ok(lit) = Literal::new(kind, value) else {
            continue;
        };
        let conj = [
            TriplePattern::new(
                PatternTerm::var("x"),
                RelationTerm::Rel(exact),
                PatternTerm::Literal(lit),
            ),
            TriplePattern::new(
                PatternTerm::var("x"),
                RelationTerm::Rel(belongs),
                PatternTerm::Node(column_node),
            ),
            TriplePattern::new(
                PatternTerm::var("r"),
                RelationTerm::Rel(has_cell),
                PatternTerm::var("x"),
            ),
            TriplePattern::new(
                PatternTerm::Node(t),
                RelationTerm::Rel(has_column),
                PatternTerm::Node(column_node),
            ),
        ];
        for b in match_pattern(g, &conj) {
            if let (Some(Binding::Node(r)), Some(Binding::Node(x))) = (b.get("r"), b.get("x")) {
                matches.insert((*r, *x));
            }
        }
    }
    Ok(Side {
        table: t,
        column: column_node,
        matches,
    })
}

/// Injects row-level lineage for every tuple, plus the value, column and
/// table edges implied by the same matches. Under the rddl profile the two
/// tables also receive their candidate role types.
pub fn resolve_lineage(
    g: &mut KnowledgeGraph,
    tuples: &[LineageTuple],
    cfg: &ConvertConfig,
) -> Result<LineageReport, ConvertError> {
    for r in crate::ontology::vocabulary(cfg.profile).relation_names() {
        g.intern_relation(&r);
    }
    let iris = cfg.iris();
    let row_rel = g.require_relation("rowDerivedFrom")?;
    let value_rel = g.require_relation("valueDerivedFrom")?;
    let column_rel = g.require_relation("columnDerivedFrom")?;
    let table_rel = g.require_relation("tableDerivedFrom")?;
    let mut report = LineageReport {
        tuples: tuples.len(),
        ..Default::default()
    };
    for tuple in tuples {
        let src = resolve_side(g, &iris, tuple, &tuple.t1, &tuple.c1, &tuple.v1)?;
        let dst = resolve_side(g, &iris, tuple, &tuple.t2, &tuple.c2, &tuple.v2)?;
        if cfg.strict && (src.matches.len() != 1 || dst.matches.len() != 1) {
            return Err(ConvertError::Ambiguous {
                tuple: tuple.to_string(),
                src: src.matches.len(),
                dst: dst.matches.len(),
            });
        }
        for &(r2, x2) in &dst.matches {
            for &(r1, x1) in &src.matches {
                report.row_edges += g.add_triple(r2, row_rel, r1)? as usize;
                report.value_edges += g.add_triple(x2, value_rel, x1)? as usize;
            }
        }
        report.column_edges += g.add_triple(dst.column, column_rel, src.column)? as usize;
        report.table_edges += g.add_triple(dst.table, table_rel, src.table)? as usize;
        if cfg.profile == ProfileName::Rddl {
            let t2 = g.node_iri(dst.table).to_string();
            let t1 = g.node_iri(src.table).to_string();
            g.add(&t2, RDF_TYPE, &iris.class("SourceDataCandidate"));
            g.add(&t1, RDF_TYPE, &iris.class("TargetDataCandidate"));
        }
    }
    Ok(report)
}
