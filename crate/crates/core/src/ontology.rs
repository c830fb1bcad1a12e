//! The two ontology profiles: the baseline structural model and the extended
//! RDDL model with constraints, datatypes, execution semantics and an object
//! hierarchy.
//!
//! Profiles are code-defined constants. Individuals in a knowledge graph point
//! at per-graph class nodes (see [`Namespace`]), so validation maps class node
//! IRIs back to class names before checking domain and range declarations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kgstore::{KnowledgeGraph, Literal, LiteralKind, NodeId, Object, RDF_TYPE, VOCAB_NS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OntologyError {
    #[error("unknown profile {0:?} (expected baseline or rddl)")]
    UnknownProfile(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Baseline,
    Rddl,
}

impl ProfileName {
    pub const ALL: [ProfileName; 2] = [ProfileName::Baseline, ProfileName::Rddl];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Baseline => "baseline",
            ProfileName::Rddl => "rddl",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(ProfileName::Baseline),
            "rddl" => Ok(ProfileName::Rddl),
            _ => Err(OntologyError::UnknownProfile(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntClass {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Object,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Range {
    Class(String),
    Literal(LiteralKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntProperty {
    pub name: String,
    pub kind: PropertyKind,
    pub domain: Option<String>,
    pub range: Option<Range>,
    /// Abstract parent property, recorded as metadata only.
    pub super_property: Option<String>,
}

/// Abstract marker shared by the four lineage properties.
pub const DERIVED_FROM: &str = "derivedFrom";
/// External provenance relation the lineage marker is aligned with.
pub const PROV_ALIGNMENT: &str = "prov:wasDerivedFrom";

pub const LINEAGE_PROPERTIES: [&str; 4] = [
    "rowDerivedFrom",
    "columnDerivedFrom",
    "valueDerivedFrom",
    "tableDerivedFrom",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyProfile {
    pub name: ProfileName,
    classes: BTreeMap<String, OntClass>,
    /// Declaration order is kept so relation registries are stable.
    properties: Vec<OntProperty>,
}

const RDDL_CLASSES: &[(&str, Option<&str>)] = &[
    ("NamedDBObject", None),
    ("TabularDataObject", Some("NamedDBObject")),
    ("Table", Some("TabularDataObject")),
    ("TemporalTable", Some("Table")),
    ("ExternalTable", Some("Table")),
    ("View", Some("TabularDataObject")),
    ("MaterializedView", Some("View")),
    ("Query", Some("NamedDBObject")),
    ("StoredCode", Some("NamedDBObject")),
    ("Procedure", Some("StoredCode")),
    ("Function", Some("StoredCode")),
    ("Package", Some("StoredCode")),
    ("Column", Some("NamedDBObject")),
    ("Constraint", Some("NamedDBObject")),
    ("PrimaryKey", Some("Constraint")),
    ("ForeignKey", Some("Constraint")),
    ("NotNullConstraint", Some("Constraint")),
    ("CheckConstraint", Some("Constraint")),
    ("Row", None),
    ("CellValue", None),
    ("DataType", None),
    ("NumericType", Some("DataType")),
    ("BooleanType", Some("DataType")),
    ("TemporalType", Some("DataType")),
    ("CharacterType", Some("DataType")),
    ("QueryExecution", None),
    ("ProcExecution", None),
    ("FuncExecution", None),
    ("SourceDataCandidate", None),
    ("TargetDataCandidate", None),
];

const BASELINE_CLASSES: &[&str] = &["Table", "Column", "Row", "CellValue"];

fn obj(name: &str, domain: Option<&str>, range: Option<&str>) -> OntProperty {
    OntProperty {
        name: name.to_string(),
        kind: PropertyKind::Object,
        domain: domain.map(str::to_string),
        range: range.map(|r| Range::Class(r.to_string())),
        super_property: None,
    }
}

fn data(name: &str, domain: Option<&str>, range: Option<LiteralKind>) -> OntProperty {
    OntProperty {
        name: name.to_string(),
        kind: PropertyKind::Data,
        domain: domain.map(str::to_string),
        range: range.map(Range::Literal),
        super_property: None,
    }
}

fn lineage(name: &str, domain: Option<&str>, range: Option<&str>) -> OntProperty {
    OntProperty {
        super_property: Some(DERIVED_FROM.to_string()),
        ..obj(name, domain, range)
    }
}

fn shared_properties(tabular: &str, rddl: bool) -> Vec<OntProperty> {
    let (src, dst) = if rddl {
        (Some("SourceDataCandidate"), Some("TargetDataCandidate"))
    } else {
        (None, None)
    };
    vec![
        obj("hasColumn", Some(tabular), Some("Column")),
        obj("hasRow", Some(tabular), Some("Row")),
        obj("hasCellValue", None, None),
        obj("belongsToColumn", Some("CellValue"), Some("Column")),
        data("exactValue", None, None),
        lineage("rowDerivedFrom", None, None),
        lineage("columnDerivedFrom", None, None),
        lineage("valueDerivedFrom", None, None),
        lineage("tableDerivedFrom", src, dst),
    ]
}

impl OntologyProfile {
    pub fn classes(&self) -> impl Iterator<Item = &OntClass> {
        self.classes.values()
    }

    pub fn properties(&self) -> &[OntProperty] {
        &self.properties
    }

    /// Class lookup; `ColumnValue` is accepted as an alias of `CellValue`.
    pub fn class(&self, name: &str) -> Option<&OntClass> {
        self.classes.get(canonical_class_name(name))
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.class(name).is_some()
    }

    pub fn property(&self, name: &str) -> Option<&OntProperty> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn has_property(&self, name: &str) -> bool {
        self.property(name).is_some()
    }

    /// Relation registry used for every graph built under this profile:
    /// `rdf:type` followed by the properties in declaration order.
    pub fn relation_names(&self) -> Vec<String> {
        std::iter::once(RDF_TYPE.to_string())
            .chain(self.properties.iter().map(|p| p.name.clone()))
            .collect()
    }

    /// Reflexive, transitive subclass test.
    pub fn is_subclass_of(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        let b = self
            .class(b)
            .ok_or_else(|| OntologyError::UnknownClass(b.to_string()))?
            .name
            .clone();
        let mut cur = Some(
            self.class(a)
                .ok_or_else(|| OntologyError::UnknownClass(a.to_string()))?,
        );
        while let Some(c) = cur {
            if c.name == b {
                return Ok(true);
            }
            cur = c.parent.as_deref().and_then(|p| self.class(p));
        }
        Ok(false)
    }
}

pub fn canonical_class_name(name: &str) -> &str {
    if name == "ColumnValue" {
        "CellValue"
    } else {
        name
    }
}

/// Fixed vocabulary for the named profile.
pub fn vocabulary(name: ProfileName) -> OntologyProfile {
    match name {
        ProfileName::Baseline => OntologyProfile {
            name,
            classes: BASELINE_CLASSES
                .iter()
                .map(|c| {
                    (
                        c.to_string(),
                        OntClass {
                            name: c.to_string(),
                            parent: None,
                        },
                    )
                })
                .collect(),
            properties: shared_properties("Table", false),
        },
        ProfileName::Rddl => {
            let mut properties = shared_properties("TabularDataObject", true);
            properties.extend([
                obj("hasDatatype", None, None),
                obj("hasConstraint", None, None),
                obj("referencesTable", Some("ForeignKey"), Some("Table")),
                obj("usesTable", None, None),
                obj("generatesRow", None, None),
                obj("executesQuery", None, None),
                obj("executesFunction", None, None),
                obj("executesProcedure", None, None),
                data("isNullable", None, Some(LiteralKind::Boolean)),
                data("datatypeName", None, Some(LiteralKind::String)),
                data("datatypeLength", None, Some(LiteralKind::Integer)),
                data("queryText", None, Some(LiteralKind::String)),
            ]);
            OntologyProfile {
                name,
                classes: RDDL_CLASSES
                    .iter()
                    .map(|(c, p)| {
                        (
                            c.to_string(),
                            OntClass {
                                name: c.to_string(),
                                parent: p.map(str::to_string),
                            },
                        )
                    })
                    .collect(),
                properties,
            }
        }
    }
}

pub fn vocabulary_by_name(name: &str) -> Result<OntologyProfile, OntologyError> {
    Ok(vocabulary(name.parse()?))
}

/// IRI scheme for one graph instance. Every node, class nodes included, lives
/// under the graph's namespace, so two graphs never share a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Namespace {
    prefix: String,
}

const CLASS_SEGMENT: &str = ":class:";

impl Namespace {
    pub fn new(name: &str) -> Self {
        Namespace {
            prefix: format!("urn:rddl:{}:", sanitize_local(name)),
        }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn individual(&self, local: &str) -> String {
        format!("{}{}", self.prefix, sanitize_local(local))
    }

    pub fn class(&self, name: &str) -> String {
        format!("{}class:{}", self.prefix, canonical_class_name(name))
    }

    /// Class name for a class node IRI in any namespace.
    pub fn class_of(iri: &str) -> Option<&str> {
        let at = iri.rfind(CLASS_SEGMENT)?;
        Some(canonical_class_name(&iri[at + CLASS_SEGMENT.len()..]))
    }
}

/// Spaces become underscores; other characters that are awkward inside IRIs
/// are percent-encoded.
pub fn sanitize_local(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            ' ' => out.push('_'),
            '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | '%' | '#' => {
                out.push_str(&format!("%{:02X}", c as u32))
            }
            c if c.is_control() => out.push_str(&format!("%{:02X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    UnknownProperty,
    UnknownClass,
    Domain { expected: String },
    Range { expected: String },
    ObjectKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub relation: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::UnknownProperty => {
                write!(f, "unknown property {} on {}", self.relation, self.subject)
            }
            ViolationKind::UnknownClass => {
                write!(f, "unknown class asserted on {}", self.subject)
            }
            ViolationKind::Domain { expected } => write!(
                f,
                "domain violation: {} {} requires subject of type {}",
                self.subject, self.relation, expected
            ),
            ViolationKind::Range { expected } => write!(
                f,
                "range violation: {} {} requires object of type {}",
                self.subject, self.relation, expected
            ),
            ViolationKind::ObjectKind => write!(
                f,
                "{} {}: literal/node object does not match property kind",
                self.subject, self.relation
            ),
        }
    }
}

/// Checks every triple of `g` against the profile. An empty list means the
/// graph conforms.
pub fn validate_graph(p: &OntologyProfile, g: &KnowledgeGraph) -> Vec<Violation> {
    let type_rel = g.relation_id(RDF_TYPE);
    let mut types: HashMap<NodeId, Vec<&str>> = HashMap::new();
    if let Some(tr) = type_rel {
        for t in g.triples().filter(|t| t.relation == tr) {
            if let Object::Node(c) = t.object {
                if let Some(name) = Namespace::class_of(g.node_iri(c)) {
                    types.entry(t.subject).or_default().push(name);
                }
            }
        }
    }
    let conforms = |n: NodeId, class: &str| {
        types.get(&n).is_some_and(|ts| {
            ts.iter()
                .any(|t| p.is_subclass_of(t, class).unwrap_or(false))
        })
    };

    let mut out = Vec::new();
    for t in g.triples() {
        let rel = g.relation_name(t.relation);
        let violation = |kind| Violation {
            subject: g.node_iri(t.subject).to_string(),
            relation: rel.to_string(),
            kind,
        };
        if Some(t.relation) == type_rel {
            let known = t
                .object
                .as_node()
                .and_then(|c| Namespace::class_of(g.node_iri(c)))
                .is_some_and(|c| p.has_class(c));
            if !known {
                out.push(violation(ViolationKind::UnknownClass));
            }
            continue;
        }
        let Some(prop) = p.property(rel) else {
            out.push(violation(ViolationKind::UnknownProperty));
            continue;
        };
        match (&t.object, prop.kind) {
            (Object::Node(_), PropertyKind::Data) | (Object::Literal(_), PropertyKind::Object) => {
                out.push(violation(ViolationKind::ObjectKind));
                continue;
            }
            _ => {}
        }
        if let Some(d) = &prop.domain {
            if !conforms(t.subject, d) {
                out.push(violation(ViolationKind::Domain {
                    expected: d.clone(),
                }));
            }
        }
        match (&prop.range, &t.object) {
            (Some(Range::Class(c)), Object::Node(o)) if !conforms(*o, c) => {
                out.push(violation(ViolationKind::Range {
                    expected: c.clone(),
                }));
            }
            (Some(Range::Literal(k)), Object::Literal(l)) if l.kind() != *k => {
                out.push(violation(ViolationKind::Range {
                    expected: format!("{k:?}"),
                }));
            }
            _ => {}
        }
    }
    out
}

/// The profile as a schema graph: class and property declarations, subclass
/// links, declared domains and ranges, and the lineage marker hierarchy.
pub fn export_schema(p: &OntologyProfile) -> KnowledgeGraph {
    const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
    const PROV_DERIVED: &str = "http://www.w3.org/ns/prov#wasDerivedFrom";
    let term = |name: &str| format!("{VOCAB_NS}{name}");

    let mut g = KnowledgeGraph::with_relations(&[
        RDF_TYPE,
        "rdfs:subClassOf",
        "rdfs:subPropertyOf",
        "rdfs:domain",
        "rdfs:range",
        "rdfs:label",
    ]);
    g.add_literal(
        &term(&format!("profile/{}", p.name)),
        "rdfs:label",
        Literal::string(format!("{} ontology profile", p.name)),
    );
    for c in p.classes() {
        g.add(&term(&c.name), RDF_TYPE, OWL_CLASS);
        if let Some(parent) = &c.parent {
            g.add(&term(&c.name), "rdfs:subClassOf", &term(parent));
        }
    }
    g.add(&term(DERIVED_FROM), RDF_TYPE, OWL_OBJECT_PROPERTY);
    g.add(&term(DERIVED_FROM), "rdfs:subPropertyOf", PROV_DERIVED);
    for prop in p.properties() {
        let kind = match prop.kind {
            PropertyKind::Object => OWL_OBJECT_PROPERTY,
            PropertyKind::Data => OWL_DATATYPE_PROPERTY,
        };
        g.add(&term(&prop.name), RDF_TYPE, kind);
        if let Some(sup) = &prop.super_property {
            g.add(&term(&prop.name), "rdfs:subPropertyOf", &term(sup));
        }
        if let Some(d) = &prop.domain {
            g.add(&term(&prop.name), "rdfs:domain", &term(d));
        }
        match &prop.range {
            Some(Range::Class(c)) => {
                g.add(&term(&prop.name), "rdfs:range", &term(c));
            }
            Some(Range::Literal(k)) => {
                g.add(&term(&prop.name), "rdfs:range", k.xsd_iri());
            }
            None => {}
        }
    }
    g
}
