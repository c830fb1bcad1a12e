use super::{ConvertConfig, ConvertError, Iris, PopulationReport};
use crate::kgstore::{KnowledgeGraph, Literal, NodeId, RDF_TYPE};
use crate::ontology::{vocabulary, ProfileName};
use crate::reldb::{DataType, Database, ObjectClass, Relation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataTypeRef {
    pub node: NodeId,
    pub name: String,
    pub length: Option<u32>,
}

fn datatype_class(name: &str) -> &'static str {
    match name.parse::<DataType>() {
        Ok(DataType::Integer | DataType::Decimal) => "NumericType",
        Ok(DataType::Boolean) => "BooleanType",
        Ok(DataType::Date) => "TemporalType",
        Ok(DataType::Varchar) => "CharacterType",
        Err(_) => "DataType",
    }
}

/// Interned datatype individual for `(name, length)`.
pub fn resolve_type(
    g: &mut KnowledgeGraph,
    cfg: &ConvertConfig,
    name: &str,
    length: Option<u32>,
) -> Result<DataTypeRef, ConvertError> {
    if cfg.profile != ProfileName::Rddl {
        return Err(ConvertError::NoDatatypes(cfg.profile));
    }
    let iris = cfg.iris();
    let iri = iris.datatype(name, length);
    if g.node_id(&iri).is_none() {
        g.add(&iri, RDF_TYPE, &iris.class(datatype_class(name)));
        g.add_literal(&iri, "datatypeName", Literal::string(name));
        if let Some(l) = length {
            g.add_literal(&iri, "datatypeLength", Literal::integer(l as i64));
        }
    }
    Ok(DataTypeRef {
        node: g.node_id(&iri).expect("just added"),
        name: name.to_string(),
        length,
    })
}

struct Emitter<'a> {
    g: &'a mut KnowledgeGraph,
    cfg: &'a ConvertConfig,
    iris: Iris,
}

impl Emitter<'_> {
    fn rddl(&self) -> bool {
        self.cfg.profile == ProfileName::Rddl
    }

    fn typed(&mut self, iri: &str, class: &str) {
        let c = self.iris.class(class);
        self.g.add(iri, RDF_TYPE, &c);
    }

    fn object_class(&self, rel: &Relation) -> &'static str {
        if self.rddl() {
            rel.object_class.class_name()
        } else {
            ObjectClass::Table.class_name()
        }
    }

    fn rows(&mut self, rel: &Relation, columns: &[String]) {
        let obj = self.iris.object(rel.name());
        for (i, row) in rel.rows.iter().enumerate() {
            let r = self.iris.row(rel.name(), i);
            self.typed(&r, "Row");
            self.g.add(&obj, "hasRow", &r);
            for ((def, cell), col_iri) in rel.def.columns.iter().zip(row).zip(columns) {
                let x = self.iris.cell(rel.name(), i, &def.name);
                self.typed(&x, "CellValue");
                self.g.add(&r, "hasCellValue", &x);
                self.g.add(&x, "belongsToColumn", col_iri);
                if let Some(v) = cell {
                    self.g.add_literal(&x, "exactValue", v.clone());
                }
            }
        }
    }

    fn view(&mut self, v: &Relation) {
        let obj = self.iris.object(v.name());
        let class = self.object_class(v);
        self.typed(&obj, class);
        let mut columns = Vec::with_capacity(v.def.columns.len());
        for col in &v.def.columns {
            let c = self.iris.view_column(v.name(), &col.name);
            self.typed(&c, "Column");
            self.g.add(&obj, "hasColumn", &c);
            columns.push(c);
        }
        if self.cfg.use_data {
            self.rows(v, &columns);
        }
        if self.rddl() {
            self.execution(v);
        }
    }

    fn execution(&mut self, v: &Relation) {
        let Some(exec) = &v.execution else { return };
        let obj = self.iris.object(v.name());
        let q = self.iris.query(v.name());
        let e = self.iris.execution(v.name());
        self.typed(&q, "Query");
        self.g
            .add_literal(&q, "queryText", Literal::string(exec.query_text.clone()));
        self.typed(&e, "QueryExecution");
        self.g.add(&e, "executesQuery", &q);
        // Role classes follow the declared domain and range of
        // tableDerivedFrom: the derived object is the subject.
        self.typed(&obj, "SourceDataCandidate");
        for s in &exec.sources {
            let src = self.iris.object(s);
            self.typed(&src, "TargetDataCandidate");
            if !self.cfg.drop_execution_edges {
                self.g.add(&e, "usesTable", &src);
            }
        }
        if self.cfg.use_data && !self.cfg.drop_execution_edges {
            for i in 0..v.rows.len() {
                let r = self.iris.row(v.name(), i);
                self.g.add(&e, "generatesRow", &r);
            }
        }
    }

    fn table(&mut self, t: &Relation, db: &Database) -> Result<(), ConvertError> {
        let obj = self.iris.object(t.name());
        let mut columns = Vec::with_capacity(t.def.columns.len());
        let pk_name = format!("PK_{}", t.name());
        for col in &t.def.columns {
            let c = self.iris.table_column(t.name(), &col.name);
            self.typed(&c, "Column");
            self.g.add(&obj, "hasColumn", &c);
            if self.rddl() {
                self.g
                    .add_literal(&c, "isNullable", Literal::boolean(col.nullable));
                let dt = resolve_type(self.g, self.cfg, col.dtype.as_str(), col.length)?;
                let dt_iri = self.g.node_iri(dt.node).to_string();
                self.g.add(&c, "hasDatatype", &dt_iri);
                if col.is_pk {
                    let pk = self.iris.constraint(&pk_name);
                    self.typed(&pk, "PrimaryKey");
                    self.g.add(&c, "hasConstraint", &pk);
                }
                if col.is_fk {
                    for fk in t.def.foreign_keys.iter().filter(|f| f.column == col.name) {
                        let f = self.iris.constraint(&fk.name);
                        self.typed(&f, "ForeignKey");
                        self.g.add(&c, "hasConstraint", &f);
                    }
                }
                if self.cfg.not_null_constraints && !col.nullable && !col.is_pk {
                    let nn = self
                        .iris
                        .constraint(&format!("NN_{}_{}", t.name(), col.name));
                    self.typed(&nn, "NotNullConstraint");
                    self.g.add(&c, "hasConstraint", &nn);
                }
            }
            columns.push(c);
        }
        if self.rddl() {
            for fk in &t.def.foreign_keys {
                if !db.tables.contains_key(&fk.ref_table) {
                    return Err(ConvertError::MissingFkTarget {
                        fk: fk.name.clone(),
                        table: fk.ref_table.clone(),
                    });
                }
                let target = self.iris.object(&fk.ref_table);
                let f = self.iris.constraint(&fk.name);
                self.typed(&f, "ForeignKey");
                self.g.add(&f, "referencesTable", &target);
            }
        }
        if self.cfg.use_data {
            self.rows(t, &columns);
        }
        Ok(())
    }
}

/// Adds `db` to `g` under `cfg`: views first, then tables, each in name
/// order. Table individuals are all created before any foreign key is
/// linked, so a key may reference a table that sorts later.
pub fn populate_kg(
    g: &mut KnowledgeGraph,
    db: &Database,
    cfg: &ConvertConfig,
) -> Result<PopulationReport, ConvertError> {
    for r in vocabulary(cfg.profile).relation_names() {
        g.intern_relation(&r);
    }
    let mut em = Emitter {
        g,
        cfg,
        iris: cfg.iris(),
    };
    for v in db.views.values() {
        em.view(v);
    }
    for t in db.tables.values() {
        let obj = em.iris.object(t.name());
        let class = em.object_class(t);
        em.typed(&obj, class);
    }
    for t in db.tables.values() {
        em.table(t, db)?;
    }
    Ok(PopulationReport::from_graph(em.g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::serialize_ntriples;
    use crate::ontology::validate_graph;
    use crate::reldb::{northwind_fixture_with, ColumnDef, FixtureConfig, TableDef};

    fn toy() -> Database {
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

    fn cfg(profile: ProfileName, use_data: bool) -> ConvertConfig {
        ConvertConfig {
            use_data,
            ..ConvertConfig::new(profile, "toy")
        }
    }

    #[test]
    fn datatype_interning() {
        let c = cfg(ProfileName::Rddl, false);
        let mut g = KnowledgeGraph::new();
        let a = resolve_type(&mut g, &c, "varchar", Some(40)).unwrap();
        let b = resolve_type(&mut g, &c, "varchar", Some(40)).unwrap();
        let d = resolve_type(&mut g, &c, "varchar", Some(20)).unwrap();
        assert_eq!(a.node, b.node);
        assert_ne!(a.node, d.node);
        let i = resolve_type(&mut g, &c, "integer", None).unwrap();
        assert!(g.contains(&crate::kgstore::Triple {
            subject: i.node,
            relation: g.relation_id(RDF_TYPE).unwrap(),
            object: g.node_id(&c.iris().class("NumericType")).unwrap().into(),
        }));
        assert!(matches!(
            resolve_type(&mut g, &cfg(ProfileName::Baseline, false), "integer", None),
            Err(ConvertError::NoDatatypes(_))
        ));
    }

    #[test]
    fn toy_triple_counts() {
        let mut g = KnowledgeGraph::new();
        populate_kg(&mut g, &toy(), &cfg(ProfileName::Rddl, false)).unwrap();
        assert_eq!(g.len(), 16);
        let mut b = KnowledgeGraph::new();
        let rep = populate_kg(&mut b, &toy(), &cfg(ProfileName::Baseline, false)).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(rep.by_relation["hasColumn"], 2);
        assert_eq!(rep.by_relation[RDF_TYPE], 3);
    }

    #[test]
    fn empty_database_gives_empty_graph() {
        let mut g = KnowledgeGraph::new();
        populate_kg(&mut g, &Database::default(), &cfg(ProfileName::Rddl, true)).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn fixture_counts_and_validity() {
        let db = northwind_fixture_with(&FixtureConfig {
            rows_per_table: 7,
            seed: 1,
        });
        for p in ProfileName::ALL {
            let mut g = KnowledgeGraph::new();
            let rep = populate_kg(&mut g, &db, &cfg(p, true)).unwrap();
            let rows: usize = db.tables.values().map(|t| t.rows.len()).sum();
            let cells: usize = db
                .tables
                .values()
                .map(|t| t.rows.len() * t.def.columns.len())
                .sum();
            assert_eq!(rep.by_relation["hasRow"], rows);
            assert_eq!(rep.by_relation["hasCellValue"], cells);
            let violations = validate_graph(&vocabulary(p), &g);
            assert!(
                violations.is_empty(),
                "{p}: {:?}",
                &violations[..violations.len().min(3)]
            );
            if p == ProfileName::Rddl {
                assert_eq!(rep.by_relation["referencesTable"], db.foreign_keys().len());
            } else {
                assert!(!rep.by_class.contains_key("ForeignKey"));
            }
        }
    }

    #[test]
    fn deterministic_serialization() {
        let db = northwind_fixture_with(&FixtureConfig {
            rows_per_table: 4,
            seed: 2,
        });
        let run = || {
            let mut g = KnowledgeGraph::new();
            populate_kg(&mut g, &db, &cfg(ProfileName::Rddl, true)).unwrap();
            serialize_ntriples(&g)
        };
        assert_eq!(run(), run());
    }
}
