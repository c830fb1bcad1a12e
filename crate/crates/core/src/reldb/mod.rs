//! In-memory relational model: schemas, constraints and typed rows.

mod csv_io;
mod fixture;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kgstore::{Literal, LiteralKind};

pub use csv_io::{export_database, load_database};
pub use fixture::{northwind_fixture, northwind_fixture_with, FixtureConfig, FIXTURE_TABLES};

#[derive(Debug, Error)]
pub enum ReldbError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("csv error in {file}: {msg}")]
    Csv { file: String, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("table {table:?}, row {row}: expected {expected} fields, found {found}")]
    Arity {
        table: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("table {table:?}, row {row}, column {column:?}: {msg}")]
    BadValue {
        table: String,
        row: usize,
        column: String,
        msg: String,
    },
    #[error("table {table:?}, row {row}: duplicate primary key")]
    DuplicatePk { table: String, row: usize },
    #[error("table {table:?}, foreign key {fk:?}: {msg}")]
    ForeignKey {
        table: String,
        fk: String,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataType {
    Integer,
    Decimal,
    Varchar,
    Boolean,
    Date,
}

impl DataType {
    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Integer => "integer",
            DataType::Decimal => "decimal",
            DataType::Varchar => "varchar",
            DataType::Boolean => "boolean",
            DataType::Date => "date",
        }
    }

    pub fn literal_kind(self) -> LiteralKind {
        match self {
            DataType::Integer => LiteralKind::Integer,
            DataType::Decimal => LiteralKind::Decimal,
            DataType::Boolean => LiteralKind::Boolean,
            DataType::Varchar | DataType::Date => LiteralKind::String,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, DataType::Integer | DataType::Decimal)
    }

    /// Parses one CSV field; the empty field is the null marker.
    pub fn parse_cell(self, field: &str) -> Result<Cell, String> {
        if field.is_empty() {
            return Ok(None);
        }
        if self == DataType::Date && !is_iso_date(field) {
            return Err(format!("not a YYYY-MM-DD date: {field:?}"));
        }
        Literal::new(self.literal_kind(), field)
            .map(Some)
            .map_err(|e| e.to_string())
    }
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

impl FromStr for DataType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "integer" | "int" => Ok(DataType::Integer),
            "decimal" | "numeric" => Ok(DataType::Decimal),
            "varchar" => Ok(DataType::Varchar),
            "boolean" | "bool" => Ok(DataType::Boolean),
            "date" => Ok(DataType::Date),
            other => Err(format!("unknown datatype {other:?}")),
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `None` is SQL NULL.
pub type Cell = Option<Literal>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub dtype: DataType,
    pub length: Option<u32>,
    pub nullable: bool,
    pub is_pk: bool,
    pub is_fk: bool,
}

impl ColumnDef {
    pub fn new(name: &str, dtype: DataType) -> Self {
        ColumnDef {
            name: name.to_string(),
            dtype,
            length: None,
            nullable: false,
            is_pk: false,
            is_fk: false,
        }
    }

    pub fn varchar(name: &str, length: u32) -> Self {
        ColumnDef {
            length: Some(length),
            ..Self::new(name, DataType::Varchar)
        }
    }

    pub fn pk(mut self) -> Self {
        self.is_pk = true;
        self.nullable = false;
        self
    }

    pub fn fk(mut self) -> Self {
        self.is_fk = true;
        self
    }

    pub fn nullable(mut self) -> Self {
        self.nullable = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKeyDef {
    pub name: String,
    pub column: String,
    pub ref_table: String,
    pub ref_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub foreign_keys: Vec<ForeignKeyDef>,
}

impl TableDef {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn pk_columns(&self) -> impl Iterator<Item = (usize, &ColumnDef)> {
        self.columns.iter().enumerate().filter(|(_, c)| c.is_pk)
    }

    pub fn fk_for_column(&self, column: &str) -> Option<&ForeignKeyDef> {
        self.foreign_keys.iter().find(|f| f.column == column)
    }
}

/// Kind of tabular database object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    Table,
    View,
    MaterializedView,
    TemporalTable,
    ExternalTable,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 5] = [
        ObjectClass::Table,
        ObjectClass::View,
        ObjectClass::MaterializedView,
        ObjectClass::TemporalTable,
        ObjectClass::ExternalTable,
    ];

    pub fn class_name(self) -> &'static str {
        match self {
            ObjectClass::Table => "Table",
            ObjectClass::View => "View",
            ObjectClass::MaterializedView => "MaterializedView",
            ObjectClass::TemporalTable => "TemporalTable",
            ObjectClass::ExternalTable => "ExternalTable",
        }
    }
}

impl FromStr for ObjectClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectClass::ALL
            .into_iter()
            .find(|c| c.class_name() == s)
            .ok_or_else(|| format!("unknown object class {s:?}"))
    }
}

/// How a derived object was produced; becomes Query/QueryExecution
/// individuals in the knowledge graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionRecord {
    pub query_text: String,
    pub sources: Vec<String>,
}

/// A table instance: schema plus rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub def: TableDef,
    pub rows: Vec<Vec<Cell>>,
    pub object_class: ObjectClass,
    pub execution: Option<ExecutionRecord>,
}

impl Relation {
    pub fn new(def: TableDef) -> Self {
        Relation {
            def,
            rows: Vec::new(),
            object_class: ObjectClass::Table,
            execution: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn column_values(&self, col: usize) -> impl Iterator<Item = &Cell> {
        self.rows.iter().map(move |r| &r[col])
    }

    /// True when every non-null value in the column is distinct and the
    /// column has no nulls.
    pub fn column_is_unique(&self, col: usize) -> bool {
        let mut seen = HashSet::new();
        self.column_values(col)
            .all(|c| c.as_ref().is_some_and(|v| seen.insert(v)))
    }

    /// Checks arity, nullability, datatypes and primary-key uniqueness.
    pub fn check(&self) -> Result<(), ReldbError> {
        let def = &self.def;
        let mut names = HashSet::new();
        for c in &def.columns {
            if !names.insert(&c.name) {
                return Err(ReldbError::Schema(format!(
                    "table {:?}: duplicate column {:?}",
                    def.name, c.name
                )));
            }
            if c.is_pk && c.nullable {
                return Err(ReldbError::Schema(format!(
                    "table {:?}: primary key column {:?} is nullable",
                    def.name, c.name
                )));
            }
            if (c.dtype == DataType::Varchar) != c.length.is_some() {
                return Err(ReldbError::Schema(format!(
                    "table {:?}: column {:?} must have a length iff varchar",
                    def.name, c.name
                )));
            }
        }
        for fk in &def.foreign_keys {
            match def.column(&fk.column) {
                Some(c) if c.is_fk => {}
                _ => {
                    return Err(ReldbError::ForeignKey {
                        table: def.name.clone(),
                        fk: fk.name.clone(),
                        msg: format!("local column {:?} missing or not marked is_fk", fk.column),
                    })
                }
            }
        }
        let pk: Vec<usize> = def.pk_columns().map(|(i, _)| i).collect();
        let mut keys = HashSet::new();
        for (ri, row) in self.rows.iter().enumerate() {
            if row.len() != def.columns.len() {
                return Err(ReldbError::Arity {
                    table: def.name.clone(),
                    row: ri,
                    expected: def.columns.len(),
                    found: row.len(),
                });
            }
            for (c, cell) in def.columns.iter().zip(row) {
                match cell {
                    None if !c.nullable => {
                        return Err(ReldbError::BadValue {
                            table: def.name.clone(),
                            row: ri,
                            column: c.name.clone(),
                            msg: "null in non-nullable column".into(),
                        })
                    }
                    Some(v) if v.kind() != c.dtype.literal_kind() => {
                        return Err(ReldbError::BadValue {
                            table: def.name.clone(),
                            row: ri,
                            column: c.name.clone(),
                            msg: format!("{:?} value in {} column", v.kind(), c.dtype),
                        })
                    }
                    _ => {}
                }
            }
            if !pk.is_empty() {
                let key: Vec<&Cell> = pk.iter().map(|&i| &row[i]).collect();
                if !keys.insert(key) {
                    return Err(ReldbError::DuplicatePk {
                        table: def.name.clone(),
                        row: ri,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    pub tables: BTreeMap<String, Relation>,
    /// Materialized results of transformations.
    pub views: BTreeMap<String, Relation>,
}

impl Database {
    /// Looks a name up among tables first, then views.
    pub fn object(&self, name: &str) -> Option<&Relation> {
        self.tables.get(name).or_else(|| self.views.get(name))
    }

    pub fn add_table(&mut self, rel: Relation) {
        self.tables.insert(rel.def.name.clone(), rel);
    }

    /// All `(child table, foreign key)` pairs, in table order.
    pub fn foreign_keys(&self) -> Vec<(&str, &ForeignKeyDef)> {
        self.tables
            .values()
            .flat_map(|t| t.def.foreign_keys.iter().map(move |fk| (t.name(), fk)))
            .collect()
    }

    pub fn row_count(&self) -> usize {
        self.tables
            .values()
            .chain(self.views.values())
            .map(|r| r.rows.len())
            .sum()
    }

    /// Checks every relation and that all foreign keys resolve.
    pub fn validate(&self) -> Result<(), ReldbError> {
        for rel in self.tables.values().chain(self.views.values()) {
            rel.check()?;
        }
        let mut pk_values: HashMap<(&str, &str), HashSet<&Literal>> = HashMap::new();
        for t in self.tables.values() {
            for fk in &t.def.foreign_keys {
                let err = |msg: String| ReldbError::ForeignKey {
                    table: t.name().to_string(),
                    fk: fk.name.clone(),
                    msg,
                };
                let target = self
                    .tables
                    .get(&fk.ref_table)
                    .ok_or_else(|| err(format!("target table {:?} absent", fk.ref_table)))?;
                let ref_idx = target
                    .def
                    .column_index(&fk.ref_column)
                    .ok_or_else(|| err(format!("target column {:?} absent", fk.ref_column)))?;
                let values = pk_values
                    .entry((target.name(), fk.ref_column.as_str()))
                    .or_insert_with(|| target.column_values(ref_idx).flatten().collect());
                let local = t.def.column_index(&fk.column).expect("checked above");
                for (ri, row) in t.rows.iter().enumerate() {
                    if let Some(v) = &row[local] {
                        if !values.contains(v) {
                            return Err(err(format!(
                                "row {ri}: value {v} not present in {}.{}",
                                fk.ref_table, fk.ref_column
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Relation {
        let def = TableDef {
            name: "T".into(),
            columns: vec![
                ColumnDef::new("id", DataType::Integer).pk(),
                ColumnDef::varchar("name", 10).nullable(),
            ],
            foreign_keys: vec![],
        };
        let mut r = Relation::new(def);
        r.rows.push(vec![Some(Literal::integer(1)), None]);
        r.rows
            .push(vec![Some(Literal::integer(2)), Some(Literal::string("b"))]);
        r
    }

    #[test]
    fn valid_relation_passes() {
        tiny().check().unwrap();
    }

    #[test]
    fn duplicate_pk_detected() {
        let mut r = tiny();
        r.rows.push(vec![Some(Literal::integer(1)), None]);
        assert!(matches!(
            r.check(),
            Err(ReldbError::DuplicatePk { row: 2, .. })
        ));
    }

    #[test]
    fn arity_checked() {
        let mut r = tiny();
        r.rows.push(vec![Some(Literal::integer(3))]);
        assert!(matches!(r.check(), Err(ReldbError::Arity { row: 2, .. })));
    }

    #[test]
    fn null_in_pk_rejected() {
        let mut r = tiny();
        r.rows.push(vec![None, None]);
        assert!(matches!(r.check(), Err(ReldbError::BadValue { .. })));
    }

    #[test]
    fn varchar_needs_length() {
        let mut r = tiny();
        r.def.columns[1].length = None;
        assert!(matches!(r.check(), Err(ReldbError::Schema(_))));
    }

    #[test]
    fn dates_are_validated() {
        assert!(DataType::Date.parse_cell("1996-07-04").unwrap().is_some());
        assert!(DataType::Date.parse_cell("07/04/1996").is_err());
        assert_eq!(DataType::Integer.parse_cell("").unwrap(), None);
    }

    #[test]
    fn unique_column_detection() {
        let r = tiny();
        assert!(r.column_is_unique(0));
        assert!(!r.column_is_unique(1)); // contains a null
    }
}
