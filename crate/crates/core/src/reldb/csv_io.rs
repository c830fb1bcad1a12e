//! CSV directory layout:
//!
//! * `schema.csv`: `table,column,dtype,length,nullable,is_pk,is_fk`, one row
//!   per column in declaration order;
//! * `fks.csv`: `fk_name,table,column,ref_table,ref_column`;
//! * `<table>.csv`: header of column names, then one record per row. The
//!   empty field is NULL.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{ColumnDef, Database, ForeignKeyDef, Relation, ReldbError, TableDef};

const SCHEMA_HEADER: [&str; 7] = [
    "table", "column", "dtype", "length", "nullable", "is_pk", "is_fk",
];
const FK_HEADER: [&str; 5] = ["fk_name", "table", "column", "ref_table", "ref_column"];

fn csv_err(file: &Path, e: impl ToString) -> ReldbError {
    ReldbError::Csv {
        file: file.display().to_string(),
        msg: e.to_string(),
    }
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>, ReldbError> {
    if !path.exists() {
        return Err(ReldbError::MissingFile(path.display().to_string()));
    }
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(format!("not a boolean flag: {other:?}")),
    }
}

pub fn load_database(dir: impl AsRef<Path>) -> Result<Database, ReldbError> {
    let dir = dir.as_ref();
    let schema_path = dir.join("schema.csv");
    let mut defs: BTreeMap<String, TableDef> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut rdr = open(&schema_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&schema_path, e))?;
        if rec.len() != SCHEMA_HEADER.len() {
            return Err(ReldbError::Arity {
                table: "schema.csv".into(),
                row: i,
                expected: SCHEMA_HEADER.len(),
                found: rec.len(),
            });
        }
        let bad = |msg: String| ReldbError::Schema(format!("schema.csv row {i}: {msg}"));
        let table = rec[0].to_string();
        let dtype = rec[2].parse().map_err(bad)?;
        let length = if rec[3].trim().is_empty() {
            None
        } else {
            Some(
                rec[3]
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| bad(e.to_string()))?,
            )
        };
        let col = ColumnDef {
            name: rec[1].to_string(),
            dtype,
            length,
            nullable: parse_bool(&rec[4]).map_err(bad)?,
            is_pk: parse_bool(&rec[5]).map_err(bad)?,
            is_fk: parse_bool(&rec[6]).map_err(bad)?,
        };
        if !defs.contains_key(&table) {
            order.push(table.clone());
        }
        defs.entry(table.clone())
            .or_insert_with(|| TableDef {
                name: table,
                columns: vec![],
                foreign_keys: vec![],
            })
            .columns
            .push(col);
    }

    let fk_path = dir.join("fks.csv");
    let mut rdr = open(&fk_path)?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&fk_path, e))?;
        if rec.len() != FK_HEADER.len() {
            return Err(ReldbError::Arity {
                table: "fks.csv".into(),
                row: i,
                expected: FK_HEADER.len(),
                found: rec.len(),
            });
        }
        let fk = ForeignKeyDef {
            name: rec[0].to_string(),
            column: rec[2].to_string(),
            ref_table: rec[3].to_string(),
            ref_column: rec[4].to_string(),
        };
        let def = defs
            .get_mut(&rec[1])
            .ok_or_else(|| ReldbError::ForeignKey {
                table: rec[1].to_string(),
                fk: fk.name.clone(),
                msg: "declaring table not in schema.csv".into(),
            })?;
        def.foreign_keys.push(fk);
    }

    let mut db = Database::default();
    for name in order {
        let def = defs.remove(&name).expect("collected above");
        let data_path = dir.join(format!("{name}.csv"));
        let mut rdr = open(&data_path)?;
        let header = rdr.headers().map_err(|e| csv_err(&data_path, e))?.clone();
        let names: Vec<&str> = def.columns.iter().map(|c| c.name.as_str()).collect();
        if header.iter().collect::<Vec<_>>() != names {
            return Err(ReldbError::Schema(format!(
                "{}: header {:?} does not match schema columns {:?}",
                data_path.display(),
                header.iter().collect::<Vec<_>>(),
                names
            )));
        }
        let mut rel = Relation::new(def);
        for (ri, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(&data_path, e))?;
            if rec.len() != rel.def.columns.len() {
                return Err(ReldbError::Arity {
                    table: name.clone(),
                    row: ri,
                    expected: rel.def.columns.len(),
                    found: rec.len(),
                });
            }
            let row = rel
                .def
                .columns
                .iter()
                .zip(rec.iter())
                .map(|(c, field)| {
                    c.dtype
                        .parse_cell(field)
                        .map_err(|msg| ReldbError::BadValue {
                            table: name.clone(),
                            row: ri,
                            column: c.name.clone(),
                            msg,
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rel.rows.push(row);
        }
        db.add_table(rel);
    }
    db.validate()?;
    Ok(db)
}

/// Writes the base tables of `db` in the layout [`load_database`] reads.
/// Views are not exported.
pub fn export_database(db: &Database, dir: impl AsRef<Path>) -> Result<(), ReldbError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| ReldbError::Io {
        path: dir.display().to_string(),
        msg: e.to_string(),
    })?;
    let writer = |name: &str| {
        let path = dir.join(name);
        csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))
    };

    let schema_path = dir.join("schema.csv");
    let mut w = writer("schema.csv")?;
    w.write_record(SCHEMA_HEADER)
        .map_err(|e| csv_err(&schema_path, e))?;
    for t in db.tables.values() {
        for c in &t.def.columns {
            w.write_record([
                t.name(),
                &c.name,
                c.dtype.as_str(),
                &c.length.map(|l| l.to_string()).unwrap_or_default(),
                &c.nullable.to_string(),
                &c.is_pk.to_string(),
                &c.is_fk.to_string(),
            ])
            .map_err(|e| csv_err(&schema_path, e))?;
        }
    }
    w.flush().map_err(|e| csv_err(&schema_path, e))?;

    let fk_path = dir.join("fks.csv");
    let mut w = writer("fks.csv")?;
    w.write_record(FK_HEADER)
        .map_err(|e| csv_err(&fk_path, e))?;
    for (table, fk) in db.foreign_keys() {
        w.write_record([&fk.name, table, &fk.column, &fk.ref_table, &fk.ref_column])
            .map_err(|e| csv_err(&fk_path, e))?;
    }
    w.flush().map_err(|e| csv_err(&fk_path, e))?;

    for t in db.tables.values() {
        let file = format!("{}.csv", t.name());
        let path = dir.join(&file);
        let mut w = writer(&file)?;
        w.write_record(t.def.columns.iter().map(|c| c.name.as_str()))
            .map_err(|e| csv_err(&path, e))?;
        for row in &t.rows {
            w.write_record(
                row.iter()
                    .map(|c| c.as_ref().map(|l| l.lexical()).unwrap_or("")),
            )
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| csv_err(&path, e))?;
    }
    Ok(())
}
