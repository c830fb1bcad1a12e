//! Synthetic Northwind-shaped database.
//!
//! Every cell is a pure function of `(seed, table, row index)`. Numeric
//! columns grow with the row index by a step wider than their random jitter,
//! so they never repeat within a column; names embed the row index for the
//! same reason. Country and discount columns repeat on purpose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ColumnDef, DataType, Database, ForeignKeyDef, Relation, TableDef};
use crate::kgstore::Literal;

pub const FIXTURE_TABLES: [&str; 5] = [
    "Customers",
    "Employees",
    "Order Details",
    "Orders",
    "Products",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureConfig {
    pub rows_per_table: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            rows_per_table: 50,
            seed: 1996,
        }
    }
}

const COUNTRIES: [&str; 8] = [
    "Germany", "Mexico", "UK", "Sweden", "France", "Spain", "Canada", "USA",
];
const WORDS: [&str; 12] = [
    "Alpha", "Bistro", "Cascade", "Delta", "Ember", "Fjord", "Granite", "Harbor", "Island",
    "Juniper", "Kestrel", "Lumen",
];
const SURNAMES: [&str; 9] = [
    "Davolio",
    "Fuller",
    "Leverling",
    "Peacock",
    "Buchanan",
    "Suyama",
    "King",
    "Callahan",
    "Dodsworth",
];
const GIVEN: [&str; 9] = [
    "Nancy", "Andrew", "Janet", "Margaret", "Steven", "Michael", "Robert", "Laura", "Anne",
];
const GOODS: [&str; 10] = [
    "Chai",
    "Chang",
    "Syrup",
    "Cajun",
    "Gumbo",
    "Marmalade",
    "Pears",
    "Sauce",
    "Tofu",
    "Kobe",
];

fn row_rng(seed: u64, table: &str, row: usize) -> ChaCha8Rng {
    // FNV-1a over the table name, mixed with seed and row.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in table.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(
        h ^ seed.rotate_left(17) ^ (row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    )
}

fn dec(v: f64) -> Option<Literal> {
    let cents = (v * 100.0).round() / 100.0;
    Some(Literal::decimal(cents).expect("finite"))
}

fn int(v: i64) -> Option<Literal> {
    Some(Literal::integer(v))
}

fn text(s: String) -> Option<Literal> {
    Some(Literal::string(s))
}

fn date(rng: &mut ChaCha8Rng, year_lo: u32) -> Option<Literal> {
    let y = year_lo + rng.random_range(0..3);
    let m = rng.random_range(1..=12);
    let d = rng.random_range(1..=28);
    text(format!("{y:04}-{m:02}-{d:02}"))
}

fn table(name: &str, columns: Vec<ColumnDef>, fks: &[(&str, &str, &str, &str)]) -> Relation {
    Relation::new(TableDef {
        name: name.to_string(),
        columns,
        foreign_keys: fks
            .iter()
            .map(|(n, c, t, rc)| ForeignKeyDef {
                name: n.to_string(),
                column: c.to_string(),
                ref_table: t.to_string(),
                ref_column: rc.to_string(),
            })
            .collect(),
    })
}

pub fn northwind_fixture() -> Database {
    northwind_fixture_with(&FixtureConfig::default())
}

pub fn northwind_fixture_with(cfg: &FixtureConfig) -> Database {
    let n = cfg.rows_per_table.max(1);
    let seed = cfg.seed;

    let mut customers = table(
        "Customers",
        vec![
            ColumnDef::varchar("CustomerID", 5).pk(),
            ColumnDef::varchar("CompanyName", 40),
            ColumnDef::varchar("ContactName", 30).nullable(),
            ColumnDef::varchar("Country", 15),
            ColumnDef::new("CreditLimit", DataType::Decimal),
        ],
        &[],
    );
    for i in 0..n {
        let mut rng = row_rng(seed, "Customers", i);
        let w = WORDS[rng.random_range(0..WORDS.len())];
        customers.rows.push(vec![
            text(format!("C{i:04}")),
            text(format!("{w} Trading {i}")),
            if i % 9 == 4 {
                None
            } else {
                text(format!("{} {}", GIVEN[rng.random_range(0..GIVEN.len())], i))
            },
            text(COUNTRIES[rng.random_range(0..COUNTRIES.len())].to_string()),
            dec(1000.0 + 250.0 * i as f64 + rng.random_range(0.0..100.0)),
        ]);
    }

    let mut employees = table(
        "Employees",
        vec![
            ColumnDef::new("EmployeeID", DataType::Integer).pk(),
            ColumnDef::varchar("LastName", 20),
            ColumnDef::varchar("FirstName", 10),
            ColumnDef::new("HireDate", DataType::Date),
            ColumnDef::new("Salary", DataType::Decimal),
            ColumnDef::varchar("Country", 15),
        ],
        &[],
    );
    for i in 0..n {
        let mut rng = row_rng(seed, "Employees", i);
        employees.rows.push(vec![
            int(1 + i as i64),
            text(format!(
                "{}{}",
                SURNAMES[rng.random_range(0..SURNAMES.len())],
                i
            )),
            text(GIVEN[rng.random_range(0..GIVEN.len())].to_string()),
            date(&mut rng, 1992),
            dec(30000.0 + 1370.0 * i as f64 + rng.random_range(0.0..500.0)),
            text(COUNTRIES[rng.random_range(0..COUNTRIES.len())].to_string()),
        ]);
    }

    let mut products = table(
        "Products",
        vec![
            ColumnDef::new("ProductID", DataType::Integer).pk(),
            ColumnDef::varchar("ProductName", 40),
            ColumnDef::new("UnitPrice", DataType::Decimal),
            ColumnDef::new("UnitsInStock", DataType::Integer),
            ColumnDef::new("Discontinued", DataType::Boolean),
        ],
        &[],
    );
    for i in 0..n {
        let mut rng = row_rng(seed, "Products", i);
        products.rows.push(vec![
            int(1 + i as i64),
            text(format!(
                "{} No. {}",
                GOODS[rng.random_range(0..GOODS.len())],
                i
            )),
            dec(2.5 + 3.17 * i as f64 + rng.random_range(0.0..1.0)),
            int(5 + 13 * i as i64 + rng.random_range(0..10)),
            Some(Literal::boolean(rng.random_bool(0.2))),
        ]);
    }

    let mut orders = table(
        "Orders",
        vec![
            ColumnDef::new("OrderID", DataType::Integer).pk(),
            ColumnDef::varchar("CustomerID", 5).fk(),
            ColumnDef::new("EmployeeID", DataType::Integer).fk(),
            ColumnDef::new("OrderDate", DataType::Date),
            ColumnDef::new("Freight", DataType::Decimal),
        ],
        &[
            (
                "FK_Orders_Customers",
                "CustomerID",
                "Customers",
                "CustomerID",
            ),
            (
                "FK_Orders_Employees",
                "EmployeeID",
                "Employees",
                "EmployeeID",
            ),
        ],
    );
    for i in 0..n {
        let mut rng = row_rng(seed, "Orders", i);
        orders.rows.push(vec![
            int(10248 + i as i64),
            text(format!("C{:04}", rng.random_range(0..n))),
            int(1 + rng.random_range(0..n) as i64),
            date(&mut rng, 1996),
            dec(1.5 + 4.41 * i as f64 + rng.random_range(0.0..2.0)),
        ]);
    }

    let mut details = table(
        "Order Details",
        vec![
            ColumnDef::new("OrderID", DataType::Integer).pk().fk(),
            ColumnDef::new("ProductID", DataType::Integer).pk().fk(),
            ColumnDef::new("UnitPrice", DataType::Decimal),
            ColumnDef::new("Quantity", DataType::Integer),
            ColumnDef::new("Discount", DataType::Decimal),
        ],
        &[
            ("FK_Order_Details_Orders", "OrderID", "Orders", "OrderID"),
            (
                "FK_Order_Details_Products",
                "ProductID",
                "Products",
                "ProductID",
            ),
        ],
    );
    for i in 0..n {
        let mut rng = row_rng(seed, "Order Details", i);
        details.rows.push(vec![
            int(10248 + i as i64),
            int(1 + rng.random_range(0..n) as i64),
            dec(0.75 + 2.93 * i as f64 + rng.random_range(0.0..0.9)),
            int(1 + 3 * i as i64 + rng.random_range(0..2)),
            dec([0.0, 0.05, 0.1, 0.15, 0.2][rng.random_range(0..5)]),
        ]);
    }

    let mut db = Database::default();
    for t in [customers, employees, products, orders, details] {
        db.add_table(t);
    }
    db
}
