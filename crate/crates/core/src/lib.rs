//! Relational-database lineage as knowledge graphs, and inductive discovery of
//! missing row-level lineage links.
//!
//! The pipeline: a relational database ([`reldb`]) is put through generated
//! transformation scenarios ([`scenario`]) that record ground-truth lineage;
//! the result is converted into a knowledge graph under one of two ontology
//! profiles ([`ontology`], [`convert`]); edge-type paths between node pairs
//! ([`paths`]) feed a multi-path Siamese BiLSTM ([`siamese`]) that scores
//! candidate `rowDerivedFrom` links, and [`eval`] turns the scores into
//! ranking metrics. [`pipeline`] wires the stages together for the CLI.

pub mod convert;
pub mod eval;
pub mod kgstore;
pub mod ontology;
pub mod paths;
pub mod pipeline;
pub mod reldb;
pub mod scenario;
pub mod siamese;
