//! Joint Kohonen-map clustering of individuals and the modalities of the
//! qualitative variables that describe them (the KDISJ algorithm), plus the
//! downstream analysis: regrouping trained units into super classes and
//! profiling them with frequency tables, means, F statistics and deviation
//! tables.
//!
//! The crate is organized around the batch pipeline:
//!
//! 1. [`coding`] one-hot encodes categorical records into the complete
//!    disjunctive table and applies the chi-square adjustment;
//! 2. [`model`] trains the double Kohonen map over extended (M+N) code
//!    vectors and classifies individuals and modalities onto the grid;
//! 3. [`superclass`] regroups units by Ward clustering of code vectors and
//!    computes the per-class statistics;
//! 4. [`pipeline`] orchestrates the stages and writes the report and map
//!    artifacts; [`render`] draws them.
//!
//! All randomness is drawn from seeded generators: identical inputs and
//! seeds give bit-identical results and artifacts.

pub mod coding;
pub mod config;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod model;
pub mod pipeline;
pub mod provenance;
pub mod render;
pub mod som;
pub mod superclass;
pub mod synth;

pub use coding::{AdjustedTable, CategoricalSchema, DisjunctiveTable, EmptyColumnPolicy, Variable};
pub use config::RunConfig;
pub use dataset::{Dataset, LoadReport, RecordPolicy};
pub use error::{Error, Result};
pub use grid::{GridSpec, Topology, UnitId};
pub use model::KdisjModel;
pub use som::{Codebook, ComponentRange, Schedule};
pub use superclass::{ClassProfile, Dendrogram, Linkage, SuperClassification};
