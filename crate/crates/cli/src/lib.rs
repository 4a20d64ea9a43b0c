//! Benchmark harness around the dual-homotopy EM library: run configuration,
//! data generation, replication studies and table/CSV emission.

pub mod config;
pub mod datagen;
pub mod probes;
pub mod study;
pub mod table;
