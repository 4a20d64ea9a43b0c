//! Benchmark-only crate; see `benches/drivers.rs`.
