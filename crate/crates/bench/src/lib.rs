//! Criterion benchmarks for gravzone; see `benches/`.
