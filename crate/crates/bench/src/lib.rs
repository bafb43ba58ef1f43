//! Criterion benchmarks for handsim; see `benches/`.
