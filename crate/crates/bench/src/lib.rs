//! Criterion benchmarks for edgecast-core; see `benches/`.
