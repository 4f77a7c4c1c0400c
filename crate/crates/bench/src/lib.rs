//! Criterion benchmarks for the solvers and bound searches; see `benches/`.
