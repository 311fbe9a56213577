//! Criterion benchmarks for the chain solver, Bloch solver and pulse propagation.
//! The benchmarks live in `benches/`.
