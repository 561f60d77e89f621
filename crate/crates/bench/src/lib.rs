//! Criterion benchmarks for the bivariate normal kernel and the composite
//! likelihood; see `benches/`.
