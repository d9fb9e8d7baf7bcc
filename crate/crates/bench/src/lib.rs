//! Criterion benchmarks for the nplda kernels; see `benches/`.
