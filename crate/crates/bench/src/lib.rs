//! Benchmarks for the bbwave kernels live in `benches/`.
