//! Criterion benchmarks for the aegis pipeline stages live in `benches/`.
