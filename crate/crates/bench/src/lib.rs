//! Criterion benchmarks of the functional quadrature, the fixed-point solver
//! and the slot simulator. Run with `cargo bench -p fdaloha-bench`.
