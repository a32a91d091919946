//! Intentionally empty library target; see `benches/hot_paths.rs` for the
//! criterion benchmarks of the core crate's hot paths.
