//! Benchmark-only crate; see `benches/hot_paths.rs`. The functions under
//! test live in `ramp-core` — this package exists so benchmark dependencies
//! stay out of the library's own tree.
