//! Holds the acceptance campaign (`tests/acceptance.rs`). The package sorts
//! after the library crates, so `cargo test --workspace` reaches it last.
