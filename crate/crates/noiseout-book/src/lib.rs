//! Compiles and runs every code sample in the guide under `book/` as a
//! doc-test, so `cargo test` fails whenever the guide drifts out of sync with
//! the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/matrices.md")]
pub mod matrices {}

#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}

#[doc = include_str!("../../../book/src/noise-outputs.md")]
pub mod noise_outputs {}

#[doc = include_str!("../../../book/src/merging.md")]
pub mod merging {}

#[doc = include_str!("../../../book/src/pruning-loop.md")]
pub mod pruning_loop {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
