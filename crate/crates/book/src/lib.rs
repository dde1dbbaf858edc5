//! Compiles and runs every listing of the guide in `book/src` as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/chaos_basis.md")]
pub mod chaos_basis {}

#[doc = include_str!("../../../book/src/galerkin_burgers.md")]
pub mod galerkin_burgers {}

#[doc = include_str!("../../../book/src/time_stepping.md")]
pub mod time_stepping {}

#[doc = include_str!("../../../book/src/reduction.md")]
pub mod reduction {}

#[doc = include_str!("../../../book/src/memory_estimation.md")]
pub mod memory_estimation {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/monte_carlo.md")]
pub mod monte_carlo {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
