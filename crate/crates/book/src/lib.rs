//! The guide under `book/src`, compiled so that every Rust snippet in it
//! runs as a doc-test. mdbook cannot resolve dependencies when testing, so
//! each chapter is pulled in here as module documentation instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/candidates.md")]
pub mod candidates {}
#[doc = include_str!("../../../book/src/workloads.md")]
pub mod workloads {}
#[doc = include_str!("../../../book/src/selection.md")]
pub mod selection {}
#[doc = include_str!("../../../book/src/alpha-search.md")]
pub mod alpha_search {}
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("../../../book/src/interruptions.md")]
pub mod interruptions {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/metric.md")]
pub mod metric {}
