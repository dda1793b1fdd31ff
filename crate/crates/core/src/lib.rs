//! Spot instance pool selection for Kubernetes-style clusters.
//!
//! Given a pod request (count, CPU, memory, workload preference) and a table
//! of spot offerings, pick how many nodes of each offering to provision so
//! that the pods fit, the cluster is cheap and fast, and no offering is asked
//! for more instances than it can reliably supply (`t3`).
//!
//! The pipeline:
//!
//! 1. [`ingest`] reads the offering table, snapshots and interrupt events.
//! 2. [`preprocess`] computes per-node pod capacity, workload-scaled
//!    benchmarks and the normalizers used by the objective.
//! 3. [`ilp`] solves the bounded covering problem exactly for a fixed
//!    cost/performance weight `alpha`.
//! 4. [`gss`] runs a golden-section search over `alpha`, scoring each
//!    allocation by total efficiency.
//! 5. [`resilience`] keeps recently interrupted offerings out of the next
//!    allocation; [`sim`] replays traces; [`harness`] compares strategies.
//!
//! ```
//! use spotpool::{gss, preprocess, InstanceCandidate, PodSpec, Workload};
//!
//! let candidates = vec![
//!     InstanceCandidate::new("c5.large", "us-east-1", "use1-az1", 2.0, 4.0, 0.035, 1100.0, 20),
//!     InstanceCandidate::new("m5.xlarge", "us-east-1", "use1-az1", 4.0, 16.0, 0.080, 2000.0, 10),
//! ];
//! let spec = PodSpec::new(12, 1.0, 2.0, Workload::General)?;
//! let enriched = preprocess::enrich(&candidates, &spec)?;
//! let result = gss::search(&enriched, &spec, &gss::GssConfig::default())?;
//! assert!(result.best_allocation.covers(&spec));
//! assert!(result.best_report.e_over_pods <= 1.0);
//! # Ok::<(), spotpool::Error>(())
//! ```

pub mod baselines;
pub mod error;
pub mod gss;
pub mod harness;
pub mod ilp;
pub mod ingest;
pub mod model;
pub mod preprocess;
pub mod resilience;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    Allocation, CandidateId, EfficiencyReport, EnrichedCandidate, InstanceCandidate, PodSpec,
    Workload,
};
