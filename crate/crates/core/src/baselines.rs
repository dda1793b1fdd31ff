//! Reference allocation strategies used for comparison.
//!
//! * [`greedy`] ranks candidates by per-node benchmark-per-dollar and fills
//!   them in order, respecting each candidate's `t3` bound.
//! * [`spotverse_node`] / [`spotverse_pod`] drop risky offerings by a
//!   combined placement/interruption score, then put the whole request on
//!   the cheapest surviving offering (per node or per pod) with no `t3` bound.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, EnrichedCandidate, InstanceCandidate, PodSpec};
use crate::preprocess::enrich_unbounded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineConfig {
    /// Offerings whose `(3 − sps_single) + interrupt_freq` exceeds this are dropped.
    pub spotverse_threshold: f64,
    /// Optional per-offering node cap for the SpotVerse variants; uncapped by default.
    pub max_nodes_per_type: Option<u64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            spotverse_threshold: 3.0,
            max_nodes_per_type: None,
        }
    }
}

/// Greedy fill by descending `scaled_benchmark / spot_price` (ties by id).
pub fn greedy(enriched: &[EnrichedCandidate], spec: &PodSpec) -> Result<Allocation> {
    let mut ranked: Vec<&EnrichedCandidate> = enriched.iter().collect();
    ranked.sort_by(|a, b| {
        let ra = a.scaled_benchmark / a.spot_price();
        let rb = b.scaled_benchmark / b.spot_price();
        rb.total_cmp(&ra).then_with(|| a.id().cmp(b.id()))
    });

    let mut remaining = spec.req_pod;
    let mut counts = Vec::new();
    for c in ranked {
        if remaining == 0 {
            break;
        }
        let x = c.t3().min(remaining.div_ceil(c.pod_capacity));
        if x > 0 {
            remaining = remaining.saturating_sub(x * c.pod_capacity);
            counts.push((c.id().clone(), x));
        }
    }
    if remaining > 0 {
        let available = enriched.iter().map(|c| c.pod_capacity * c.t3()).sum();
        return Err(Error::InsufficientCapacity {
            demand: spec.req_pod,
            available,
            excluded: 0,
        });
    }
    Allocation::from_counts(counts, enriched)
}

/// Combined risk score: `(3 − sps_single) + interrupt_freq`. `None` when
/// either signal is missing.
pub fn spotverse_score(c: &InstanceCandidate) -> Option<f64> {
    let sps = c.sps_single?;
    let freq = c.interrupt_freq?;
    Some((3.0 - sps as f64) + freq as f64)
}

fn spotverse(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
    cfg: &BaselineConfig,
    key: impl Fn(&EnrichedCandidate) -> f64,
) -> Result<Allocation> {
    let mut survivors: Vec<EnrichedCandidate> = enrich_unbounded(candidates, spec)
        .into_iter()
        .filter(|c| spotverse_score(&c.base).is_some_and(|s| s <= cfg.spotverse_threshold))
        .collect();
    if survivors.is_empty() {
        return Err(Error::NoCandidatesPassFilter {
            threshold: cfg.spotverse_threshold,
        });
    }
    survivors.sort_by(|a, b| {
        key(a)
            .partial_cmp(&key(b))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id().cmp(b.id()))
    });

    let mut remaining = spec.req_pod;
    let mut counts = Vec::new();
    for c in &survivors {
        let need = remaining.div_ceil(c.pod_capacity);
        let x = cfg.max_nodes_per_type.map_or(need, |cap| need.min(cap));
        if x > 0 {
            remaining = remaining.saturating_sub(x * c.pod_capacity);
            counts.push((c.id().clone(), x));
        }
        if remaining == 0 {
            break;
        }
    }
    if remaining > 0 {
        let cap = cfg.max_nodes_per_type.unwrap_or(0);
        return Err(Error::InsufficientCapacity {
            demand: spec.req_pod,
            available: survivors.iter().map(|c| c.pod_capacity * cap).sum(),
            excluded: 0,
        });
    }
    Allocation::from_counts(counts, &survivors)
}

/// Cheapest surviving offering per node.
pub fn spotverse_node(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
    cfg: &BaselineConfig,
) -> Result<Allocation> {
    spotverse(candidates, spec, cfg, |c| c.spot_price())
}

/// Cheapest surviving offering per hosted pod.
pub fn spotverse_pod(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
    cfg: &BaselineConfig,
) -> Result<Allocation> {
    spotverse(candidates, spec, cfg, |c| {
        c.spot_price() / c.pod_capacity as f64
    })
}
