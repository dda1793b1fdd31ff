//! Candidate preprocessing: pod capacity per instance, workload-aware
//! benchmark scaling, feasibility filtering and min-normalizers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    ensure_unique_ids, CandidateId, EnrichedCandidate, InstanceCandidate, PodSpec, Workload,
};

/// Minimum per-instance performance and spot price over a candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalizers {
    pub perf_min: f64,
    pub sp_min: f64,
}

/// A candidate matched the workload preference but has no base price to scale against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalingWarning {
    pub candidate: CandidateId,
}

impl std::fmt::Display for ScalingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} matches the workload preference but has no base on-demand price; benchmark left unscaled",
            self.candidate
        )
    }
}

/// Result of [`enrich_with_warnings`].
#[derive(Debug, Clone)]
pub struct Enrichment {
    pub candidates: Vec<EnrichedCandidate>,
    pub warnings: Vec<ScalingWarning>,
}

// `a / b` floored, tolerant of quotients like 2.9999999999999996 that are
// integral in exact arithmetic.
fn floor_ratio(a: f64, b: f64) -> u64 {
    let q = a / b;
    (q * (1.0 + 1e-12)).floor().max(0.0) as u64
}

/// How many pods of the requested shape fit on one instance.
pub fn pod_capacity(candidate: &InstanceCandidate, spec: &PodSpec) -> u64 {
    floor_ratio(candidate.cpu, spec.req_cpu).min(floor_ratio(candidate.mem, spec.req_mem))
}

fn matches_preference(candidate: &InstanceCandidate, workload: Workload) -> bool {
    (workload.wants_network() && candidate.network_optimized)
        || (workload.wants_disk() && candidate.disk_optimized)
}

fn scale(candidate: &InstanceCandidate, workload: Workload) -> (f64, Option<ScalingWarning>) {
    if !matches_preference(candidate, workload) {
        return (candidate.benchmark, None);
    }
    match candidate.base_ondemand_price {
        Some(base) => (
            candidate.benchmark * (candidate.ondemand_price / base),
            None,
        ),
        None => (
            candidate.benchmark,
            Some(ScalingWarning {
                candidate: candidate.id.clone(),
            }),
        ),
    }
}

/// Benchmark score adjusted for the requested I/O profile.
///
/// Candidates whose capability flags match the preference are scaled by
/// `ondemand_price / base_ondemand_price`; a candidate with both flags is
/// still scaled only once. Everything else, including every candidate under
/// [`Workload::General`], keeps its raw score.
pub fn scale_benchmark(candidate: &InstanceCandidate, workload: Workload) -> f64 {
    scale(candidate, workload).0
}

/// [`enrich`], also returning the candidates that could not be scaled.
pub fn enrich_with_warnings(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
) -> Result<Enrichment> {
    ensure_unique_ids(candidates.iter().map(|c| &c.id))?;
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for c in candidates {
        let pods = pod_capacity(c, spec);
        if pods == 0 || c.t3 == 0 {
            continue;
        }
        let (bench, warning) = scale(c, spec.workload);
        if let Some(w) = warning {
            log::warn!("{w}");
            warnings.push(w);
        }
        out.push(EnrichedCandidate::new(c.clone(), pods, bench));
    }
    if out.is_empty() {
        return Err(Error::NoFeasibleCandidates);
    }
    Ok(Enrichment {
        candidates: out,
        warnings,
    })
}

/// Computes pod capacity and scaled benchmark for each candidate, dropping
/// those that cannot host a pod or have no availability headroom (`t3 = 0`).
pub fn enrich(candidates: &[InstanceCandidate], spec: &PodSpec) -> Result<Vec<EnrichedCandidate>> {
    enrich_with_warnings(candidates, spec).map(|e| e.candidates)
}

/// Like [`enrich`] but keeps `t3 = 0` candidates and never fails on an empty
/// result. Used by strategies that ignore availability bounds and for
/// scoring their allocations.
pub fn enrich_unbounded(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
) -> Vec<EnrichedCandidate> {
    candidates
        .iter()
        .filter_map(|c| {
            let pods = pod_capacity(c, spec);
            (pods > 0).then(|| EnrichedCandidate::new(c.clone(), pods, scale(c, spec.workload).0))
        })
        .collect()
}

pub fn normalizers(enriched: &[EnrichedCandidate]) -> Result<Normalizers> {
    if enriched.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let perf_min = enriched
        .iter()
        .map(|c| c.perf)
        .fold(f64::INFINITY, f64::min);
    let sp_min = enriched
        .iter()
        .map(|c| c.spot_price())
        .fold(f64::INFINITY, f64::min);
    Ok(Normalizers { perf_min, sp_min })
}
