//! Trace replay: re-run allocation strategies snapshot by snapshot, apply
//! interrupt events through the offerings cache, and record fulfillment,
//! efficiency and recovery.
//!
//! Fulfillment is deterministic: a request for `x` instances of an offering
//! whose current `t3` is `T` is granted `min(x, T)` instances.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{self, BaselineConfig};
use crate::error::{Error, Result};
use crate::gss::{self, efficiency, GssConfig};
use crate::ingest::{ensure_monotonic, MarketSnapshot};
use crate::model::{
    Allocation, CandidateId, EfficiencyReport, InstanceCandidate, PodSpec, Workload,
};
use crate::preprocess::{enrich, enrich_unbounded};
use crate::resilience::{InterruptEvent, UnavailableOfferingsCache};

pub const SCHEMA_VERSION: u32 = 1;

/// An allocation strategy the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Golden-section weight search over the exact selection ILP.
    Optimized(GssConfig),
    Greedy,
    SpotverseNode(BaselineConfig),
    SpotversePod(BaselineConfig),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Optimized(_) => "optimized",
            Strategy::Greedy => "greedy",
            Strategy::SpotverseNode(_) => "spotverse-node",
            Strategy::SpotversePod(_) => "spotverse-pod",
        }
    }

    /// The four strategies with default settings.
    pub fn all(gss: GssConfig, baseline: BaselineConfig) -> Vec<Strategy> {
        vec![
            Strategy::Optimized(gss),
            Strategy::Greedy,
            Strategy::SpotverseNode(baseline),
            Strategy::SpotversePod(baseline),
        ]
    }

    /// Allocates against raw candidates and scores the result.
    pub fn allocate(
        &self,
        candidates: &[InstanceCandidate],
        spec: &PodSpec,
    ) -> Result<(Allocation, EfficiencyReport)> {
        let scoring = enrich_unbounded(candidates, spec);
        let allocation = match self {
            Strategy::Optimized(cfg) => {
                let res = gss::search(&enrich(candidates, spec)?, spec, cfg)?;
                return Ok((res.best_allocation, res.best_report));
            }
            Strategy::Greedy => baselines::greedy(&enrich(candidates, spec)?, spec)?,
            Strategy::SpotverseNode(cfg) => baselines::spotverse_node(candidates, spec, cfg)?,
            Strategy::SpotversePod(cfg) => baselines::spotverse_pod(candidates, spec, cfg)?,
        };
        let report = efficiency(&allocation, &scoring, spec)?;
        Ok((allocation, report))
    }
}

/// Instances granted per offering at one snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fulfillment {
    pub granted: BTreeMap<CandidateId, u64>,
    pub total: u64,
}

pub fn fulfill(allocation: &Allocation, snapshot: &MarketSnapshot) -> Result<Fulfillment> {
    let mut granted = BTreeMap::new();
    let mut total = 0;
    for (id, &x) in allocation.entries() {
        let c = snapshot
            .candidates
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| Error::UnknownCandidate(id.clone()))?;
        let g = x.min(c.t3);
        total += g;
        granted.insert(id.clone(), g);
    }
    Ok(Fulfillment { granted, total })
}

/// The 20 pod requests used for strategy comparison: every combination of
/// {10, 50, 100, 400, 1000} pods with (1 vCPU, 2 GiB), (2, 2) and (1, 4),
/// followed by five irregular shapes.
pub fn scenario_grid() -> Vec<PodSpec> {
    let mut out = Vec::with_capacity(20);
    for pods in [10, 50, 100, 400, 1000] {
        for (cpu, mem) in [(1.0, 2.0), (2.0, 2.0), (1.0, 4.0)] {
            out.push(PodSpec {
                req_cpu: cpu,
                req_mem: mem,
                req_pod: pods,
                workload: Workload::General,
            });
        }
    }
    for (pods, cpu, mem) in [
        (17, 7.0, 7.0),
        (75, 3.0, 5.0),
        (115, 4.0, 2.0),
        (287, 1.0, 6.0),
        (439, 1.0, 9.0),
    ] {
        out.push(PodSpec {
            req_cpu: cpu,
            req_mem: mem,
            req_pod: pods,
            workload: Workload::General,
        });
    }
    out
}

/// One (snapshot, strategy) cell of a replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRecord {
    pub snapshot: usize,
    pub timestamp: i64,
    pub strategy: &'static str,
    pub excluded_offerings: usize,
    pub allocation: Option<Allocation>,
    pub report: Option<EfficiencyReport>,
    pub requested_nodes: u64,
    pub fulfilled_nodes: u64,
    pub fulfilled_pods: u64,
    /// Fulfilled pods reach the request.
    pub covered: bool,
    pub max_per_type: u64,
    /// Some offering was asked for more instances than its current `t3`.
    pub exceeds_t3: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRecord {
    pub strategy: &'static str,
    pub event_t: i64,
    pub candidate_id: CandidateId,
    /// Index of the first snapshot that saw the event; `None` if it came after the trace.
    pub applied_at: Option<usize>,
    /// Snapshots from the last one before the event to the first covered one.
    pub latency_snapshots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub spec: PodSpec,
    pub ttl_secs: i64,
    pub records: Vec<SimRecord>,
    pub recoveries: Vec<RecoveryRecord>,
}

impl SimReport {
    pub fn records_for<'a>(
        &'a self,
        strategy: &'a str,
    ) -> impl Iterator<Item = &'a SimRecord> + 'a {
        self.records.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat table, one row per record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "snapshot,timestamp,strategy,alpha,e_perf_cost,e_over_pods,e_total,hourly_cost,\
             allocated_pods,requested_nodes,fulfilled_nodes,fulfilled_pods,covered,max_per_type,\
             exceeds_t3,excluded_offerings,error\n",
        );
        for r in &self.records {
            let rep = r.report.as_ref();
            let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.snapshot,
                r.timestamp,
                r.strategy,
                num(rep.and_then(|p| p.alpha)),
                num(rep.map(|p| p.e_perf_cost)),
                num(rep.map(|p| p.e_over_pods)),
                num(rep.map(|p| p.e_total)),
                num(r.allocation.as_ref().map(|a| a.hourly_cost())),
                r.allocation
                    .as_ref()
                    .map_or(0, |a| a.total_pods_allocated()),
                r.requested_nodes,
                r.fulfilled_nodes,
                r.fulfilled_pods,
                r.covered,
                r.max_per_type,
                r.exceeds_t3,
                r.excluded_offerings,
                csv_field(r.error.as_deref().unwrap_or("")),
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn run_cell(
    index: usize,
    snap: &MarketSnapshot,
    available: &[InstanceCandidate],
    excluded: usize,
    spec: &PodSpec,
    strategy: &Strategy,
) -> SimRecord {
    let mut rec = SimRecord {
        snapshot: index,
        timestamp: snap.timestamp,
        strategy: strategy.name(),
        excluded_offerings: excluded,
        allocation: None,
        report: None,
        requested_nodes: 0,
        fulfilled_nodes: 0,
        fulfilled_pods: 0,
        covered: false,
        max_per_type: 0,
        exceeds_t3: false,
        error: None,
    };
    let outcome = strategy
        .allocate(available, spec)
        .and_then(|(allocation, report)| {
            let granted = fulfill(&allocation, snap)?;
            Ok((allocation, report, granted))
        });
    match outcome {
        Ok((allocation, report, granted)) => {
            let scoring = enrich_unbounded(available, spec);
            let pods_of = |id: &CandidateId| {
                scoring
                    .iter()
                    .find(|c| c.id() == id)
                    .map_or(0, |c| c.pod_capacity)
            };
            rec.fulfilled_pods = granted.granted.iter().map(|(id, &g)| g * pods_of(id)).sum();
            rec.fulfilled_nodes = granted.total;
            rec.requested_nodes = allocation.node_count();
            rec.covered = rec.fulfilled_pods >= spec.req_pod;
            rec.max_per_type = allocation.max_per_type();
            rec.exceeds_t3 = allocation.t3_violations(&scoring).next().is_some();
            rec.allocation = Some(allocation);
            rec.report = Some(report);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Replays `trace`, applying each event at the first snapshot whose
/// timestamp is at or after the event time. Strategy failures are recorded
/// per cell rather than aborting the run.
pub fn replay(
    trace: &[MarketSnapshot],
    events: &[InterruptEvent],
    spec: &PodSpec,
    strategies: &[Strategy],
    ttl_secs: i64,
) -> Result<SimReport> {
    if trace.is_empty() {
        return Err(Error::InvalidConfig("trace has no snapshots".into()));
    }
    ensure_monotonic(trace)?;
    let mut events: Vec<&InterruptEvent> = events.iter().collect();
    events.sort_by_key(|e| e.t);

    let mut cache = UnavailableOfferingsCache::new(ttl_secs);
    let mut applied_at: Vec<Option<usize>> = vec![None; events.len()];
    let mut next_event = 0;
    let mut records = Vec::with_capacity(trace.len() * strategies.len());

    for (index, snap) in trace.iter().enumerate() {
        while next_event < events.len() && events[next_event].t <= snap.timestamp {
            cache.record(events[next_event]);
            applied_at[next_event] = Some(index);
            next_event += 1;
        }
        let (available, excluded): (Vec<_>, Vec<_>) = snap
            .candidates
            .iter()
            .cloned()
            .partition(|c| !cache.is_active(&c.id, snap.timestamp));
        let cells: Vec<SimRecord> = strategies
            .par_iter()
            .map(|s| run_cell(index, snap, &available, excluded.len(), spec, s))
            .collect();
        records.extend(cells);
    }

    let mut recoveries = Vec::new();
    for strategy in strategies {
        let covered: Vec<bool> = records
            .iter()
            .filter(|r| r.strategy == strategy.name())
            .map(|r| r.covered)
            .collect();
        for (event, &at) in events.iter().zip(&applied_at) {
            let latency_snapshots = at.and_then(|s| {
                (s..covered.len())
                    .find(|&i| covered[i])
                    .map(|i| (i - s + 1) as u64)
            });
            recoveries.push(RecoveryRecord {
                strategy: strategy.name(),
                event_t: event.t,
                candidate_id: event.candidate_id.clone(),
                applied_at: at,
                latency_snapshots,
            });
        }
    }

    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        ttl_secs,
        records,
        recoveries,
    })
}
