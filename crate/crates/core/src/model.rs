//! Domain values shared by every stage of the pipeline.
//!
//! All types here are plain immutable data. Anything that needs to be checked
//! (positivity of the pod request, uniqueness of candidate ids, coverage of an
//! allocation) is checked once at construction.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// I/O profile requested for the workload. Drives benchmark scaling of
/// network- and disk-optimized instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workload {
    #[default]
    General,
    Network,
    Disk,
    #[serde(rename = "disk-network")]
    DiskAndNetwork,
}

impl Workload {
    pub fn wants_network(self) -> bool {
        matches!(self, Workload::Network | Workload::DiskAndNetwork)
    }

    pub fn wants_disk(self) -> bool {
        matches!(self, Workload::Disk | Workload::DiskAndNetwork)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Workload::General => "general",
            Workload::Network => "network",
            Workload::Disk => "disk",
            Workload::DiskAndNetwork => "disk-network",
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Workload {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(Workload::General),
            "network" => Ok(Workload::Network),
            "disk" => Ok(Workload::Disk),
            "disk-network" | "disk-and-network" => Ok(Workload::DiskAndNetwork),
            other => Err(format!(
                "unknown workload `{other}` (expected general, network, disk or disk-network)"
            )),
        }
    }
}

/// A uniform pod request: `req_pod` pods of `req_cpu` vCPU and `req_mem` GiB each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PodSpec {
    pub req_cpu: f64,
    pub req_mem: f64,
    pub req_pod: u64,
    #[serde(default)]
    pub workload: Workload,
}

impl PodSpec {
    /// Builds and validates a spec.
    pub fn new(req_pod: u64, req_cpu: f64, req_mem: f64, workload: Workload) -> Result<Self> {
        validate_pod_spec(PodSpec {
            req_cpu,
            req_mem,
            req_pod,
            workload,
        })
    }

    pub fn with_workload(self, workload: Workload) -> Self {
        PodSpec { workload, ..self }
    }
}

impl fmt::Display for PodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.req_pod, self.req_cpu, self.req_mem)
    }
}

/// Returns the spec unchanged when every field is in range.
pub fn validate_pod_spec(spec: PodSpec) -> Result<PodSpec> {
    fn positive(field: &'static str, value: f64) -> Result<()> {
        if value.is_finite() && value > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSpec {
                field,
                reason: format!("must be a positive finite number, got {value}"),
            })
        }
    }
    positive("req_cpu", spec.req_cpu)?;
    positive("req_mem", spec.req_mem)?;
    if spec.req_pod == 0 {
        return Err(Error::InvalidSpec {
            field: "req_pod",
            reason: "must be at least 1".into(),
        });
    }
    Ok(spec)
}

/// Identifies one instance type in one availability zone,
/// formatted `{instance_type}/{region}/{az}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(String);

impl CandidateId {
    pub fn new(id: impl Into<String>) -> Self {
        CandidateId(id.into())
    }

    pub fn compose(instance_type: &str, region: &str, az: &str) -> Self {
        CandidateId(format!("{instance_type}/{region}/{az}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The instance-type component, e.g. `c6i.large`.
    pub fn instance_type(&self) -> &str {
        self.0.split('/').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CandidateId {
    fn from(s: &str) -> Self {
        CandidateId::new(s)
    }
}

impl From<String> for CandidateId {
    fn from(s: String) -> Self {
        CandidateId(s)
    }
}

/// One spot offering: an instance type in a specific AZ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCandidate {
    pub id: CandidateId,
    pub instance_type: String,
    pub region: String,
    pub az: String,
    pub cpu: f64,
    pub mem: f64,
    pub spot_price: f64,
    pub ondemand_price: f64,
    /// On-demand price of the general-purpose sibling in the same family.
    pub base_ondemand_price: Option<f64>,
    /// Single-core benchmark score.
    pub benchmark: f64,
    /// Largest simultaneous instance count that still scores the top placement score.
    pub t3: u64,
    pub network_optimized: bool,
    pub disk_optimized: bool,
    pub sps_single: Option<u8>,
    pub interrupt_freq: Option<u32>,
}

impl InstanceCandidate {
    /// A general-purpose candidate with the id derived from its location.
    /// Handy in tests and examples; file input goes through [`crate::ingest`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance_type: &str,
        region: &str,
        az: &str,
        cpu: f64,
        mem: f64,
        spot_price: f64,
        benchmark: f64,
        t3: u64,
    ) -> Self {
        InstanceCandidate {
            id: CandidateId::compose(instance_type, region, az),
            instance_type: instance_type.to_string(),
            region: region.to_string(),
            az: az.to_string(),
            cpu,
            mem,
            spot_price,
            ondemand_price: spot_price,
            base_ondemand_price: None,
            benchmark,
            t3,
            network_optimized: false,
            disk_optimized: false,
            sps_single: None,
            interrupt_freq: None,
        }
    }
}

/// Rejects candidate sets that reuse an id.
pub fn ensure_unique_ids<'a>(ids: impl IntoIterator<Item = &'a CandidateId>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// A candidate after preprocessing against a particular [`PodSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichedCandidate {
    pub base: InstanceCandidate,
    pub pod_capacity: u64,
    pub scaled_benchmark: f64,
    /// `scaled_benchmark × pod_capacity`.
    pub perf: f64,
}

impl EnrichedCandidate {
    pub fn new(base: InstanceCandidate, pod_capacity: u64, scaled_benchmark: f64) -> Self {
        let perf = scaled_benchmark * pod_capacity as f64;
        EnrichedCandidate {
            base,
            pod_capacity,
            scaled_benchmark,
            perf,
        }
    }

    pub fn id(&self) -> &CandidateId {
        &self.base.id
    }

    pub fn spot_price(&self) -> f64 {
        self.base.spot_price
    }

    pub fn t3(&self) -> u64 {
        self.base.t3
    }
}

/// Instance counts per candidate with their derived totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    entries: BTreeMap<CandidateId, u64>,
    total_pods_allocated: u64,
    hourly_cost: f64,
}

impl Allocation {
    /// Builds an allocation from `(id, count)` pairs, looking up pod capacity
    /// and spot price in `candidates`. Zero counts are dropped; repeated ids add up.
    pub fn from_counts<I>(counts: I, candidates: &[EnrichedCandidate]) -> Result<Self>
    where
        I: IntoIterator<Item = (CandidateId, u64)>,
    {
        let index: HashMap<&CandidateId, &EnrichedCandidate> =
            candidates.iter().map(|c| (c.id(), c)).collect();
        let mut entries = BTreeMap::new();
        for (id, count) in counts {
            if !index.contains_key(&id) {
                return Err(Error::UnknownCandidate(id));
            }
            if count > 0 {
                *entries.entry(id).or_insert(0) += count;
            }
        }
        let mut total_pods_allocated = 0u64;
        let mut hourly_cost = 0.0;
        for (id, &count) in &entries {
            let c = index[id];
            total_pods_allocated += c.pod_capacity * count;
            hourly_cost += c.spot_price() * count as f64;
        }
        Ok(Allocation {
            entries,
            total_pods_allocated,
            hourly_cost,
        })
    }

    pub fn entries(&self) -> &BTreeMap<CandidateId, u64> {
        &self.entries
    }

    pub fn count(&self, id: &CandidateId) -> u64 {
        self.entries.get(id).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_pods_allocated(&self) -> u64 {
        self.total_pods_allocated
    }

    pub fn hourly_cost(&self) -> f64 {
        self.hourly_cost
    }

    pub fn node_count(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Largest number of instances placed on a single candidate.
    pub fn max_per_type(&self) -> u64 {
        self.entries.values().copied().max().unwrap_or(0)
    }

    pub fn covers(&self, spec: &PodSpec) -> bool {
        self.total_pods_allocated >= spec.req_pod
    }

    /// Ids whose count exceeds that candidate's `t3` bound.
    pub fn t3_violations<'a>(
        &'a self,
        candidates: &'a [EnrichedCandidate],
    ) -> impl Iterator<Item = &'a CandidateId> + 'a {
        candidates
            .iter()
            .filter(move |c| self.count(c.id()) > c.t3())
            .map(|c| c.id())
    }
}

/// Efficiency of an allocation. `alpha` is the cost-performance weight that
/// produced it, absent for strategies that do not use one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub e_perf_cost: f64,
    pub e_over_pods: f64,
    pub e_total: f64,
    pub alpha: Option<f64>,
}
