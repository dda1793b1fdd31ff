//! Interruption handling: a TTL cache of recently interrupted offerings and
//! re-optimization that keeps them out of the next allocation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gss::{self, GssConfig, GssResult};
use crate::model::{CandidateId, EnrichedCandidate, PodSpec};

/// Seconds an interrupted offering stays excluded.
pub const DEFAULT_TTL_SECS: i64 = 180;

/// A spot interruption notice for one offering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterruptEvent {
    pub t: i64,
    pub candidate_id: CandidateId,
}

impl InterruptEvent {
    pub fn new(t: i64, candidate_id: impl Into<CandidateId>) -> Self {
        InterruptEvent {
            t,
            candidate_id: candidate_id.into(),
        }
    }
}

/// Interrupted offerings keyed by id, each with an expiry time. An entry is
/// active while `now < expiry`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnavailableOfferingsCache {
    entries: BTreeMap<CandidateId, i64>,
    ttl: i64,
}

impl Default for UnavailableOfferingsCache {
    fn default() -> Self {
        Self::new(DEFAULT_TTL_SECS)
    }
}

impl UnavailableOfferingsCache {
    pub fn new(ttl_secs: i64) -> Self {
        UnavailableOfferingsCache {
            entries: BTreeMap::new(),
            ttl: ttl_secs,
        }
    }

    pub fn ttl(&self) -> i64 {
        self.ttl
    }

    /// Records (or refreshes) an interruption. Ids are not validated here;
    /// unknown ids simply never match a candidate.
    pub fn record(&mut self, event: &InterruptEvent) {
        let expiry = event.t + self.ttl;
        self.entries
            .entry(event.candidate_id.clone())
            .and_modify(|e| *e = (*e).max(expiry))
            .or_insert(expiry);
    }

    pub fn expiry(&self, id: &CandidateId) -> Option<i64> {
        self.entries.get(id).copied()
    }

    pub fn is_active(&self, id: &CandidateId, now: i64) -> bool {
        self.entries.get(id).is_some_and(|&expiry| now < expiry)
    }

    pub fn active_ids(&self, now: i64) -> BTreeSet<CandidateId> {
        self.entries
            .iter()
            .filter(|(_, &expiry)| now < expiry)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops entries that have expired by `now`.
    pub fn purge_expired(&mut self, now: i64) {
        self.entries.retain(|_, &mut expiry| now < expiry);
    }
}

/// Returns `cache` with `event` recorded.
pub fn record_interrupt(
    mut cache: UnavailableOfferingsCache,
    event: &InterruptEvent,
) -> UnavailableOfferingsCache {
    cache.record(event);
    cache
}

/// Cache shared between one interrupt handler and concurrent optimizers.
/// Every update of an entry happens under the write lock, so readers never
/// see a partially written expiry.
#[derive(Debug, Default)]
pub struct SharedOfferingsCache {
    inner: RwLock<UnavailableOfferingsCache>,
}

impl SharedOfferingsCache {
    pub fn new(ttl_secs: i64) -> Self {
        SharedOfferingsCache {
            inner: RwLock::new(UnavailableOfferingsCache::new(ttl_secs)),
        }
    }

    pub fn record(&self, event: &InterruptEvent) {
        self.inner
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .record(event);
    }

    pub fn is_active(&self, id: &CandidateId, now: i64) -> bool {
        self.inner
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .is_active(id, now)
    }

    /// Point-in-time copy for a re-optimization pass.
    pub fn snapshot(&self) -> UnavailableOfferingsCache {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

/// Splits candidates into (eligible, excluded) by the cache state at `now`.
pub fn partition_available(
    enriched: &[EnrichedCandidate],
    cache: &UnavailableOfferingsCache,
    now: i64,
) -> (Vec<EnrichedCandidate>, Vec<EnrichedCandidate>) {
    enriched
        .iter()
        .cloned()
        .partition(|c| !cache.is_active(c.id(), now))
}

fn capacity(cands: &[EnrichedCandidate]) -> u64 {
    cands.iter().map(|c| c.pod_capacity * c.t3()).sum()
}

/// Re-runs the weight search over the candidates not excluded by the cache.
pub fn reoptimize(
    enriched: &[EnrichedCandidate],
    spec: &PodSpec,
    cache: &UnavailableOfferingsCache,
    now: i64,
    config: &GssConfig,
) -> Result<GssResult> {
    let (kept, excluded) = partition_available(enriched, cache, now);
    let available = capacity(&kept);
    let withheld = capacity(&excluded);
    if kept.is_empty() || available < spec.req_pod {
        return Err(Error::InsufficientCapacity {
            demand: spec.req_pod,
            available,
            excluded: withheld,
        });
    }
    if !excluded.is_empty() {
        log::info!(
            "excluding {} interrupted offering(s) ({} pods of headroom)",
            excluded.len(),
            withheld
        );
    }
    gss::search(&kept, spec, config).map_err(|e| match e {
        Error::InsufficientCapacity {
            demand, available, ..
        } => Error::InsufficientCapacity {
            demand,
            available,
            excluded: withheld,
        },
        other => other,
    })
}
