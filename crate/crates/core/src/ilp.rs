//! Exact solver for the per-weight instance-count selection problem:
//!
//! ```text
//! minimize   Σ c_i · x_i
//! subject to Σ Pod_i · x_i ≥ demand,   0 ≤ x_i ≤ T3_i,   x_i integer
//! c_i = −α · Perf_i / Perf_min + (1 − α) · SP_i / SP_min
//! ```
//!
//! This is a minimum-cost covering knapsack with box bounds. Candidates with
//! a negative coefficient are always saturated at their bound: every extra
//! instance lowers the objective and adds coverage. The rest are chosen by a
//! dynamic program over covered demand, capped at the residual demand.
//!
//! Objective values are the left fold `((0 + c_0·x_0) + c_1·x_1) + …` over
//! items in ascending id order. The DP accumulates costs in exactly that
//! order, so its values compare bit-for-bit with [`brute_force_solve`].
//!
//! Among objective-optimal solutions the one allocating the fewest pods wins;
//! remaining ties go to the lexicographically greatest count vector in
//! ascending id order (earlier ids are preferred).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ensure_unique_ids, Allocation, CandidateId, EnrichedCandidate};
use crate::preprocess::Normalizers;

/// Largest residual demand (in pods) the DP accepts.
pub const MAX_RESIDUAL_DEMAND: u64 = 1_000_000;

/// Largest enumeration space [`brute_force_solve`] accepts.
pub const ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlpItem {
    pub id: CandidateId,
    pub coefficient: f64,
    pub capacity: u64,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlpProblem {
    items: Vec<IlpItem>,
    demand: u64,
    alpha: f64,
}

/// Combined cost-performance coefficient of one candidate at weight `alpha`.
pub fn coefficient(perf: f64, spot_price: f64, norm: &Normalizers, alpha: f64) -> f64 {
    -alpha * (perf / norm.perf_min) + (1.0 - alpha) * (spot_price / norm.sp_min)
}

impl IlpProblem {
    /// Items are reordered by ascending id.
    pub fn new(mut items: Vec<IlpItem>, demand: u64, alpha: f64) -> Result<Self> {
        if demand == 0 {
            return Err(Error::InvalidConfig("demand must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        ensure_unique_ids(items.iter().map(|i| &i.id))?;
        if let Some(bad) = items
            .iter()
            .find(|i| i.capacity == 0 || i.bound == 0 || !i.coefficient.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "item {} needs capacity ≥ 1, bound ≥ 1 and a finite coefficient",
                bad.id
            )));
        }
        items.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(IlpProblem {
            items,
            demand,
            alpha,
        })
    }

    pub fn from_candidates(
        enriched: &[EnrichedCandidate],
        norm: &Normalizers,
        alpha: f64,
        demand: u64,
    ) -> Result<Self> {
        let items = enriched
            .iter()
            .map(|c| IlpItem {
                id: c.id().clone(),
                coefficient: coefficient(c.perf, c.spot_price(), norm, alpha),
                capacity: c.pod_capacity,
                bound: c.t3(),
            })
            .collect();
        Self::new(items, demand, alpha)
    }

    pub fn items(&self) -> &[IlpItem] {
        &self.items
    }

    pub fn demand(&self) -> u64 {
        self.demand
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Σ Pod_i · T3_i.
    pub fn max_coverage(&self) -> u128 {
        self.items
            .iter()
            .map(|i| i.capacity as u128 * i.bound as u128)
            .sum()
    }

    /// Canonical objective of a count vector aligned with [`items`](Self::items).
    pub fn objective(&self, counts: &[u64]) -> f64 {
        self.items
            .iter()
            .zip(counts)
            .fold(0.0, |acc, (item, &x)| acc + item.coefficient * x as f64)
    }

    pub fn pods(&self, counts: &[u64]) -> u64 {
        self.items
            .iter()
            .zip(counts)
            .map(|(item, &x)| item.capacity * x)
            .sum()
    }

    fn check_feasible(&self) -> Result<()> {
        let available = self.max_coverage();
        if available < self.demand as u128 {
            return Err(Error::InsufficientCapacity {
                demand: self.demand,
                available: available as u64,
                excluded: 0,
            });
        }
        Ok(())
    }

    fn solution(&self, counts: Vec<u64>) -> IlpSolution {
        IlpSolution {
            objective: self.objective(&counts),
            total_pods: self.pods(&counts),
            entries: self
                .items
                .iter()
                .zip(&counts)
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| (i.id.clone(), x))
                .collect(),
            alpha: self.alpha,
        }
    }
}

/// Optimal counts for one [`IlpProblem`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlpSolution {
    pub entries: BTreeMap<CandidateId, u64>,
    pub objective: f64,
    pub total_pods: u64,
    pub alpha: f64,
}

impl IlpSolution {
    pub fn to_allocation(&self, candidates: &[EnrichedCandidate]) -> Result<Allocation> {
        Allocation::from_counts(
            self.entries.iter().map(|(k, &v)| (k.clone(), v)),
            candidates,
        )
    }
}

// Solution ordering: lower objective, then fewer pods. Lexicographic
// preference on counts is handled by the callers since it needs the vectors.
fn cmp_cost_pods(a: (f64, u64), b: (f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

// Greater count vector (in id order) is preferred, so it sorts first.
fn cmp_lex(a: &[u64], b: &[u64]) -> Ordering {
    b.cmp(a)
}

struct Layer {
    forced: bool,
    capacity: u64,
    // choice[d] = count picked for this item on the best path into state d.
    choice: Vec<u32>,
    // Predecessor state for the capped state; uncapped ones are recoverable.
    capped_prev: usize,
}

fn prefix(layers: &[Layer], mut d: usize, cap: usize) -> Vec<u64> {
    let mut out = vec![0u64; layers.len()];
    for (i, layer) in layers.iter().enumerate().rev() {
        let k = layer.choice[d];
        out[i] = k as u64;
        if !layer.forced {
            d = if d == cap {
                layer.capped_prev
            } else {
                d - (k as u64 * layer.capacity) as usize
            };
        }
    }
    out
}

/// Solves the problem exactly. See the module docs for the tie-break rule.
pub fn solve(problem: &IlpProblem) -> Result<IlpSolution> {
    problem.check_feasible()?;
    let items = &problem.items;

    let forced_pods: u64 = items
        .iter()
        .filter(|i| i.coefficient < 0.0)
        .map(|i| i.capacity * i.bound)
        .sum();
    let residual = problem.demand.saturating_sub(forced_pods);
    if residual > MAX_RESIDUAL_DEMAND {
        return Err(Error::ProblemTooLarge {
            demand: residual,
            limit: MAX_RESIDUAL_DEMAND,
        });
    }
    let cap = residual as usize;

    let mut cost = vec![f64::INFINITY; cap + 1];
    let mut pods = vec![0u64; cap + 1];
    cost[0] = 0.0;
    let mut layers: Vec<Layer> = Vec::with_capacity(items.len());

    for item in items {
        if item.coefficient < 0.0 {
            let add = item.coefficient * item.bound as f64;
            for c in cost.iter_mut().filter(|c| c.is_finite()) {
                *c += add;
            }
            layers.push(Layer {
                forced: true,
                capacity: item.capacity,
                choice: vec![item.bound as u32; cap + 1],
                capped_prev: cap,
            });
            continue;
        }

        let kmax = item.bound.min(residual.div_ceil(item.capacity));
        let mut next_cost = vec![f64::INFINITY; cap + 1];
        let mut next_pods = vec![0u64; cap + 1];
        let mut choice = vec![0u32; cap + 1];
        let mut capped_prev = 0usize;
        // Filled lazily: the source state of the current best into each target.
        let mut source = vec![usize::MAX; cap + 1];

        for d in 0..=cap {
            if !cost[d].is_finite() {
                continue;
            }
            for k in 0..=kmax {
                let gained = k * item.capacity;
                let nd = (d as u64 + gained).min(residual) as usize;
                let nc = cost[d] + item.coefficient * k as f64;
                let np = pods[d] + gained;
                let better = if source[nd] == usize::MAX {
                    true
                } else {
                    match cmp_cost_pods((nc, np), (next_cost[nd], next_pods[nd])) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => {
                            let mut a = prefix(&layers, d, cap);
                            a.push(k);
                            let mut b = prefix(&layers, source[nd], cap);
                            b.push(choice[nd] as u64);
                            cmp_lex(&a, &b) == Ordering::Less
                        }
                    }
                };
                if better {
                    next_cost[nd] = nc;
                    next_pods[nd] = np;
                    choice[nd] = k as u32;
                    source[nd] = d;
                    if nd == cap {
                        capped_prev = d;
                    }
                }
            }
        }
        cost = next_cost;
        pods = next_pods;
        layers.push(Layer {
            forced: false,
            capacity: item.capacity,
            choice,
            capped_prev,
        });
    }

    debug_assert!(cost[cap].is_finite(), "feasibility was checked up front");
    let counts = prefix(&layers, cap, cap);
    Ok(problem.solution(counts))
}

/// Exhaustive enumeration of every count vector. Test oracle for [`solve`];
/// shares only the problem definition and tie-break rule with it.
pub fn brute_force_solve(problem: &IlpProblem) -> Result<IlpSolution> {
    let size: u128 = problem
        .items
        .iter()
        .map(|i| i.bound as u128 + 1)
        .try_fold(1u128, |acc, b| acc.checked_mul(b))
        .unwrap_or(u128::MAX);
    if size > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            size,
            limit: ORACLE_LIMIT,
        });
    }
    problem.check_feasible()?;

    let n = problem.items.len();
    let mut x = vec![0u64; n];
    let mut best: Option<(f64, u64, Vec<u64>)> = None;
    loop {
        let pods = problem.pods(&x);
        if pods >= problem.demand {
            let obj = problem.objective(&x);
            let replace = match &best {
                None => true,
                Some((bo, bp, bx)) => {
                    cmp_cost_pods((obj, pods), (*bo, *bp)).then_with(|| cmp_lex(&x, bx))
                        == Ordering::Less
                }
            };
            if replace {
                best = Some((obj, pods, x.clone()));
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                let (_, _, counts) = best.expect("feasible problem has a solution");
                return Ok(problem.solution(counts));
            }
            if x[i] < problem.items[i].bound {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}
