//! Batch drivers behind the `compare` and `sweep-alpha` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::gss::{self, GssConfig};
use crate::model::{CandidateId, InstanceCandidate, PodSpec};
use crate::preprocess::{enrich, enrich_unbounded, normalizers};
use crate::sim::{Strategy, SCHEMA_VERSION};

/// One strategy's outcome on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub strategy: &'static str,
    pub e_total: Option<f64>,
    /// `e_total` divided by the optimized strategy's `e_total` for the same scenario.
    pub normalized: Option<f64>,
    pub hourly_cost: Option<f64>,
    pub allocated_pods: Option<u64>,
    pub nodes: Option<u64>,
    pub max_per_type: Option<u64>,
    /// Offerings asked for more instances than their `t3`.
    pub t3_exceeded: Vec<CandidateId>,
    pub allocation: Option<BTreeMap<CandidateId, u64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    pub spec: PodSpec,
    pub outcomes: Vec<StrategyOutcome>,
}

impl ScenarioOutcome {
    pub fn get(&self, strategy: &str) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: &'static str,
    pub scenarios_solved: usize,
    pub mean_normalized: Option<f64>,
    /// Mean of `(optimized − strategy) / strategy` over scenarios both solved.
    pub mean_relative_improvement: Option<f64>,
    pub scenarios_exceeding_t3: usize,
    /// Histogram of per-scenario maximum node count per offering.
    pub max_per_type_distribution: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioOutcome>,
    pub summary: Vec<StrategySummary>,
}

fn run_strategy(
    strategy: &Strategy,
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
) -> StrategyOutcome {
    let mut out = StrategyOutcome {
        strategy: strategy.name(),
        e_total: None,
        normalized: None,
        hourly_cost: None,
        allocated_pods: None,
        nodes: None,
        max_per_type: None,
        t3_exceeded: Vec::new(),
        allocation: None,
        error: None,
    };
    match strategy.allocate(candidates, spec) {
        Ok((alloc, report)) => {
            let scoring = enrich_unbounded(candidates, spec);
            out.t3_exceeded = alloc.t3_violations(&scoring).cloned().collect();
            out.e_total = Some(report.e_total);
            out.hourly_cost = Some(alloc.hourly_cost());
            out.allocated_pods = Some(alloc.total_pods_allocated());
            out.nodes = Some(alloc.node_count());
            out.max_per_type = Some(alloc.max_per_type());
            out.allocation = Some(alloc.entries().clone());
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Runs every strategy on every scenario. Scenarios fan out across threads;
/// output order is fixed by the input order.
pub fn compare_strategies(
    candidates: &[InstanceCandidate],
    scenarios: &[PodSpec],
    gss: GssConfig,
    baseline: BaselineConfig,
) -> Result<CompareReport> {
    gss.validate()?;
    let strategies = Strategy::all(gss, baseline);
    let rows: Vec<ScenarioOutcome> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut outcomes: Vec<StrategyOutcome> = strategies
                .iter()
                .map(|s| run_strategy(s, candidates, spec))
                .collect();
            let reference = outcomes[0].e_total;
            for o in &mut outcomes {
                o.normalized = match (o.e_total, reference) {
                    (Some(e), Some(r)) if r > 0.0 => Some(e / r),
                    _ => None,
                };
            }
            ScenarioOutcome {
                scenario: i,
                spec: *spec,
                outcomes,
            }
        })
        .collect();

    let summary = strategies
        .iter()
        .map(|s| summarize(s.name(), &rows))
        .collect();
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        scenarios: rows,
        summary,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn summarize(name: &'static str, rows: &[ScenarioOutcome]) -> StrategySummary {
    let mut normalized = Vec::new();
    let mut improvement = Vec::new();
    let mut exceeding = 0;
    let mut solved = 0;
    let mut distribution = BTreeMap::new();
    for row in rows {
        let Some(o) = row.get(name) else { continue };
        if let Some(e) = o.e_total {
            solved += 1;
            if let Some(n) = o.normalized {
                normalized.push(n);
            }
            if let Some(opt) = row.outcomes[0].e_total {
                if e > 0.0 {
                    improvement.push((opt - e) / e);
                }
            }
        }
        if !o.t3_exceeded.is_empty() {
            exceeding += 1;
        }
        if let Some(m) = o.max_per_type {
            *distribution.entry(m).or_insert(0) += 1;
        }
    }
    StrategySummary {
        strategy: name,
        scenarios_solved: solved,
        mean_normalized: mean(&normalized),
        mean_relative_improvement: mean(&improvement),
        scenarios_exceeding_t3: exceeding,
        max_per_type_distribution: distribution,
    }
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario,req_pod,req_cpu,req_mem,strategy,e_total,normalized,hourly_cost,allocated_pods,nodes,max_per_type,t3_exceeded,error\n",
        );
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let int = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.scenarios {
            for o in &row.outcomes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    row.scenario,
                    row.spec.req_pod,
                    row.spec.req_cpu,
                    row.spec.req_mem,
                    o.strategy,
                    num(o.e_total),
                    num(o.normalized),
                    num(o.hourly_cost),
                    int(o.allocated_pods),
                    int(o.nodes),
                    int(o.max_per_type),
                    o.t3_exceeded.len(),
                    o.error
                        .as_deref()
                        .map(|e| format!("\"{}\"", e.replace('"', "\"\"")))
                        .unwrap_or_default(),
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub e_total: f64,
    pub hourly_cost: f64,
    pub pods: u64,
    /// Grid point closest to the α picked by the golden-section search.
    pub gss_choice: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub spec: PodSpec,
    pub step: f64,
    pub gss_alpha: f64,
    pub gss_e_total: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,e_total,cost,pods,gss_choice\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.alpha, r.e_total, r.hourly_cost, r.pods, r.gss_choice
            );
        }
        out
    }
}

/// Evaluates the ILP on the grid `0, step, 2·step, …, 1` and marks the
/// golden-section choice.
pub fn sweep_alpha(
    candidates: &[InstanceCandidate],
    spec: &PodSpec,
    step: f64,
    gss_config: &GssConfig,
) -> Result<SweepReport> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "step must lie in (0, 1], got {step}"
        )));
    }
    let enriched = enrich(candidates, spec)?;
    let norm = normalizers(&enriched)?;
    let n = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    let mut rows = grid
        .par_iter()
        .map(|&alpha| {
            let (alloc, report) =
                gss::evaluate_alpha_with(&enriched, &norm, spec, alpha, crate::ilp::solve)?;
            Ok(SweepRow {
                alpha,
                e_total: report.e_total,
                hourly_cost: alloc.hourly_cost(),
                pods: alloc.total_pods_allocated(),
                gss_choice: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = gss::search(&enriched, spec, gss_config)?;
    let gss_alpha = best.best_alpha();
    if let Some(nearest) = rows.iter_mut().min_by(|a, b| {
        (a.alpha - gss_alpha)
            .abs()
            .total_cmp(&(b.alpha - gss_alpha).abs())
    }) {
        nearest.gss_choice = true;
    }
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        step,
        gss_alpha,
        gss_e_total: best.best_report.e_total,
        rows,
    })
}
