//! Golden-section search over the cost-performance weight α, maximizing
//! total efficiency, plus the efficiency metrics themselves.
//!
//! The efficiency landscape over α is step-shaped rather than strictly
//! unimodal, so the search reports the best allocation seen at *any*
//! evaluated point, not just the one left standing in the final interval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ilp::{self, IlpProblem, IlpSolution};
use crate::model::{Allocation, EfficiencyReport, EnrichedCandidate, PodSpec};
use crate::preprocess::{normalizers, Normalizers};

/// Contraction factor used by the search, `(√5 − 1) / 2` rounded to three places.
pub const PHI: f64 = 0.618;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GssConfig {
    pub epsilon: f64,
    pub phi: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Evaluate `alpha_lo` once before the search proper, so the result is
    /// never worse than the pure-cost allocation.
    pub probe_lower_bound: bool,
}

impl Default for GssConfig {
    fn default() -> Self {
        GssConfig {
            epsilon: 0.01,
            phi: PHI,
            alpha_lo: 0.0,
            alpha_hi: 1.0,
            probe_lower_bound: true,
        }
    }
}

impl GssConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        GssConfig {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.phi > 0.5 && self.phi < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "phi must lie in (0.5, 1), got {}",
                self.phi
            )));
        }
        if !(0.0 <= self.alpha_lo && self.alpha_lo < self.alpha_hi && self.alpha_hi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha interval [{}, {}] must be a nonempty subrange of [0, 1]",
                self.alpha_lo, self.alpha_hi
            )));
        }
        Ok(())
    }
}

/// Number of evaluations the search needs to shrink a unit interval below
/// `epsilon`: `⌈log(ε) / log(φ)⌉ + 1`.
pub fn iteration_bound(epsilon: f64) -> u32 {
    ((epsilon / 1.0).ln() / PHI.ln()).ceil() as u32 + 1
}

/// One point visited by a golden-section search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation<T> {
    pub alpha: f64,
    pub score: f64,
    /// True for the lower-bound probe that precedes the search proper.
    pub probe: bool,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenTrace<T> {
    pub evaluations: Vec<Evaluation<T>>,
    /// Search interval after initialization and after every contraction.
    pub intervals: Vec<(f64, f64)>,
    /// Index into `evaluations` of the highest score (earliest on ties).
    pub best: usize,
}

impl<T> GoldenTrace<T> {
    pub fn best(&self) -> &Evaluation<T> {
        &self.evaluations[self.best]
    }
}

/// Maximizes `f` over `[alpha_lo, alpha_hi]` by golden-section search.
///
/// Each iteration discards the side of the interval beyond the worse of the
/// two interior points (ties shrink from the right) and reuses the surviving
/// point, so only one new evaluation happens per contraction. The search
/// stops as soon as the interval is no wider than `epsilon`, without
/// evaluating the interior point of that final interval.
pub fn golden_section_max<T, E, F>(
    config: &GssConfig,
    mut f: F,
) -> std::result::Result<GoldenTrace<T>, E>
where
    F: FnMut(f64) -> std::result::Result<(f64, T), E>,
{
    let phi = config.phi;
    let mut evaluations: Vec<Evaluation<T>> = Vec::new();
    let mut best = 0usize;
    let mut eval = |alpha: f64, probe: bool, evaluations: &mut Vec<Evaluation<T>>| {
        let (score, value) = f(alpha)?;
        evaluations.push(Evaluation {
            alpha,
            score,
            probe,
            value,
        });
        let last = evaluations.len() - 1;
        if score > evaluations[best].score {
            best = last;
        }
        Ok::<f64, E>(score)
    };

    let (mut lo, mut hi) = (config.alpha_lo, config.alpha_hi);
    if config.probe_lower_bound {
        eval(lo, true, &mut evaluations)?;
    }
    let mut a1 = hi - phi * (hi - lo);
    let mut a2 = lo + phi * (hi - lo);
    let mut s1 = eval(a1, false, &mut evaluations)?;
    let mut s2 = eval(a2, false, &mut evaluations)?;
    let mut intervals = vec![(lo, hi)];

    while hi - lo > config.epsilon {
        if s1 >= s2 {
            hi = a2;
            a2 = a1;
            s2 = s1;
            a1 = hi - phi * (hi - lo);
            intervals.push((lo, hi));
            if hi - lo <= config.epsilon {
                break;
            }
            s1 = eval(a1, false, &mut evaluations)?;
        } else {
            lo = a1;
            a1 = a2;
            s1 = s2;
            a2 = lo + phi * (hi - lo);
            intervals.push((lo, hi));
            if hi - lo <= config.epsilon {
                break;
            }
            s2 = eval(a2, false, &mut evaluations)?;
        }
    }

    Ok(GoldenTrace {
        evaluations,
        intervals,
        best,
    })
}

/// Efficiency of an allocation against the candidates it was drawn from.
///
/// `E_PerfCost = Σ scaled_benchmark_i · x_i / spot_price_i`,
/// `E_OverPods = req_pod / Σ Pod_i · x_i`, and `E_Total` is their product.
pub fn efficiency(
    allocation: &Allocation,
    enriched: &[EnrichedCandidate],
    spec: &PodSpec,
) -> Result<EfficiencyReport> {
    if allocation.is_empty() {
        return Err(Error::EmptyAllocation);
    }
    let mut e_perf_cost = 0.0;
    let mut pods = 0u64;
    for (id, &x) in allocation.entries() {
        let c = enriched
            .iter()
            .find(|c| c.id() == id)
            .ok_or_else(|| Error::UnknownCandidate(id.clone()))?;
        e_perf_cost += c.scaled_benchmark * x as f64 / c.spot_price();
        pods += c.pod_capacity * x;
    }
    if pods < spec.req_pod {
        return Err(Error::UncoveredAllocation {
            allocated: pods,
            requested: spec.req_pod,
        });
    }
    let e_over_pods = spec.req_pod as f64 / pods as f64;
    Ok(EfficiencyReport {
        e_perf_cost,
        e_over_pods,
        e_total: e_perf_cost * e_over_pods,
        alpha: None,
    })
}

/// Solves the selection problem at one fixed α and scores the result.
pub fn evaluate_alpha_with<S>(
    enriched: &[EnrichedCandidate],
    norm: &Normalizers,
    spec: &PodSpec,
    alpha: f64,
    solver: S,
) -> Result<(Allocation, EfficiencyReport)>
where
    S: Fn(&IlpProblem) -> Result<IlpSolution>,
{
    let problem = IlpProblem::from_candidates(enriched, norm, alpha, spec.req_pod)?;
    let allocation = solver(&problem)?.to_allocation(enriched)?;
    let report = efficiency(&allocation, enriched, spec)?;
    Ok((
        allocation,
        EfficiencyReport {
            alpha: Some(alpha),
            ..report
        },
    ))
}

pub fn evaluate_alpha(
    enriched: &[EnrichedCandidate],
    spec: &PodSpec,
    alpha: f64,
) -> Result<(Allocation, EfficiencyReport)> {
    let norm = normalizers(enriched)?;
    evaluate_alpha_with(enriched, &norm, spec, alpha, ilp::solve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEvaluation {
    pub alpha: f64,
    pub e_total: f64,
    pub probe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GssResult {
    pub best_allocation: Allocation,
    pub best_report: EfficiencyReport,
    pub evaluations: Vec<AlphaEvaluation>,
    pub iteration_count: usize,
}

impl GssResult {
    pub fn best_alpha(&self) -> f64 {
        self.best_report.alpha.unwrap_or(0.0)
    }
}

/// Runs the full search with the exact ILP solver.
pub fn search(
    enriched: &[EnrichedCandidate],
    spec: &PodSpec,
    config: &GssConfig,
) -> Result<GssResult> {
    search_with(enriched, spec, config, ilp::solve)
}

/// [`search`] with a caller-supplied ILP solver.
pub fn search_with<S>(
    enriched: &[EnrichedCandidate],
    spec: &PodSpec,
    config: &GssConfig,
    solver: S,
) -> Result<GssResult>
where
    S: Fn(&IlpProblem) -> Result<IlpSolution>,
{
    config.validate()?;
    let norm = normalizers(enriched)?;
    let trace = golden_section_max(config, |alpha| {
        let (allocation, report) = evaluate_alpha_with(enriched, &norm, spec, alpha, &solver)?;
        Ok::<_, Error>((report.e_total, (allocation, report)))
    })?;
    let evaluations: Vec<AlphaEvaluation> = trace
        .evaluations
        .iter()
        .map(|e| AlphaEvaluation {
            alpha: e.alpha,
            e_total: e.score,
            probe: e.probe,
        })
        .collect();
    let (best_allocation, best_report) = trace.best().value.clone();
    Ok(GssResult {
        best_allocation,
        best_report,
        iteration_count: evaluations.len(),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceCandidate, Workload};

    #[test]
    fn iteration_bound_examples() {
        assert_eq!(iteration_bound(0.1), 6);
        assert_eq!(iteration_bound(0.01), 11);
        assert_eq!(iteration_bound(0.001), 16);
        assert_eq!(iteration_bound(0.618), 2);
    }

    fn quadratic(peak: f64) -> impl FnMut(f64) -> std::result::Result<(f64, ()), ()> {
        move |x| Ok((-(x - peak) * (x - peak), ()))
    }

    #[test]
    fn finds_unimodal_peak() {
        let cfg = GssConfig {
            epsilon: 1e-6,
            ..GssConfig::default()
        };
        let trace = golden_section_max(&cfg, quadratic(0.3)).unwrap();
        assert!((trace.best().alpha - 0.3).abs() < 1e-5);
    }

    #[test]
    fn evaluation_count_matches_bound() {
        for (eps, expected) in [(0.1, 7), (0.01, 12), (0.001, 17)] {
            for peak in [0.0, 0.2, 0.5, 0.9, 1.0] {
                let trace =
                    golden_section_max(&GssConfig::with_epsilon(eps), quadratic(peak)).unwrap();
                assert_eq!(trace.evaluations.len(), expected, "eps {eps} peak {peak}");
                assert_eq!(trace.evaluations.len() as u32, iteration_bound(eps) + 1);
                assert!(trace.evaluations[0].probe);
                assert!(trace.evaluations[1..].iter().all(|e| !e.probe));
            }
        }
    }

    #[test]
    fn interval_contracts_by_phi() {
        let trace = golden_section_max(&GssConfig::with_epsilon(1e-3), quadratic(0.77)).unwrap();
        for pair in trace.intervals.windows(2) {
            let ratio = (pair[1].1 - pair[1].0) / (pair[0].1 - pair[0].0);
            // the reused interior point sits at 1 − 0.618 rather than 0.618², so
            // contractions drift slightly away from PHI as the interval shrinks
            assert!((ratio - PHI).abs() <= 5e-3, "ratio {ratio}");
        }
        // one evaluation per interval after the initial pair (plus probe)
        assert_eq!(trace.evaluations.len(), trace.intervals.len() + 1);
    }

    #[test]
    fn ties_shrink_from_the_right() {
        let trace =
            golden_section_max(&GssConfig::with_epsilon(0.1), |_| Ok::<_, ()>((1.0, ()))).unwrap();
        let (lo, hi) = *trace.intervals.last().unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi < 0.1);
        // earliest evaluation wins a tie
        assert_eq!(trace.best, 0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(GssConfig::with_epsilon(0.0).validate().is_err());
        assert!(GssConfig::with_epsilon(1.0).validate().is_err());
        let cfg = GssConfig {
            alpha_lo: 0.6,
            alpha_hi: 0.4,
            ..GssConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn one(bench: f64, sp: f64, pods: u64, t3: u64) -> EnrichedCandidate {
        EnrichedCandidate::new(
            InstanceCandidate::new("m.large", "r", "a", 2.0, 8.0, sp, bench, t3),
            pods,
            bench,
        )
    }

    #[test]
    fn efficiency_single_term() {
        let c = one(100.0, 0.5, 5, 4);
        let spec = PodSpec::new(10, 1.0, 1.0, Workload::General).unwrap();
        let alloc =
            Allocation::from_counts([(c.id().clone(), 2)], std::slice::from_ref(&c)).unwrap();
        let r = efficiency(&alloc, std::slice::from_ref(&c), &spec).unwrap();
        assert_eq!(r.e_perf_cost, 400.0);
        assert_eq!(r.e_over_pods, 1.0);
        assert_eq!(r.e_total, 400.0);

        let double =
            Allocation::from_counts([(c.id().clone(), 4)], std::slice::from_ref(&c)).unwrap();
        let r2 = efficiency(&double, std::slice::from_ref(&c), &spec).unwrap();
        assert_eq!(r2.e_over_pods, 0.5);
        assert_eq!(r2.e_total, 400.0);
    }

    #[test]
    fn over_allocation_halves_total() {
        let small = one(100.0, 0.5, 5, 4);
        let spec = PodSpec::new(10, 1.0, 1.0, Workload::General).unwrap();
        let base = efficiency(
            &Allocation::from_counts([(small.id().clone(), 2)], std::slice::from_ref(&small))
                .unwrap(),
            std::slice::from_ref(&small),
            &spec,
        )
        .unwrap();
        let big = EnrichedCandidate::new(small.base.clone(), 10, 100.0);
        let over = efficiency(
            &Allocation::from_counts([(big.id().clone(), 2)], std::slice::from_ref(&big)).unwrap(),
            std::slice::from_ref(&big),
            &spec,
        )
        .unwrap();
        assert_eq!(over.e_over_pods, 0.5);
        assert_eq!(over.e_total, base.e_total / 2.0);
    }

    #[test]
    fn efficiency_errors() {
        let c = one(100.0, 0.5, 5, 4);
        let spec = PodSpec::new(10, 1.0, 1.0, Workload::General).unwrap();
        let empty = Allocation::from_counts(Vec::new(), std::slice::from_ref(&c)).unwrap();
        assert!(matches!(
            efficiency(&empty, std::slice::from_ref(&c), &spec),
            Err(Error::EmptyAllocation)
        ));
        let short =
            Allocation::from_counts([(c.id().clone(), 1)], std::slice::from_ref(&c)).unwrap();
        assert!(matches!(
            efficiency(&short, std::slice::from_ref(&c), &spec),
            Err(Error::UncoveredAllocation { .. })
        ));
    }

    #[test]
    fn single_candidate_search_is_constant() {
        // t3 = 3 is exactly what 10 pods need on 4-pod nodes: one feasible point.
        let c = one(100.0, 0.5, 4, 3);
        let spec = PodSpec::new(10, 1.0, 1.0, Workload::General).unwrap();
        for eps in [0.1, 0.01, 0.001] {
            let res = search(
                std::slice::from_ref(&c),
                &spec,
                &GssConfig::with_epsilon(eps),
            )
            .unwrap();
            assert_eq!(res.best_allocation.count(c.id()), 3);
            let first = res.evaluations[0].e_total;
            assert!(res.evaluations.iter().all(|e| e.e_total == first));
        }
    }

    #[test]
    fn spare_headroom_saturates_above_half_weight() {
        // With one candidate the coefficient is 1 − 2α.
        let c = one(100.0, 0.5, 4, 10);
        let spec = PodSpec::new(10, 1.0, 1.0, Workload::General).unwrap();
        let (low, _) = evaluate_alpha(std::slice::from_ref(&c), &spec, 0.4).unwrap();
        let (high, _) = evaluate_alpha(std::slice::from_ref(&c), &spec, 0.6).unwrap();
        assert_eq!(low.count(c.id()), 3);
        assert_eq!(high.count(c.id()), 10);
    }
}
