//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! Run with `cargo test -p spotpool --test acceptance`.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spotpool::baselines::{self, BaselineConfig};
use spotpool::gss::{self, efficiency, iteration_bound, GssConfig};
use spotpool::ilp::{brute_force_solve, solve, IlpProblem};
use spotpool::ingest::{load_candidates, MarketSnapshot};
use spotpool::preprocess::{enrich, enrich_unbounded, normalizers, scale_benchmark};
use spotpool::resilience::InterruptEvent;
use spotpool::sim::{fulfill, replay, scenario_grid, Strategy};
use spotpool::{Allocation, EnrichedCandidate, Error, InstanceCandidate, PodSpec, Workload};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn fixture30() -> Vec<InstanceCandidate> {
    load_candidates(fixture("candidates30.csv")).expect("fixture loads")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_candidates(rng: &mut ChaCha8Rng, n: usize, max_t3: u64) -> Vec<InstanceCandidate> {
    (0..n)
        .map(|i| {
            let cpu = [2.0, 4.0, 8.0, 16.0][rng.gen_range(0..4)];
            let mem = cpu * [2.0, 4.0, 8.0][rng.gen_range(0..3)];
            InstanceCandidate::new(
                &format!("t{i}.x"),
                "r",
                "a",
                cpu,
                mem,
                rng.gen_range(0.01..0.5),
                rng.gen_range(10_000.0..40_000.0),
                rng.gen_range(1..=max_t3),
            )
        })
        .collect()
}

fn ilp_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11e9);
    let start = Instant::now();
    let mut checked = 0;
    let mut infeasible = 0;
    while checked < 500 {
        let n = rng.gen_range(1..=6);
        let cands = random_candidates(&mut rng, n, 4);
        let spec = PodSpec::new(rng.gen_range(1..=30), 1.0, 2.0, Workload::General).unwrap();
        let enriched = enrich(&cands, &spec).map_err(|e| e.to_string())?;
        let norm = normalizers(&enriched).map_err(|e| e.to_string())?;
        let alpha = rng.gen_range(0.0..=1.0);
        let problem = IlpProblem::from_candidates(&enriched, &norm, alpha, spec.req_pod)
            .map_err(|e| e.to_string())?;
        match (solve(&problem), brute_force_solve(&problem)) {
            (Ok(dp), Ok(bf)) => {
                ensure(dp.objective == bf.objective, || {
                    format!(
                        "objective {} != oracle {} on {problem:?}",
                        dp.objective, bf.objective
                    )
                })?;
                ensure(dp.entries == bf.entries, || {
                    format!("allocation {:?} != oracle {:?}", dp.entries, bf.entries)
                })?;
                checked += 1;
            }
            (Err(Error::InsufficientCapacity { .. }), Err(Error::InsufficientCapacity { .. })) => {
                infeasible += 1
            }
            (a, b) => return Err(format!("solver/oracle disagree: {a:?} vs {b:?}")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("took {elapsed:.1}s"))?;
    Ok(format!(
        "{checked} feasible problems identical to the oracle ({infeasible} infeasible agreed), {elapsed:.2}s"
    ))
}

fn gss_iteration_bound() -> Outcome {
    let cands = fixture30();
    let spec = PodSpec::new(50, 1.0, 2.0, Workload::General).unwrap();
    let enriched = enrich(&cands, &spec).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for (eps, expected) in [(0.1, 7), (0.01, 12), (0.001, 17)] {
        let res = gss::search(&enriched, &spec, &GssConfig::with_epsilon(eps))
            .map_err(|e| e.to_string())?;
        ensure(res.iteration_count == expected, || {
            format!(
                "eps {eps}: {} evaluations, expected {expected}",
                res.iteration_count
            )
        })?;
        ensure(
            res.iteration_count as u32 == iteration_bound(eps) + 1,
            || format!("eps {eps}: bound {} + 1 mismatch", iteration_bound(eps)),
        )?;
        seen.push(res.iteration_count);
    }
    Ok(format!("evaluations {seen:?}"))
}

struct GridRun {
    spec: PodSpec,
    enriched: Vec<EnrichedCandidate>,
    gss: f64,
}

fn grid_runs(cands: &[InstanceCandidate]) -> Result<Vec<GridRun>, String> {
    scenario_grid()
        .into_iter()
        .map(|spec| {
            let enriched = enrich(cands, &spec).map_err(|e| e.to_string())?;
            let res = gss::search(&enriched, &spec, &GssConfig::default())
                .map_err(|e| format!("{spec}: {e}"))?;
            Ok(GridRun {
                spec,
                enriched,
                gss: res.best_report.e_total,
            })
        })
        .collect()
}

fn fixed_alpha_dominance() -> Outcome {
    let runs = grid_runs(&fixture30())?;
    let mut strict = 0;
    for run in &runs {
        let mut any_strict = false;
        for alpha in [0.0, 0.5, 1.0] {
            let (_, fixed) =
                gss::evaluate_alpha(&run.enriched, &run.spec, alpha).map_err(|e| e.to_string())?;
            ensure(run.gss >= fixed.e_total, || {
                format!(
                    "{}: GSS {} < fixed alpha {alpha} {}",
                    run.spec, run.gss, fixed.e_total
                )
            })?;
            any_strict |= run.gss > fixed.e_total;
        }
        strict += any_strict as usize;
    }
    ensure(strict >= 1, || {
        "GSS never strictly better than a fixed alpha".into()
    })?;
    Ok(format!(
        "{} scenarios, strictly better in {strict}",
        runs.len()
    ))
}

fn greedy_dominance() -> Outcome {
    let runs = grid_runs(&fixture30())?;
    let mut improvements = Vec::new();
    let mut losses = Vec::new();
    for run in &runs {
        let alloc = baselines::greedy(&run.enriched, &run.spec).map_err(|e| e.to_string())?;
        let g = efficiency(&alloc, &run.enriched, &run.spec)
            .map_err(|e| e.to_string())?
            .e_total;
        if run.gss < g {
            losses.push(format!("{} ({:.3}x)", run.spec, g / run.gss));
        }
        improvements.push((run.gss - g) / g);
    }
    let mean = improvements.iter().sum::<f64>() / improvements.len() as f64;
    ensure(losses.is_empty() && mean > 0.0, || {
        format!(
            "greedy ahead in {}/{} scenarios, mean relative improvement {mean:.4}; e.g. {}",
            losses.len(),
            runs.len(),
            losses
                .iter()
                .take(3)
                .cloned()
                .collect::<Vec<_>>()
                .join(", ")
        )
    })?;
    Ok(format!("mean relative improvement {mean:.4}"))
}

fn t3_safety() -> Outcome {
    let cands = fixture30();
    let cfg = BaselineConfig::default();
    let mut spotverse_exceeds = 0;
    for spec in scenario_grid() {
        let scoring = enrich_unbounded(&cands, &spec);
        let (opt, _) = Strategy::Optimized(GssConfig::default())
            .allocate(&cands, &spec)
            .map_err(|e| e.to_string())?;
        let over: Vec<_> = opt.t3_violations(&scoring).collect();
        ensure(over.is_empty(), || {
            format!("{spec}: optimized exceeds t3 on {over:?}")
        })?;
        if let Ok(sv) = baselines::spotverse_node(&cands, &spec, &cfg) {
            spotverse_exceeds += sv.t3_violations(&scoring).next().is_some() as usize;
        }
    }
    ensure(spotverse_exceeds >= 1, || {
        "SpotVerse-Node never exceeded t3".into()
    })?;
    Ok(format!(
        "optimized within t3 in all 20 scenarios; SpotVerse-Node exceeds t3 in {spotverse_exceeds}"
    ))
}

fn workload_scaling() -> Outcome {
    let c = InstanceCandidate {
        ondemand_price: 0.23,
        base_ondemand_price: Some(0.17),
        network_optimized: true,
        ..InstanceCandidate::new("c5n.large", "r", "a", 2.0, 5.25, 0.04, 10_000.0, 5)
    };
    let expected = 10_000.0 * 0.23 / 0.17;
    let scaled = scale_benchmark(&c, Workload::Network);
    let rel = ((scaled - expected) / expected).abs();
    ensure(rel <= 1e-12, || {
        format!("scaled {scaled}, expected {expected}")
    })?;
    let general = scale_benchmark(&c, Workload::General);
    ensure(general == 10_000.0, || {
        format!("general preference changed it to {general}")
    })?;
    Ok(format!(
        "scaled {scaled:.6} (rel err {rel:.1e}), general unchanged"
    ))
}

fn interruption_recovery() -> Outcome {
    let cands = load_candidates(fixture("candidates8.csv")).map_err(|e| e.to_string())?;
    let spec = PodSpec::new(20, 4.0, 8.0, Workload::General).unwrap();
    let strategy = Strategy::Optimized(GssConfig::default());
    let (first, _) = strategy
        .allocate(&cands, &spec)
        .map_err(|e| e.to_string())?;
    let top = first
        .entries()
        .iter()
        .max_by_key(|(id, &x)| (x, std::cmp::Reverse((*id).clone())))
        .map(|(id, _)| id.clone())
        .ok_or("empty first allocation")?;

    let trace: Vec<MarketSnapshot> = [0, 120, 300]
        .into_iter()
        .map(|timestamp| MarketSnapshot {
            timestamp,
            candidates: cands.clone(),
        })
        .collect();
    let events = [InterruptEvent::new(60, top.clone())];
    let report = replay(&trace, &events, &spec, &[strategy], 180).map_err(|e| e.to_string())?;
    let recs: Vec<_> = report.records_for("optimized").collect();
    ensure(recs.len() == 3, || format!("{} records", recs.len()))?;
    let alloc = |i: usize| {
        recs[i]
            .allocation
            .as_ref()
            .ok_or(format!("snapshot {i} failed"))
    };

    ensure(alloc(0)?.count(&top) > 0, || {
        "top candidate missing at snapshot 1".into()
    })?;
    ensure(alloc(1)?.count(&top) == 0, || {
        format!("{top} still allocated at snapshot 2")
    })?;
    ensure(recs[1].covered, || {
        "snapshot 2 does not cover the request".into()
    })?;
    let latency = report.recoveries[0].latency_snapshots;
    ensure(latency == Some(1), || {
        format!("recovery latency {latency:?}")
    })?;
    ensure(
        recs[2].excluded_offerings == 0 && alloc(2)?.count(&top) > 0,
        || format!("{top} not eligible again at snapshot 3"),
    )?;
    Ok(format!(
        "{top} excluded at snapshot 2, latency 1, back at snapshot 3"
    ))
}

fn fulfillment_monotonicity() -> Outcome {
    let base = InstanceCandidate::new("m5.large", "r", "a", 2.0, 8.0, 0.04, 23_650.0, 50);
    let e = EnrichedCandidate::new(base.clone(), 1, base.benchmark);
    let request =
        Allocation::from_counts([(base.id.clone(), 50)], &[e]).map_err(|e| e.to_string())?;
    let mut previous = 0;
    let mut got = Vec::new();
    for (i, t3) in [5u64, 10, 20, 35, 50].into_iter().enumerate() {
        let snap = MarketSnapshot {
            timestamp: i as i64 * 60,
            candidates: vec![InstanceCandidate { t3, ..base.clone() }],
        };
        let f = fulfill(&request, &snap).map_err(|e| e.to_string())?.total;
        ensure(f == t3.min(50), || format!("t3 {t3}: fulfilled {f}"))?;
        ensure(f >= previous, || format!("t3 {t3}: {f} < {previous}"))?;
        previous = f;
        got.push(f);
    }
    Ok(format!("fulfilled {got:?}"))
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e7);
    let mut covered = 0;
    let mut uncovered = 0;
    let mut worst: f64 = 0.0;
    while covered < 1000 {
        let n = rng.gen_range(1..=8);
        let cands = random_candidates(&mut rng, n, 20);
        let spec = PodSpec::new(
            rng.gen_range(1..=200),
            [0.5, 1.0, 2.0][rng.gen_range(0..3)],
            [1.0, 2.0, 4.0][rng.gen_range(0..3)],
            Workload::General,
        )
        .unwrap();
        let enriched = enrich_unbounded(&cands, &spec);
        if enriched.is_empty() {
            continue;
        }
        let counts: Vec<_> = enriched
            .iter()
            .map(|c| (c.id().clone(), rng.gen_range(0..=c.t3())))
            .collect();
        let alloc = Allocation::from_counts(counts, &enriched).map_err(|e| e.to_string())?;
        match efficiency(&alloc, &enriched, &spec) {
            Ok(r) => {
                let rel = ((r.e_total - r.e_perf_cost * r.e_over_pods) / r.e_total).abs();
                worst = worst.max(rel);
                ensure(rel <= 1e-12, || format!("identity off by {rel:e}"))?;
                ensure(r.e_over_pods <= 1.0, || {
                    format!("e_over_pods {}", r.e_over_pods)
                })?;
                covered += 1;
            }
            Err(Error::UncoveredAllocation { .. } | Error::EmptyAllocation) => uncovered += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!(
        "{covered} covered allocations, worst rel err {worst:.1e} ({uncovered} uncovered rejected)"
    ))
}

fn compare_determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_spotpool"))
            .args(["compare", "--candidates"])
            .arg(fixture("candidates30.csv"))
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success() && b.status.success(), || {
        format!("compare failed: {}", String::from_utf8_lossy(&a.stderr))
    })?;
    ensure(a.stdout == b.stdout, || "outputs differ".into())?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("ILP exactness vs brute force", ilp_exactness),
        ("GSS evaluation count", gss_iteration_bound),
        ("fixed-alpha dominance", fixed_alpha_dominance),
        ("greedy dominance", greedy_dominance),
        ("t3 safety vs SpotVerse-Node", t3_safety),
        ("workload benchmark scaling", workload_scaling),
        ("interruption recovery", interruption_recovery),
        ("fulfillment monotonicity", fulfillment_monotonicity),
        ("metric identities", metric_identities),
        ("compare determinism", compare_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
