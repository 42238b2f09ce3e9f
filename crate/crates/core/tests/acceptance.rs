//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stdout, so the lines show up even when output is captured.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use levygame::game::evaluate_capital;
use levygame::harness::{self, build_lemma, certify, ExperimentConfig, LemmaJob};
use levygame::heat::{hedge_strategy, run_hedge, CylinderFunctional, HedgePlan, ValueFunction, DEFAULT_DIM_CAP, DEFAULT_NODES};
use levygame::strategies::{
    epsilon_crossing_strategy, modulus_certificate_strategy, qv_bound_strategy, qv_budget_strategy,
    super_modulus_strategy,
};
use levygame::wiener::{discrete_monitoring_allowance, mc_expectation, prob_sup_abs_below, proportion, BrownianSampler, GaussianStream};
use levygame::{convert_modified_to_levy, ElementaryStrategy, GameKind, SampledPath, TimeGrid};
use rayon::prelude::*;

const SEED: u64 = 20_240_917;

fn report(id: u32, name: &str, pass: bool, detail: String, started: Instant) -> bool {
    let line = format!(
        "{} criterion {id} ({name}): {detail} [{:.1}s]\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

fn grid() -> TimeGrid {
    TimeGrid::new(1.0, 256).unwrap()
}

fn pool() -> rayon::ThreadPool {
    ExperimentConfig::default().pool().unwrap()
}

#[test]
fn c1_game_identity() {
    let t0 = Instant::now();
    let g = grid();
    let levels = levygame::strategies::grid_levels(&g, 1.0).unwrap();
    let mut strategies: Vec<Arc<dyn ElementaryStrategy>> = vec![
        Arc::new(qv_budget_strategy(1.0, 4, 0.5).unwrap().0),
        Arc::new(epsilon_crossing_strategy(1.0, 4, 0.25, 8).unwrap().0),
    ];
    for compound in [
        modulus_certificate_strategy(0.1, 1.0, levels).unwrap().compound,
        qv_bound_strategy(0.1, 1.0, levels).unwrap().compound,
        super_modulus_strategy(0.1, &g).unwrap().compound,
    ] {
        strategies.extend(
            compound
                .components()
                .iter()
                .filter(|c| c.strategy.game() == GameKind::Modified)
                .map(|c| c.strategy.clone()),
        );
    }
    let sampler = BrownianSampler::new(SEED, g);
    let worst = pool().install(|| {
        (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let p = sampler.sample_path(i);
                let mut worst = 0.0f64;
                for s in &strategies {
                    let a = evaluate_capital(s.as_ref(), &p).unwrap();
                    let levy = convert_modified_to_levy(s.clone()).unwrap();
                    let b = evaluate_capital(&levy, &p).unwrap();
                    let unit = s.initial_capital().abs().max(f64::MIN_POSITIVE);
                    for (x, y) in a.values.iter().zip(&b.values) {
                        worst = worst.max((x - y).abs() / unit);
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    });
    let pass = worst <= 1e-9;
    let detail = format!("{} strategies x 1000 paths, max gap per unit capital {worst:.2e}", strategies.len());
    assert!(report(1, "game identity", pass, detail, t0));
}

#[test]
fn c2_certificate_soundness() {
    let t0 = Instant::now();
    let g = grid();
    let sampler = BrownianSampler::new(SEED, g);
    let pool = pool();
    let mut pass = true;
    let mut parts = Vec::new();
    for (lemma, alpha) in [("modulus", 0.1), ("qv-bound", 0.1), ("boundedness", 0.04), ("boundedness", 0.25)] {
        let c = build_lemma(&LemmaJob { lemma: lemma.into(), alpha }, &g).unwrap();
        let e = certify(&c, &sampler, 10_000, 12, 1e-9, &pool).unwrap();
        let ok = e.payoff_violations == 0
            && e.positivity_faults == 0
            && e.adversarial_violations == 0
            && e.adversarial_paths >= 10;
        pass &= ok;
        parts.push(format!(
            "{lemma}({alpha}): {} violations, {} adversarial paths, {} adversarial violations",
            e.payoff_violations + e.positivity_faults,
            e.adversarial_paths,
            e.adversarial_violations
        ));
    }
    assert!(report(2, "certificate soundness", pass, parts.join("; "), t0));
}

#[test]
fn c3_frequency_consistency() {
    let t0 = Instant::now();
    let g = grid();
    let sampler = BrownianSampler::new(SEED ^ 3, g);
    let pool = pool();
    let mut pass = true;
    let mut parts = Vec::new();
    for (lemma, alpha) in [("boundedness", 0.04), ("boundedness", 0.25), ("modulus", 0.1)] {
        let c = build_lemma(&LemmaJob { lemma: lemma.into(), alpha }, &g).unwrap();
        let e = certify(&c, &sampler, 100_000, 0, 1e-9, &pool).unwrap();
        pass &= e.frequency_consistent;
        parts.push(format!(
            "{lemma}({alpha}): freq {:.5} ± {:.5} vs allowed {:.4}",
            e.empirical_failure_freq,
            e.failure_std_err,
            1.0 - e.lower_prob_bound
        ));
    }
    assert!(report(3, "frequency consistency", pass, parts.join("; "), t0));
}

#[test]
fn c4_heat_residual() {
    let t0 = Instant::now();
    let families = [
        CylinderFunctional::quadratic_test(3, 1.0).unwrap(),
        CylinderFunctional::bump(1.0, &[0.1, -0.2, 0.3], &[1.5, 1.8, 1.2], 1.0).unwrap(),
        CylinderFunctional::smoothed_box(1.0, &[-1.0, -0.5, -1.5], &[1.0, 1.5, 0.5], 0.3, 1.0).unwrap(),
        CylinderFunctional::constant(0.7, 3, 1.0).unwrap(),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (fi, f) in families.into_iter().enumerate() {
        let family = f.family().to_string();
        let vf = ValueFunction::new(Arc::new(f), DEFAULT_NODES, DEFAULT_DIM_CAP).unwrap();
        let mut rng = GaussianStream::new(SEED, fi as u64);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let i = (rng.next_uniform() * 3.0) as usize % 3;
            let s = -2.0 + 4.0 * rng.next_uniform();
            let d = 0.02 + 0.98 * rng.next_uniform();
            let history: Vec<f64> = (0..i).map(|_| -0.8 + 1.6 * rng.next_uniform()).collect();
            let h = vf.heat_terms(i, s, d, &history).unwrap();
            worst = worst.max(h.residual);
        }
        pass &= worst <= 1e-4;
        parts.push(format!("{family}: max residual {worst:.2e}"));
    }
    assert!(report(4, "heat residual", pass, parts.join("; "), t0));
}

#[test]
fn c5_quadratic_replication() {
    let t0 = Instant::now();
    let f = Arc::new(CylinderFunctional::quadratic_test(1, 1.0).unwrap());
    let vf = Arc::new(ValueFunction::new(f.clone(), DEFAULT_NODES, DEFAULT_DIM_CAP).unwrap());
    let u0 = vf.replication_price().unwrap();
    let g = TimeGrid::new(1.0, 512).unwrap();
    let sampler = BrownianSampler::new(SEED, g);
    let corpus: Vec<SampledPath> = (0..200u64).map(|i| sampler.sample_path(i)).collect();
    let mut worst = 0.0f64;
    for l in [32, 64, 128, 256, 512] {
        let plan = HedgePlan::new(&f, l).unwrap();
        let s = hedge_strategy(&plan, vf.clone()).unwrap();
        for p in &corpus {
            let o = run_hedge(&s, &f, p).unwrap();
            worst = worst.max((o.final_capital - o.payoff).abs());
        }
    }
    let pass = (u0 - 1.0).abs() <= 1e-9 && worst <= 1e-9;
    let detail = format!("U0 = {u0:.12}, max |K_T − F| over 200 paths x 5 levels {worst:.2e}");
    assert!(report(5, "quadratic replication", pass, detail, t0));
}

#[test]
fn c6_price_agreement() {
    let t0 = Instant::now();
    let f = CylinderFunctional::bump(1.0, &[0.1, -0.2, 0.3], &[1.5, 1.8, 1.6], 1.0).unwrap();
    let u0 = ValueFunction::new(Arc::new(f.clone()), DEFAULT_NODES, DEFAULT_DIM_CAP)
        .unwrap()
        .replication_price()
        .unwrap();
    let mc = mc_expectation(&f, 1_000_000, &BrownianSampler::new(SEED, TimeGrid::new(1.0, 3).unwrap()));
    let z = (mc.mean - u0).abs() / mc.std_error;
    let pass = z <= 4.0;
    let detail = format!("U0 = {u0:.6}, MC = {:.6} ± {:.6}, gap {z:.2} SE", mc.mean, mc.std_error);
    assert!(report(6, "price agreement", pass, detail, t0));
}

#[test]
fn c7_superreplication_convergence() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig {
        seed: Some(SEED),
        hedge_paths: 1000,
        n_mc: 10_000,
        ..ExperimentConfig::default()
    };
    let r = harness::verify_superhedge(&cfg).unwrap();
    let medians: Vec<String> = r
        .levels
        .iter()
        .map(|e| format!("L={}:{:.2e}", e.summary.l, e.summary.shortfall_stats.median))
        .collect();
    let breaches: usize = r.levels.iter().map(|e| e.floor_breaches).sum();
    let pass = r.median_nonincreasing && r.final_median_within_5pct && breaches == 0;
    let detail = format!(
        "{} regular paths, median shortfall [{}], nonincreasing {}, final within 5% {}, floor breaches {breaches}",
        r.corpus_paths,
        medians.join(", "),
        r.median_nonincreasing,
        r.final_median_within_5pct
    );
    assert!(report(7, "superreplication convergence", pass, detail, t0));
}

#[test]
fn c8_coherence() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig {
        seed: Some(SEED),
        n_paths: 100_000,
        ..ExperimentConfig::default()
    };
    let r = harness::coherence_mc(&cfg).unwrap();
    let bad: Vec<&str> = r
        .strategies
        .iter()
        .filter(|e| !(e.mean_consistent && e.positivity_faults == 0 && e.table.iter().all(|t| t.ok)))
        .map(|e| e.strategy.as_str())
        .collect();
    let pass = bad.is_empty() && r.meta.pass;
    let detail = format!("{} strategies x 1e5 paths, inconsistent: {bad:?}", r.strategies.len());
    assert!(report(8, "coherence", pass, detail, t0));
}

#[test]
fn c9_sup_oracle() {
    let t0 = Instant::now();
    let g = grid();
    let sampler = BrownianSampler::new(SEED ^ 9, g);
    let n = 100_000u64;
    let sups: Vec<f64> = pool().install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| sampler.sample_path(i).values().iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [1.0, 2.0, 3.0] {
        let hits = sups.iter().filter(|s| **s <= c).count() as u64;
        let est = proportion(hits, n);
        let exact = prob_sup_abs_below(c, 1.0, 50).unwrap().value;
        let allow = discrete_monitoring_allowance(c, 1.0, g.steps()).unwrap();
        let gap = (est.mean - exact).abs();
        let ok = gap <= 4.0 * est.std_error + allow;
        pass &= ok;
        parts.push(format!(
            "c={c}: MC {:.5} ± {:.5} vs {exact:.5} (allowance {allow:.5})",
            est.mean, est.std_error
        ));
    }
    assert!(report(9, "sup oracle", pass, parts.join("; "), t0));
}
