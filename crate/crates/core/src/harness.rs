//! Experiment configuration and the four CLI commands. Every command is a
//! pure function of its config and writes one JSON report; path-level work
//! runs on a rayon pool and is reduced in path order, so the worker count
//! never changes the output.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::{CompoundStrategy, ElementaryStrategy, GameKind, IdleStrategy};
use crate::heat::{
    hedge_strategy, run_hedge, CylinderFunctional, FunctionalSpec, HedgeOutcome, HedgePlan,
    HedgeSummary, ValueFunction,
};
use crate::path::{SampledPath, TimeGrid};
use crate::strategies::adversarial::adversarial_paths;
use crate::strategies::certificate::{Certified, PathCheck};
use crate::strategies::{
    boundedness_certified, epsilon_crossing_strategy, grid_levels, levy_modulus_strategy,
    levy_super_modulus_strategy, modulus_certificate_strategy, qv_bound_strategy,
    qv_budget_strategy, super_modulus_strategy,
};
use crate::wiener::{mc_expectation, proportion, BrownianSampler, McEstimate, MeanAccumulator};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const DEFAULT_SEED: u64 = 20_240_917;
pub const SEED_ENV: &str = "LEVYGAME_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    LemmaCertificates,
    VerifySuperhedge,
    CoherenceMc,
    SamplePaths,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LemmaCertificates => "lemma-certificates",
            Command::VerifySuperhedge => "verify-superhedge",
            Command::CoherenceMc => "coherence-mc",
            Command::SamplePaths => "sample-paths",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct Tolerances {
    pub pos_tol: f64,
    pub grid_tol: f64,
    pub heat_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pos_tol: 1e-9,
            grid_tol: 1e-9,
            heat_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LemmaJob {
    pub lemma: String,
    pub alpha: f64,
}

pub const LEMMA_NAMES: [&str; 6] = [
    "boundedness",
    "modulus",
    "qv-bound",
    "super-modulus",
    "levy-modulus",
    "levy-super-modulus",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
    pub emit_plot_data: bool,
    pub n_paths: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
    pub lemmas: Vec<LemmaJob>,
    pub adversarial_per_leaf: usize,
    pub functional: Option<FunctionalSpec>,
    pub functional_path: Option<PathBuf>,
    #[serde(rename = "L")]
    pub levels: Vec<usize>,
    #[serde(rename = "Q")]
    pub nodes: usize,
    pub dim_cap: usize,
    pub n_mc: u64,
    pub hedge_paths: usize,
    pub regularity_alpha: f64,
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub sample_count: usize,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            workers: 0,
            out: PathBuf::from("levygame-out"),
            emit_plot_data: false,
            n_paths: 10_000,
            horizon: 1.0,
            steps: 256,
            lemmas: vec![
                LemmaJob { lemma: "boundedness".into(), alpha: 0.04 },
                LemmaJob { lemma: "boundedness".into(), alpha: 0.25 },
                LemmaJob { lemma: "modulus".into(), alpha: 0.1 },
                LemmaJob { lemma: "qv-bound".into(), alpha: 0.1 },
                LemmaJob { lemma: "super-modulus".into(), alpha: 0.1 },
                LemmaJob { lemma: "levy-modulus".into(), alpha: 0.1 },
                LemmaJob { lemma: "levy-super-modulus".into(), alpha: 0.1 },
            ],
            adversarial_per_leaf: 12,
            functional: None,
            functional_path: None,
            levels: vec![32, 64, 128, 256, 512],
            nodes: crate::heat::DEFAULT_NODES,
            dim_cap: crate::heat::DEFAULT_DIM_CAP,
            n_mc: 1_000_000,
            hedge_paths: 200,
            regularity_alpha: 0.1,
            alpha: 0.1,
            lambdas: vec![2.0, 5.0, 10.0],
            sample_count: 8,
            tolerances: Tolerances::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub emit_plot_data: bool,
    pub n_paths: Option<usize>,
}

/// Config file (if any), then flags; `LEVYGAME_SEED` fills in a seed that
/// neither supplies.
pub fn load_config(file: Option<&Path>, overrides: &Overrides, env_seed: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match file {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config {}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = overrides.seed {
        cfg.seed = Some(s);
    }
    if cfg.seed.is_none() {
        if let Some(v) = env_seed {
            let s = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
            cfg.seed = Some(s);
        }
    }
    if let Some(w) = overrides.workers {
        cfg.workers = w;
    }
    if let Some(o) = &overrides.out {
        cfg.out = o.clone();
    }
    if let Some(n) = overrides.n_paths {
        cfg.n_paths = n;
    }
    cfg.emit_plot_data |= overrides.emit_plot_data;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("posTol", t.pos_tol), ("gridTol", t.grid_tol), ("heatTol", t.heat_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        if !(self.horizon > 0.0) || self.steps == 0 {
            return Err(Error::Config(format!(
                "need T > 0 and steps ≥ 1, got T={}, steps={}",
                self.horizon, self.steps
            )));
        }
        for j in &self.lemmas {
            if !LEMMA_NAMES.contains(&j.lemma.as_str()) {
                return Err(Error::Config(format!(
                    "unknown lemma `{}`; expected one of {}",
                    j.lemma,
                    LEMMA_NAMES.join(", ")
                )));
            }
            if !(j.alpha > 0.0 && j.alpha < 1.0) {
                return Err(Error::Config(format!("lemma `{}`: α must lie in (0, 1), got {}", j.lemma, j.alpha)));
            }
        }
        for (name, a) in [("alpha", self.alpha), ("regularityAlpha", self.regularity_alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {a}")));
            }
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::Config("L must be a non-empty list of positive counts".into()));
        }
        if self.lambdas.iter().any(|l| !(*l > 1.0)) {
            return Err(Error::Config("every λ must exceed 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_functional(&self) -> Result<CylinderFunctional> {
        if let Some(p) = &self.functional_path {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read functional {}: {e}", p.display())))?;
            return CylinderFunctional::from_json(&text);
        }
        match &self.functional {
            Some(spec) => CylinderFunctional::from_spec(spec),
            None => CylinderFunctional::bump(1.0, &[0.1, -0.2], &[1.5, 1.8], 1.0),
        }
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Fields shared by all reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportMeta {
    pub schema_version: String,
    pub command: String,
    /// Unix seconds; the only field allowed to differ between reruns.
    pub generated_at: u64,
    pub seed: u64,
    pub pass: bool,
}

impl ReportMeta {
    fn new(cmd: Command, seed: u64, pass: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: cmd.name().into(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            pass,
        }
    }
}

// ---------------------------------------------------------------- lemmas

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdversaryResult {
    pub name: String,
    pub fails_beyond_tolerance: bool,
    pub final_capital: f64,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaEntry {
    pub lemma: String,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_max: Option<u32>,
    pub constant: Option<f64>,
    pub initial_capital: f64,
    pub lower_prob_bound: f64,
    pub implemented_mass: f64,
    pub truncated_mass: f64,
    pub n_paths: usize,
    pub empirical_failure_freq: f64,
    pub failure_std_err: f64,
    pub frequency_consistent: bool,
    pub payoff_violations: usize,
    pub positivity_faults: usize,
    pub adversarial_paths: usize,
    pub adversarial_violations: usize,
    /// Corpus paths with a violation.
    pub per_path: Vec<PathCheck>,
    pub adversarial: Vec<AdversaryResult>,
}

impl LemmaEntry {
    pub fn pass(&self) -> bool {
        self.frequency_consistent
            && self.payoff_violations == 0
            && self.positivity_faults == 0
            && self.adversarial_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub grid_steps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub lemmas: Vec<LemmaEntry>,
}

/// Builds the certified compound for one lemma job on a grid.
pub fn build_lemma(job: &LemmaJob, grid: &TimeGrid) -> Result<Certified> {
    let t = grid.horizon();
    let levels = grid_levels(grid, t)?;
    match job.lemma.as_str() {
        "boundedness" => boundedness_certified(job.alpha, t),
        "modulus" => modulus_certificate_strategy(job.alpha, t, levels),
        "qv-bound" => qv_bound_strategy(job.alpha, t, levels),
        "super-modulus" => super_modulus_strategy(job.alpha, grid),
        "levy-modulus" => levy_modulus_strategy(job.alpha, t, levels),
        "levy-super-modulus" => levy_super_modulus_strategy(job.alpha, grid),
        other => Err(Error::Config(format!("unknown lemma `{other}`"))),
    }
}

fn is_positivity(msg: &str) -> bool {
    msg.starts_with("positivity fault")
}

/// Certificate soundness and frequency consistency for one compound.
pub fn certify(
    certified: &Certified,
    sampler: &BrownianSampler,
    n_paths: usize,
    per_leaf: usize,
    tol: f64,
    pool: &rayon::ThreadPool,
) -> Result<LemmaEntry> {
    let checks: Vec<PathCheck> = pool.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| certified.check_with_tol(i, &sampler.sample_path(i as u64), tol))
            .collect::<Result<Vec<_>>>()
    })?;
    let failures = checks.iter().filter(|c| !c.event_holds).count();
    let freq = proportion(failures as u64, n_paths as u64);
    let cert = &certified.certificate;
    let allowed = 1.0 - cert.lower_prob_bound;
    let mut payoff = 0;
    let mut positivity = 0;
    for c in &checks {
        for v in &c.violations {
            if is_positivity(v) {
                positivity += 1;
            } else {
                payoff += 1;
            }
        }
    }
    let adversaries = adversarial_paths(&cert.event, *sampler.grid(), per_leaf)?;
    let adversarial: Vec<AdversaryResult> = pool.install(|| {
        adversaries
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let c = certified.check_with_tol(i, &a.path, tol)?;
                Ok(AdversaryResult {
                    name: a.name.clone(),
                    fails_beyond_tolerance: c.fails_beyond_tolerance,
                    final_capital: c.final_capital,
                    violations: c.violations,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(LemmaEntry {
        lemma: cert.lemma.clone(),
        alpha: cert.alpha,
        horizon: cert.horizon,
        n_max: cert.n_max,
        constant: cert.constant,
        initial_capital: certified.initial_capital(),
        lower_prob_bound: cert.lower_prob_bound,
        implemented_mass: cert.implemented_mass,
        truncated_mass: cert.truncated_mass,
        n_paths,
        empirical_failure_freq: freq.mean,
        failure_std_err: freq.std_error,
        frequency_consistent: freq.mean <= allowed + 4.0 * freq.std_error,
        payoff_violations: payoff,
        positivity_faults: positivity,
        adversarial_paths: adversarial.len(),
        adversarial_violations: adversarial.iter().filter(|a| !a.violations.is_empty()).count(),
        per_path: checks.into_iter().filter(|c| !c.violations.is_empty()).collect(),
        adversarial,
    })
}

pub fn lemma_certificates(cfg: &ExperimentConfig) -> Result<LemmaReport> {
    let grid = cfg.grid()?;
    let sampler = BrownianSampler::new(cfg.seed(), grid);
    let pool = cfg.pool()?;
    let mut entries = Vec::new();
    for job in &cfg.lemmas {
        let c = build_lemma(job, &grid)?;
        entries.push(certify(
            &c,
            &sampler,
            cfg.n_paths,
            cfg.adversarial_per_leaf,
            cfg.tolerances.grid_tol,
            &pool,
        )?);
    }
    if cfg.emit_plot_data {
        let dir = cfg.out.join("plot");
        fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("lemma_adversarial.csv"))?;
        w.write_record(["lemma", "alpha", "path", "failsBeyondTolerance", "finalCapital"])?;
        for e in &entries {
            for a in &e.adversarial {
                w.write_record([
                    e.lemma.clone(),
                    e.alpha.to_string(),
                    a.name.clone(),
                    a.fails_beyond_tolerance.to_string(),
                    a.final_capital.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    let pass = entries.iter().all(LemmaEntry::pass);
    Ok(LemmaReport {
        meta: ReportMeta::new(Command::LemmaCertificates, cfg.seed(), pass),
        grid_steps: grid.steps(),
        horizon: grid.horizon(),
        lemmas: entries,
    })
}

// ------------------------------------------------------------- superhedge

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelEntry {
    #[serde(flatten)]
    pub summary: HedgeSummary,
    pub floor_breaches: usize,
    /// `max |dS| · L^{1/8}` over the corpus, on the hedge grid.
    pub empirical_c1: f64,
    /// `max Σ(dS)² · L^{-1/16}` over the corpus, on the hedge grid.
    pub empirical_c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuperhedgeReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "Q")]
    pub nodes: usize,
    #[serde(rename = "U0")]
    pub u0: f64,
    pub mc_mean: f64,
    pub mc_std_err: f64,
    pub price_gap_sigma: f64,
    pub sup_abs_f: f64,
    pub levels: Vec<LevelEntry>,
    pub floor_hits: usize,
    pub corpus_paths: usize,
    pub excluded_path_fraction: f64,
    pub median_nonincreasing: bool,
    pub final_median_within_5pct: bool,
}

/// `|mean − target|` in standard errors, with exact agreement counting as 0.
fn gap_sigma(est: &McEstimate, target: f64) -> f64 {
    let gap = (est.mean - target).abs();
    if gap <= 1e-12 * target.abs().max(1.0) {
        0.0
    } else {
        est.z_score(target)
    }
}

fn hedge_grid(f: &CylinderFunctional, levels: &[usize]) -> Result<TimeGrid> {
    let lmax = *levels.iter().max().unwrap();
    for l in levels {
        if lmax % l != 0 {
            return Err(Error::Config(format!(
                "every L must divide the largest one ({lmax}); {l} does not"
            )));
        }
    }
    TimeGrid::new(f.horizon(), lmax * f.coords())
}

pub fn verify_superhedge(cfg: &ExperimentConfig) -> Result<SuperhedgeReport> {
    let f = Arc::new(cfg.load_functional()?);
    let grid = hedge_grid(&f, &cfg.levels)?;
    let vf = Arc::new(ValueFunction::new(f.clone(), cfg.nodes, cfg.dim_cap)?);
    let u0 = vf.replication_price()?;
    let mc = mc_expectation(&f, cfg.n_mc, &BrownianSampler::new(cfg.seed() ^ 0x5eed, grid));
    let pool = cfg.pool()?;

    let regular = {
        let a = cfg.regularity_alpha;
        let modulus = super_modulus_strategy(a, &grid)?;
        let qv = qv_bound_strategy(a, grid.horizon(), grid_levels(&grid, grid.horizon())?)?;
        move |p: &SampledPath| -> Result<bool> {
            Ok(modulus.certificate.event.holds(p)? && qv.certificate.event.holds(p)?)
        }
    };
    let sampler = BrownianSampler::new(cfg.seed(), grid);
    let corpus: Vec<SampledPath> = pool.install(|| {
        (0..cfg.hedge_paths)
            .into_par_iter()
            .map(|i| {
                let p = sampler.sample_path(i as u64);
                Ok(if regular(&p)? { Some(p) } else { None })
            })
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let floor_tol = cfg.tolerances.pos_tol * u0.abs().max(1.0);
    let mut levels = Vec::new();
    let mut all_outcomes = Vec::new();
    for &l in &cfg.levels {
        let plan = HedgePlan::new(&f, l)?;
        plan.embed(&grid)?;
        let strategy = hedge_strategy(&plan, vf.clone())?;
        let outcomes: Vec<HedgeOutcome> = pool.install(|| {
            corpus
                .par_iter()
                .map(|p| run_hedge(&strategy, &f, p))
                .collect::<Result<Vec<_>>>()
        })?;
        let per = plan.embed(&grid)?;
        let (mut c1, mut c2) = (0.0f64, 0.0f64);
        for p in &corpus {
            let v = p.values();
            let (mut big, mut qv) = (0.0f64, 0.0);
            for m in 0..l * plan.n {
                let d = v[(m + 1) * per] - v[m * per];
                big = big.max(d.abs());
                qv += d * d;
            }
            c1 = c1.max(big * (l as f64).powf(0.125));
            c2 = c2.max(qv * (l as f64).powf(-1.0 / 16.0));
        }
        levels.push(LevelEntry {
            summary: HedgeSummary::from_outcomes(u0, l, &outcomes),
            floor_breaches: outcomes.iter().filter(|o| o.min_capital < plan.floor - floor_tol).count(),
            empirical_c1: c1,
            empirical_c2: c2,
        });
        all_outcomes.push((l, outcomes, strategy));
    }

    if cfg.emit_plot_data {
        let dir = cfg.out.join("plot");
        fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("shortfall.csv"))?;
        w.write_record(["L", "pathId", "payoff", "finalCapital", "shortfall", "floorHit"])?;
        for (l, outcomes, _) in &all_outcomes {
            for (i, o) in outcomes.iter().enumerate() {
                w.write_record([
                    l.to_string(),
                    i.to_string(),
                    o.payoff.to_string(),
                    o.final_capital.to_string(),
                    o.shortfall().to_string(),
                    o.floor_hit.to_string(),
                ])?;
            }
        }
        w.flush()?;
        if let (Some(p), Some((_, _, s))) = (corpus.first(), all_outcomes.last()) {
            let t = crate::game::evaluate_capital(s, p)?;
            t.write_csv_with_stakes(&grid, fs::File::create(dir.join("hedge_trajectory.csv"))?)?;
        }
    }

    let medians: Vec<f64> = levels.iter().map(|e| e.summary.shortfall_stats.median).collect();
    let median_nonincreasing = medians.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let sup = f.sup_abs();
    let final_ok = medians.last().is_some_and(|m| *m <= 0.05 * sup + 1e-12);
    let gap = gap_sigma(&mc, u0);
    let breaches: usize = levels.iter().map(|e| e.floor_breaches).sum();
    let pass = gap <= 4.0 && median_nonincreasing && final_ok && breaches == 0;
    Ok(SuperhedgeReport {
        meta: ReportMeta::new(Command::VerifySuperhedge, cfg.seed(), pass),
        family: f.family().to_string(),
        n: f.coords(),
        horizon: f.horizon(),
        nodes: cfg.nodes,
        u0,
        mc_mean: mc.mean,
        mc_std_err: mc.std_error,
        price_gap_sigma: gap,
        sup_abs_f: sup,
        floor_hits: levels.iter().map(|e| e.summary.floor_hits).sum(),
        levels,
        corpus_paths: corpus.len(),
        excluded_path_fraction: if cfg.hedge_paths == 0 {
            0.0
        } else {
            1.0 - corpus.len() as f64 / cfg.hedge_paths as f64
        },
        median_nonincreasing,
        final_median_within_5pct: final_ok,
    })
}

// -------------------------------------------------------------- coherence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MaximalRow {
    pub lambda: f64,
    pub freq: f64,
    pub std_err: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoherenceEntry {
    pub strategy: String,
    pub initial_capital: f64,
    pub mean_final: f64,
    pub mean_std_err: f64,
    pub mean_consistent: bool,
    pub positivity_faults: usize,
    pub table: Vec<MaximalRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoherenceReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub n_paths: usize,
    pub grid_steps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub strategies: Vec<CoherenceEntry>,
}

/// Library strategies, each normalized to `S_0 = 1`.
pub fn normalized_library(grid: &TimeGrid, alpha: f64) -> Result<Vec<(String, CompoundStrategy)>> {
    let t = grid.horizon();
    let levels = grid_levels(grid, t)?;
    let n = levels.min(4);
    let single = |name: &str, s: Arc<dyn ElementaryStrategy>| -> Result<(String, CompoundStrategy)> {
        let c = s.initial_capital();
        Ok((name.to_string(), crate::game::combine(name, vec![(s, c)])?.scaled(1.0 / c)?))
    };
    // One cell standard deviation, so the crossing rule actually bets.
    let eps = (t * 0.5f64.powi(n as i32)).sqrt();
    let bets = (1usize << n) / 2;
    let mut out = vec![
        single("idle", Arc::new(IdleStrategy { capital: 1.0, game: GameKind::Levy }))?,
        single("qv-budget", Arc::new(qv_budget_strategy(t, n, 0.5)?.0))?,
        single("epsilon-crossing", Arc::new(epsilon_crossing_strategy(t, n, eps, bets)?.0))?,
    ];
    let certified = [
        boundedness_certified(0.25, t)?,
        modulus_certificate_strategy(alpha, t, levels)?,
        qv_bound_strategy(alpha, t, levels)?,
        super_modulus_strategy(alpha, grid)?,
        levy_modulus_strategy(alpha, t, levels)?,
        levy_super_modulus_strategy(alpha, grid)?,
    ];
    for c in certified {
        let s0 = c.initial_capital();
        out.push((c.certificate.lemma.clone(), c.compound.scaled(1.0 / s0)?));
    }
    Ok(out)
}

pub fn coherence_mc(cfg: &ExperimentConfig) -> Result<CoherenceReport> {
    let grid = cfg.grid()?;
    let sampler = BrownianSampler::new(cfg.seed(), grid);
    let pool = cfg.pool()?;
    let mut entries = Vec::new();
    for (name, compound) in normalized_library(&grid, cfg.alpha)? {
        let runs: Vec<Option<(f64, f64)>> = pool.install(|| {
            (0..cfg.n_paths)
                .into_par_iter()
                .map(|i| match compound.evaluate_summary(&sampler.sample_path(i as u64)) {
                    Ok(s) => Ok(Some((s.final_capital, s.max))),
                    Err(Error::Positivity { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let faults = runs.iter().filter(|r| r.is_none()).count();
        let ok: Vec<(f64, f64)> = runs.into_iter().flatten().collect();
        let mean = ok.iter().map(|r| r.0).collect::<MeanAccumulator>().estimate();
        let s0 = compound.total_capital();
        let table = cfg
            .lambdas
            .iter()
            .map(|&lambda| {
                let hits = ok.iter().filter(|r| r.1 >= lambda * s0).count();
                let p = proportion(hits as u64, ok.len() as u64);
                MaximalRow {
                    lambda,
                    freq: p.mean,
                    std_err: p.std_error,
                    bound: 1.0 / lambda,
                    ok: p.mean <= 1.0 / lambda + 4.0 * p.std_error,
                }
            })
            .collect();
        entries.push(CoherenceEntry {
            strategy: name,
            initial_capital: s0,
            mean_final: mean.mean,
            mean_std_err: mean.std_error,
            mean_consistent: (mean.mean - s0).abs() <= 4.0 * mean.std_error + 1e-12 * s0,
            positivity_faults: faults,
            table,
        });
    }
    if cfg.emit_plot_data {
        let dir = cfg.out.join("plot");
        fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("maximal.csv"))?;
        w.write_record(["strategy", "lambda", "freq", "stdErr", "bound"])?;
        for e in &entries {
            for r in &e.table {
                w.write_record([
                    e.strategy.clone(),
                    r.lambda.to_string(),
                    r.freq.to_string(),
                    r.std_err.to_string(),
                    r.bound.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    let pass = entries
        .iter()
        .all(|e| e.mean_consistent && e.positivity_faults == 0 && e.table.iter().all(|r| r.ok));
    Ok(CoherenceReport {
        meta: ReportMeta::new(Command::CoherenceMc, cfg.seed(), pass),
        n_paths: cfg.n_paths,
        grid_steps: grid.steps(),
        horizon: grid.horizon(),
        strategies: entries,
    })
}

// ----------------------------------------------------------- sample paths

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleEntry {
    pub path_id: usize,
    pub file: String,
    pub omega_t: f64,
    pub sup_abs: f64,
    pub quadratic_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub grid_steps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub paths: Vec<SampleEntry>,
}

pub fn sample_paths(cfg: &ExperimentConfig) -> Result<SampleReport> {
    let grid = cfg.grid()?;
    let sampler = BrownianSampler::new(cfg.seed(), grid);
    let dir = cfg.out.join("paths");
    fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();
    for i in 0..cfg.sample_count {
        let p = sampler.sample_path(i as u64);
        let file = format!("paths/path_{i:05}.csv");
        p.write_csv(fs::File::create(cfg.out.join(&file))?)?;
        let v = p.values();
        paths.push(SampleEntry {
            path_id: i,
            file,
            omega_t: *v.last().unwrap(),
            sup_abs: v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            quadratic_variation: v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum(),
        });
    }
    Ok(SampleReport {
        meta: ReportMeta::new(Command::SamplePaths, cfg.seed(), true),
        grid_steps: grid.steps(),
        horizon: grid.horizon(),
        paths,
    })
}

// ------------------------------------------------------------------ driver

pub struct Outcome {
    pub pass: bool,
    pub report_path: PathBuf,
}

fn write_report<T: Serialize>(cfg: &ExperimentConfig, cmd: Command, report: &T) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(format!("{}.json", cmd.name()));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let (pass, report_path) = match cmd {
        Command::LemmaCertificates => {
            let r = lemma_certificates(cfg)?;
            (r.meta.pass, write_report(cfg, cmd, &r)?)
        }
        Command::VerifySuperhedge => {
            let r = verify_superhedge(cfg)?;
            (r.meta.pass, write_report(cfg, cmd, &r)?)
        }
        Command::CoherenceMc => {
            let r = coherence_mc(cfg)?;
            (r.meta.pass, write_report(cfg, cmd, &r)?)
        }
        Command::SamplePaths => {
            let r = sample_paths(cfg)?;
            (r.meta.pass, write_report(cfg, cmd, &r)?)
        }
    };
    Ok(Outcome { pass, report_path })
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::GridMismatch(_) | Error::DimensionCap { .. } | Error::Domain(_) => 2,
        _ => 1,
    }
}

/// A report with `generatedAt` removed, for byte comparisons.
pub fn strip_timestamp(text: &str) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("generatedAt");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

/// The default config as JSON, for `--print-config`.
pub fn default_config_json() -> String {
    let mut v = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
    v["seed"] = json!(DEFAULT_SEED);
    serde_json::to_string_pretty(&v).expect("value serializes")
}
