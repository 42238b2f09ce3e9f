//! Capital processes for the Lévy game and the modified Lévy game.
//!
//! Sceptic's stakes are piecewise constant: a strategy is consulted at every
//! grid index and either holds or rebalances, and the engine books the
//! one-step gain of the held stakes. In the Lévy game the securities are
//! `ω(t)` and `ω(t)² − t`; in the modified game they are `ω(t) − ω(a)` and
//! `(ω(t) − ω(a))² − (t − a)` for the last rebalance time `a`.
//!
//! Both games share one increment formula. Over a grid step with
//! `dω = ω(t_{k+1}) − ω(t_k)` and `h = t_{k+1} − t_k` the gain is
//!
//! ```text
//! M dω + V (2 x dω + dω² − h)
//! ```
//!
//! with `x = ω(t_k)` in the Lévy game and `x = ω(t_k) − ω(a)` in the
//! modified game. Setting `M' = M − 2 ω(a) V` turns one into the other.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{SampledPath, TimeGrid};

/// Relative positivity tolerance: capital may dip to `-POS_TOL_REL * max(1, S_0)`.
pub const POS_TOL_REL: f64 = 1e-9;

pub fn pos_tol(initial_capital: f64) -> f64 {
    POS_TOL_REL * initial_capital.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameKind {
    Levy,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stakes {
    /// Stake on the price security.
    pub m: f64,
    /// Stake on the variance security.
    pub v: f64,
}

impl Stakes {
    pub const ZERO: Stakes = Stakes { m: 0.0, v: 0.0 };

    pub fn new(m: f64, v: f64) -> Self {
        Self { m, v }
    }

    pub fn scaled(self, f: f64) -> Self {
        Self {
            m: self.m * f,
            v: self.v * f,
        }
    }
}

/// Declared bounds on `|M|` and `|V|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StakeBound {
    pub m: f64,
    pub v: f64,
}

impl StakeBound {
    pub const ZERO: StakeBound = StakeBound { m: 0.0, v: 0.0 };

    pub fn new(m: f64, v: f64) -> Self {
        Self { m, v }
    }

    pub fn uniform(b: f64) -> Self {
        Self { m: b, v: b }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0 && self.v == 0.0
    }

    fn admits(&self, s: Stakes) -> bool {
        let tol = |b: f64| b + 1e-12 * b.abs().max(1.0);
        s.m.abs() <= tol(self.m) && s.v.abs() <= tol(self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StakeDecision {
    Hold,
    /// New stakes, anchored at the current grid index.
    Rebalance(Stakes),
}

/// Causal view of a path: values up to and including the current index.
#[derive(Debug, Clone, Copy)]
pub struct PathPrefix<'a> {
    grid: &'a TimeGrid,
    values: &'a [f64],
}

impl<'a> PathPrefix<'a> {
    pub fn new(grid: &'a TimeGrid, values: &'a [f64]) -> Self {
        debug_assert!(!values.is_empty());
        Self { grid, values }
    }

    pub fn index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.index())
    }

    pub fn current(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// ω at an earlier grid index. Panics past the current index.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn grid(&self) -> &'a TimeGrid {
        self.grid
    }
}

/// Per-run decision state of a strategy.
pub trait StakeRule {
    fn decide(&mut self, prefix: PathPrefix<'_>, capital: f64) -> Result<StakeDecision>;
}

/// An elementary betting strategy: a causal rule for piecewise-constant
/// bounded stakes, plus the initial capital it is run with.
///
/// Strategies are immutable descriptions; [`ElementaryStrategy::rule`]
/// creates fresh per-path state, so one strategy can be evaluated on many
/// paths concurrently.
pub trait ElementaryStrategy: Send + Sync + fmt::Debug {
    fn label(&self) -> String;
    fn game(&self) -> GameKind;
    fn initial_capital(&self) -> f64;
    fn stake_bound(&self) -> StakeBound;
    /// Whether the strategy promises a capital process that never goes negative.
    fn positivity(&self) -> bool {
        true
    }
    /// Capital level at which the strategy stops playing for good.
    fn capital_floor(&self) -> Option<f64> {
        None
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>>;
}

/// Capital at every grid time, plus the stakes held over each step.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalTrajectory {
    pub values: Vec<f64>,
    /// `stakes[k]` is held over `[t_k, t_{k+1}]`.
    pub stakes: Vec<Stakes>,
    pub floor_hit: Option<usize>,
}

impl CapitalTrajectory {
    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV `t,capital`.
    pub fn write_csv<W: Write>(&self, grid: &TimeGrid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "capital"])?;
        for (k, c) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", grid.time(k)), format!("{c:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `t,capital,M,V`; the last row repeats the final stakes as zero.
    pub fn write_csv_with_stakes<W: Write>(&self, grid: &TimeGrid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "capital", "M", "V"])?;
        for (k, c) in self.values.iter().enumerate() {
            let s = self.stakes.get(k).copied().unwrap_or(Stakes::ZERO);
            w.write_record([
                format!("{:.16e}", grid.time(k)),
                format!("{c:.16e}"),
                format!("{:.16e}", s.m),
                format!("{:.16e}", s.v),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CapitalSummary {
    pub initial: f64,
    pub final_capital: f64,
    pub min: f64,
    pub max: f64,
    pub floor_hit: Option<usize>,
}

/// Core loop shared by the trajectory and summary evaluators. `record` sees
/// `(k, capital at t_k, stakes held over [t_k, t_{k+1}])`; at `k = K` the
/// stakes are zero.
fn run<F>(
    strategy: &dyn ElementaryStrategy,
    capital: f64,
    path: &SampledPath,
    mut record: F,
) -> Result<Option<usize>>
where
    F: FnMut(usize, f64, Stakes),
{
    let grid = path.grid();
    let vals = path.values();
    let steps = grid.steps();
    let game = strategy.game();
    let bound = strategy.stake_bound();
    let floor = strategy.capital_floor();
    let check_pos = strategy.positivity();
    let tol = pos_tol(capital);

    let mut rule = strategy.rule(grid)?;
    let mut cap = capital;
    let mut stakes = Stakes::ZERO;
    let mut anchor_value = 0.0;
    let mut stopped = false;
    let mut floor_hit = None;

    if let Some(f) = floor {
        if cap <= f {
            stopped = true;
            floor_hit = Some(0);
        }
    }

    for k in 0..steps {
        if !stopped {
            if let StakeDecision::Rebalance(s) =
                rule.decide(PathPrefix::new(grid, &vals[..=k]), cap)?
            {
                if !bound.admits(s) {
                    return Err(Error::StakeBound {
                        label: strategy.label(),
                        index: k,
                        m: s.m,
                        v: s.v,
                        bound_m: bound.m,
                        bound_v: bound.v,
                    });
                }
                stakes = s;
                anchor_value = vals[k];
            }
        } else {
            stakes = Stakes::ZERO;
        }
        record(k, cap, stakes);

        let (w0, w1) = (vals[k], vals[k + 1]);
        let dw = w1 - w0;
        let h = grid.time(k + 1) - grid.time(k);
        let x = match game {
            GameKind::Levy => w0,
            GameKind::Modified => w0 - anchor_value,
        };
        let lin = stakes.m * dw + stakes.v * (2.0 * x * dw - h);
        let quad = stakes.v * dw * dw;
        let mut next = cap + lin + quad;

        if let (Some(f), false) = (floor, stopped) {
            // Capital along the interpolated step is cap + lin θ + quad θ².
            let mut lowest = next.min(cap);
            if quad > 0.0 {
                let theta = -lin / (2.0 * quad);
                if theta > 0.0 && theta < 1.0 {
                    lowest = lowest.min(cap + lin * theta + quad * theta * theta);
                }
            }
            if lowest <= f {
                next = f;
                stopped = true;
                floor_hit = Some(k + 1);
            }
        }

        if !next.is_finite() {
            return Err(Error::Numeric {
                label: strategy.label(),
                index: k + 1,
            });
        }
        if check_pos && next < -tol {
            return Err(Error::Positivity {
                label: strategy.label(),
                index: k + 1,
                capital: next,
            });
        }
        cap = next;
    }
    record(steps, cap, Stakes::ZERO);
    Ok(floor_hit)
}

/// `K^{G,c}` on every grid time, with `c` the strategy's own initial capital.
pub fn evaluate_capital(
    strategy: &dyn ElementaryStrategy,
    path: &SampledPath,
) -> Result<CapitalTrajectory> {
    evaluate_capital_from(strategy, strategy.initial_capital(), path)
}

/// `K^{G,c}` for an explicit initial capital `c`.
pub fn evaluate_capital_from(
    strategy: &dyn ElementaryStrategy,
    capital: f64,
    path: &SampledPath,
) -> Result<CapitalTrajectory> {
    let n = path.len();
    let mut values = Vec::with_capacity(n);
    let mut stakes = Vec::with_capacity(n);
    let floor_hit = run(strategy, capital, path, |_, c, s| {
        values.push(c);
        stakes.push(s);
    })?;
    Ok(CapitalTrajectory {
        values,
        stakes,
        floor_hit,
    })
}

/// Initial, final, min and max capital without storing the trajectory.
pub fn evaluate_summary(
    strategy: &dyn ElementaryStrategy,
    capital: f64,
    path: &SampledPath,
) -> Result<CapitalSummary> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut last = capital;
    let floor_hit = run(strategy, capital, path, |_, c, _| {
        min = min.min(c);
        max = max.max(c);
        last = c;
    })?;
    Ok(CapitalSummary {
        initial: capital,
        final_capital: last,
        min,
        max,
        floor_hit,
    })
}

/// A strategy that never bets.
#[derive(Debug, Clone)]
pub struct IdleStrategy {
    pub capital: f64,
    pub game: GameKind,
}

struct IdleRule;

impl StakeRule for IdleRule {
    fn decide(&mut self, _: PathPrefix<'_>, _: f64) -> Result<StakeDecision> {
        Ok(StakeDecision::Hold)
    }
}

impl ElementaryStrategy for IdleStrategy {
    fn label(&self) -> String {
        "idle".into()
    }
    fn game(&self) -> GameKind {
        self.game
    }
    fn initial_capital(&self) -> f64 {
        self.capital
    }
    fn stake_bound(&self) -> StakeBound {
        StakeBound::ZERO
    }
    fn rule(&self, _: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        Ok(Box::new(IdleRule))
    }
}

/// Stakes, initial capital and floor multiplied by a positive factor.
#[derive(Debug, Clone)]
pub struct Scaled {
    inner: Arc<dyn ElementaryStrategy>,
    factor: f64,
}

impl Scaled {
    pub fn new(inner: Arc<dyn ElementaryStrategy>, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {factor}")));
        }
        Ok(Self { inner, factor })
    }
}

struct ScaledRule<'a> {
    inner: Box<dyn StakeRule + 'a>,
    factor: f64,
}

impl StakeRule for ScaledRule<'_> {
    fn decide(&mut self, prefix: PathPrefix<'_>, capital: f64) -> Result<StakeDecision> {
        Ok(match self.inner.decide(prefix, capital / self.factor)? {
            StakeDecision::Rebalance(s) => StakeDecision::Rebalance(s.scaled(self.factor)),
            StakeDecision::Hold => StakeDecision::Hold,
        })
    }
}

impl ElementaryStrategy for Scaled {
    fn label(&self) -> String {
        format!("{}x{}", self.factor, self.inner.label())
    }
    fn game(&self) -> GameKind {
        self.inner.game()
    }
    fn initial_capital(&self) -> f64 {
        self.inner.initial_capital() * self.factor
    }
    fn stake_bound(&self) -> StakeBound {
        let b = self.inner.stake_bound();
        StakeBound::new(b.m * self.factor, b.v * self.factor)
    }
    fn positivity(&self) -> bool {
        self.inner.positivity()
    }
    fn capital_floor(&self) -> Option<f64> {
        self.inner.capital_floor().map(|f| f * self.factor)
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        Ok(Box::new(ScaledRule {
            inner: self.inner.rule(grid)?,
            factor: self.factor,
        }))
    }
}

/// A modified-game strategy replayed in the Lévy game through
/// `M' = M − 2 ω(a) V`, `V' = V` at every rebalance time `a`, optionally
/// forced to liquidate once `|ω|` reaches a stop level.
#[derive(Debug, Clone)]
pub struct LevyConversion {
    inner: Arc<dyn ElementaryStrategy>,
    stop_level: Option<f64>,
}

/// Lévy-game replay of a modified-game strategy, without a stop.
///
/// The converted stake `M − 2 ω(a) V` is unbounded in `ω`, so the result
/// declares an infinite stake bound and reports `is_bounded() == false`;
/// wrap it with [`LevyConversion::with_stop`] for a legitimate Lévy-game
/// strategy.
pub fn convert_modified_to_levy(inner: Arc<dyn ElementaryStrategy>) -> Result<LevyConversion> {
    LevyConversion::build(inner, None)
}

impl LevyConversion {
    pub fn with_stop(inner: Arc<dyn ElementaryStrategy>, stop_level: f64) -> Result<Self> {
        if !(stop_level > 0.0) {
            return Err(Error::Domain(format!("stop level must be positive, got {stop_level}")));
        }
        Self::build(inner, Some(stop_level))
    }

    fn build(inner: Arc<dyn ElementaryStrategy>, stop_level: Option<f64>) -> Result<Self> {
        if inner.game() != GameKind::Modified {
            return Err(Error::Domain(format!(
                "`{}` already plays the Lévy game",
                inner.label()
            )));
        }
        Ok(Self { inner, stop_level })
    }

    pub fn is_bounded(&self) -> bool {
        self.stop_level.is_some()
    }

    pub fn stop_level(&self) -> Option<f64> {
        self.stop_level
    }

    /// Convert one stake pair anchored where ω equals `anchor_value`.
    pub fn convert_stakes(stakes: Stakes, anchor_value: f64) -> Stakes {
        Stakes::new(stakes.m - 2.0 * anchor_value * stakes.v, stakes.v)
    }
}

struct ConversionRule<'a> {
    inner: Box<dyn StakeRule + 'a>,
    stop_level: Option<f64>,
    stopped: bool,
}

impl StakeRule for ConversionRule<'_> {
    fn decide(&mut self, prefix: PathPrefix<'_>, capital: f64) -> Result<StakeDecision> {
        if self.stopped {
            return Ok(StakeDecision::Hold);
        }
        let w = prefix.current();
        if let Some(stop) = self.stop_level {
            if w.abs() >= stop {
                self.stopped = true;
                return Ok(StakeDecision::Rebalance(Stakes::ZERO));
            }
        }
        Ok(match self.inner.decide(prefix, capital)? {
            StakeDecision::Rebalance(s) => {
                StakeDecision::Rebalance(LevyConversion::convert_stakes(s, w))
            }
            StakeDecision::Hold => StakeDecision::Hold,
        })
    }
}

impl ElementaryStrategy for LevyConversion {
    fn label(&self) -> String {
        match self.stop_level {
            Some(s) => format!("levy[{}|stop {s}]", self.inner.label()),
            None => format!("levy[{}]", self.inner.label()),
        }
    }
    fn game(&self) -> GameKind {
        GameKind::Levy
    }
    fn initial_capital(&self) -> f64 {
        self.inner.initial_capital()
    }
    /// `|M'| ≤ M_bound + 2·stop·V_bound` while `|ω| < stop` at every anchor.
    fn stake_bound(&self) -> StakeBound {
        let b = self.inner.stake_bound();
        match self.stop_level {
            Some(s) => StakeBound::new(b.m + 2.0 * s * b.v, b.v),
            None => StakeBound::new(if b.v == 0.0 { b.m } else { f64::INFINITY }, b.v),
        }
    }
    fn positivity(&self) -> bool {
        self.inner.positivity()
    }
    fn capital_floor(&self) -> Option<f64> {
        self.inner.capital_floor()
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        Ok(Box::new(ConversionRule {
            inner: self.inner.rule(grid)?,
            stop_level: self.stop_level,
            stopped: false,
        }))
    }
}

/// One account of a positive capital process: a strategy and the capital
/// `c_n` it is run with.
#[derive(Debug, Clone)]
pub struct Component {
    pub strategy: Arc<dyn ElementaryStrategy>,
    pub capital: f64,
}

/// Finite sum of positive elementary capital processes.
#[derive(Debug, Clone)]
pub struct CompoundStrategy {
    label: String,
    components: Vec<Component>,
}

/// Sum of elementary capital processes, each run with its own capital `c_n ≥ 0`.
pub fn combine(
    label: impl Into<String>,
    components: Vec<(Arc<dyn ElementaryStrategy>, f64)>,
) -> Result<CompoundStrategy> {
    let label = label.into();
    for (s, c) in &components {
        if !(c.is_finite() && *c >= 0.0) {
            return Err(Error::Domain(format!(
                "component `{}` of `{label}` has capital {c}; need c ≥ 0",
                s.label()
            )));
        }
    }
    Ok(CompoundStrategy {
        label,
        components: components
            .into_iter()
            .map(|(strategy, capital)| Component { strategy, capital })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundTrajectory {
    pub total: Vec<f64>,
    pub components: Vec<CapitalTrajectory>,
}

impl CompoundTrajectory {
    pub fn final_value(&self) -> f64 {
        *self.total.last().unwrap()
    }

    pub fn max(&self) -> f64 {
        self.total.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompoundSummary {
    pub initial: f64,
    pub final_capital: f64,
    pub max: f64,
    pub component_finals: Vec<f64>,
}

impl CompoundStrategy {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// `S_0 = Σ c_n`.
    pub fn total_capital(&self) -> f64 {
        self.components.iter().map(|c| c.capital).sum()
    }

    /// Pads the compound with an idle account so that `S_0` equals `target`.
    /// This is how truncated countable sums keep their full initial capital.
    pub fn with_remainder(mut self, target: f64, game: GameKind) -> Result<Self> {
        let rest = target - self.total_capital();
        if rest < -1e-12 * target.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "`{}` already holds {} > target {target}",
                self.label,
                self.total_capital()
            )));
        }
        let rest = rest.max(0.0);
        self.components.push(Component {
            strategy: Arc::new(IdleStrategy {
                capital: rest,
                game,
            }),
            capital: rest,
        });
        Ok(self)
    }

    /// Appends the accounts of another compound.
    pub fn absorb(mut self, other: CompoundStrategy) -> Self {
        self.components.extend(other.components);
        self
    }

    pub fn push(&mut self, strategy: Arc<dyn ElementaryStrategy>, capital: f64) {
        self.components.push(Component { strategy, capital });
    }

    /// Every stake and capital multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(Component {
                    strategy: Arc::new(Scaled::new(c.strategy.clone(), factor)?)
                        as Arc<dyn ElementaryStrategy>,
                    capital: c.capital * factor,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: format!("{factor}x{}", self.label),
            components,
        })
    }

    /// Compound with every component replaced by `f(component)`.
    pub fn map_components<F>(&self, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&Arc<dyn ElementaryStrategy>) -> Result<Arc<dyn ElementaryStrategy>>,
    {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(Component {
                    strategy: f(&c.strategy)?,
                    capital: c.capital,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: label.into(),
            components,
        })
    }

    fn positivity_fault(&self, i: usize, e: Error) -> Error {
        match e {
            Error::Positivity { index, capital, .. } => Error::Positivity {
                label: format!("{}#{i}:{}", self.label, self.components[i].strategy.label()),
                index,
                capital,
            },
            other => other,
        }
    }

    pub fn evaluate(&self, path: &SampledPath) -> Result<CompoundTrajectory> {
        let mut total = vec![0.0; path.len()];
        let mut comps = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            let traj = evaluate_capital_from(c.strategy.as_ref(), c.capital, path)
                .map_err(|e| self.positivity_fault(i, e))?;
            for (t, v) in total.iter_mut().zip(&traj.values) {
                *t += v;
            }
            comps.push(traj);
        }
        Ok(CompoundTrajectory {
            total,
            components: comps,
        })
    }

    /// Final and maximal capital of the sum, without keeping trajectories.
    pub fn evaluate_summary(&self, path: &SampledPath) -> Result<CompoundSummary> {
        let mut total = vec![0.0; path.len()];
        let mut finals = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            if c.strategy.stake_bound().is_zero() {
                total.iter_mut().for_each(|t| *t += c.capital);
                finals.push(c.capital);
                continue;
            }
            let mut last = c.capital;
            run(c.strategy.as_ref(), c.capital, path, |k, v, _| {
                total[k] += v;
                last = v;
            })
            .map_err(|e| self.positivity_fault(i, e))?;
            finals.push(last);
        }
        Ok(CompoundSummary {
            initial: total[0],
            final_capital: *total.last().unwrap(),
            max: total.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            component_finals: finals,
        })
    }
}

/// Per-path line of an upper-probability certificate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathRecord {
    pub path_id: usize,
    pub event_holds: bool,
    pub final_capital: f64,
    pub floor_hit: Option<usize>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpperProbabilityReport {
    pub label: String,
    pub initial_capital: f64,
    /// True when the compound reached 1 on every corpus path where the event held.
    pub witness: bool,
    pub per_path: Vec<PathRecord>,
}

/// Checks on a corpus whether `S_0` of `compound` witnesses an upper
/// probability for `event`: wherever the event holds, final capital must be
/// at least `1 − tolerance`. Engine faults are reported, not raised.
pub fn upper_probability_estimate(
    compound: &CompoundStrategy,
    event: &dyn Fn(&SampledPath) -> bool,
    paths: &[SampledPath],
    tolerance: f64,
) -> UpperProbabilityReport {
    let mut witness = true;
    let per_path = paths
        .iter()
        .enumerate()
        .map(|(path_id, p)| {
            let event_holds = event(p);
            let mut violations = Vec::new();
            let final_capital = match compound.evaluate_summary(p) {
                Ok(s) => s.final_capital,
                Err(e) => {
                    violations.push(e.to_string());
                    f64::NAN
                }
            };
            if event_holds && !(final_capital >= 1.0 - tolerance) {
                violations.push(format!("event holds but final capital is {final_capital}"));
            }
            if !violations.is_empty() {
                witness = false;
            }
            PathRecord {
                path_id,
                event_holds,
                final_capital,
                floor_hit: None,
                violations,
            }
        })
        .collect();
    UpperProbabilityReport {
        label: compound.label().to_string(),
        initial_capital: compound.total_capital(),
        witness,
        per_path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed stakes set at index 0 and held.
    #[derive(Debug)]
    struct Constant {
        game: GameKind,
        c: f64,
        stakes: Stakes,
        bound: f64,
    }

    struct ConstRule(Stakes, bool);
    impl StakeRule for ConstRule {
        fn decide(&mut self, _: PathPrefix<'_>, _: f64) -> Result<StakeDecision> {
            if self.1 {
                Ok(StakeDecision::Hold)
            } else {
                self.1 = true;
                Ok(StakeDecision::Rebalance(self.0))
            }
        }
    }

    impl ElementaryStrategy for Constant {
        fn label(&self) -> String {
            "constant".into()
        }
        fn game(&self) -> GameKind {
            self.game
        }
        fn initial_capital(&self) -> f64 {
            self.c
        }
        fn stake_bound(&self) -> StakeBound {
            StakeBound::uniform(self.bound)
        }
        fn positivity(&self) -> bool {
            false
        }
        fn rule(&self, _: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
            Ok(Box::new(ConstRule(self.stakes, false)))
        }
    }

    #[test]
    fn zero_path_variance_drift() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let s = Constant {
            game: GameKind::Levy,
            c: 1.0,
            stakes: Stakes::new(0.0, 0.5),
            bound: 1.0,
        };
        let t = evaluate_capital(&s, &SampledPath::zero(g)).unwrap();
        assert!((t.final_value() - 0.5).abs() < 1e-15);
        assert_eq!(t.initial(), 1.0);
    }

    #[test]
    fn two_point_path_price_bet() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let p = SampledPath::new(g, vec![0.0, 1.0]).unwrap();
        let s = Constant {
            game: GameKind::Levy,
            c: 0.0,
            stakes: Stakes::new(1.0, 0.0),
            bound: 1.0,
        };
        assert_eq!(evaluate_capital(&s, &p).unwrap().final_value(), 1.0);
    }

    #[test]
    fn stake_bound_fault_names_index() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let s = Constant {
            game: GameKind::Levy,
            c: 0.0,
            stakes: Stakes::new(2.0, 0.0),
            bound: 1.0,
        };
        match evaluate_capital(&s, &SampledPath::zero(g)) {
            Err(Error::StakeBound { index: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conversion_arithmetic() {
        let s = LevyConversion::convert_stakes(Stakes::new(1.0, 3.0), 2.0);
        assert_eq!(s, Stakes::new(-11.0, 3.0));
        let s = LevyConversion::convert_stakes(Stakes::new(0.7, 0.0), 5.0);
        assert_eq!(s, Stakes::new(0.7, 0.0));
    }

    #[test]
    fn conversion_rejects_levy_input() {
        let s: Arc<dyn ElementaryStrategy> = Arc::new(IdleStrategy {
            capital: 1.0,
            game: GameKind::Levy,
        });
        assert!(convert_modified_to_levy(s).is_err());
    }

    #[test]
    fn combine_single_and_linear_copies() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let p = SampledPath::from_fn(g, |t| (7.0 * t).sin()).unwrap();
        let base: Arc<dyn ElementaryStrategy> = Arc::new(Constant {
            game: GameKind::Modified,
            c: 0.5,
            stakes: Stakes::new(0.2, 0.1),
            bound: 1.0,
        });
        let single = evaluate_capital(base.as_ref(), &p).unwrap();
        let one = combine("one", vec![(base.clone(), 0.5)]).unwrap();
        assert_eq!(one.evaluate(&p).unwrap().total, single.values);

        let two = combine("two", vec![(base.clone(), 0.3), (base.clone(), 0.7)]).unwrap();
        assert!((two.total_capital() - 1.0).abs() < 1e-15);
        let tt = two.evaluate(&p).unwrap();
        for (k, v) in tt.total.iter().enumerate() {
            let expect = 2.0 * (single.values[k] - 0.5) + 1.0;
            assert!((v - expect).abs() < 1e-14);
        }
        let summary = two.evaluate_summary(&p).unwrap();
        assert!((summary.final_capital - tt.final_value()).abs() < 1e-14);
        assert!((summary.max - tt.max()).abs() < 1e-14);
    }

    #[test]
    fn combine_rejects_negative_capital() {
        let s: Arc<dyn ElementaryStrategy> = Arc::new(IdleStrategy {
            capital: 0.0,
            game: GameKind::Levy,
        });
        assert!(combine("bad", vec![(s, -0.1)]).is_err());
    }

    #[test]
    fn remainder_preserves_target_capital() {
        let s: Arc<dyn ElementaryStrategy> = Arc::new(IdleStrategy {
            capital: 0.25,
            game: GameKind::Levy,
        });
        let c = combine("x", vec![(s, 0.25)])
            .unwrap()
            .with_remainder(1.0, GameKind::Levy)
            .unwrap();
        assert_eq!(c.components().len(), 2);
        assert!((c.total_capital() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn floor_stops_inside_a_step() {
        #[derive(Debug)]
        struct Floored;
        impl ElementaryStrategy for Floored {
            fn label(&self) -> String {
                "floored".into()
            }
            fn game(&self) -> GameKind {
                GameKind::Levy
            }
            fn initial_capital(&self) -> f64 {
                0.5
            }
            fn stake_bound(&self) -> StakeBound {
                StakeBound::uniform(10.0)
            }
            fn positivity(&self) -> bool {
                false
            }
            fn capital_floor(&self) -> Option<f64> {
                Some(0.0)
            }
            fn rule(&self, _: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
                Ok(Box::new(ConstRule(Stakes::new(1.0, 0.0), false)))
            }
        }
        let g = TimeGrid::new(1.0, 2).unwrap();
        let p = SampledPath::new(g, vec![0.0, -2.0, 5.0]).unwrap();
        let t = evaluate_capital(&Floored, &p).unwrap();
        assert_eq!(t.values, vec![0.5, 0.0, 0.0]);
        assert_eq!(t.floor_hit, Some(1));
    }

    #[test]
    fn empty_event_is_certified_by_idle() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let s: Arc<dyn ElementaryStrategy> = Arc::new(IdleStrategy {
            capital: 0.0,
            game: GameKind::Levy,
        });
        let c = combine("idle", vec![(s, 0.0)]).unwrap();
        let paths = vec![SampledPath::zero(g), SampledPath::from_fn(g, |t| t).unwrap()];
        let r = upper_probability_estimate(&c, &|_| false, &paths, 0.0);
        assert!(r.witness);
        assert_eq!(r.initial_capital, 0.0);
    }
}
