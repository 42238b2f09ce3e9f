//! The grid hedge: at every `t_{i,j} = iT/N + jT/(LN)` rebalance in the
//! modified game to `M = ∂Ū_i/∂s`, `V = ½ ∂²Ū_i/∂s²`, evaluated at
//! `(ω(t_{i,j}), D_{i,j})` with `D_{i,j} = T/N − jT/(LN)`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functional::CylinderFunctional;
use super::value::ValueFunction;
use crate::error::{Error, Result};
use crate::game::{
    evaluate_capital, ElementaryStrategy, GameKind, LevyConversion, PathPrefix, StakeBound,
    StakeDecision, StakeRule, Stakes,
};
use crate::path::{SampledPath, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HedgePlan {
    pub n: usize,
    pub l: usize,
    pub horizon: f64,
    /// `inf U − 1`.
    pub floor: f64,
    /// Bounds on `|M|` and `|V|` from the generator's derivative bounds.
    pub stake_bound: StakeBound,
}

impl HedgePlan {
    pub fn new(functional: &CylinderFunctional, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Config("L must be ≥ 1".into()));
        }
        let n = functional.coords();
        let g = functional.generator();
        let mut bound = StakeBound::ZERO;
        for i in 0..n {
            let b1 = g.directional_bound(1, i).unwrap_or(f64::INFINITY);
            let b2 = g.directional_bound(2, i).unwrap_or(f64::INFINITY);
            bound.m = bound.m.max(b1);
            bound.v = bound.v.max(0.5 * b2);
        }
        Ok(Self {
            n,
            l,
            horizon: functional.horizon(),
            floor: functional.inf() - 1.0,
            stake_bound: bound,
        })
    }

    /// `T/(LN)`.
    pub fn step(&self) -> f64 {
        self.horizon / (self.l * self.n) as f64
    }

    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.step() * (i * self.l + j) as f64
    }

    pub fn variance(&self, j: usize) -> f64 {
        self.step() * (self.l - j) as f64
    }

    /// Path-grid steps per hedge step; the path grid must refine the plan.
    pub fn embed(&self, grid: &TimeGrid) -> Result<usize> {
        if grid.horizon() + 1e-12 < self.horizon {
            return Err(Error::GridMismatch(format!(
                "path horizon {} is shorter than T = {}",
                grid.horizon(),
                self.horizon
            )));
        }
        grid.steps_per(self.step()).map_err(|_| {
            Error::GridMismatch(format!(
                "path step {} does not divide T/(LN) = {} (N={}, L={})",
                grid.step(),
                self.step(),
                self.n,
                self.l
            ))
        })
    }
}

#[derive(Debug, Clone)]
pub struct HedgeStrategy {
    plan: HedgePlan,
    value: Arc<ValueFunction>,
    initial: f64,
}

/// The modified-game hedge started from `U_0`.
pub fn hedge_strategy(plan: &HedgePlan, value: Arc<ValueFunction>) -> Result<HedgeStrategy> {
    if value.functional().coords() != plan.n || value.functional().horizon() != plan.horizon {
        return Err(Error::Config("plan and functional disagree on N or T".into()));
    }
    let initial = value.replication_price()?;
    Ok(HedgeStrategy {
        plan: plan.clone(),
        value,
        initial,
    })
}

/// The hedge replayed in the Lévy game, liquidated once `|ω| ≥ stop_level`.
pub fn hedge_strategy_levy(
    plan: &HedgePlan,
    value: Arc<ValueFunction>,
    stop_level: f64,
) -> Result<LevyConversion> {
    LevyConversion::with_stop(Arc::new(hedge_strategy(plan, value)?), stop_level)
}

impl HedgeStrategy {
    pub fn plan(&self) -> &HedgePlan {
        &self.plan
    }

    pub fn value_function(&self) -> &ValueFunction {
        &self.value
    }
}

struct HedgeRule<'a> {
    s: &'a HedgeStrategy,
    per_step: usize,
    end: usize,
    history: Vec<f64>,
    done: bool,
}

impl StakeRule for HedgeRule<'_> {
    fn decide(&mut self, prefix: PathPrefix<'_>, _capital: f64) -> Result<StakeDecision> {
        let k = prefix.index();
        if k >= self.end {
            if self.done {
                return Ok(StakeDecision::Hold);
            }
            self.done = true;
            return Ok(StakeDecision::Rebalance(Stakes::ZERO));
        }
        if k % self.per_step != 0 {
            return Ok(StakeDecision::Hold);
        }
        let m = k / self.per_step;
        let (i, j) = (m / self.s.plan.l, m % self.s.plan.l);
        while self.history.len() < i {
            let idx = (self.history.len() + 1) * self.s.plan.l * self.per_step;
            self.history.push(prefix.value(idx));
        }
        let g = self
            .s
            .value
            .greeks(i, prefix.current(), self.s.plan.variance(j), &self.history)?;
        Ok(StakeDecision::Rebalance(Stakes::new(g.ds, 0.5 * g.dss)))
    }
}

impl ElementaryStrategy for HedgeStrategy {
    fn label(&self) -> String {
        format!("hedge[{} N={} L={}]", self.value.functional().family(), self.plan.n, self.plan.l)
    }
    fn game(&self) -> GameKind {
        GameKind::Modified
    }
    fn initial_capital(&self) -> f64 {
        self.initial
    }
    fn stake_bound(&self) -> StakeBound {
        self.plan.stake_bound
    }
    fn positivity(&self) -> bool {
        false
    }
    fn capital_floor(&self) -> Option<f64> {
        Some(self.plan.floor)
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        let per_step = self.plan.embed(grid)?;
        Ok(Box::new(HedgeRule {
            s: self,
            per_step,
            end: per_step * self.plan.l * self.plan.n,
            history: Vec::with_capacity(self.plan.n),
            done: false,
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ShortfallStats {
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    pub mean: f64,
}

impl ShortfallStats {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                median: 0.0,
                q90: 0.0,
                max: 0.0,
                mean: 0.0,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Self {
            median: q(0.5),
            q90: q(0.9),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

/// Outcome of the hedge on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HedgeOutcome {
    pub payoff: f64,
    pub final_capital: f64,
    pub min_capital: f64,
    pub floor_hit: bool,
}

impl HedgeOutcome {
    pub fn shortfall(&self) -> f64 {
        (self.payoff - self.final_capital).max(0.0)
    }
}

pub fn run_hedge(
    strategy: &dyn ElementaryStrategy,
    functional: &CylinderFunctional,
    path: &SampledPath,
) -> Result<HedgeOutcome> {
    let t = evaluate_capital(strategy, path)?;
    Ok(HedgeOutcome {
        payoff: functional.eval_path(path),
        final_capital: t.final_value(),
        min_capital: t.min(),
        floor_hit: t.floor_hit.is_some(),
    })
}

/// JSON summary of a hedge run at one `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HedgeSummary {
    #[serde(rename = "U0")]
    pub u0: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub shortfall_stats: ShortfallStats,
    pub floor_hits: usize,
}

impl HedgeSummary {
    pub fn from_outcomes(u0: f64, l: usize, outcomes: &[HedgeOutcome]) -> Self {
        let sf: Vec<f64> = outcomes.iter().map(HedgeOutcome::shortfall).collect();
        Self {
            u0,
            l,
            shortfall_stats: ShortfallStats::from_values(&sf),
            floor_hits: outcomes.iter().filter(|o| o.floor_hit).count(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::evaluate_capital;
    use crate::wiener::BrownianSampler;

    fn strategy(f: CylinderFunctional, l: usize) -> HedgeStrategy {
        let plan = HedgePlan::new(&f, l).unwrap();
        hedge_strategy(&plan, Arc::new(ValueFunction::with_defaults(Arc::new(f)).unwrap())).unwrap()
    }

    #[test]
    fn plan_grid_arithmetic() {
        let f = CylinderFunctional::constant(1.0, 3, 1.5).unwrap();
        let p = HedgePlan::new(&f, 4).unwrap();
        for i in 0..3 {
            assert!((p.time(i, 4) - p.time(i + 1, 0)).abs() < 1e-15);
        }
        assert_eq!(p.variance(4), 0.0);
        assert!((p.variance(0) - 0.5).abs() < 1e-15);
        assert!(p.embed(&TimeGrid::new(1.5, 24).unwrap()).is_ok());
        assert!(matches!(
            p.embed(&TimeGrid::new(1.5, 20).unwrap()),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn constant_is_replicated_with_zero_stakes() {
        let s = strategy(CylinderFunctional::constant(0.7, 2, 1.0).unwrap(), 8);
        let path = BrownianSampler::new(3, TimeGrid::new(1.0, 64).unwrap()).sample_path(0);
        let t = evaluate_capital(&s, &path).unwrap();
        assert!(t.values.iter().all(|v| (v - 0.7).abs() < 1e-13));
        assert!(t.stakes.iter().all(|s| s.m.abs() < 1e-13 && s.v.abs() < 1e-13));
    }

    #[test]
    fn quadratic_replicates_exactly() {
        let f = CylinderFunctional::quadratic_test(1, 1.0).unwrap();
        for l in [4, 32] {
            let s = strategy(f.clone(), l);
            let sampler = BrownianSampler::new(11, TimeGrid::new(1.0, 128).unwrap());
            for idx in 0..5 {
                let p = sampler.sample_path(idx);
                let t = evaluate_capital(&s, &p).unwrap();
                let w1 = p.values()[128];
                assert!((t.final_value() - w1 * w1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stops_trading_after_horizon() {
        let f = CylinderFunctional::quadratic_test(1, 1.0).unwrap();
        let s = strategy(f, 4);
        let p = BrownianSampler::new(1, TimeGrid::new(2.0, 64).unwrap()).sample_path(0);
        let t = evaluate_capital(&s, &p).unwrap();
        let at_t = t.values[32];
        assert!(t.values[32..].iter().all(|v| *v == at_t));
        assert!((at_t - p.values()[32].powi(2)).abs() < 1e-9);
    }

    #[test]
    fn shortfall_quantiles() {
        let s = ShortfallStats::from_values(&[3.0, 1.0, 2.0]);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.max, 3.0);
        assert_eq!(s.mean, 2.0);
    }
}
