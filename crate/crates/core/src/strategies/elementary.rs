//! The three elementary proof strategies: the boundedness bet, the
//! quadratic-variation budget bet and the ε-crossing bet.

use std::sync::Arc;

use super::certificate::{Certificate, CertifiedEvent};
use crate::error::{domain, Result};
use crate::game::{
    ElementaryStrategy, GameKind, PathPrefix, StakeBound, StakeDecision, StakeRule, Stakes,
};
use crate::path::TimeGrid;

/// Bets `α/T` on `ω(t)² − t` at time 0 in the Lévy game and stops at `T` or
/// when `|ω|` first reaches `α^{-1/2} T^{1/2}`.
#[derive(Debug, Clone)]
pub struct Boundedness {
    pub alpha: f64,
    pub horizon: f64,
}

impl Boundedness {
    pub fn level(&self) -> f64 {
        (self.horizon / self.alpha).sqrt()
    }
}

pub fn boundedness_strategy(alpha: f64, horizon: f64) -> Result<(Boundedness, Certificate)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("α must lie in (0, 1), got {alpha}"));
    }
    if !(horizon > 0.0) {
        return domain(format!("T must be positive, got {horizon}"));
    }
    let s = Boundedness { alpha, horizon };
    let cert = Certificate {
        lemma: "boundedness".into(),
        alpha,
        horizon,
        n_max: None,
        event: CertifiedEvent::SupAbsBelow {
            horizon,
            level: s.level(),
        },
        lower_prob_bound: 1.0 - alpha,
        payoff_target: 1.0,
        implemented_mass: alpha,
        truncated_mass: 0.0,
        constant: None,
    };
    Ok((s, cert))
}

struct BoundednessRule {
    stake: f64,
    level: f64,
    end: usize,
    live: bool,
    done: bool,
}

impl StakeRule for BoundednessRule {
    fn decide(&mut self, prefix: PathPrefix<'_>, _: f64) -> Result<StakeDecision> {
        if self.done {
            return Ok(StakeDecision::Hold);
        }
        if prefix.index() >= self.end || prefix.current().abs() >= self.level {
            self.done = true;
            return Ok(if self.live {
                StakeDecision::Rebalance(Stakes::ZERO)
            } else {
                StakeDecision::Hold
            });
        }
        if !self.live {
            self.live = true;
            return Ok(StakeDecision::Rebalance(Stakes::new(0.0, self.stake)));
        }
        Ok(StakeDecision::Hold)
    }
}

impl ElementaryStrategy for Boundedness {
    fn label(&self) -> String {
        format!("boundedness(α={}, T={})", self.alpha, self.horizon)
    }
    fn game(&self) -> GameKind {
        GameKind::Levy
    }
    fn initial_capital(&self) -> f64 {
        self.alpha
    }
    fn stake_bound(&self) -> StakeBound {
        StakeBound::new(0.0, self.alpha / self.horizon)
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        Ok(Box::new(BoundednessRule {
            stake: self.alpha / self.horizon,
            level: self.level(),
            end: grid.index_of(self.horizon)?,
            live: false,
            done: false,
        }))
    }
}

/// Bets `scale` on `(ω(t) − ω(τ))² − (t − τ)`, re-anchored at every dyadic
/// time `τ = j 2^{-n} T`, from initial capital `scale·T`. Its capital at
/// `j 2^{-n} T` is `scale·(T + Σ_{i≤j} (ω_i − ω_{i−1})² − j 2^{-n} T)`.
#[derive(Debug, Clone)]
pub struct QvBudget {
    pub horizon: f64,
    pub level: u32,
    pub scale: f64,
}

impl QvBudget {
    /// Stake `β/(2T)`, capital `β/2`; reaches 1 when `Σ(dω)² ≥ 2T/β`.
    pub fn normalized(horizon: f64, level: u32, beta: f64) -> Self {
        Self {
            horizon,
            level,
            scale: beta / (2.0 * horizon),
        }
    }
}

/// Unit-stake budget bet with initial capital `T`; certifies
/// `Σ(dω)² ≤ 2T/β` with lower probability `1 − β/2`.
pub fn qv_budget_strategy(horizon: f64, level: u32, beta: f64) -> Result<(QvBudget, Certificate)> {
    if !(horizon > 0.0 && beta > 0.0) {
        return domain(format!("need T > 0 and β > 0, got T={horizon}, β={beta}"));
    }
    let s = QvBudget {
        horizon,
        level,
        scale: 1.0,
    };
    let bound = 2.0 * horizon / beta;
    let cert = Certificate {
        lemma: "qv-budget".into(),
        alpha: beta,
        horizon,
        n_max: Some(level),
        event: CertifiedEvent::QvBelow {
            horizon,
            n: level,
            bound,
        },
        lower_prob_bound: (1.0 - beta / 2.0).max(0.0),
        payoff_target: bound,
        implemented_mass: beta / 2.0,
        truncated_mass: 0.0,
        constant: None,
    };
    Ok((s, cert))
}

struct DyadicRule {
    cell: usize,
    end: usize,
    stake: f64,
    done: bool,
}

impl StakeRule for DyadicRule {
    fn decide(&mut self, prefix: PathPrefix<'_>, _: f64) -> Result<StakeDecision> {
        let k = prefix.index();
        if self.done {
            return Ok(StakeDecision::Hold);
        }
        if k >= self.end {
            self.done = true;
            return Ok(StakeDecision::Rebalance(Stakes::ZERO));
        }
        if k % self.cell == 0 {
            return Ok(StakeDecision::Rebalance(Stakes::new(0.0, self.stake)));
        }
        Ok(StakeDecision::Hold)
    }
}

impl ElementaryStrategy for QvBudget {
    fn label(&self) -> String {
        format!("qv-budget(T={}, n={}, x{})", self.horizon, self.level, self.scale)
    }
    fn game(&self) -> GameKind {
        GameKind::Modified
    }
    fn initial_capital(&self) -> f64 {
        self.scale * self.horizon
    }
    fn stake_bound(&self) -> StakeBound {
        StakeBound::new(0.0, self.scale)
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        let cell = grid.dyadic_cell(self.horizon, self.level)?;
        Ok(Box::new(DyadicRule {
            cell,
            end: cell << self.level,
            stake: self.scale,
            done: false,
        }))
    }
}

/// In each dyadic cell of `[0,T]` at level `n`, bets `stake` on
/// `(ω(t) − ω(τ))² − (t − τ)` from the first grid time `τ` strictly inside
/// the cell with `|ω(τ) − ω(cell start)| ≥ ε`, and releases the bet at the
/// cell end. At most `max_bets` bets are placed; the initial capital
/// `max_bets · 2^{-n} T · stake` covers the drift of all of them.
#[derive(Debug, Clone)]
pub struct Crossing {
    pub horizon: f64,
    pub level: u32,
    pub epsilon: f64,
    pub max_bets: usize,
    pub stake: f64,
}

impl Crossing {
    pub fn cell_length(&self) -> f64 {
        self.horizon * 2f64.powi(-(self.level as i32))
    }
}

/// Unit-stake crossing strategy. Certifies the crossing guard: if some
/// dyadic increment exceeds `2ε` (plus the grid allowance) while bets
/// remain, the final capital is at least `ε²` above zero.
pub fn epsilon_crossing_strategy(
    horizon: f64,
    level: u32,
    epsilon: f64,
    max_bets: usize,
) -> Result<(Crossing, Certificate)> {
    if !(epsilon > 0.0 && horizon > 0.0) {
        return domain(format!("need ε > 0 and T > 0, got ε={epsilon}, T={horizon}"));
    }
    let s = Crossing {
        horizon,
        level,
        epsilon,
        max_bets,
        stake: 1.0,
    };
    let cert = Certificate {
        lemma: "epsilon-crossing".into(),
        alpha: s.initial_capital() / (epsilon * epsilon),
        horizon,
        n_max: Some(level),
        event: CertifiedEvent::CrossingGuard {
            horizon,
            n: level,
            epsilon,
            max_bets,
        },
        lower_prob_bound: (1.0 - s.initial_capital() / (epsilon * epsilon)).max(0.0),
        payoff_target: epsilon * epsilon,
        implemented_mass: s.initial_capital(),
        truncated_mass: 0.0,
        constant: None,
    };
    Ok((s, cert))
}

struct CrossingRule {
    cell: usize,
    end: usize,
    epsilon: f64,
    stake: f64,
    bets_left: usize,
    start: f64,
    in_bet: bool,
    done: bool,
}

impl StakeRule for CrossingRule {
    fn decide(&mut self, prefix: PathPrefix<'_>, _: f64) -> Result<StakeDecision> {
        if self.done {
            return Ok(StakeDecision::Hold);
        }
        let k = prefix.index();
        let w = prefix.current();
        if k % self.cell == 0 {
            self.start = w;
            if k >= self.end {
                self.done = true;
            }
            if self.in_bet {
                self.in_bet = false;
                return Ok(StakeDecision::Rebalance(Stakes::ZERO));
            }
            return Ok(StakeDecision::Hold);
        }
        if !self.in_bet && self.bets_left > 0 && (w - self.start).abs() >= self.epsilon {
            self.in_bet = true;
            self.bets_left -= 1;
            return Ok(StakeDecision::Rebalance(Stakes::new(0.0, self.stake)));
        }
        Ok(StakeDecision::Hold)
    }
}

impl ElementaryStrategy for Crossing {
    fn label(&self) -> String {
        format!(
            "crossing(T={}, n={}, ε={:.4}, bets≤{}, x{})",
            self.horizon, self.level, self.epsilon, self.max_bets, self.stake
        )
    }
    fn game(&self) -> GameKind {
        GameKind::Modified
    }
    fn initial_capital(&self) -> f64 {
        self.max_bets as f64 * self.cell_length() * self.stake
    }
    fn stake_bound(&self) -> StakeBound {
        StakeBound::new(0.0, self.stake)
    }
    fn rule(&self, grid: &TimeGrid) -> Result<Box<dyn StakeRule + '_>> {
        let cell = grid.dyadic_cell(self.horizon, self.level)?;
        Ok(Box::new(CrossingRule {
            cell,
            end: cell << self.level,
            epsilon: self.epsilon,
            stake: self.stake,
            bets_left: self.max_bets,
            start: 0.0,
            in_bet: false,
            done: false,
        }))
    }
}

pub fn shared<S: ElementaryStrategy + 'static>(s: S) -> Arc<dyn ElementaryStrategy> {
    Arc::new(s)
}
