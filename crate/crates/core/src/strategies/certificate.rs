//! Path-level guarantees of the proof strategies.
//!
//! A certificate names an event `E` and a payoff target: wherever `E` fails,
//! the strategy's final capital reaches the target. Events over dyadic
//! increments carry a grid allowance, the largest single-step move of the
//! path, since crossings are only detected at grid times.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::CompoundStrategy;
use crate::path::{dyadic_increments, dyadic_quadratic_variation, SampledPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum CertifiedEvent {
    /// `sup_{[0,T]} |ω| ≤ level`.
    SupAbsBelow { horizon: f64, level: f64 },
    /// `Σ_i (ω_i − ω_{i−1})² ≤ bound` over the `2^n` dyadic cells of `[0,T]`.
    QvBelow { horizon: f64, n: u32, bound: f64 },
    /// `max_i |ω_i − ω_{i−1}| ≤ bound` over the `2^n` dyadic cells of `[0,T]`.
    IncrementsBelow { horizon: f64, n: u32, bound: f64 },
    /// Crossing guard: `max_i |ω_i − ω_{i−1}| ≤ 2ε`, or the bet allowance was
    /// used up before the first cell with a larger increment.
    CrossingGuard {
        horizon: f64,
        n: u32,
        epsilon: f64,
        max_bets: usize,
    },
    All { events: Vec<CertifiedEvent> },
}

/// Cells of `[0,T]` at level `n` in which the crossing strategy bets, with the
/// grid index of each bet. Mirrors the online rule.
pub fn crossing_schedule(
    path: &SampledPath,
    horizon: f64,
    n: u32,
    epsilon: f64,
    max_bets: usize,
) -> Result<Vec<(usize, usize)>> {
    let cell = path.grid().dyadic_cell(horizon, n)?;
    let v = path.values();
    let mut out = Vec::new();
    for c in 0..1usize << n {
        if out.len() >= max_bets {
            break;
        }
        let start = v[c * cell];
        if let Some(k) = (c * cell + 1..(c + 1) * cell).find(|&k| (v[k] - start).abs() >= epsilon) {
            out.push((c, k));
        }
    }
    Ok(out)
}

impl CertifiedEvent {
    /// Whether the event holds on the path, without allowance.
    pub fn holds(&self, path: &SampledPath) -> Result<bool> {
        self.eval(path, false)
    }

    /// Whether the event fails even after the grid allowance; on such paths
    /// the certificate promises the payoff.
    pub fn fails_beyond_tolerance(&self, path: &SampledPath) -> Result<bool> {
        Ok(!self.eval(path, true)?)
    }

    fn eval(&self, path: &SampledPath, allow: bool) -> Result<bool> {
        match self {
            CertifiedEvent::SupAbsBelow { horizon, level } => {
                let end = path.grid().index_of(*horizon)?;
                Ok(path.values()[..=end].iter().all(|v| v.abs() <= *level))
            }
            CertifiedEvent::QvBelow { horizon, n, bound } => {
                Ok(dyadic_quadratic_variation(path, *horizon, *n)? <= *bound)
            }
            CertifiedEvent::IncrementsBelow { horizon, n, bound } => {
                let slack = if allow { path.step_oscillation(*horizon)? } else { 0.0 };
                Ok(dyadic_increments(path, *horizon, *n)?
                    .iter()
                    .all(|b| b.abs() <= bound + slack))
            }
            CertifiedEvent::CrossingGuard {
                horizon,
                n,
                epsilon,
                max_bets,
            } => {
                let slack = if allow { path.step_oscillation(*horizon)? } else { 0.0 };
                let incs = dyadic_increments(path, *horizon, *n)?;
                let Some(steep) = incs.iter().position(|b| b.abs() > 2.0 * epsilon + slack) else {
                    return Ok(true);
                };
                let bets = crossing_schedule(path, *horizon, *n, *epsilon, *max_bets)?;
                let before = bets.iter().filter(|(c, _)| *c < steep).count();
                Ok(before >= *max_bets)
            }
            CertifiedEvent::All { events } => {
                for e in events {
                    if !e.eval(path, allow)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub lemma: String,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_max: Option<u32>,
    pub event: CertifiedEvent,
    /// Lower probability of the event.
    pub lower_prob_bound: f64,
    /// Final capital promised wherever the event fails beyond tolerance.
    pub payoff_target: f64,
    /// Weight of the implemented components.
    pub implemented_mass: f64,
    /// Weight of truncated components, held as idle capital.
    pub truncated_mass: f64,
    /// Bound constant the event implies, if any.
    pub constant: Option<f64>,
}

/// Relative slack on the payoff comparison, for floating-point rounding.
pub const PAYOFF_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathCheck {
    pub path_id: usize,
    pub event_holds: bool,
    pub fails_beyond_tolerance: bool,
    pub final_capital: f64,
    pub max_capital: f64,
    pub violations: Vec<String>,
}

/// A compound strategy together with what it certifies.
#[derive(Debug, Clone)]
pub struct Certified {
    pub compound: CompoundStrategy,
    pub certificate: Certificate,
}

impl Certified {
    pub fn initial_capital(&self) -> f64 {
        self.compound.total_capital()
    }

    /// Runs the compound on one path and checks the certificate there.
    /// Engine faults (positivity, stake bounds) are reported as violations.
    pub fn check(&self, path_id: usize, path: &SampledPath) -> Result<PathCheck> {
        self.check_with_tol(path_id, path, PAYOFF_REL_TOL)
    }

    /// As [`Certified::check`], with relative slack `tol` on the payoff.
    pub fn check_with_tol(&self, path_id: usize, path: &SampledPath, tol: f64) -> Result<PathCheck> {
        let event_holds = self.certificate.event.holds(path)?;
        let fails = self.certificate.event.fails_beyond_tolerance(path)?;
        let mut violations = Vec::new();
        let (final_capital, max_capital) = match self.compound.evaluate_summary(path) {
            Ok(s) => (s.final_capital, s.max),
            Err(e) => {
                violations.push(e.to_string());
                (f64::NAN, f64::NAN)
            }
        };
        let target = self.certificate.payoff_target;
        if fails && !(final_capital >= target * (1.0 - tol)) {
            violations.push(format!(
                "event fails beyond tolerance but final capital {final_capital} < target {target}"
            ));
        }
        Ok(PathCheck {
            path_id,
            event_holds,
            fails_beyond_tolerance: fails,
            final_capital,
            max_capital,
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;

    fn path(vals: Vec<f64>) -> SampledPath {
        let k = vals.len() - 1;
        SampledPath::new(TimeGrid::new(1.0, k).unwrap(), vals).unwrap()
    }

    #[test]
    fn sup_event() {
        let e = CertifiedEvent::SupAbsBelow {
            horizon: 0.5,
            level: 1.0,
        };
        assert!(e.holds(&path(vec![0.0, 1.0, 5.0])).unwrap());
        assert!(!e.holds(&path(vec![0.0, -1.5, 0.0])).unwrap());
    }

    #[test]
    fn increments_allowance() {
        let e = CertifiedEvent::IncrementsBelow {
            horizon: 1.0,
            n: 1,
            bound: 1.0,
        };
        // Cells [0, .5] and [.5, 1] on a 4-step grid; second increment 1.2.
        let p = path(vec![0.0, 0.2, 0.3, 0.9, 1.5]);
        assert!(!e.holds(&p).unwrap());
        // Largest step is 0.6, so 1.2 ≤ 1.0 + 0.6: not beyond tolerance.
        assert!(!e.fails_beyond_tolerance(&p).unwrap());
    }

    #[test]
    fn schedule_bets_strictly_inside_cells() {
        // Two cells of four steps each.
        let p = path(vec![0.0, 0.1, 0.6, 0.7, 0.2, 0.2, 0.2, 0.2, 0.9]);
        let s = crossing_schedule(&p, 1.0, 1, 0.5, 10).unwrap();
        assert_eq!(s, vec![(0, 2)]);
        // The second cell reaches 0.7 only at its end index: no bet there.
        let s = crossing_schedule(&p, 1.0, 1, 0.5, 0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn crossing_guard_exhaustion() {
        let p = path(vec![0.0, 0.6, 0.6, 0.6, 0.6, 1.0, 2.0, 3.0, 3.0]);
        let guard = |max_bets| CertifiedEvent::CrossingGuard {
            horizon: 1.0,
            n: 1,
            epsilon: 0.5,
            max_bets,
        };
        // Second cell has increment 2.4 > 2ε + allowance(1.0).
        assert!(guard(2).fails_beyond_tolerance(&p).unwrap());
        // With one bet, it is spent in the first cell.
        assert!(!guard(1).fails_beyond_tolerance(&p).unwrap());
        assert!(guard(1).holds(&p).unwrap());
    }
}
