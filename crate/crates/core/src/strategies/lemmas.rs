//! Compound certificate strategies: the modulus-of-continuity bounds on one
//! horizon and on all dyadic horizons, the dyadic quadratic-variation bound,
//! and their stopped replays in the Lévy game.

use std::sync::Arc;

use super::certificate::{Certificate, Certified, CertifiedEvent};
use super::constants::{
    alpha_weight, beta, bet_allowance, crossing_level, dyadic_horizons, qv_weight,
    C_LEVY_SUPER_MODULUS, C_MODULUS, C_QV, C_SUPER_MODULUS,
};
use super::elementary::{boundedness_strategy, Crossing, QvBudget};
use crate::error::{domain, Result};
use crate::game::{combine, CompoundStrategy, ElementaryStrategy, GameKind, LevyConversion};
use crate::path::TimeGrid;

/// Finest dyadic level of `[0, T]` that falls on the grid.
pub fn grid_levels(grid: &TimeGrid, horizon: f64) -> Result<u32> {
    let steps = grid.index_of(horizon)?;
    if steps == 0 {
        return domain("horizon must be positive");
    }
    Ok(steps.trailing_zeros())
}

/// Stops a modified-game strategy once `|ω|` reaches `stop_level` and replays
/// it in the Lévy game.
pub fn levy_transfer(
    strategy: Arc<dyn ElementaryStrategy>,
    stop_level: f64,
) -> Result<Arc<dyn ElementaryStrategy>> {
    Ok(Arc::new(LevyConversion::with_stop(strategy, stop_level)?))
}

/// Budget and crossing bets at level `n` with total capital `β`. Final
/// capital reaches 1 wherever some dyadic increment at level `n` exceeds
/// `2ε` plus the largest single-step move.
pub fn crossing_pair(horizon: f64, n: u32, beta_n: f64) -> Result<CompoundStrategy> {
    if !(horizon > 0.0 && beta_n > 0.0) {
        return domain(format!("need T > 0 and β > 0, got T={horizon}, β={beta_n}"));
    }
    let eps = crossing_level(horizon, n, beta_n);
    let budget = QvBudget::normalized(horizon, n, beta_n);
    let crossing = Crossing {
        horizon,
        level: n,
        epsilon: eps,
        max_bets: (bet_allowance(horizon, beta_n, eps) + 1e-9).floor() as usize,
        stake: 1.0 / (eps * eps),
    };
    let parts: Vec<(Arc<dyn ElementaryStrategy>, f64)> = vec![
        (Arc::new(budget.clone()), budget.initial_capital()),
        (Arc::new(crossing.clone()), crossing.initial_capital()),
    ];
    combine(format!("pair(T={horizon}, n={n})"), parts)?.with_remainder(beta_n, GameKind::Modified)
}

fn level_event(horizon: f64, n: u32, beta_n: f64) -> CertifiedEvent {
    CertifiedEvent::IncrementsBelow {
        horizon,
        n,
        bound: 2.0 * crossing_level(horizon, n, beta_n),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("α must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

fn modulus_parts(alpha: f64, horizon: f64, n_max: u32) -> Result<(CompoundStrategy, Vec<CertifiedEvent>, f64)> {
    let mut compound = combine(format!("modulus(α={alpha}, T={horizon})"), vec![])?;
    let mut events = Vec::new();
    let mut mass = 0.0;
    for n in 1..=n_max {
        let b = beta(alpha, n);
        compound = compound.absorb(crossing_pair(horizon, n, b)?);
        events.push(level_event(horizon, n, b));
        mass += b;
    }
    Ok((compound, events, mass))
}

/// Pairs for levels `1..=n_max` weighted by `β_n`, padded with idle capital
/// to `α`. Where every level event holds, the modulus of continuity on
/// `[0,T]` obeys `157 α^{-1/2} T^{3/8} δ^{1/8}` for all `δ`, provided
/// `n_max` is the grid resolution of `[0,T]`.
pub fn modulus_certificate_strategy(alpha: f64, horizon: f64, n_max: u32) -> Result<Certified> {
    check_alpha(alpha)?;
    let (compound, events, mass) = modulus_parts(alpha, horizon, n_max)?;
    let compound = compound.with_remainder(alpha, GameKind::Modified)?;
    Ok(Certified {
        compound,
        certificate: Certificate {
            lemma: "modulus".into(),
            alpha,
            horizon,
            n_max: Some(n_max),
            event: CertifiedEvent::All { events },
            lower_prob_bound: 1.0 - alpha,
            payoff_target: 1.0,
            implemented_mass: mass,
            truncated_mass: alpha - mass,
            constant: Some(C_MODULUS),
        },
    })
}

/// Modulus certificates on `T ∈ {1, 2, 4, …}` up to the grid horizon,
/// weighted by `α_T`, each at the grid resolution of `[0,T]`.
pub fn super_modulus_strategy(alpha: f64, grid: &TimeGrid) -> Result<Certified> {
    check_alpha(alpha)?;
    let mut compound = combine(format!("super-modulus(α={alpha})"), vec![])?;
    let mut events = Vec::new();
    let mut mass = 0.0;
    for t in dyadic_horizons(grid.horizon()) {
        let a = alpha_weight(alpha, t);
        let (c, e, m) = modulus_parts(a, t, grid_levels(grid, t)?)?;
        compound = compound.absorb(c);
        events.extend(e);
        mass += m;
    }
    let compound = compound.with_remainder(alpha, GameKind::Modified)?;
    Ok(Certified {
        compound,
        certificate: Certificate {
            lemma: "super-modulus".into(),
            alpha,
            horizon: grid.horizon(),
            n_max: None,
            event: CertifiedEvent::All { events },
            lower_prob_bound: 1.0 - alpha,
            payoff_target: 1.0,
            implemented_mass: mass,
            truncated_mass: alpha - mass,
            constant: Some(C_SUPER_MODULUS),
        },
    })
}

/// Budget bets with capital `w(T, n)` and stake `w/T` for
/// `T ∈ {1, 2, 4, …} ∩ [1, T_max]`, `1 ≤ n ≤ n_max`; certifies
/// `Σ(dω)² ≤ 46 α^{-1} T² 2^{n/16}` on every implemented `(T, n)`.
pub fn qv_bound_strategy(alpha: f64, t_max: f64, n_max: u32) -> Result<Certified> {
    check_alpha(alpha)?;
    let mut parts: Vec<(Arc<dyn ElementaryStrategy>, f64)> = Vec::new();
    let mut events = Vec::new();
    let mut mass = 0.0;
    for t in dyadic_horizons(t_max) {
        for n in 1..=n_max {
            let w = qv_weight(alpha, t, n);
            let s = QvBudget {
                horizon: t,
                level: n,
                scale: w / t,
            };
            parts.push((Arc::new(s), w));
            events.push(CertifiedEvent::QvBelow {
                horizon: t,
                n,
                bound: qv_event_bound(alpha, t, n),
            });
            mass += w;
        }
    }
    let compound = combine(format!("qv-bound(α={alpha})"), parts)?
        .with_remainder(alpha, GameKind::Modified)?;
    Ok(Certified {
        compound,
        certificate: Certificate {
            lemma: "qv-bound".into(),
            alpha,
            horizon: t_max,
            n_max: Some(n_max),
            event: CertifiedEvent::All { events },
            lower_prob_bound: 1.0 - alpha,
            payoff_target: 1.0,
            implemented_mass: mass,
            truncated_mass: alpha - mass,
            constant: Some(C_QV),
        },
    })
}

/// `46 α^{-1} T² 2^{n/16}`.
pub fn qv_event_bound(alpha: f64, horizon: f64, n: u32) -> f64 {
    C_QV / alpha * horizon * horizon * 2f64.powf(n as f64 / 16.0)
}

/// The boundedness bet together with the modulus pairs, stopped at
/// `|ω| = α^{-1/2} T^{1/2} + 1` and played in the Lévy game. Initial
/// capital `2α`.
pub fn levy_modulus_strategy(alpha: f64, horizon: f64, n_max: u32) -> Result<Certified> {
    check_alpha(alpha)?;
    let (bounded, bcert) = boundedness_strategy(alpha, horizon)?;
    let stop = bounded.level() + 1.0;
    let inner = modulus_certificate_strategy(alpha, horizon, n_max)?;
    let mut compound = inner
        .compound
        .map_components(format!("levy-modulus(α={alpha}, T={horizon})"), |s| {
            levy_transfer(s.clone(), stop)
        })?;
    compound.push(Arc::new(bounded), alpha);
    let mut events = vec![bcert.event];
    if let CertifiedEvent::All { events: e } = inner.certificate.event {
        events.extend(e);
    }
    Ok(Certified {
        compound,
        certificate: Certificate {
            lemma: "levy-modulus".into(),
            alpha,
            horizon,
            n_max: Some(n_max),
            event: CertifiedEvent::All { events },
            lower_prob_bound: (1.0 - 2.0 * alpha).max(0.0),
            payoff_target: 1.0,
            implemented_mass: alpha + inner.certificate.implemented_mass,
            truncated_mass: inner.certificate.truncated_mass,
            constant: Some(C_MODULUS),
        },
    })
}

/// Lévy-game modulus strategies with `α_T / 2` on every dyadic horizon of
/// the grid.
pub fn levy_super_modulus_strategy(alpha: f64, grid: &TimeGrid) -> Result<Certified> {
    check_alpha(alpha)?;
    let mut compound = combine(format!("levy-super-modulus(α={alpha})"), vec![])?;
    let mut events = Vec::new();
    let mut mass = 0.0;
    for t in dyadic_horizons(grid.horizon()) {
        let c = levy_modulus_strategy(alpha_weight(alpha, t) / 2.0, t, grid_levels(grid, t)?)?;
        compound = compound.absorb(c.compound);
        if let CertifiedEvent::All { events: e } = c.certificate.event {
            events.extend(e);
        }
        mass += c.certificate.implemented_mass;
    }
    let compound = compound.with_remainder(alpha, GameKind::Levy)?;
    Ok(Certified {
        compound,
        certificate: Certificate {
            lemma: "levy-super-modulus".into(),
            alpha,
            horizon: grid.horizon(),
            n_max: None,
            event: CertifiedEvent::All { events },
            lower_prob_bound: 1.0 - alpha,
            payoff_target: 1.0,
            implemented_mass: mass,
            truncated_mass: alpha - mass,
            constant: Some(C_LEVY_SUPER_MODULUS),
        },
    })
}

/// The boundedness bet as a one-account compound.
pub fn boundedness_certified(alpha: f64, horizon: f64) -> Result<Certified> {
    let (s, certificate) = boundedness_strategy(alpha, horizon)?;
    let compound = combine(
        format!("boundedness(α={alpha}, T={horizon})"),
        vec![(Arc::new(s) as Arc<dyn ElementaryStrategy>, alpha)],
    )?;
    Ok(Certified {
        compound,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{modulus_of_continuity, SampledPath};
    use crate::strategies::constants::modulus_bound;
    use crate::wiener::BrownianSampler;

    #[test]
    fn pair_spends_beta() {
        for n in 1..10 {
            let b = beta(0.1, n);
            let p = crossing_pair(1.0, n, b).unwrap();
            assert!((p.total_capital() - b).abs() < 1e-15);
            let active: f64 = p.components()[..2].iter().map(|c| c.capital).sum();
            assert!(active <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn masses_add_to_alpha() {
        let g = TimeGrid::new(4.0, 1024).unwrap();
        let cs = [
            modulus_certificate_strategy(0.1, 1.0, 8).unwrap(),
            super_modulus_strategy(0.1, &g).unwrap(),
            qv_bound_strategy(0.1, 4.0, 6).unwrap(),
            levy_super_modulus_strategy(0.1, &g).unwrap(),
        ];
        for c in &cs {
            let cert = &c.certificate;
            assert!((cert.implemented_mass + cert.truncated_mass - 0.1).abs() < 1e-12);
            assert!((c.initial_capital() - 0.1).abs() < 1e-12, "{}", cert.lemma);
        }
        let l7 = levy_modulus_strategy(0.1, 1.0, 8).unwrap();
        assert!((l7.initial_capital() - 0.2).abs() < 1e-12);
        assert_eq!(l7.certificate.lower_prob_bound, 0.8);
    }

    #[test]
    fn grid_levels_of_horizons() {
        let g = TimeGrid::new(4.0, 3 * 256).unwrap();
        assert_eq!(grid_levels(&g, 1.0).unwrap(), 6);
        assert_eq!(grid_levels(&g, 4.0).unwrap(), 8);
    }

    #[test]
    fn transferred_stake_bound() {
        let (s, _) = super::super::elementary::qv_budget_strategy(1.0, 1, 0.5).unwrap();
        let t = levy_transfer(Arc::new(s), 5.0).unwrap();
        assert_eq!(t.stake_bound().m, 10.0);
        assert_eq!(t.game(), GameKind::Levy);
    }

    #[test]
    fn smooth_path_holds_without_payoff() {
        let g = TimeGrid::new(1.0, 256).unwrap();
        let p = SampledPath::from_fn(g, |t| t.sin() / 10.0).unwrap();
        let c = modulus_certificate_strategy(0.1, 1.0, 8).unwrap();
        let r = c.check(0, &p).unwrap();
        assert!(r.event_holds && r.violations.is_empty());
        assert!(r.final_capital >= 0.0 && r.final_capital < 1.0);
    }

    #[test]
    fn steep_level_increment_pays() {
        let g = TimeGrid::new(1.0, 256).unwrap();
        let c = modulus_certificate_strategy(0.1, 1.0, 8).unwrap();
        let e3 = crossing_level(1.0, 3, beta(0.1, 3));
        // Linear ramp of 3ε_3 over the cell [1/8, 2/8].
        let p = SampledPath::from_fn(g, |t| 3.0 * e3 * ((t - 0.125) * 8.0).clamp(0.0, 1.0)).unwrap();
        let r = c.check(0, &p).unwrap();
        assert!(r.fails_beyond_tolerance);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert!(r.final_capital >= 1.0);
    }

    #[test]
    fn level_events_give_modulus_bound() {
        let g = TimeGrid::new(1.0, 256).unwrap();
        let c = modulus_certificate_strategy(0.1, 1.0, 8).unwrap();
        let sampler = BrownianSampler::new(2, g);
        for i in 0..200 {
            let p = sampler.sample_path(i).scaled(3.0);
            if c.certificate.event.holds(&p).unwrap() {
                for k in 1..=256 {
                    let d = k as f64 / 256.0;
                    let m = modulus_of_continuity(&p, 1.0, d).unwrap();
                    assert!(m <= modulus_bound(C_MODULUS, 0.1, 1.0, d));
                }
            }
        }
    }
}
