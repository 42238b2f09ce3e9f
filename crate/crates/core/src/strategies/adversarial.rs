//! Constructed paths aimed at the edges of certificate events: steep
//! increments, hovering just inside a threshold, and sawtooth paths that
//! burn through the crossing-bet allowance before the steep part arrives.

use super::certificate::CertifiedEvent;
use crate::error::Result;
use crate::path::{SampledPath, TimeGrid};

/// A named constructed path.
#[derive(Debug, Clone)]
pub struct Adversary {
    pub name: String,
    pub path: SampledPath,
}

fn build(grid: TimeGrid, name: String, f: impl Fn(usize) -> f64) -> Result<Adversary> {
    let values: Vec<f64> = (0..=grid.steps()).map(|k| if k == 0 { 0.0 } else { f(k) }).collect();
    Ok(Adversary {
        name,
        path: SampledPath::new(grid, values)?,
    })
}

/// Piecewise-linear interpolation through `(index, value)` knots, constant
/// after the last knot.
fn knots(points: &[(usize, f64)]) -> impl Fn(usize) -> f64 + '_ {
    move |k| {
        let mut prev = (0usize, 0.0);
        for &(i, v) in points {
            if k <= i {
                if i == prev.0 {
                    return v;
                }
                let u = (k - prev.0) as f64 / (i - prev.0) as f64;
                return prev.1 + u * (v - prev.1);
            }
            prev = (i, v);
        }
        prev.1
    }
}

fn sup_paths(grid: TimeGrid, horizon: f64, level: f64) -> Result<Vec<Adversary>> {
    let end = grid.index_of(horizon)?;
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        for frac in [0.1, 0.5, 1.0] {
            let at = ((end as f64 * frac) as usize).max(1);
            out.push(build(grid, format!("sup-steep({sign:+},{frac})"), knots(&[(at, sign * 1.2 * level)]))?);
        }
        out.push(build(grid, format!("sup-hover({sign:+})"), knots(&[(end / 2, sign * 0.999 * level)]))?);
        out.push(build(grid, format!("sup-touch({sign:+})"), knots(&[(end, sign * level)]))?);
        let osc = move |k: usize| {
            if k >= end * 9 / 10 {
                sign * 1.05 * level
            } else if (k / 4) % 2 == 0 {
                0.999 * level
            } else {
                -0.999 * level
            }
        };
        out.push(build(grid, format!("sup-sawtooth-escape({sign:+})"), osc)?);
    }
    out.push(build(grid, "sup-sawtooth".into(), |k| if k % 2 == 0 { 0.0 } else { 0.999 * level })?);
    Ok(out)
}

fn increment_paths(grid: TimeGrid, horizon: f64, n: u32, bound: f64) -> Result<Vec<Adversary>> {
    let cell = grid.dyadic_cell(horizon, n)?;
    let cells = 1usize << n;
    let end = cell * cells;
    let mut out = Vec::new();
    let ramp = |c: usize, size: f64| {
        move |k: usize| {
            let lo = c * cell;
            size * ((k.saturating_sub(lo)) as f64 / cell as f64).min(1.0)
        }
    };
    out.push(build(grid, format!("inc-steep-first(n={n})"), ramp(0, 1.6 * bound))?);
    out.push(build(grid, format!("inc-steep-last(n={n})"), ramp(cells - 1, -1.6 * bound))?);
    out.push(build(grid, format!("inc-steep-mid(n={n})"), ramp(cells / 2, 2.5 * bound))?);
    // Zigzag with every dyadic increment just under the bound.
    out.push(build(grid, format!("inc-hover(n={n})"), move |k: usize| {
        let c = k.min(end) / cell;
        let u = (k.min(end) % cell) as f64 / cell as f64;
        let base = if c % 2 == 0 { 0.0 } else { 0.99 * bound };
        let dir = if c % 2 == 0 { 1.0 } else { -1.0 };
        base + dir * 0.99 * bound * u
    })?);
    // Each cell first strays past ε = bound/2 and returns, spending a bet,
    // then the steep cell arrives at `steep`.
    for steep in [cells - 1, cells / 2] {
        let eps = 0.5 * bound;
        out.push(build(grid, format!("inc-exhaust-then-steep(n={n},cell={steep})"), move |k: usize| {
            let kk = k.min(end);
            let c = (kk / cell).min(cells - 1);
            let offset = if c > steep { 1.6 * bound } else { 0.0 };
            let r = kk - c * cell;
            if c == steep {
                return 1.6 * bound * r as f64 / cell as f64;
            }
            if k >= end {
                return offset;
            }
            let bump = if cell >= 2 && r == cell / 2 { 1.05 * eps } else { 0.0 };
            offset + bump
        })?);
    }
    // Step-by-step sawtooth of amplitude just under ε.
    out.push(build(grid, format!("inc-sawtooth(n={n})"), move |k: usize| {
        if k % 2 == 1 && k < end {
            0.499 * bound
        } else {
            0.0
        }
    })?);
    Ok(out)
}

fn qv_paths(grid: TimeGrid, horizon: f64, n: u32, bound: f64) -> Result<Vec<Adversary>> {
    let cell = grid.dyadic_cell(horizon, n)?;
    let cells = 1usize << n;
    let end = cell * cells;
    let mut out = Vec::new();
    for (tag, factor) in [("fail", 1.05), ("hover", 0.95), ("fail-far", 3.0)] {
        let a = (factor * bound / cells as f64).sqrt();
        out.push(build(grid, format!("qv-zigzag-{tag}(n={n})"), move |k: usize| {
            let kk = k.min(end);
            let c = kk / cell;
            let u = (kk % cell) as f64 / cell as f64;
            let base = if c % 2 == 0 { 0.0 } else { a };
            let dir = if c % 2 == 0 { 1.0 } else { -1.0 };
            base + dir * a * u
        })?);
    }
    let a = (1.2 * bound).sqrt();
    out.push(build(grid, format!("qv-single-jump(n={n})"), knots(&[(cell, a)]))?);
    Ok(out)
}

fn collect(event: &CertifiedEvent, grid: TimeGrid, per_leaf: usize, out: &mut Vec<Adversary>) -> Result<()> {
    let mut take = |v: Vec<Adversary>| out.extend(v.into_iter().take(per_leaf));
    match event {
        CertifiedEvent::SupAbsBelow { horizon, level } => take(sup_paths(grid, *horizon, *level)?),
        CertifiedEvent::IncrementsBelow { horizon, n, bound } => {
            take(increment_paths(grid, *horizon, *n, *bound)?)
        }
        CertifiedEvent::QvBelow { horizon, n, bound } => take(qv_paths(grid, *horizon, *n, *bound)?),
        CertifiedEvent::CrossingGuard {
            horizon, n, epsilon, ..
        } => take(increment_paths(grid, *horizon, *n, 2.0 * epsilon)?),
        CertifiedEvent::All { events } => {
            for e in events {
                collect(e, grid, per_leaf, out)?;
            }
        }
    }
    Ok(())
}

/// Constructed paths for every leaf of a certificate event, at most
/// `per_leaf` of them per leaf.
pub fn adversarial_paths(event: &CertifiedEvent, grid: TimeGrid, per_leaf: usize) -> Result<Vec<Adversary>> {
    let mut out = Vec::new();
    collect(event, grid, per_leaf, &mut out)?;
    Ok(out)
}
