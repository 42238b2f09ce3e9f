//! Sampled continuous paths and the path statistics the betting proofs
//! quantify over.
//!
//! A [`SampledPath`] stores ω at the points of a uniform [`TimeGrid`] and is
//! read as the piecewise-linear interpolant between them. Suprema, moduli of
//! continuity and hitting times are all computed for that interpolant.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const ALIGN_TOL: f64 = 1e-9;

/// Uniform grid `t_k = k * horizon / steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return domain(format!("grid horizon must be positive, got {horizon}"));
        }
        if steps == 0 {
            return domain("grid needs at least one step");
        }
        Ok(Self { horizon, steps })
    }

    /// Grid with `2^level` steps per unit of time on `[0, horizon]`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        let per_unit = 1usize << level;
        let steps = horizon * per_unit as f64;
        if (steps - steps.round()).abs() > ALIGN_TOL * steps.max(1.0) {
            return domain(format!("horizon {horizon} is not a multiple of 2^-{level}"));
        }
        Self::new(horizon, steps.round() as usize)
    }

    /// Grid fine enough that every `(T, n)` request has `2^n` dyadic cells of
    /// `T` falling on grid points. Rejects requests that cannot be honoured.
    pub fn with_resolutions(horizon: f64, steps: usize, requests: &[(f64, u32)]) -> Result<Self> {
        let grid = Self::new(horizon, steps)?;
        for &(t, n) in requests {
            grid.dyadic_cell(t, n)?;
        }
        Ok(grid)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    /// Grid index of time `t`, which must sit on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.step();
        let k = x.round();
        if !(t.is_finite() && t >= 0.0) || (x - k).abs() > ALIGN_TOL * x.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "time {t} is not a multiple of the grid step {}",
                self.step()
            )));
        }
        let k = k as usize;
        if k > self.steps {
            return Err(Error::GridMismatch(format!(
                "time {t} lies beyond the grid horizon {}",
                self.horizon
            )));
        }
        Ok(k)
    }

    /// Number of grid steps spanned by a duration `dt`, which must be a
    /// positive multiple of the grid step.
    pub fn steps_per(&self, dt: f64) -> Result<usize> {
        let x = dt / self.step();
        let k = x.round();
        if !(dt > 0.0) || k < 1.0 || (x - k).abs() > ALIGN_TOL * x.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "duration {dt} is not a positive multiple of the grid step {}",
                self.step()
            )));
        }
        Ok(k as usize)
    }

    /// Grid steps per dyadic cell when `[0, t]` is cut into `2^level` pieces.
    pub fn dyadic_cell(&self, t: f64, level: u32) -> Result<usize> {
        let total = self.index_of(t)?;
        if total == 0 {
            return domain("dyadic partition needs a positive horizon");
        }
        let cells = 1usize
            .checked_shl(level)
            .ok_or_else(|| Error::Domain(format!("dyadic level {level} too large")))?;
        if total % cells != 0 {
            return Err(Error::GridMismatch(format!(
                "2^{level} dyadic cells of [0, {t}] do not fall on a grid with {total} steps there"
            )));
        }
        Ok(total / cells)
    }
}

/// A continuous path ω with ω(0) = 0, observed on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return domain(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.steps() + 1
            ));
        }
        if values[0] != 0.0 {
            return domain(format!("path must start at 0, got {}", values[0]));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite path value at index {k}"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=grid.steps())
            .map(|k| if k == 0 { 0.0 } else { f(grid.time(k)) })
            .collect();
        Self::new(grid, values)
    }

    /// Cumulative sum of increments; `increments.len()` must equal the step count.
    pub fn from_increments(grid: TimeGrid, increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for dx in increments {
            acc += dx;
            values.push(acc);
        }
        Self::new(grid, values)
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.steps() + 1],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the piecewise-linear interpolant at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let h = self.grid.step();
        let x = (t / h).clamp(0.0, self.grid.steps() as f64);
        let k = (x.floor() as usize).min(self.grid.steps() - 1);
        let theta = x - k as f64;
        self.values[k] + theta * (self.values[k + 1] - self.values[k])
    }

    /// Path scaled by a constant factor (still starts at 0).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest single-step move `max_k |ω(t_{k+1}) − ω(t_k)|` over `[0, t]`;
    /// for the interpolant this is the modulus at δ = one grid step.
    pub fn step_oscillation(&self, t: f64) -> Result<f64> {
        let end = self.grid.index_of(t)?;
        Ok(self.values[..=end]
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with header `t,omega` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "omega"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.grid.time(k)), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "omega" {
            return domain("path CSV must have header `t,omega`");
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad number `{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if times.len() < 2 {
            return domain("path CSV needs at least two rows");
        }
        let grid = TimeGrid::new(*times.last().unwrap(), times.len() - 1)?;
        for (k, t) in times.iter().enumerate() {
            if (t - grid.time(k)).abs() > 1e-9 * grid.horizon() {
                return domain(format!("row {k}: time {t} is off the uniform grid"));
            }
        }
        Self::new(grid, values)
    }
}

/// Breakpoints of the interpolant on `[0, t]`: grid points up to `t`, plus
/// `t` itself when it falls strictly between grid points.
fn breakpoints(path: &SampledPath, t: f64) -> (Vec<f64>, Vec<f64>) {
    let h = path.grid.step();
    let last = ((t / h) * (1.0 + 1e-15)).floor() as usize;
    let last = last.min(path.grid.steps());
    let mut times: Vec<f64> = (0..=last).map(|k| path.grid.time(k)).collect();
    let mut vals: Vec<f64> = path.values[..=last].to_vec();
    if t - times[last] > 1e-12 * t.max(1.0) {
        times.push(t);
        vals.push(path.value_at(t));
    }
    (times, vals)
}

/// `m^T_δ = sup_{s,t ∈ [0,T], |s−t| ≤ δ} |ω(s) − ω(t)|` for the
/// piecewise-linear interpolant.
///
/// The supremum of a difference of piecewise-linear functions over the band
/// `|s − t| ≤ δ` is attained at a vertex of the cell decomposition: either
/// both ends are breakpoints, or one end is a breakpoint and the other sits
/// exactly δ away. Both families are scanned in linear time.
pub fn modulus_of_continuity(path: &SampledPath, t: f64, delta: f64) -> Result<f64> {
    if !(t > 0.0) || !(delta > 0.0) {
        return domain(format!("modulus needs T > 0 and δ > 0, got T={t}, δ={delta}"));
    }
    if t > path.grid.horizon() * (1.0 + 1e-12) {
        return domain(format!("T={t} exceeds the path horizon {}", path.grid.horizon()));
    }
    let t = t.min(path.grid.horizon());
    let (times, vals) = breakpoints(path, t);
    let slack = 1e-12 * t.max(1.0);

    // Breakpoint pairs: sliding-window max/min.
    let mut best = 0.0f64;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    for j in 0..times.len() {
        while let Some(&i) = maxq.front() {
            if times[j] - times[i] > delta + slack {
                maxq.pop_front();
            } else {
                break;
            }
        }
        while let Some(&i) = minq.front() {
            if times[j] - times[i] > delta + slack {
                minq.pop_front();
            } else {
                break;
            }
        }
        while let Some(&i) = maxq.back() {
            if vals[i] <= vals[j] {
                maxq.pop_back();
            } else {
                break;
            }
        }
        maxq.push_back(j);
        while let Some(&i) = minq.back() {
            if vals[i] >= vals[j] {
                minq.pop_back();
            } else {
                break;
            }
        }
        minq.push_back(j);
        let hi = vals[*maxq.front().unwrap()];
        let lo = vals[*minq.front().unwrap()];
        best = best.max(hi - vals[j]).max(vals[j] - lo);
    }

    // One breakpoint end, the other exactly δ away.
    if delta < t {
        for (&s, &v) in times.iter().zip(&vals) {
            if s + delta <= t {
                best = best.max((path.value_at(s + delta) - v).abs());
            }
            if s - delta >= 0.0 {
                best = best.max((v - path.value_at(s - delta)).abs());
            }
        }
    }
    Ok(best)
}

/// Σ_{i=1}^{2^n} (ω(i 2^{-n} T) − ω((i−1) 2^{-n} T))².
pub fn dyadic_quadratic_variation(path: &SampledPath, t: f64, level: u32) -> Result<f64> {
    let cell = path.grid.dyadic_cell(t, level)?;
    Ok(dyadic_increments_with_cell(path, cell, 1usize << level)
        .map(|b| b * b)
        .sum())
}

/// Increments of ω across the `2^level` dyadic cells of `[0, t]`.
pub fn dyadic_increments(path: &SampledPath, t: f64, level: u32) -> Result<Vec<f64>> {
    let cell = path.grid.dyadic_cell(t, level)?;
    Ok(dyadic_increments_with_cell(path, cell, 1usize << level).collect())
}

fn dyadic_increments_with_cell(
    path: &SampledPath,
    cell: usize,
    cells: usize,
) -> impl Iterator<Item = f64> + '_ {
    (1..=cells).map(move |i| path.values[i * cell] - path.values[(i - 1) * cell])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitMode {
    /// `|ω(t_k)| ≥ level`
    Abs,
    /// `ω(t_k) ≥ level`
    Signed,
}

/// Smallest grid index `k ≥ start` at which the path reaches `level`.
pub fn first_hitting_index(
    path: &SampledPath,
    start: usize,
    level: f64,
    mode: HitMode,
) -> Option<usize> {
    let vals = path.values.get(start..)?;
    let pos = match mode {
        HitMode::Abs => vals.iter().position(|v| v.abs() >= level),
        HitMode::Signed => vals.iter().position(|&v| v >= level),
    };
    pos.map(|p| p + start)
}

/// Cached path statistics on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    horizon: f64,
    dyadic_qv: Vec<f64>,
    running_sup_abs: Vec<f64>,
}

impl PathStats {
    /// Dyadic quadratic variation for levels `0..=max_level` and the running
    /// supremum of |ω| over the whole grid.
    pub fn compute(path: &SampledPath, t: f64, max_level: u32) -> Result<Self> {
        let dyadic_qv = (0..=max_level)
            .map(|n| dyadic_quadratic_variation(path, t, n))
            .collect::<Result<Vec<_>>>()?;
        let mut running = Vec::with_capacity(path.len());
        let mut sup = 0.0f64;
        for v in path.values() {
            sup = sup.max(v.abs());
            running.push(sup);
        }
        Ok(Self {
            horizon: t,
            dyadic_qv,
            running_sup_abs: running,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dyadic_qv(&self, level: u32) -> Option<f64> {
        self.dyadic_qv.get(level as usize).copied()
    }

    /// `sup_{s ≤ t_k} |ω(s)|` for each grid index `k`.
    pub fn running_sup_abs(&self) -> &[f64] {
        &self.running_sup_abs
    }

    pub fn modulus(&self, path: &SampledPath, delta: f64) -> Result<f64> {
        modulus_of_continuity(path, self.horizon, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64, k: usize) -> TimeGrid {
        TimeGrid::new(h, k).unwrap()
    }

    /// All breakpoint pairs plus every breakpoint-to-(±δ) pair, by brute force.
    fn brute_modulus(path: &SampledPath, t: f64, delta: f64) -> f64 {
        let (times, vals) = breakpoints(path, t);
        let mut best = 0.0f64;
        for i in 0..times.len() {
            for j in i..times.len() {
                if times[j] - times[i] <= delta + 1e-12 {
                    best = best.max((vals[j] - vals[i]).abs());
                }
            }
            for s in [times[i] + delta, times[i] - delta] {
                if (0.0..=t).contains(&s) {
                    best = best.max((path.value_at(s) - vals[i]).abs());
                }
            }
        }
        best
    }

    fn lcg_path(g: TimeGrid, seed: u64) -> SampledPath {
        let mut x = seed;
        let incs: Vec<f64> = (0..g.steps())
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * g.step().sqrt() * 3.4
            })
            .collect();
        SampledPath::from_increments(g, &incs).unwrap()
    }

    #[test]
    fn rejects_bad_paths() {
        let g = grid(1.0, 2);
        assert!(SampledPath::new(g, vec![0.0, 1.0]).is_err());
        assert!(SampledPath::new(g, vec![0.5, 1.0, 2.0]).is_err());
        assert!(SampledPath::new(g, vec![0.0, f64::NAN, 2.0]).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn modulus_zero_path() {
        let p = SampledPath::zero(grid(1.0, 16));
        assert_eq!(modulus_of_continuity(&p, 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn modulus_sawtooth_adjacent_oscillation() {
        let g = grid(1.0, 8);
        let vals = (0..=8).map(|k| (k % 2) as f64).collect();
        let p = SampledPath::new(g, vals).unwrap();
        let d = g.step();
        assert_eq!(modulus_of_continuity(&p, 4.0 * d, d).unwrap(), 1.0);
    }

    #[test]
    fn modulus_rejects_nonpositive_arguments() {
        let p = SampledPath::zero(grid(1.0, 4));
        assert!(modulus_of_continuity(&p, 0.0, 0.1).is_err());
        assert!(modulus_of_continuity(&p, 1.0, 0.0).is_err());
        assert!(modulus_of_continuity(&p, 2.0, 0.1).is_err());
    }

    #[test]
    fn modulus_matches_brute_force_off_grid() {
        let g = grid(1.0, 200);
        for seed in 0..5 {
            let p = lcg_path(g, seed);
            for &(t, d) in &[(1.0, 0.013), (0.7314, 0.05), (0.5, 0.5), (0.9, 2.0), (1.0, 0.005)] {
                let fast = modulus_of_continuity(&p, t, d).unwrap();
                let slow = brute_modulus(&p, t, d);
                assert!((fast - slow).abs() < 1e-12, "T={t} δ={d}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn modulus_dominates_dense_sampling() {
        let g = grid(1.0, 64);
        let p = lcg_path(g, 9);
        let (t, d) = (0.83, 0.071);
        let m = modulus_of_continuity(&p, t, d).unwrap();
        let n = 1500;
        let mut sampled = 0.0f64;
        for a in 0..=n {
            let s = t * a as f64 / n as f64;
            for b in a..=n {
                let u = t * b as f64 / n as f64;
                if u - s > d {
                    break;
                }
                sampled = sampled.max((p.value_at(u) - p.value_at(s)).abs());
            }
        }
        assert!(m + 1e-12 >= sampled);
        assert!(m - sampled < 0.02 * m, "{m} vs {sampled}");
    }

    #[test]
    fn dyadic_qv_examples() {
        let g = grid(1.0, 8);
        let zero = SampledPath::zero(g);
        assert_eq!(dyadic_quadratic_variation(&zero, 1.0, 2).unwrap(), 0.0);
        let lin = SampledPath::from_fn(g, |t| t).unwrap();
        let qv = dyadic_quadratic_variation(&lin, 1.0, 2).unwrap();
        assert!((qv - 0.25).abs() < 1e-15);
        assert!(dyadic_quadratic_variation(&lin, 1.0, 4).is_err());
        assert!(dyadic_quadratic_variation(&lin, 0.3, 1).is_err());
    }

    #[test]
    fn hitting_index_examples() {
        let g = grid(1.0, 10);
        let zero = SampledPath::zero(g);
        assert_eq!(first_hitting_index(&zero, 0, 1.0, HitMode::Abs), None);
        let p = SampledPath::from_fn(g, |t| t).unwrap();
        assert_eq!(first_hitting_index(&p, 0, 0.35, HitMode::Signed), Some(4));
        assert_eq!(first_hitting_index(&p, 6, 0.35, HitMode::Abs), Some(6));
        let neg = p.scaled(-1.0);
        assert_eq!(first_hitting_index(&neg, 0, 0.35, HitMode::Signed), None);
        assert_eq!(first_hitting_index(&neg, 0, 0.35, HitMode::Abs), Some(4));
    }

    #[test]
    fn stats_cache_matches_recompute() {
        let g = grid(1.0, 256);
        let p = lcg_path(g, 3);
        let stats = PathStats::compute(&p, 1.0, 8).unwrap();
        for n in 0..=8 {
            let fresh = dyadic_quadratic_variation(&p, 1.0, n).unwrap();
            let cached = stats.dyadic_qv(n).unwrap();
            assert!((fresh - cached).abs() <= 1e-12 * fresh.abs().max(1e-300));
        }
        let rs = stats.running_sup_abs();
        assert!(rs.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(rs[256], p.values().iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = lcg_path(grid(2.0, 37), 11);
        let text = p.to_csv_string();
        assert!(text.starts_with("t,omega\n"));
        let back = SampledPath::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn resolution_requests_are_checked() {
        assert!(TimeGrid::with_resolutions(4.0, 4096, &[(1.0, 10), (4.0, 12)]).is_ok());
        assert!(TimeGrid::with_resolutions(4.0, 4096, &[(1.0, 11)]).is_err());
        assert!(TimeGrid::dyadic(1.5, 3).is_ok());
        assert!(TimeGrid::dyadic(0.3, 2).is_err());
    }
}
