//! Ground truth under Wiener measure: reproducible Brownian sampling,
//! the reflection series for `P(sup |B| ≤ c)`, and Monte Carlo estimates.
//!
//! Paths are drawn from a ChaCha8 stream keyed by `(seed, path index)`, so
//! any path can be regenerated on any worker without replaying the others.
//! Gaussians come from the inverse CDF, one uniform per draw.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{domain, Result};
use crate::heat::CylinderFunctional;
use crate::path::{SampledPath, TimeGrid};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, `u ∈ (0, 1)`.
pub fn normal_quantile(u: f64) -> f64 {
    if u > 0.5 {
        -normal_quantile(1.0 - u)
    } else {
        let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
        // One Newton step against the more accurate CDF.
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf > 0.0 {
            x - (normal_cdf(x) - u) / pdf
        } else {
            x
        }
    }
}

/// Independent standard-normal stream for one path index.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        normal_quantile(self.next_uniform())
    }
}

/// Seeded Brownian motion on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianSampler {
    seed: u64,
    grid: TimeGrid,
}

impl BrownianSampler {
    pub fn new(seed: u64, grid: TimeGrid) -> Self {
        Self { seed, grid }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn stream(&self, index: u64) -> GaussianStream {
        GaussianStream::new(self.seed, index)
    }

    /// Deterministic path for `(seed, grid, index)`.
    pub fn sample_path(&self, index: u64) -> SampledPath {
        let mut g = self.stream(index);
        let sd = self.grid.step().sqrt();
        let mut values = Vec::with_capacity(self.grid.steps() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for _ in 0..self.grid.steps() {
            acc += sd * g.next_standard();
            values.push(acc);
        }
        SampledPath::new(self.grid, values).expect("Gaussian partial sums are finite")
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl McEstimate {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// |mean − target| in units of the standard error (∞ if SE is zero and
    /// the gap is not).
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Welford running mean/variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n.max(1) as f64).sqrt(),
            n: self.n,
            seed: None,
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Empirical frequency of an event with its binomial standard error.
pub fn proportion(hits: u64, n: u64) -> McEstimate {
    let p = hits as f64 / n.max(1) as f64;
    McEstimate {
        mean: p,
        std_error: (p * (1.0 - p) / n.max(1) as f64).sqrt(),
        n,
        seed: None,
    }
}

/// Truncated alternating series together with a bound on what was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesValue {
    pub value: f64,
    pub remainder_bound: f64,
}

/// `P(sup_{t ≤ T} |B_t| ≤ c)` by the reflection series
/// `Σ_k (−1)^k P((2k−1)a < Z < (2k+1)a)`, `a = c / √T`, summed over
/// `|k| ≤ terms`. The k-th and (−k)-th terms coincide; tails are formed
/// with `erfc` so nothing cancels for large `a`.
///
/// For `a < 1` the reflection terms cancel heavily, and the eigenfunction
/// series `(4/π) Σ_n (−1)^n/(2n+1) exp(−(2n+1)²π²/(8a²))` is summed instead.
pub fn prob_sup_abs_below(c: f64, t: f64, terms: usize) -> Result<SeriesValue> {
    if !(c > 0.0) || !(t > 0.0) {
        return domain(format!("need c > 0 and T > 0, got c={c}, T={t}"));
    }
    let a = c / t.sqrt();
    if a < 1.0 {
        Ok(eigenfunction_series(a, terms))
    } else {
        Ok(reflection_series(a, terms))
    }
}

/// Broadie–Glasserman–Kou shift `ζ(1/2)/√(2π)` for barriers monitored on a grid.
pub const DISCRETE_BARRIER_SHIFT: f64 = 0.5826;

/// Allowance for comparing `prob_sup_abs_below(c, T)` with the frequency of
/// `max_k |ω(t_k)| ≤ c` on a `steps`-step grid. The grid maximum behaves like
/// the continuous one with the barrier moved out by `0.5826·√(T/steps)`; the
/// allowance is the probability gap this shift produces, doubled.
pub fn discrete_monitoring_allowance(c: f64, t: f64, steps: usize) -> Result<f64> {
    let shift = DISCRETE_BARRIER_SHIFT * (t / steps as f64).sqrt();
    let hi = prob_sup_abs_below(c + shift, t, 50)?.value;
    let lo = prob_sup_abs_below(c, t, 50)?.value;
    Ok(2.0 * (hi - lo).max(0.0))
}

fn reflection_series(a: f64, terms: usize) -> SeriesValue {
    let s2 = std::f64::consts::SQRT_2;
    // P((2k−1)a < Z < (2k+1)a) for k ≥ 1, as a difference of upper tails.
    let band = |k: usize| {
        let lo = (2 * k - 1) as f64 * a / s2;
        let hi = (2 * k + 1) as f64 * a / s2;
        0.5 * (erfc(lo) - erfc(hi))
    };
    let mut value = 1.0 - erfc(a / s2);
    for k in 1..=terms {
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        value += 2.0 * sign * band(k);
    }
    SeriesValue {
        value,
        remainder_bound: 2.0 * band(terms + 1),
    }
}

fn eigenfunction_series(a: f64, terms: usize) -> SeriesValue {
    let pi = std::f64::consts::PI;
    let term = |n: usize| {
        let k = (2 * n + 1) as f64;
        (-k * k * pi * pi / (8.0 * a * a)).exp() / k
    };
    let mut value = 0.0;
    for n in 0..=terms {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        value += sign * term(n);
    }
    SeriesValue {
        value: 4.0 / pi * value,
        remainder_bound: 4.0 / pi * term(terms + 1),
    }
}

/// Monte Carlo estimate of `∫ F dW`, drawing the cylinder coordinates
/// `ω(T/N), …, ω(T)` directly as Gaussian partial sums.
pub fn mc_expectation(
    functional: &CylinderFunctional,
    n_paths: u64,
    sampler: &BrownianSampler,
) -> McEstimate {
    let n = functional.coords();
    let sd = (functional.horizon() / n as f64).sqrt();
    let mut acc = MeanAccumulator::default();
    let mut x = vec![0.0; n];
    for idx in 0..n_paths {
        let mut g = sampler.stream(idx);
        let mut s = 0.0;
        for xi in x.iter_mut() {
            s += sd * g.next_standard();
            *xi = s;
        }
        acc.push(functional.generator().eval(&x));
    }
    acc.estimate().with_seed(sampler.seed())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}
