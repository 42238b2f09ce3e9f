//! Gaussian-smoothed value functions `Ū_i(s, D; s_1, …, s_i)`.
//!
//! `Ū_i(s, D)` is the expectation of `U(s_1, …, s_i, X_{i+1}, …, X_N)` where
//! `X_{i+1} = s + Z_0` with `Z_0 ~ N(0, D)` and `X_{k+1} = X_k + Z_k` with
//! `Z_k ~ N(0, T/N)`. Derivatives in `s` shift every free coordinate at once,
//! so they are directional derivatives of `U` along `e_{i+1} + … + e_N`,
//! averaged by the same quadrature.
//!
//! Layers over an unbounded factor use Gauss–Hermite nodes. Layers over a
//! compactly supported factor use the trapezoid rule on the support: the
//! integrand is flat to all orders at the support edges, where Gauss–Hermite
//! converges slowly and the trapezoid rule converges fast.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functional::CylinderFunctional;
use super::hermite::GaussHermite;
use super::jet::Jet;
use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 48;
pub const DEFAULT_DIM_CAP: usize = 6;
/// Gaussian tail cut for compact-factor layers, in standard deviations.
const TAIL_SDS: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct ValueFunction {
    functional: Arc<CylinderFunctional>,
    rule: GaussHermite,
    dim_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    pub value: f64,
    pub ds: f64,
    pub dss: f64,
}

impl ValueFunction {
    pub fn new(functional: Arc<CylinderFunctional>, nodes: usize, dim_cap: usize) -> Result<Self> {
        Ok(Self {
            functional,
            rule: GaussHermite::new(nodes)?,
            dim_cap,
        })
    }

    pub fn with_defaults(functional: Arc<CylinderFunctional>) -> Result<Self> {
        Self::new(functional, DEFAULT_NODES, DEFAULT_DIM_CAP)
    }

    pub fn functional(&self) -> &CylinderFunctional {
        &self.functional
    }

    pub fn nodes(&self) -> usize {
        self.rule.order()
    }

    fn check(&self, i: usize, d: f64, history: &[f64]) -> Result<()> {
        let n = self.functional.coords();
        if i >= n {
            return Err(Error::Domain(format!("stage {i} out of range 0..{n}")));
        }
        if history.len() != i {
            return Err(Error::Domain(format!(
                "stage {i} needs {i} history values, got {}",
                history.len()
            )));
        }
        if !(d >= 0.0) {
            return Err(Error::Domain(format!("variance must be ≥ 0, got {d}")));
        }
        if n - i > self.dim_cap {
            return Err(Error::DimensionCap {
                dims: n - i,
                cap: self.dim_cap,
            });
        }
        Ok(())
    }

    /// Jet of `Ū_i(s + ε, D; history)`. When `D > 0` and the outer factor is
    /// compactly supported, the `s`-derivatives fall on the Gaussian kernel,
    /// `∂_s^k φ_D(x − s) = φ_D · He_k(z) / D^{k/2}`, so the trapezoid rule
    /// integrates `U` itself rather than its steeper derivatives. Over an
    /// unbounded factor the jet is carried through Gauss–Hermite, which is
    /// exact on polynomials.
    pub fn jet<const J: usize>(&self, i: usize, s: f64, d: f64, history: &[f64]) -> Result<Jet<J>> {
        self.check(i, d, history)?;
        let g = self.functional.generator();
        let mut acc = Jet::<J>::constant(g.amplitude);
        for (f, x) in g.factors.iter().zip(history) {
            acc = acc * f.jet(*x, 0.0);
        }
        if acc.is_zero() {
            return Ok(acc);
        }
        let inner_var = self.functional.horizon() / self.functional.coords() as f64;
        let f = &g.factors[i];
        if d == 0.0 || f.support().is_none() {
            return Ok(self.nest(i, s, d, inner_var, acc));
        }
        let base = Jet::<1>::constant(acc.value());
        let sd = d.sqrt();
        let mut out = Jet::<J>::zero();
        self.layer(f.support(), s, d, |x, z, w| {
            let next = base * f.jet(x, 0.0);
            if next.is_zero() {
                return;
            }
            let v = w * self.nest(i + 1, x, inner_var, inner_var, next).value();
            // a_k = He_k(z) / (k!·sd^k): Taylor coefficients of φ_D(x − s − ε)/φ_D(x − s).
            let (mut prev, mut cur) = (0.0, 1.0);
            for k in 0..J {
                out.c[k] += v * cur;
                let next = (z * cur - prev / sd) / ((k + 1) as f64 * sd);
                prev = cur;
                cur = next;
            }
        });
        Ok(out)
    }

    fn nest<const J: usize>(&self, k: usize, mean: f64, var: f64, inner_var: f64, acc: Jet<J>) -> Jet<J> {
        let factors = &self.functional.generator().factors;
        if k == factors.len() {
            return acc;
        }
        let f = &factors[k];
        if var == 0.0 {
            let next = acc * f.jet(mean, 1.0);
            if next.is_zero() {
                return next;
            }
            return self.nest(k + 1, mean, inner_var, inner_var, next);
        }
        let mut sum = Jet::zero();
        self.layer(f.support(), mean, var, |x, _, w| {
            let next = acc * f.jet(x, 1.0);
            if !next.is_zero() {
                sum = sum + self.nest(k + 1, x, inner_var, inner_var, next).scale(w);
            }
        });
        sum
    }

    /// Visits the quadrature nodes of one `N(mean, var)` layer as
    /// `(x, (x − mean)/sd, weight)`, with `var > 0`.
    fn layer(&self, support: Option<(f64, f64)>, mean: f64, var: f64, mut visit: impl FnMut(f64, f64, f64)) {
        let sd = var.sqrt();
        match support {
            Some((lo, hi)) => {
                // Compact factor: trapezoid over the support, clipped where
                // the Gaussian weight is below e^{-32}.
                let a = lo.max(mean - TAIL_SDS * sd);
                let b = hi.min(mean + TAIL_SDS * sd);
                if b <= a {
                    return;
                }
                let q = self.rule.order();
                let h = (b - a) / q as f64;
                let norm = h / (2.0 * std::f64::consts::PI * var).sqrt();
                for p in 0..=q {
                    let x = a + h * p as f64;
                    let z = (x - mean) / sd;
                    let end = if p == 0 || p == q { 0.5 } else { 1.0 };
                    visit(x, z, end * norm * (-0.5 * z * z).exp());
                }
            }
            None => {
                for (z, w) in self.rule.nodes().iter().zip(self.rule.weights()) {
                    visit(mean + sd * z, *z, *w);
                }
            }
        }
    }

    /// `Ū_i(s, D; history)`.
    pub fn convolve(&self, i: usize, s: f64, d: f64, history: &[f64]) -> Result<f64> {
        Ok(self.jet::<1>(i, s, d, history)?.value())
    }

    /// Value with first and second `s`-derivatives, checked against the
    /// generator's declared directional bounds.
    pub fn greeks(&self, i: usize, s: f64, d: f64, history: &[f64]) -> Result<Greeks> {
        let j = self.jet::<3>(i, s, d, history)?;
        let out = Greeks {
            value: j.value(),
            ds: j.derivative(1),
            dss: j.derivative(2),
        };
        let g = self.functional.generator();
        for (order, which, v) in [(1, "dU/ds", out.ds), (2, "d2U/ds2", out.dss)] {
            if !v.is_finite() {
                return Err(Error::DerivativeBound {
                    stage: i,
                    which,
                    value: v,
                    bound: f64::INFINITY,
                });
            }
            if let Some(b) = g.directional_bound(order, i) {
                if v.abs() > b * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::DerivativeBound {
                        stage: i,
                        which,
                        value: v,
                        bound: b,
                    });
                }
            }
        }
        Ok(out)
    }

    /// `∂Ū/∂D` by a five-point central difference and `½ ∂²Ū/∂s²` from the
    /// jet, at `D > 0`.
    pub fn heat_terms(&self, i: usize, s: f64, d: f64, history: &[f64]) -> Result<HeatTerms> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("heat terms need D > 0, got {d}")));
        }
        let h = 0.05 * d;
        let f = |x: f64| self.convolve(i, s, x, history);
        let dd = (f(d - 2.0 * h)? - 8.0 * f(d - h)? + 8.0 * f(d + h)? - f(d + 2.0 * h)?) / (12.0 * h);
        let dss = self.jet::<3>(i, s, d, history)?.derivative(2);
        Ok(HeatTerms {
            dd,
            half_dss: 0.5 * dss,
            residual: (dd - 0.5 * dss).abs() / (1.0 + dss.abs()),
        })
    }

    /// `U_0 = Ū_0(0, T/N)`, the Wiener expectation of `F`.
    pub fn replication_price(&self) -> Result<f64> {
        let n = self.functional.coords();
        self.convolve(0, 0.0, self.functional.horizon() / n as f64, &[])
    }
}

/// Both sides of the heat equation `∂Ū/∂D = ½ ∂²Ū/∂s²` at one point, with
/// the residual relative to `1 + |∂²Ū/∂s²|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeatTerms {
    pub dd: f64,
    pub half_dss: f64,
    pub residual: f64,
}

/// `U_0` with a `q`-node rule and the default dimension cap.
pub fn replication_price(functional: &CylinderFunctional, q: usize) -> Result<f64> {
    ValueFunction::new(Arc::new(functional.clone()), q, DEFAULT_DIM_CAP)?.replication_price()
}
