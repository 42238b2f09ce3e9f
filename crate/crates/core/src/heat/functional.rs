//! Cylinder functionals `F(ω) = U(ω(T/N), …, ω(T))` with product-form
//! generators `U(x) = A · Π_k g_k(x_k)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::path::SampledPath;

/// Samples used to bound derivative sups of the 1D building blocks.
const SUP_SAMPLES: usize = 20_001;
/// Safety factor on sampled sups.
const SUP_SAFETY: f64 = 1.02;
/// Below this argument `exp(-1/y)` underflows; treat the jet as zero.
const FLAT_CUTOFF: f64 = 1.0 / 700.0;

/// One coordinate factor `g_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    One,
    Square,
    /// `φ((x − center)/radius)` with `φ(u) = exp(1 − 1/(1 − u²))` on `|u| < 1`.
    Bump { center: f64, radius: f64 },
    /// Equal to 1 on `[lower + σ, upper − σ]`, 0 outside `[lower − σ, upper + σ]`.
    SmoothBox { lower: f64, upper: f64, sigma: f64 },
}

fn bump_jet<const J: usize>(u: Jet<J>) -> Jet<J> {
    let w = -u.square() + 1.0;
    if w.value() <= FLAT_CUTOFF {
        return Jet::zero();
    }
    (-w.recip() + 1.0).exp()
}

fn flat_exp<const J: usize>(y: Jet<J>) -> Jet<J> {
    if y.value() <= FLAT_CUTOFF {
        Jet::zero()
    } else {
        (-y.recip()).exp()
    }
}

/// Smooth step from 0 (y ≤ 0) to 1 (y ≥ 1).
fn step_jet<const J: usize>(y: Jet<J>) -> Jet<J> {
    if y.value() <= 0.0 {
        return Jet::zero();
    }
    if y.value() >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = flat_exp(y);
    let b = flat_exp(-y + 1.0);
    a * (a + b).recip()
}

fn sampled_sups(f: impl Fn(Jet<5>) -> Jet<5>, lo: f64, hi: f64) -> [f64; 5] {
    let mut s = [0.0f64; 5];
    for i in 0..SUP_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (SUP_SAMPLES - 1) as f64;
        let j = f(Jet::variable(x, 1.0));
        for (k, sk) in s.iter_mut().enumerate() {
            *sk = sk.max(j.derivative(k).abs());
        }
    }
    s.map(|v| v * SUP_SAFETY)
}

fn bump_sups() -> &'static [f64; 5] {
    static S: OnceLock<[f64; 5]> = OnceLock::new();
    S.get_or_init(|| sampled_sups(bump_jet, -1.0, 1.0))
}

fn step_sups() -> &'static [f64; 5] {
    static S: OnceLock<[f64; 5]> = OnceLock::new();
    S.get_or_init(|| sampled_sups(step_jet, 0.0, 1.0))
}

impl Factor {
    /// `g(x + d ε)`.
    pub fn jet<const J: usize>(&self, x: f64, d: f64) -> Jet<J> {
        match *self {
            Factor::One => Jet::constant(1.0),
            Factor::Square => Jet::variable(x, d).square(),
            Factor::Bump { center, radius } => {
                bump_jet(Jet::variable((x - center) / radius, d / radius))
            }
            Factor::SmoothBox {
                lower,
                upper,
                sigma,
            } => {
                let w = 2.0 * sigma;
                let up = step_jet(Jet::variable((x - lower + sigma) / w, d / w));
                if up.is_zero() {
                    return up;
                }
                up * step_jet(Jet::variable((upper + sigma - x) / w, -d / w))
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet::<1>(x, 0.0).value()
    }

    /// Upper bounds on `sup |g^{(k)}|` for `k = 0..=4`; `None` when unbounded.
    pub fn derivative_sups(&self) -> [Option<f64>; 5] {
        match *self {
            Factor::One => [Some(1.0), Some(0.0), Some(0.0), Some(0.0), Some(0.0)],
            Factor::Square => [None, None, Some(2.0), Some(0.0), Some(0.0)],
            Factor::Bump { radius, .. } => {
                let s = bump_sups();
                std::array::from_fn(|k| Some(s[k] / radius.powi(k as i32)))
            }
            Factor::SmoothBox { sigma, .. } => {
                let s = step_sups();
                let mut out: [Option<f64>; 5] =
                    std::array::from_fn(|k| Some(s[k] / (2.0 * sigma).powi(k as i32)));
                out[0] = Some(1.0);
                out
            }
        }
    }

    /// Range `[inf g, sup g]`.
    fn range(&self) -> (f64, f64) {
        match self {
            Factor::One => (1.0, 1.0),
            Factor::Square => (0.0, f64::INFINITY),
            _ => (0.0, 1.0),
        }
    }

    /// Interval outside which `g` vanishes.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Factor::Bump { center, radius } => Some((center - radius, center + radius)),
            Factor::SmoothBox {
                lower,
                upper,
                sigma,
            } => Some((lower - sigma, upper + sigma)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Factor::Bump { center, radius } => center.is_finite() && radius > 0.0,
            Factor::SmoothBox {
                lower,
                upper,
                sigma,
            } => lower.is_finite() && sigma > 0.0 && upper - lower >= 2.0 * sigma,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid generator factor {self:?}")))
        }
    }
}

/// `U(x) = amplitude · Π_k g_k(x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub amplitude: f64,
    pub factors: Vec<Factor>,
}

impl Generator {
    pub fn dims(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for (g, xi) in self.factors.iter().zip(x) {
            if v == 0.0 {
                break;
            }
            v *= g.value(*xi);
        }
        v
    }

    /// `U(x + ε v)` with `v = e_from + … + e_N` (zero-based `from`).
    pub fn eval_jet<const J: usize>(&self, x: &[f64], from: usize) -> Jet<J> {
        let mut acc = Jet::constant(self.amplitude);
        for (k, (g, xi)) in self.factors.iter().zip(x).enumerate() {
            let d = if k >= from { 1.0 } else { 0.0 };
            acc = acc * g.jet(*xi, d);
            if acc.is_zero() {
                break;
            }
        }
        acc
    }

    /// Bound on `sup |D_v^k U|` for `v = e_from + … + e_N`.
    ///
    /// Expands `D_v^k Π g_j` by the multinomial rule and bounds each term by
    /// the factor sups; computed as a truncated polynomial product.
    pub fn directional_bound(&self, k: usize, from: usize) -> Option<f64> {
        assert!(k <= 4);
        // poly[j] bounds the coefficient of z^j, i.e. Σ Π sup|g^{(α)}|/α!.
        let mut poly: Vec<Option<f64>> = vec![Some(0.0); k + 1];
        poly[0] = Some(1.0);
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for (idx, g) in self.factors.iter().enumerate() {
            let sups = g.derivative_sups();
            let deg = if idx >= from { k } else { 0 };
            let mut next = vec![Some(0.0); k + 1];
            for (i, pi) in poly.iter().enumerate() {
                for j in 0..=deg.min(k - i) {
                    let term = mul_opt(*pi, sups[j].map(|s| s / fact[j]));
                    next[i + j] = add_opt(next[i + j], term);
                }
            }
            poly = next;
        }
        poly[k].map(|c| c * fact[k] * self.amplitude.abs())
    }

    /// `(inf U, sup U)`.
    pub fn range(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        for g in &self.factors {
            let (a, b) = g.range();
            lo *= a;
            hi = if hi == 0.0 || b == 0.0 { 0.0 } else { hi * b };
        }
        let (a, b) = (self.amplitude * lo, self.amplitude * hi);
        let fix = |v: f64| if v.is_nan() { 0.0 } else { v };
        (fix(a.min(b)), fix(a.max(b)))
    }
}

fn mul_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), _) if x == 0.0 => Some(0.0),
        (_, Some(y)) if y == 0.0 => Some(0.0),
        (Some(x), Some(y)) => Some(x * y),
        _ => None,
    }
}

fn add_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? + b?)
}

/// JSON description of a functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionalSpec {
    pub family: String,
    #[serde(default)]
    pub params: Value,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default)]
    pub support_box: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunctional {
    n: usize,
    horizon: f64,
    generator: Generator,
    family: String,
}

impl CylinderFunctional {
    pub fn new(horizon: f64, generator: Generator, family: impl Into<String>) -> Result<Self> {
        let n = generator.dims();
        if n == 0 {
            return Err(Error::Config("generator needs at least one coordinate".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if !generator.amplitude.is_finite() {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        for f in &generator.factors {
            f.validate()?;
        }
        Ok(Self {
            n,
            horizon,
            generator,
            family: family.into(),
        })
    }

    pub fn constant(value: f64, n: usize, horizon: f64) -> Result<Self> {
        Self::new(
            horizon,
            Generator {
                amplitude: value,
                factors: vec![Factor::One; n],
            },
            "constant",
        )
    }

    /// `U(x) = x_N²`, unbounded; for exact-replication checks.
    pub fn quadratic_test(n: usize, horizon: f64) -> Result<Self> {
        let mut factors = vec![Factor::One; n.max(1)];
        *factors.last_mut().unwrap() = Factor::Square;
        Self::new(
            horizon,
            Generator {
                amplitude: 1.0,
                factors,
            },
            "quadratic_test",
        )
    }

    pub fn bump(amplitude: f64, centers: &[f64], radii: &[f64], horizon: f64) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(Error::Config("bump centers and radii differ in length".into()));
        }
        let factors = centers
            .iter()
            .zip(radii)
            .map(|(&center, &radius)| Factor::Bump { center, radius })
            .collect();
        Self::new(horizon, Generator { amplitude, factors }, "bump")
    }

    pub fn smoothed_box(
        amplitude: f64,
        lower: &[f64],
        upper: &[f64],
        sigma: f64,
        horizon: f64,
    ) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Config("box bounds differ in length".into()));
        }
        let factors = lower
            .iter()
            .zip(upper)
            .map(|(&lower, &upper)| Factor::SmoothBox {
                lower,
                upper,
                sigma,
            })
            .collect();
        Self::new(horizon, Generator { amplitude, factors }, "smoothed_box")
    }

    pub fn from_spec(spec: &FunctionalSpec) -> Result<Self> {
        let p = &spec.params;
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match p.get(key) {
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::Config(format!("params.{key} must be a number"))),
                None => default
                    .ok_or_else(|| Error::Config(format!("params.{key} is required"))),
            }
        };
        let vec = |key: &str| -> Result<Vec<f64>> {
            match p.get(key) {
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .ok_or_else(|| Error::Config(format!("params.{key} must hold numbers")))
                    })
                    .collect(),
                Some(v) => Ok(vec![v
                    .as_f64()
                    .ok_or_else(|| Error::Config(format!("params.{key} must be numeric")))?;
                    spec.n]),
                None => Err(Error::Config(format!("params.{key} is required"))),
            }
        };
        let f = match spec.family.as_str() {
            "constant" => Self::constant(num("value", None)?, spec.n, spec.t)?,
            "quadratic_test" => Self::quadratic_test(spec.n, spec.t)?,
            "bump" => Self::bump(
                num("amplitude", Some(1.0))?,
                &vec("centers")?,
                &vec("radii")?,
                spec.t,
            )?,
            "smoothed_box" => Self::smoothed_box(
                num("amplitude", Some(1.0))?,
                &vec("lower")?,
                &vec("upper")?,
                num("sigma", None)?,
                spec.t,
            )?,
            other => {
                return Err(Error::Config(format!(
                    "unknown family `{other}`; expected bump, smoothed_box, quadratic_test or constant"
                )))
            }
        };
        if f.n != spec.n {
            return Err(Error::Config(format!(
                "N = {} but params describe {} coordinates",
                spec.n, f.n
            )));
        }
        if let Some(sb) = &spec.support_box {
            if sb.len() != f.n {
                return Err(Error::Config("supportBox length differs from N".into()));
            }
            for (k, (g, b)) in f.generator.factors.iter().zip(sb).enumerate() {
                if let Some((lo, hi)) = g.support() {
                    if lo < b[0] - 1e-12 || hi > b[1] + 1e-12 {
                        return Err(Error::Config(format!(
                            "coordinate {k}: support [{lo}, {hi}] exceeds supportBox [{}, {}]",
                            b[0], b[1]
                        )));
                    }
                }
            }
        }
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn coords(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Per-coordinate intervals outside which `U` vanishes, if compact.
    pub fn support_box(&self) -> Option<Vec<(f64, f64)>> {
        self.generator.factors.iter().map(Factor::support).collect()
    }

    pub fn cylinder_times(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|i| self.horizon * i as f64 / self.n as f64)
            .collect()
    }

    /// `F(ω) = U(ω(T/N), …, ω(T))`.
    pub fn eval_path(&self, path: &SampledPath) -> f64 {
        let x: Vec<f64> = self.cylinder_times().iter().map(|&t| path.value_at(t)).collect();
        self.generator.eval(&x)
    }

    pub fn inf(&self) -> f64 {
        self.generator.range().0
    }

    /// `sup |U|`, infinite for unbounded generators.
    pub fn sup_abs(&self) -> f64 {
        let (a, b) = self.generator.range();
        a.abs().max(b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump3() -> CylinderFunctional {
        CylinderFunctional::bump(1.0, &[0.2, -0.1, 0.3], &[1.5, 1.8, 2.0], 1.0).unwrap()
    }

    #[test]
    fn bump_vanishes_on_support_boundary() {
        let f = bump3();
        let sb = f.support_box().unwrap();
        let mut x = vec![0.0; 3];
        for k in 0..3 {
            for side in [sb[k].0, sb[k].1, sb[k].0 - 0.5, sb[k].1 + 3.0] {
                for probe in [-0.7, 0.0, 0.4] {
                    x.iter_mut().for_each(|v| *v = probe);
                    x[k] = side;
                    assert_eq!(f.generator().eval(&x), 0.0);
                }
            }
        }
        assert!((f.generator().eval(&[0.2, -0.1, 0.3]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smoothed_box_shape() {
        let f = CylinderFunctional::smoothed_box(2.0, &[-1.0], &[1.0], 0.5, 1.0).unwrap();
        let g = f.generator();
        assert_eq!(g.eval(&[0.0]), 2.0);
        assert_eq!(g.eval(&[0.5]), 2.0);
        assert_eq!(g.eval(&[1.5]), 0.0);
        assert_eq!(g.eval(&[-1.6]), 0.0);
        assert!((g.eval(&[1.0]) - 1.0).abs() < 1e-15);
        assert!(g.eval(&[1.2]) > 0.0 && g.eval(&[1.2]) < 1.0);
    }

    #[test]
    fn jets_match_finite_differences() {
        for f in [
            bump3(),
            CylinderFunctional::smoothed_box(1.0, &[-1.0, -0.5, 0.0], &[1.0, 1.5, 2.0], 0.4, 1.0)
                .unwrap(),
        ] {
            let g = f.generator();
            let x = [0.31, -0.22, 0.57];
            for from in 0..3 {
                let along = |e: f64| {
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(k, v)| if k >= from { v + e } else { *v })
                        .collect();
                    g.eval(&y)
                };
                let j: Jet<3> = g.eval_jet(&x, from);
                let h = 1e-4;
                let d1 = (along(h) - along(-h)) / (2.0 * h);
                let d2 = (along(h) - 2.0 * along(0.0) + along(-h)) / (h * h);
                assert!((j.value() - along(0.0)).abs() < 1e-15);
                assert!((j.derivative(1) - d1).abs() < 1e-6, "{} {}", j.derivative(1), d1);
                assert!((j.derivative(2) - d2).abs() < 1e-4, "{} {}", j.derivative(2), d2);
            }
        }
    }

    #[test]
    fn directional_bounds_dominate_sampled_derivatives() {
        let f = bump3();
        let g = f.generator();
        for from in 0..3 {
            let b1 = g.directional_bound(1, from).unwrap();
            let b2 = g.directional_bound(2, from).unwrap();
            for i in 0..2000 {
                let t = i as f64 / 2000.0;
                let x = [-1.3 + 2.8 * t, 1.5 - 3.0 * (7.0 * t).fract(), -1.6 + 3.8 * (3.0 * t).fract()];
                let j: Jet<3> = g.eval_jet(&x, from);
                assert!(j.derivative(1).abs() <= b1);
                assert!(j.derivative(2).abs() <= b2);
            }
        }
    }

    #[test]
    fn quadratic_bounds() {
        let f = CylinderFunctional::quadratic_test(1, 1.0).unwrap();
        let g = f.generator();
        assert_eq!(g.directional_bound(0, 0), None);
        assert_eq!(g.directional_bound(1, 0), None);
        assert_eq!(g.directional_bound(2, 0), Some(2.0));
        assert_eq!(g.directional_bound(3, 0), Some(0.0));
        assert_eq!(f.inf(), 0.0);
        assert_eq!(f.sup_abs(), f64::INFINITY);
    }

    #[test]
    fn spec_round_trip_and_errors() {
        let f = CylinderFunctional::from_json(
            r#"{"family":"bump","params":{"amplitude":2,"centers":[0,0],"radii":[1,1.5]},"N":2,"T":1,
               "supportBox":[[-1,1],[-2,2]]}"#,
        )
        .unwrap();
        assert_eq!(f.coords(), 2);
        assert_eq!(f.sup_abs(), 2.0);
        assert!(CylinderFunctional::from_json(
            r#"{"family":"bump","params":{"centers":[0],"radii":[3]},"N":1,"T":1,"supportBox":[[-1,1]]}"#
        )
        .is_err());
        assert!(CylinderFunctional::from_json(r#"{"family":"nope","N":1,"T":1}"#).is_err());
        let q = CylinderFunctional::from_json(r#"{"family":"quadratic_test","N":1,"T":1}"#).unwrap();
        assert_eq!(q.generator().eval(&[3.0]), 9.0);
    }
}
