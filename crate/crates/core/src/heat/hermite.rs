//! Gauss–Hermite rules, rescaled to expectations under `N(0, var)`.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Nodes and weights for `E f(Z)`, `Z ~ N(0, 1)`: `Σ w_i f(x_i)` with `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// `q`-point rule. Roots of the physicists' Hermite polynomial are found
    /// by Newton iteration from the usual asymptotic starting guesses.
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 || q > 200 {
            return domain(format!("Gauss–Hermite order must be in 1..=200, got {q}"));
        }
        let n = q;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                // Orthonormal recurrence keeps values in range for large n.
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return domain(format!("Gauss–Hermite Newton iteration stalled for q={q}"));
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        // Physicists' rule integrates against e^{-x²}; map to N(0,1).
        let sqrt_pi = PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|v| v * 2f64.sqrt()).collect();
        let mut weights: Vec<f64> = w.iter().map(|v| v / sqrt_pi).collect();
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E f(m + sqrt(var) Z)`.
    pub fn expect(&self, mean: f64, var: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let sd = var.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mean + sd * x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_sorted() {
        for q in [1, 2, 5, 24, 60] {
            let r = GaussHermite::new(q).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "q={q} sum={s}");
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn gaussian_moments_are_exact_up_to_degree() {
        let r = GaussHermite::new(24).unwrap();
        // E Z^{2k} = (2k-1)!!
        let mut dfact = 1.0;
        for k in 1..=12 {
            dfact *= (2 * k - 1) as f64;
            let m = r.expect(0.0, 1.0, |x| x.powi(2 * k));
            assert!((m - dfact).abs() < 1e-10 * dfact, "k={k}: {m} vs {dfact}");
            let odd = r.expect(0.0, 1.0, |x| x.powi(2 * k - 1));
            assert!(odd.abs() < 1e-9 * dfact);
        }
    }

    #[test]
    fn two_point_rule() {
        let r = GaussHermite::new(2).unwrap();
        assert!((r.nodes()[1] - 1.0).abs() < 1e-14);
        assert!((r.weights()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn smooth_expectation() {
        // E cos(Z) = e^{-1/2}
        let r = GaussHermite::new(24).unwrap();
        let v = r.expect(0.0, 1.0, f64::cos);
        assert!((v - (-0.5f64).exp()).abs() < 1e-14);
        let v = r.expect(0.3, 2.0, f64::cos);
        assert!((v - 0.3f64.cos() * (-1.0f64).exp()).abs() < 1e-13);
    }
}
