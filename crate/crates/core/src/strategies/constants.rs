//! Constants and weight sequences of the modulus and quadratic-variation bounds.

use serde::Serialize;

/// Modulus of continuity on `[0, T]`: `157 α^{-1/2} T^{3/8} δ^{1/8}`.
pub const C_MODULUS: f64 = 157.0;
/// Modulus over all horizons: `560 α^{-1/2} T^{1/2} δ^{1/8}`.
pub const C_SUPER_MODULUS: f64 = 560.0;
/// Dyadic quadratic variation: `46 α^{-1} T² 2^{n/16}`.
pub const C_QV: f64 = 46.0;
/// Lévy-game modulus over all horizons: `800 α^{-1/2} T^{1/2} δ^{1/8}`.
pub const C_LEVY_SUPER_MODULUS: f64 = 800.0;

fn q(p: f64) -> f64 {
    2f64.powf(p)
}

/// `2^{5/2} (2^{1/4} − 1)^{-1/2} (1 − 2^{-1/8})^{-1}`.
pub fn modulus_sharp() -> f64 {
    q(2.5) * (q(0.25) - 1.0).powf(-0.5) / (1.0 - q(-0.125))
}

/// Sharp modulus constant, spread over `T ∈ {1, 2, 4, …}` with weights
/// `α_T` and rounded up to the next power-of-two horizon.
pub fn super_modulus_sharp() -> f64 {
    modulus_sharp() * (1.0 - q(-0.25)).powf(-0.5) * 2f64.sqrt()
}

/// `2 (2^{1/16} − 1)^{-1}`.
pub fn qv_sharp() -> f64 {
    2.0 / (q(1.0 / 16.0) - 1.0)
}

/// The super-modulus constant with `α` halved.
pub fn levy_super_modulus_sharp() -> f64 {
    super_modulus_sharp() * 2f64.sqrt()
}

/// `β_n = (2^{1/4} − 1) 2^{-n/4} α`; sums to `α` over `n ≥ 1`.
pub fn beta(alpha: f64, n: u32) -> f64 {
    (q(0.25) - 1.0) * q(-(n as f64) / 4.0) * alpha
}

/// `α_T = (1 − 2^{-1/4}) T^{-1/4} α`; sums to `α` over `T ∈ {1, 2, 4, …}`.
pub fn alpha_weight(alpha: f64, t: f64) -> f64 {
    (1.0 - q(-0.25)) * t.powf(-0.25) * alpha
}

/// `½ (2^{1/16} − 1) T^{-1} 2^{-n/16} α`; sums to `α` over `T ∈ {1, 2, 4, …}`, `n ≥ 1`.
pub fn qv_weight(alpha: f64, t: f64, n: u32) -> f64 {
    0.5 * (q(1.0 / 16.0) - 1.0) / t * q(-(n as f64) / 16.0) * alpha
}

/// `ε = (4 T² 2^{-n} / β²)^{1/4}`.
pub fn crossing_level(t: f64, n: u32, beta: f64) -> f64 {
    (4.0 * t * t * q(-(n as f64)) / (beta * beta)).powf(0.25)
}

/// `2T/(βε²)`, the number of bets the crossing strategy may afford.
pub fn bet_allowance(t: f64, beta: f64, eps: f64) -> f64 {
    2.0 * t / (beta * eps * eps)
}

/// Right-hand side of a `C α^{-1/2} T^a δ^{1/8}` modulus bound.
pub fn modulus_bound(constant: f64, alpha: f64, t_power: f64, delta: f64) -> f64 {
    constant * alpha.powf(-0.5) * t_power * delta.powf(0.125)
}

/// Dyadic horizons `1, 2, 4, …` up to `t_max`.
pub fn dyadic_horizons(t_max: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut t = 1.0;
    while t <= t_max * (1.0 + 1e-12) {
        v.push(t);
        t *= 2.0;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantsTable {
    pub c_modulus: f64,
    pub c_super_modulus: f64,
    pub c_qv: f64,
    pub c_levy_super_modulus: f64,
    pub modulus_sharp: f64,
    pub super_modulus_sharp: f64,
    pub qv_sharp: f64,
    pub levy_super_modulus_sharp: f64,
}

impl ConstantsTable {
    pub fn get() -> Self {
        Self {
            c_modulus: C_MODULUS,
            c_super_modulus: C_SUPER_MODULUS,
            c_qv: C_QV,
            c_levy_super_modulus: C_LEVY_SUPER_MODULUS,
            modulus_sharp: modulus_sharp(),
            super_modulus_sharp: super_modulus_sharp(),
            qv_sharp: qv_sharp(),
            levy_super_modulus_sharp: levy_super_modulus_sharp(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_constants_dominate_sharp_forms() {
        let t = ConstantsTable::get();
        assert!((t.modulus_sharp - 156.69).abs() < 0.01, "{}", t.modulus_sharp);
        assert!(t.modulus_sharp <= C_MODULUS);
        assert!(t.super_modulus_sharp <= C_SUPER_MODULUS);
        assert!((t.super_modulus_sharp - 555.55).abs() < 0.01);
        assert!(t.qv_sharp <= C_QV);
        assert!((t.qv_sharp - 45.17).abs() < 0.01);
        assert!(t.levy_super_modulus_sharp <= C_LEVY_SUPER_MODULUS);
        assert!((t.levy_super_modulus_sharp - 785.67).abs() < 0.01);
    }

    #[test]
    fn weights_sum_to_alpha() {
        let alpha = 0.37;
        let s: f64 = (1..400).map(|n| beta(alpha, n)).sum();
        assert!((s - alpha).abs() < 1e-9);
        let s: f64 = (0..200).map(|k| alpha_weight(alpha, 2f64.powi(k))).sum();
        assert!((s - alpha).abs() < 1e-9);
        let mut s = 0.0;
        for k in 0..60 {
            for n in 1..2000 {
                s += qv_weight(alpha, 2f64.powi(k), n);
            }
        }
        assert!((s - alpha).abs() < 1e-9, "{s}");
    }

    #[test]
    fn crossing_level_balances_capital() {
        // (2T/(βε⁴)) 2^{-n} T = β/2
        let (t, n) = (2.0, 5);
        let b = beta(0.1, n);
        let e = crossing_level(t, n, b);
        let lhs = 2.0 * t / (b * e.powi(4)) * 2f64.powi(-(n as i32)) * t;
        assert!((lhs - b / 2.0).abs() < 1e-15);
        // and 2ε equals the closed form 2^{3/2}(2^{1/4}−1)^{-1/2} α^{-1/2} T^{1/2} 2^{-n/8}
        let closed = 2f64.powf(1.5) * (2f64.powf(0.25) - 1.0).powf(-0.5) * 0.1f64.powf(-0.5)
            * t.sqrt()
            * 2f64.powf(-(n as f64) / 8.0);
        assert!((2.0 * e - closed).abs() < 1e-12 * closed);
        assert!((bet_allowance(t, b, e) - 2f64.powf(n as f64 / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn modulus_bound_examples() {
        assert!((modulus_bound(C_MODULUS, 1.0, 1.0, 1.0) - 157.0).abs() < 1e-12);
        assert!((C_QV * 2f64.powf(16.0 / 16.0) - 92.0).abs() < 1e-12);
        assert_eq!(dyadic_horizons(4.0), vec![1.0, 2.0, 4.0]);
        assert_eq!(dyadic_horizons(0.5), Vec::<f64>::new());
    }
}
