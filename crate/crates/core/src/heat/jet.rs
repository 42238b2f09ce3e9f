//! Truncated Taylor jets in one variable.
//!
//! A `Jet<J>` holds `f(x), f'(x), f''(x)/2!, …` up to `J` coefficients.
//! Arithmetic follows the usual truncated power series rules.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const J: usize> {
    pub c: [f64; J],
}

impl<const J: usize> Jet<J> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; J];
        c[0] = v;
        Self { c }
    }

    pub fn zero() -> Self {
        Self { c: [0.0; J] }
    }

    /// `x + d·ε`.
    pub fn variable(x: f64, d: f64) -> Self {
        let mut c = [0.0; J];
        c[0] = x;
        if J > 1 {
            c[1] = d;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    pub fn scale(mut self, a: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= a);
        self
    }

    pub fn recip(&self) -> Self {
        let mut h = [0.0; J];
        let inv = 1.0 / self.c[0];
        h[0] = inv;
        for k in 1..J {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * h[k - j];
            }
            h[k] = -inv * s;
        }
        Self { c: h }
    }

    pub fn exp(&self) -> Self {
        let mut g = [0.0; J];
        g[0] = self.c[0].exp();
        for k in 1..J {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * g[k - j];
            }
            g[k] = s / k as f64;
        }
        Self { c: g }
    }

    pub fn square(&self) -> Self {
        *self * *self
    }
}

impl<const J: usize> Add for Jet<J> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a += b;
        }
        self
    }
}

impl<const J: usize> Sub for Jet<J> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a -= b;
        }
        self
    }
}

impl<const J: usize> Neg for Jet<J> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const J: usize> Add<f64> for Jet<J> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] += o;
        self
    }
}

impl<const J: usize> Mul for Jet<J> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = [0.0; J];
        for i in 0..J {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..J - i {
                r[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c: r }
    }
}
