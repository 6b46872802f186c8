//! Truncated Taylor arithmetic: `Jet.c[k] = f^(k)(x0) / k!`.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; ORDER + 1],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = v;
        Self { c }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The identity function expanded at `x0`.
    pub fn var(x0: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    pub fn shift(self, s: f64) -> Self {
        let mut c = self.c;
        c[0] += s;
        Self { c }
    }

    pub fn exp(self) -> Self {
        let mut e = [0.0; ORDER + 1];
        e[0] = self.c[0].exp();
        for k in 1..=ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn recip(self) -> Self {
        let mut g = [0.0; ORDER + 1];
        let f0 = self.c[0];
        g[0] = 1.0 / f0;
        for k in 1..=ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * g[k - j];
            }
            g[k] = -s / f0;
        }
        Self { c: g }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut out = Self::constant(1.0);
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            n >>= 1;
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(x, y)| *x += y);
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER + 1];
        for i in 0..=ORDER {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..=ORDER - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_recip_match_known_series() {
        let x = Jet::var(0.3);
        let e = x.exp();
        for k in 0..=ORDER {
            assert!((e.derivative(k) - 0.3f64.exp()).abs() < 1e-13);
        }
        let r = x.shift(1.0).recip();
        // d^k/dx^k 1/(1+x) = (-1)^k k! / (1+x)^(k+1)
        for k in 0..=ORDER {
            let mut fact = 1.0;
            for i in 2..=k {
                fact *= i as f64;
            }
            let expect = if k % 2 == 0 { 1.0 } else { -1.0 } * fact / 1.3f64.powi(k as i32 + 1);
            assert!((r.derivative(k) - expect).abs() < 1e-10 * expect.abs());
        }
    }

    #[test]
    fn powi_matches_product() {
        let x = Jet::var(-0.7).shift(2.0);
        let p = x.powi(5);
        let q = x * x * x * x * x;
        for k in 0..=ORDER {
            assert!((p.c[k] - q.c[k]).abs() < 1e-12);
        }
    }
}
