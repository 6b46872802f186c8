//! Pairs of increasing functions dual in the sense of Young and the inequality
//! `x y <= M(x) + Omega(y)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transforms::quadrature::{self, panels, Tolerance};

type Real = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An increasing continuous function on `[0, inf)` vanishing at zero.
#[derive(Clone)]
pub struct MonotoneFunction {
    f: Real,
    integral: Option<Real>,
    inverse: Option<Real>,
    exponent: Option<f64>,
}

impl std::fmt::Debug for MonotoneFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneFunction")
            .field("closed_integral", &self.integral.is_some())
            .field("closed_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl MonotoneFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), integral: None, inverse: None, exponent: None }
    }

    pub fn with_integral(mut self, m: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.integral = Some(Arc::new(m));
        self
    }

    pub fn with_inverse(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(g));
        self
    }

    /// `xi^p` with closed-form integral and inverse.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("power {p} must be positive")));
        }
        let mut f = Self::new(move |x| x.powf(p))
            .with_integral(move |x| x.powf(p + 1.0) / (p + 1.0))
            .with_inverse(move |y| y.powf(1.0 / p));
        f.exponent = Some(p);
        Ok(f)
    }

    /// `alpha xi`, whose Young dual is `eta / alpha`.
    pub fn linear(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("slope {alpha} must be positive")));
        }
        Ok(Self::new(move |x| alpha * x)
            .with_integral(move |x| 0.5 * alpha * x * x)
            .with_inverse(move |y| y / alpha))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Checks `f(0) = 0` and strict increase on `n` equispaced points of `[0, x_max]`.
    pub fn validate(&self, x_max: f64, n: usize) -> Result<()> {
        if self.eval(0.0).abs() > 1e-300 {
            return Err(Error::InvalidArgument("function must vanish at zero".into()));
        }
        let mut prev = 0.0;
        for i in 1..=n.max(1) {
            let v = self.eval(x_max * i as f64 / n.max(1) as f64);
            if !(v > prev) {
                return Err(Error::InvalidArgument(format!("not strictly increasing near {}", x_max * i as f64 / n as f64)));
            }
            prev = v;
        }
        Ok(())
    }

    /// `int_0^x f`.
    pub fn integral(&self, x: f64) -> f64 {
        if let Some(m) = &self.integral {
            return m(x);
        }
        if x <= 0.0 {
            return 0.0;
        }
        let f = &self.f;
        let g = |t: f64| Complex64::new(f(t), 0.0);
        let tol = Tolerance { abs: 1e-300, rel: 1e-13, max_panels: 20_000 };
        match quadrature::integrate(&g, &panels(&[0.0, x], &|_| x / 8.0), tol) {
            Ok((v, _)) => v.re,
            Err(_) => f64::NAN,
        }
    }

    /// The inverse function, by bisection when no closed form is known.
    pub fn inverse(&self) -> MonotoneFunction {
        if let Some(p) = self.exponent {
            if let Ok(g) = Self::power(1.0 / p) {
                return g;
            }
        }
        if let Some(g) = &self.inverse {
            let f = self.f.clone();
            return MonotoneFunction { f: g.clone(), integral: None, inverse: Some(f), exponent: None };
        }
        let f = self.f.clone();
        MonotoneFunction {
            f: Arc::new(move |y| bisect(&*f, y).unwrap_or(f64::NAN)),
            integral: None,
            inverse: Some(self.f.clone()),
            exponent: None,
        }
    }

    /// Inverse value with errors reported.
    pub fn try_inverse(&self, y: f64) -> Result<f64> {
        match &self.inverse {
            Some(g) => Ok(g(y)),
            None => bisect(&*self.f, y),
        }
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while f(hi) < y {
        hi *= 2.0;
        if !f(hi).is_finite() || hi > 1e300 {
            return Err(Error::InvalidArgument(format!("function does not reach {y}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `M(x) = int_0^x mu`.
#[allow(non_snake_case)]
pub fn M_from_mu(mu: &MonotoneFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x = {x} must be non-negative")));
    }
    Ok(mu.integral(x))
}

/// `Omega(y) = int_0^y omega`.
pub fn omega_from_omega(omega: &MonotoneFunction, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::InvalidArgument(format!("y = {y} must be non-negative")));
    }
    Ok(omega.integral(y))
}

#[derive(Debug, Clone, Serialize)]
pub struct YoungReport {
    pub x: f64,
    pub y: f64,
    pub product: f64,
    pub m: f64,
    pub omega: f64,
    /// `M(x) + Omega(y) - x y`.
    pub slack: f64,
    pub holds: bool,
    /// `y = mu(x)` within `1e-9`.
    pub equality_case: bool,
}

/// Checks `x y <= M(x) + Omega(y)` with `Omega` built from the inverse of `mu`.
pub fn young_check(mu: &MonotoneFunction, x: f64, y: f64) -> Result<YoungReport> {
    let omega = mu.inverse();
    mu.try_inverse(y)?;
    let m = M_from_mu(mu, x)?;
    let o = omega_from_omega(&omega, y)?;
    if !(m.is_finite() && o.is_finite()) {
        return Err(Error::InvalidArgument(format!("M({x}) or Omega({y}) not finite")));
    }
    let product = x * y;
    let slack = m + o - product;
    let scale = (m + o).abs().max(1.0);
    Ok(YoungReport {
        x,
        y,
        product,
        m,
        omega: o,
        slack,
        holds: slack >= -1e-12 * scale,
        equality_case: (y - mu.eval(x)).abs() <= 1e-9 * y.abs().max(1.0),
    })
}

/// The `alpha`-scaled quadratic split `x y <= alpha x^2/2 + y^2/(2 alpha)`.
pub fn scaled_quadratic(x: f64, y: f64, alpha: f64) -> Result<YoungReport> {
    young_check(&MonotoneFunction::linear(alpha)?, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let id = MonotoneFunction::new(|x| x);
        assert!((M_from_mu(&id, 3.0).unwrap() - 4.5).abs() < 1e-12);
        let sq = MonotoneFunction::new(|x| x * x);
        let om = sq.inverse();
        assert!((omega_from_omega(&om, 4.0).unwrap() - 2.0 / 3.0 * 8.0).abs() < 1e-9);
        assert_eq!(omega_from_omega(&om, 0.0).unwrap(), 0.0);
        let cube = MonotoneFunction::power(2.0).unwrap();
        assert!((M_from_mu(&cube, 2.0).unwrap() - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn equality_on_the_graph() {
        let id = MonotoneFunction::new(|x| x);
        let r = young_check(&id, 1.0, 1.0).unwrap();
        assert!(r.holds && r.equality_case && r.slack.abs() < 1e-12);
    }

    #[test]
    fn bounded_function_has_no_inverse_everywhere() {
        let sat = MonotoneFunction::new(|x: f64| x / (1.0 + x));
        assert!(young_check(&sat, 1.0, 2.0).is_err());
    }
}
