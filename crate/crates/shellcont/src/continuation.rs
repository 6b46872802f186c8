//! Bras and kets at complex wave numbers, their residues at Jost zeros and
//! the bounds they obey.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfunctions::{ChiPm, NORM};
use crate::error::{Error, Result};
use crate::jost::{jost_pm, RealSolution, RegularSolution, Sign, POLE_GUARD};
use crate::model::{ComplexWaveNumber, PhysicalConfig};
use crate::testspace::{cutoff, norm_nnprime, Profile, TestFunction};
use crate::transforms::quadrature::{self, panels, Tolerance};
use crate::transforms::{forward, Channel, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    BraPlus,
    BraMinus,
    KetPlus,
    KetMinus,
    BraFree,
    KetFree,
    ResidueBra,
    ResidueKet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub q: ComplexWaveNumber,
    pub kind: FunctionalKind,
    pub value: Complex64,
    pub quad_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidueKind {
    Bra,
    Ket,
}

/// `int_0^inf phi(r) f(r) dr` for an integrand growing like `e^{growth r}`.
fn radial_integral<F>(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    q: Complex64,
    quad: &QuadratureSpec,
    f: F,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let growth = q.im.abs();
    if let Some(c) = phi.tail_scale() {
        if growth > 0.5 * c * quad.r_max {
            return Err(Error::TailBudget(format!(
                "|Im q| = {growth} exceeds the budget 0.5*c*r_max = {}",
                0.5 * c * quad.r_max
            )));
        }
    }
    let end = cutoff(phi, growth, 1e-17);
    if end > quad.r_max + 1e-12 && phi.support_end().is_none() {
        return Err(Error::TailBudget(format!("integrand still significant at r_max = {}", quad.r_max)));
    }
    let mut breaks = vec![0.0, cfg.a, cfg.b, end];
    breaks.extend(phi.breakpoints());
    breaks.extend(quad.split_points.iter().copied());
    breaks.retain(|&x| (0.0..=end).contains(&x));
    let h = (PI / q.norm().max(1.0)).min(0.25);
    let init = panels(&breaks, &|_| h);
    let g = |r: f64| f(r) * phi.value(r);
    let tol = Tolerance { abs: quad.abs_tol, rel: quad.rel_tol, max_panels: 100_000 };
    quadrature::integrate(&g, &init, tol)
}

/// Fixed radial nodes for repeated bra evaluations over a bounded region of
/// the `q` plane (`|q| <= q_max`, `|Im q| <= growth`).
#[derive(Debug, Clone)]
pub struct BraTable {
    cfg: PhysicalConfig,
    r: Vec<f64>,
    wphi: Vec<f64>,
}

impl BraTable {
    pub fn new(cfg: &PhysicalConfig, phi: &dyn Profile, q_max: f64, growth: f64, quad: &QuadratureSpec) -> Result<Self> {
        if let Some(c) = phi.tail_scale() {
            if growth > 0.5 * c * quad.r_max {
                return Err(Error::TailBudget(format!(
                    "|Im q| up to {growth} exceeds the budget 0.5*c*r_max = {}",
                    0.5 * c * quad.r_max
                )));
            }
        }
        let end = cutoff(phi, growth, 1e-17);
        if end > quad.r_max + 1e-12 && phi.support_end().is_none() {
            return Err(Error::TailBudget(format!("integrand still significant at r_max = {}", quad.r_max)));
        }
        let mut breaks = vec![0.0, cfg.a, cfg.b, end];
        breaks.extend(phi.breakpoints());
        breaks.retain(|&x| (0.0..=end).contains(&x));
        let h = (PI / q_max.max(1.0)).min(0.125);
        let nodes = quadrature::panel_nodes(&panels(&breaks, &|_| h), quadrature::gl16());
        let (r, wphi) = nodes.iter().map(|&(r, w)| (r, w * phi.value(r))).unzip();
        Ok(Self { cfg: *cfg, r, wphi })
    }

    /// `int phi(r) u(r; q) dr`.
    pub fn regular_integral(&self, sol: &RegularSolution) -> Complex64 {
        self.r.iter().zip(&self.wphi).map(|(&r, &w)| w * sol.value(r)).sum()
    }

    /// `<sign q|phi>`.
    pub fn bra(&self, q: ComplexWaveNumber, sign: Sign) -> Result<Complex64> {
        let sol = RegularSolution::new(&self.cfg, q);
        let j = sol.jost_signed(sign.flip());
        let (dp, dm) = sol.jost_derivative();
        let d = match sign.flip() {
            Sign::Plus => dp,
            Sign::Minus => dm,
        };
        let distance = j.norm() / d.norm();
        if distance < POLE_GUARD * q.norm().max(1.0) {
            return Err(Error::AtPole { q, distance });
        }
        Ok(NORM * self.regular_integral(&sol) / j)
    }

    /// `<0 q|phi>`.
    pub fn free_bra(&self, q: ComplexWaveNumber) -> Complex64 {
        NORM * self.r.iter().zip(&self.wphi).map(|(&r, &w)| w * (q * r).sin()).sum::<Complex64>()
    }
}

fn bra_kind(sign: Sign) -> FunctionalKind {
    match sign {
        Sign::Plus => FunctionalKind::BraPlus,
        Sign::Minus => FunctionalKind::BraMinus,
    }
}

fn ket_kind(sign: Sign) -> FunctionalKind {
    match sign {
        Sign::Plus => FunctionalKind::KetPlus,
        Sign::Minus => FunctionalKind::KetMinus,
    }
}

/// `<sign q | phi>`: the integral of `phi` against `chi_{-sign}(.; q)`.
pub fn bra_eval(
    cfg: &PhysicalConfig,
    q: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<FunctionalValue> {
    let chi = ChiPm::new(cfg, q, sign.flip())?;
    let (value, quad_error) = radial_integral(cfg, phi, q, quad, |r| chi.eval(r))?;
    Ok(FunctionalValue { q, kind: bra_kind(sign), value, quad_error })
}

/// `<phi | q sign>`: the integral of `conj(phi)` against `chi_sign(.; q)`.
pub fn ket_eval(
    cfg: &PhysicalConfig,
    q: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<FunctionalValue> {
    let chi = ChiPm::new(cfg, q, sign)?;
    let (value, quad_error) = radial_integral(cfg, phi, q, quad, |r| chi.eval(r))?;
    Ok(FunctionalValue { q, kind: ket_kind(sign), value, quad_error })
}

pub fn free_bra_eval(cfg: &PhysicalConfig, q: ComplexWaveNumber, phi: &dyn Profile, quad: &QuadratureSpec) -> Result<FunctionalValue> {
    let (value, quad_error) = radial_integral(cfg, phi, q, quad, |r| NORM * (q * r).sin())?;
    Ok(FunctionalValue { q, kind: FunctionalKind::BraFree, value, quad_error })
}

pub fn free_ket_eval(cfg: &PhysicalConfig, q: ComplexWaveNumber, phi: &dyn Profile, quad: &QuadratureSpec) -> Result<FunctionalValue> {
    let v = free_bra_eval(cfg, q, phi, quad)?;
    Ok(FunctionalValue { kind: FunctionalKind::KetFree, ..v })
}

/// Residue of the bra (or ket) as a function of `q` at a Jost zero `q0`.
pub fn residue_eval(
    cfg: &PhysicalConfig,
    q0: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    kind: ResidueKind,
    quad: &QuadratureSpec,
) -> Result<FunctionalValue> {
    let chi_sign = match kind {
        ResidueKind::Bra => sign.flip(),
        ResidueKind::Ket => sign,
    };
    let chi = ChiPm::residue(cfg, q0, chi_sign)?;
    let (value, quad_error) = radial_integral(cfg, phi, q0, quad, |r| chi.eval(r))?;
    let kind = match kind {
        ResidueKind::Bra => FunctionalKind::ResidueBra,
        ResidueKind::Ket => FunctionalKind::ResidueKet,
    };
    Ok(FunctionalValue { q: q0, kind, value, quad_error })
}

/// `lim (q - q0) F(q)` by two-level Richardson extrapolation along `direction`.
pub fn residue_limit(
    cfg: &PhysicalConfig,
    q0: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    kind: ResidueKind,
    quad: &QuadratureSpec,
    step: f64,
    direction: f64,
) -> Result<Complex64> {
    let dir = Complex64::from_polar(1.0, direction);
    let g = |h: f64| -> Result<Complex64> {
        let d = dir * h;
        let v = match kind {
            ResidueKind::Bra => bra_eval(cfg, q0 + d, phi, sign, quad)?,
            ResidueKind::Ket => ket_eval(cfg, q0 + d, phi, sign, quad)?,
        };
        Ok(d * v.value)
    };
    let (g1, g2, g4) = (g(step)?, g(step / 2.0)?, g(step / 4.0)?);
    let r1 = 2.0 * g2 - g1;
    let r2 = 2.0 * g4 - g2;
    Ok((4.0 * r2 - r1) / 3.0)
}

/// Least-squares slope of `log|bra(q0 + d)|` against `log d`.
pub fn pole_order_slope(
    cfg: &PhysicalConfig,
    q0: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (0..7)
        .map(|i| {
            let d = 10f64.powf(-2.0 - 0.5 * i as f64);
            let v = bra_eval(cfg, q0 + Complex64::new(d, 0.0), phi, sign, quad)?;
            Ok((d.ln(), v.value.norm().ln()))
        })
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    Ok(num / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexDeltaReport {
    pub q: ComplexWaveNumber,
    pub direct: Complex64,
    pub continued: Complex64,
    pub discrepancy: f64,
    /// Change of the continued value when half the nodes are used.
    pub interpolation_error: f64,
    pub interval: (f64, f64),
}

const CHEB_NODES: usize = 64;

fn barycentric(z: Complex64, x: &[f64], v: &[Complex64]) -> Complex64 {
    let n = x.len() - 1;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for (j, (&xj, &vj)) in x.iter().zip(v).enumerate() {
        let d = z - xj;
        if d.norm() == 0.0 {
            return vj;
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        num += w * vj / d;
        den += w / d;
    }
    num / den
}

/// Compares the direct bra at `q` with a continuation built only from
/// real-axis transforms: `F(k) J(k)` and `J(k)` are entire, so both are
/// interpolated at Chebyshev nodes around `Re q` and divided at `q`.
pub fn complex_delta_check(
    cfg: &PhysicalConfig,
    q: ComplexWaveNumber,
    phi: &dyn Profile,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<ComplexDeltaReport> {
    let direct = bra_eval(cfg, q, phi, sign, quad)?.value;
    let half = (q.re - 0.05).min(2.0);
    if half < 0.25 {
        return Err(Error::InvalidArgument("complex-delta check needs Re q > 0.3".into()));
    }
    let x: Vec<f64> = (0..=CHEB_NODES).map(|j| (PI * j as f64 / CHEB_NODES as f64).cos()).collect();
    let samples: Vec<(Complex64, Complex64)> = x
        .par_iter()
        .map(|&t| {
            let k = q.re + half * t;
            let f = forward(cfg, phi, Channel::from(sign), k, quad)?;
            let jp = RealSolution::new(cfg, k).j_plus();
            let j = match sign {
                Sign::Plus => jp.conj(),
                Sign::Minus => jp,
            };
            Ok((f * j, j))
        })
        .collect::<Result<_>>()?;
    let (g, j): (Vec<Complex64>, Vec<Complex64>) = samples.into_iter().unzip();
    let z = (q - q.re) / half;
    let continued = barycentric(z, &x, &g) / barycentric(z, &x, &j);
    let xs: Vec<f64> = x.iter().step_by(2).copied().collect();
    let gs: Vec<Complex64> = g.iter().step_by(2).copied().collect();
    let js: Vec<Complex64> = j.iter().step_by(2).copied().collect();
    let coarse = barycentric(z, &xs, &gs) / barycentric(z, &xs, &js);
    Ok(ComplexDeltaReport {
        q,
        direct,
        continued,
        discrepancy: (direct - continued).norm() / direct.norm().max(1e-300),
        interpolation_error: (coarse - continued).norm() / continued.norm().max(1e-300),
        interval: (q.re - half, q.re + half),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub q: ComplexWaveNumber,
    pub n: u32,
    /// Smallest admissible constant over the family.
    pub constant: f64,
    pub members: Vec<(String, f64)>,
}

/// Smallest `C` with `|<phi|q sign>| <= C e^{2n+2} ||phi||_{n+1,0} / |J_sign(q)|`, `n = ceil|q|`.
pub fn continuity_bound_check(
    cfg: &PhysicalConfig,
    q: ComplexWaveNumber,
    sign: Sign,
    family: &[TestFunction],
    quad: &QuadratureSpec,
) -> Result<ContinuityReport> {
    let n = q.norm().ceil() as u32;
    let j = jost_pm(cfg, q)?.get(sign);
    let members = family
        .par_iter()
        .map(|phi| {
            let v = ket_eval(cfg, q, phi, sign, quad)?.value;
            let norm = norm_nnprime(cfg, phi, n + 1, 0)?;
            let c = v.norm() * j.norm() / ((2.0 * n as f64 + 2.0).exp() * norm);
            Ok((phi.label().to_string(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = members.iter().map(|m| m.1).fold(0.0, f64::max);
    Ok(ContinuityReport { q, n, constant, members })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSweep {
    pub sup: f64,
    pub argmax: ComplexWaveNumber,
    pub samples: usize,
}

fn sweep<F>(qs: &[ComplexWaveNumber], f: F) -> Result<BoundSweep>
where
    F: Fn(ComplexWaveNumber) -> Result<f64> + Sync,
{
    let vals = qs.par_iter().map(|&q| Ok((q, f(q)?))).collect::<Result<Vec<_>>>()?;
    let (argmax, sup) = vals.iter().copied().fold((Complex64::new(0.0, 0.0), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(BoundSweep { sup, argmax, samples: vals.len() })
}

/// `sup |(1 + h2m q^2)^{n'} <sign q|phi>| e^{-|Im q|^2/(2 alpha)}` over `qs`.
pub fn analytic_bound_sweep(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    nprime: u32,
    alpha: f64,
    qs: &[ComplexWaveNumber],
    quad: &QuadratureSpec,
) -> Result<BoundSweep> {
    sweep(qs, |q| {
        let v = bra_eval(cfg, q, phi, sign, quad)?.value;
        Ok(weighted(cfg, q, v, nprime, alpha))
    })
}

/// The free analogue of [`analytic_bound_sweep`], valid over the whole plane.
pub fn free_bound_sweep(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    nprime: u32,
    alpha: f64,
    qs: &[ComplexWaveNumber],
    quad: &QuadratureSpec,
) -> Result<BoundSweep> {
    sweep(qs, |q| {
        let v = free_bra_eval(cfg, q, phi, quad)?.value;
        Ok(weighted(cfg, q, v, nprime, alpha))
    })
}

fn weighted(cfg: &PhysicalConfig, q: Complex64, v: Complex64, nprime: u32, alpha: f64) -> f64 {
    let e = Complex64::new(1.0, 0.0) + cfg.h2m() * q * q;
    (e.powu(nprime) * v).norm() * (-q.im * q.im / (2.0 * alpha)).exp()
}

/// Bra values over a grid, one result per point.
pub fn bra_grid(
    cfg: &PhysicalConfig,
    qs: &[ComplexWaveNumber],
    phi: &dyn Profile,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Vec<Result<FunctionalValue>> {
    qs.par_iter().map(|&q| bra_eval(cfg, q, phi, sign, quad)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testspace::apply_h;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup() -> (PhysicalConfig, QuadratureSpec) {
        let cfg = PhysicalConfig::canonical();
        let quad = QuadratureSpec::for_config(&cfg);
        (cfg, quad)
    }

    #[test]
    fn real_axis_bra_matches_forward() {
        let (cfg, quad) = setup();
        let phi = TestFunction::gauss_damped(&cfg, 1, 2.0).unwrap();
        for k in [0.6, 2.319, 4.0] {
            for sign in [Sign::Plus, Sign::Minus] {
                let b = bra_eval(&cfg, c(k, 0.0), &phi, sign, &quad).unwrap().value;
                let f = forward(&cfg, &phi, Channel::from(sign), k, &quad).unwrap();
                assert!((b - f).norm() < 1e-9 * f.norm().max(1e-3), "{b} {f}");
            }
        }
    }

    #[test]
    fn duality_and_eigenequation() {
        let (cfg, quad) = setup();
        let phi = TestFunction::bump(0.3, 2.7, 1).unwrap();
        let hphi = apply_h(&cfg, &phi);
        for q in [c(1.5, -0.7), c(3.0, 0.4), c(0.8, -2.0)] {
            for sign in [Sign::Plus, Sign::Minus] {
                let k = ket_eval(&cfg, q, &phi, sign, &quad).unwrap().value;
                let b = bra_eval(&cfg, q.conj(), &phi, sign, &quad).unwrap().value;
                assert!((k - b.conj()).norm() < 1e-9 * k.norm());
                let kh = ket_eval(&cfg, q, &hphi, sign, &quad).unwrap().value;
                let e = cfg.h2m() * q * q;
                assert!((kh - e * k).norm() < 1e-8 * (e * k).norm(), "{kh} {}", e * k);
            }
        }
    }

    #[test]
    fn residue_agrees_with_limit() {
        let (cfg, quad) = setup();
        let phi = TestFunction::bump(0.3, 2.7, 1).unwrap();
        // a zero of J- lies at the conjugate of a zero of J+
        let q0 = c(3.992_510_714_007_581, 0.259_149_865_118_852_8);
        let z = crate::poles::find_resonances(
            &cfg,
            &crate::poles::Rect::new(3.5, 4.5, 0.1, 0.5).unwrap(),
            Sign::Minus,
        )
        .unwrap();
        let q0 = z.zeros.first().map(|z| z.q0).unwrap_or(q0);
        let res = residue_eval(&cfg, q0, &phi, Sign::Plus, ResidueKind::Bra, &quad).unwrap().value;
        let lim = residue_limit(&cfg, q0, &phi, Sign::Plus, ResidueKind::Bra, &quad, 1e-3, 0.3).unwrap();
        assert!((res - lim).norm() < 1e-7 * res.norm().max(1.0), "{res} {lim}");
        let slope = pole_order_slope(&cfg, q0, &phi, Sign::Plus, &quad).unwrap();
        assert!((slope + 1.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn table_matches_adaptive() {
        let (cfg, quad) = setup();
        let phi = TestFunction::gauss_analytic(&cfg, 0, 2.0, 4).unwrap();
        let table = BraTable::new(&cfg, &phi, 40.0, 6.0, &quad).unwrap();
        for q in [c(1.0, -0.5), c(20.0, -4.0), c(35.0, 5.0)] {
            for sign in [Sign::Plus, Sign::Minus] {
                let a = bra_eval(&cfg, q, &phi, sign, &quad).unwrap();
                let b = table.bra(q, sign).unwrap();
                let tol = 1e-9 * a.value.norm() + 10.0 * a.quad_error;
                assert!((a.value - b).norm() < tol, "{q}: {} {b}", a.value);
            }
            let a = free_bra_eval(&cfg, q, &phi, &quad).unwrap();
            assert!((a.value - table.free_bra(q)).norm() < 1e-9 * a.value.norm() + 10.0 * a.quad_error);
        }
    }

    #[test]
    fn free_has_no_residue() {
        let (cfg, quad) = setup();
        let free = cfg.with_v0(0.0);
        let phi = TestFunction::bump(0.3, 2.7, 1).unwrap();
        let r = residue_eval(&free, c(2.0, 0.5), &phi, Sign::Plus, ResidueKind::Bra, &quad);
        assert!(matches!(r, Err(Error::NotAPole { .. })));
    }

    #[test]
    fn tail_budget_is_enforced() {
        let (cfg, quad) = setup();
        let phi = TestFunction::gauss_damped(&cfg, 0, 2.0).unwrap();
        let r = free_bra_eval(&cfg, c(1.0, -13.0), &phi, &quad);
        assert!(matches!(r, Err(Error::TailBudget(_))));
    }
}
