//! Delta-normalized eigenfunctions, their residues at Jost zeros, and growth ratios.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{RegularSolution, Sign, POLE_GUARD};
use crate::model::{ComplexWaveNumber, PhysicalConfig};

/// `sqrt(2/pi)`.
pub const NORM: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenKind {
    Plus,
    Minus,
    Free,
    ResiduePlus,
    ResidueMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionSample {
    pub r: f64,
    pub q: ComplexWaveNumber,
    pub value: Complex64,
    pub kind: EigenKind,
}

/// `chi_sign(.; q)` with the Jost factor computed once, for sweeps over `r`.
#[derive(Debug, Clone, Copy)]
pub struct ChiPm {
    sol: RegularSolution,
    factor: Complex64,
}

impl ChiPm {
    pub fn new(cfg: &PhysicalConfig, q: ComplexWaveNumber, sign: Sign) -> Result<Self> {
        if q.norm() == 0.0 {
            return Err(Error::DegenerateWaveNumber);
        }
        let sol = RegularSolution::new(cfg, q);
        let j = sol.jost_signed(sign);
        let (dp, dm) = sol.jost_derivative();
        let d = match sign {
            Sign::Plus => dp,
            Sign::Minus => dm,
        };
        let distance = j.norm() / d.norm();
        if distance < POLE_GUARD * q.norm().max(1.0) {
            return Err(Error::AtPole { q, distance });
        }
        Ok(Self { sol, factor: NORM / j })
    }

    /// Residue of `chi_sign(.; q)` at the simple zero `q0` of `J_sign`.
    pub fn residue(cfg: &PhysicalConfig, q0: ComplexWaveNumber, sign: Sign) -> Result<Self> {
        if q0.norm() == 0.0 {
            return Err(Error::NotAPole { q: q0, step: f64::INFINITY });
        }
        let sol = RegularSolution::new(cfg, q0);
        let j = sol.jost_signed(sign);
        let (dp, dm) = sol.jost_derivative();
        let d = match sign {
            Sign::Plus => dp,
            Sign::Minus => dm,
        };
        let scale = q0.norm().max(1.0);
        let step = j.norm() / d.norm();
        if d.norm() < 1e-8 * scale {
            return Err(if j.norm() < 1e-8 * scale {
                Error::UnsupportedOrder(q0)
            } else {
                Error::NotAPole { q: q0, step }
            });
        }
        if step > 1e-8 * scale {
            return Err(Error::NotAPole { q: q0, step });
        }
        Ok(Self { sol, factor: NORM / d })
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.factor * self.sol.value(r)
    }
}

pub fn chi_pm(cfg: &PhysicalConfig, r: f64, q: ComplexWaveNumber, sign: Sign) -> Result<Complex64> {
    Ok(ChiPm::new(cfg, q, sign)?.eval(r))
}

pub fn chi_zero(r: f64, q: ComplexWaveNumber) -> Complex64 {
    NORM * (q * r).sin()
}

pub fn residue_chi_pm(cfg: &PhysicalConfig, r: f64, q0: ComplexWaveNumber, sign: Sign) -> Result<Complex64> {
    Ok(ChiPm::residue(cfg, q0, sign)?.eval(r))
}

/// Suprema of the growth ratios over a grid of `(r, q)` samples.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// `sup |chi| / [(|q| r/(1+|q| r)) e^{|Im q| r}]`.
    pub sup_chi: f64,
    /// The same ratio for `chi+` with the bound carrying `1/|J+|`.
    pub sup_plus: f64,
    pub sup_minus: f64,
    /// `sup |chi-|/[...]` restricted to samples with `Im q <= 0` (no Jost factor).
    pub sup_minus_lower: Option<f64>,
    /// `sup |chi0|/[...]`.
    pub sup_free: f64,
    pub samples: usize,
    pub finite: bool,
}

fn envelope(r: f64, q: Complex64) -> f64 {
    let x = q.norm() * r;
    x / (1.0 + x) * (q.im.abs() * r).exp()
}

/// Samples with `r = 0` or `q = 0` are skipped (both sides vanish).
pub fn growth_bound_check(cfg: &PhysicalConfig, rs: &[f64], qs: &[ComplexWaveNumber]) -> Result<GrowthReport> {
    let mut rep = GrowthReport {
        sup_chi: 0.0,
        sup_plus: 0.0,
        sup_minus: 0.0,
        sup_minus_lower: None,
        sup_free: 0.0,
        samples: 0,
        finite: true,
    };
    for &q in qs {
        if q.norm() == 0.0 {
            continue;
        }
        let sol = RegularSolution::new(cfg, q);
        let jost = sol.jost();
        let plus = ChiPm::new(cfg, q, Sign::Plus)?;
        let minus = ChiPm::new(cfg, q, Sign::Minus)?;
        for &r in rs {
            if r <= 0.0 {
                continue;
            }
            let env = envelope(r, q);
            let chi = sol.value(r).norm();
            rep.sup_chi = rep.sup_chi.max(chi / env);
            rep.sup_plus = rep.sup_plus.max(plus.eval(r).norm() * jost.j_plus.norm() / env);
            rep.sup_minus = rep.sup_minus.max(minus.eval(r).norm() * jost.j_minus.norm() / env);
            rep.sup_free = rep.sup_free.max(chi_zero(r, q).norm() / env);
            if q.im <= 0.0 {
                let v = minus.eval(r).norm() / env;
                rep.sup_minus_lower = Some(rep.sup_minus_lower.map_or(v, |s| s.max(v)));
            }
            rep.samples += 1;
        }
    }
    rep.finite = [rep.sup_chi, rep.sup_plus, rep.sup_minus, rep.sup_free, rep.sup_minus_lower.unwrap_or(0.0)]
        .iter()
        .all(|x| x.is_finite());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_eigenfunctions_are_sines() {
        let free = PhysicalConfig::canonical().with_v0(0.0);
        for (r, q) in [(0.5, c(1.0, 0.0)), (2.5, c(3.0, -1.0)), (7.0, c(-2.0, 0.5))] {
            for sign in [Sign::Plus, Sign::Minus] {
                let v = chi_pm(&free, r, q, sign).unwrap();
                assert!((v - chi_zero(r, q)).norm() < 1e-13 * (1.0 + v.norm()));
            }
        }
        let v = chi_zero(1.0, c(0.0, 1.0));
        assert!((v - c(0.0, NORM * 1f64.sinh())).norm() < 1e-15);
        assert_eq!(chi_zero(2.0, c(3.0, 0.0)).im, 0.0);
    }

    #[test]
    fn real_axis_plus_minus_are_conjugate() {
        let cfg = PhysicalConfig::canonical();
        for &k in &[0.3, 2.0, 4.5, 11.0] {
            for &r in &[0.5, 1.5, 4.0] {
                let p = chi_pm(&cfg, r, c(k, 0.0), Sign::Plus).unwrap();
                let m = chi_pm(&cfg, r, c(k, 0.0), Sign::Minus).unwrap();
                assert!((p - m.conj()).norm() < 1e-13 * p.norm().max(1e-3));
            }
        }
    }

    #[test]
    fn free_case_has_no_poles() {
        let free = PhysicalConfig::canonical().with_v0(0.0);
        assert!(matches!(residue_chi_pm(&free, 1.0, c(2.0, -0.5), Sign::Plus), Err(Error::NotAPole { .. })));
    }

    #[test]
    fn q_zero_is_degenerate() {
        let cfg = PhysicalConfig::canonical();
        assert_eq!(chi_pm(&cfg, 1.0, c(0.0, 0.0), Sign::Plus), Err(Error::DegenerateWaveNumber));
    }

    #[test]
    fn growth_sup_even_under_negation() {
        let cfg = PhysicalConfig::canonical();
        let rs: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
        let qs = [c(1.0, -1.0), c(3.0, 2.0), c(-6.0, -0.5)];
        let neg: Vec<Complex64> = qs.iter().map(|q| -q).collect();
        let a = growth_bound_check(&cfg, &rs, &qs).unwrap();
        let b = growth_bound_check(&cfg, &rs, &neg).unwrap();
        assert!((a.sup_chi - b.sup_chi).abs() < 1e-12 * a.sup_chi);
        assert!(a.finite && b.finite);
    }
}
