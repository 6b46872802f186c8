//! Zeros of the Jost functions by the argument principle, subdivision and Newton.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{RegularSolution, Sign};
use crate::model::{ComplexWaveNumber, PhysicalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite())
            && re_min < re_max
            && im_min < im_max;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "bad rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn contains(&self, q: Complex64, margin: f64) -> bool {
        q.re >= self.re_min - margin
            && q.re <= self.re_max + margin
            && q.im >= self.im_min - margin
            && q.im <= self.im_max + margin
    }

    /// The rectangle reflected through `q -> -q`.
    pub fn negated(&self) -> Self {
        Self { re_min: -self.re_max, re_max: -self.re_min, im_min: -self.im_max, im_max: -self.im_min }
    }

    /// The rectangle reflected through `q -> -conj(q)`.
    pub fn mirrored(&self) -> Self {
        Self { re_min: -self.re_max, re_max: -self.re_min, ..*self }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub q0: ComplexWaveNumber,
    pub jost_residual: f64,
    pub derivative: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    pub sign: Sign,
    pub rectangle: Rect,
    pub zeros: Vec<Zero>,
}

impl PoleSet {
    pub fn locations(&self) -> Vec<Complex64> {
        self.zeros.iter().map(|z| z.q0).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoleOptions {
    /// Newton stops once `|J| <= newton_tol * max(1, |q|^2)`.
    pub newton_tol: f64,
    /// A zero is accepted when `|J| <= accept_tol * max(1, |q|^2)`.
    pub accept_tol: f64,
    pub max_depth: usize,
}

impl Default for PoleOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-13, accept_tol: 1e-10, max_depth: 40 }
    }
}

pub fn local_scale(q: Complex64) -> f64 {
    q.norm_sqr().max(1.0)
}

fn jost(cfg: &PhysicalConfig, q: Complex64, sign: Sign) -> Complex64 {
    RegularSolution::new(cfg, q).jost_signed(sign)
}

const BOUNDARY_TOL: f64 = 1e-9;
const MIN_SEGMENT: f64 = 1e-9;

/// Phase change of `J` along a straight segment, tracked adaptively.
fn segment_phase(
    f: &dyn Fn(Complex64) -> Complex64,
    z0: Complex64,
    f0: Complex64,
    z1: Complex64,
    f1: Complex64,
    depth: usize,
) -> Result<f64> {
    let zm = 0.5 * (z0 + z1);
    let fm = f(zm);
    if fm.norm() < BOUNDARY_TOL * local_scale(zm) {
        return Err(Error::ZeroOnBoundary(zm));
    }
    let d = (f1 / f0).arg();
    let d1 = (fm / f0).arg();
    let d2 = (f1 / fm).arg();
    let consistent = (d1 + d2 - d).abs() < 1e-6 && d1.abs() <= FRAC_PI_4 && d2.abs() <= FRAC_PI_4;
    if consistent && d.abs() <= FRAC_PI_4 {
        return Ok(d);
    }
    if (z1 - z0).norm() < MIN_SEGMENT || depth > 60 {
        return Err(Error::ZeroOnBoundary(zm));
    }
    Ok(segment_phase(f, z0, f0, zm, fm, depth + 1)? + segment_phase(f, zm, fm, z1, f1, depth + 1)?)
}

fn winding(f: &dyn Fn(Complex64) -> Complex64, rect: &Rect) -> Result<i64> {
    let c = rect.corners();
    let vals: Vec<Complex64> = c.iter().map(|&z| f(z)).collect();
    for (z, v) in c.iter().zip(&vals) {
        if v.norm() < BOUNDARY_TOL * local_scale(*z) {
            return Err(Error::ZeroOnBoundary(*z));
        }
    }
    // split long edges so the adaptive tracker starts from a reasonable mesh
    let mut total = 0.0;
    for i in 0..4 {
        let (za, zb) = (c[i], c[(i + 1) % 4]);
        let n = (((zb - za).norm() / 0.25).ceil() as usize).max(1);
        let mut z_prev = za;
        let mut f_prev = vals[i];
        for j in 1..=n {
            let z = if j == n { zb } else { za + (zb - za) * (j as f64 / n as f64) };
            let fz = if j == n { vals[(i + 1) % 4] } else { f(z) };
            if fz.norm() < BOUNDARY_TOL * local_scale(z) {
                return Err(Error::ZeroOnBoundary(z));
            }
            total += segment_phase(f, z_prev, f_prev, z, fz, 0)?;
            z_prev = z;
            f_prev = fz;
        }
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 1e-3 {
        return Err(Error::NoConvergence(format!("non-integer winding {w}")));
    }
    Ok(n as i64)
}

/// Number of zeros of `J_sign` inside `rect` (argument principle).
pub fn count_zeros(cfg: &PhysicalConfig, rect: &Rect, sign: Sign) -> Result<i64> {
    let f = |z: Complex64| jost(cfg, z, sign);
    winding(&f, rect)
}

fn newton(cfg: &PhysicalConfig, start: Complex64, sign: Sign, opts: &PoleOptions) -> Option<Zero> {
    let mut q = start;
    for _ in 0..80 {
        let sol = RegularSolution::new(cfg, q);
        let j = sol.jost_signed(sign);
        let (dp, dm) = sol.jost_derivative();
        let d = if sign == Sign::Plus { dp } else { dm };
        if !j.is_finite() || !d.is_finite() || d.norm() == 0.0 {
            return None;
        }
        let step = j / d;
        q -= step;
        if j.norm() <= opts.newton_tol * local_scale(q) || step.norm() < 1e-15 * q.norm().max(1.0) {
            // one polishing step after convergence
            let sol = RegularSolution::new(cfg, q);
            let j = sol.jost_signed(sign);
            let (dp, dm) = sol.jost_derivative();
            let d = if sign == Sign::Plus { dp } else { dm };
            let q_final = q - j / d;
            let sol = RegularSolution::new(cfg, q_final);
            let (j, d) = {
                let j = sol.jost_signed(sign);
                let (dp, dm) = sol.jost_derivative();
                (j, if sign == Sign::Plus { dp } else { dm })
            };
            return Some(Zero { q0: q_final, jost_residual: j.norm(), derivative: d });
        }
    }
    None
}

fn split(rect: &Rect, frac: f64) -> (Rect, Rect) {
    if rect.width() >= rect.height() {
        let x = rect.re_min + frac * rect.width();
        (Rect { re_max: x, ..*rect }, Rect { re_min: x, ..*rect })
    } else {
        let y = rect.im_min + frac * rect.height();
        (Rect { im_max: y, ..*rect }, Rect { im_min: y, ..*rect })
    }
}

const SPLIT_FRACTIONS: [f64; 7] = [0.5, 0.461, 0.537, 0.417, 0.583, 0.379, 0.621];

fn search(
    cfg: &PhysicalConfig,
    rect: Rect,
    count: i64,
    sign: Sign,
    opts: &PoleOptions,
    depth: usize,
) -> Result<Vec<Zero>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count < 0 {
        return Err(Error::NoConvergence(format!("negative winding in {rect:?}")));
    }
    if count == 1 {
        if let Some(z) = newton(cfg, rect.center(), sign, opts) {
            let margin = 1e-9 * (rect.width() + rect.height());
            if rect.contains(z.q0, margin) && z.jost_residual <= opts.accept_tol * local_scale(z.q0) {
                return Ok(vec![z]);
            }
        }
    }
    if depth >= opts.max_depth {
        return Err(Error::NoConvergence(format!(
            "cell [{}, {}] x [{}, {}] with {count} zero(s) unresolved at depth {depth}",
            rect.re_min, rect.re_max, rect.im_min, rect.im_max
        )));
    }
    let mut last_err = None;
    for frac in SPLIT_FRACTIONS {
        let (lo, hi) = split(&rect, frac);
        let counts = count_zeros(cfg, &lo, sign).and_then(|a| Ok((a, count_zeros(cfg, &hi, sign)?)));
        match counts {
            Ok((na, nb)) => {
                if na + nb != count {
                    last_err = Some(Error::NoConvergence(format!(
                        "sub-cell counts {na} + {nb} disagree with {count}"
                    )));
                    continue;
                }
                let (ra, rb) = rayon::join(
                    || search(cfg, lo, na, sign, opts, depth + 1),
                    || search(cfg, hi, nb, sign, opts, depth + 1),
                );
                let mut out = ra?;
                out.extend(rb?);
                return Ok(out);
            }
            Err(e @ Error::ZeroOnBoundary(_)) | Err(e @ Error::NoConvergence(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("no admissible split".into())))
}

pub fn find_resonances(cfg: &PhysicalConfig, rect: &Rect, sign: Sign) -> Result<PoleSet> {
    find_resonances_with(cfg, rect, sign, &PoleOptions::default())
}

pub fn find_resonances_with(cfg: &PhysicalConfig, rect: &Rect, sign: Sign, opts: &PoleOptions) -> Result<PoleSet> {
    let total = count_zeros(cfg, rect, sign)?;
    let mut zeros = search(cfg, *rect, total, sign, opts, 0)?;
    zeros.sort_by(|x, y| x.q0.re.total_cmp(&y.q0.re).then(x.q0.im.total_cmp(&y.q0.im)));
    if zeros.len() as i64 != total {
        return Err(Error::NoConvergence(format!("found {} zeros, winding says {total}", zeros.len())));
    }
    Ok(PoleSet { sign, rectangle: *rect, zeros })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_case_has_no_zeros() {
        let free = PhysicalConfig::canonical().with_v0(0.0);
        let rect = Rect::new(0.1, 10.0, -3.0, -0.01).unwrap();
        assert_eq!(count_zeros(&free, &rect, Sign::Plus).unwrap(), 0);
        assert!(find_resonances(&free, &rect, Sign::Plus).unwrap().zeros.is_empty());
    }

    #[test]
    fn no_zeros_in_upper_half() {
        let cfg = PhysicalConfig::canonical();
        let rect = Rect::new(0.1, 10.0, 0.1, 5.0).unwrap();
        assert_eq!(count_zeros(&cfg, &rect, Sign::Plus).unwrap(), 0);
    }

    #[test]
    fn lowest_resonance_matches_reference() {
        // reference from an independent 40-digit evaluation of the matching solution
        let cfg = PhysicalConfig::canonical();
        let rect = Rect::new(3.5, 4.5, -1.0, -0.05).unwrap();
        let set = find_resonances(&cfg, &rect, Sign::Plus).unwrap();
        assert_eq!(set.zeros.len(), 1);
        let q0 = set.zeros[0].q0;
        assert!((q0 - Complex64::new(3.992_510_714_007_581, -0.259_149_865_118_852_8)).norm() < 1e-12);
    }

    #[test]
    fn zero_on_boundary_is_reported() {
        let cfg = PhysicalConfig::canonical();
        let q0 = Complex64::new(3.992_510_714_007_581, -0.259_149_865_118_852_8);
        let rect = Rect::new(3.5, 4.5, q0.im, 0.5).unwrap();
        let r = count_zeros(&cfg, &rect, Sign::Plus);
        assert!(matches!(r, Err(Error::ZeroOnBoundary(_))), "{r:?}");
    }
}
