//! Time evolution: the unitary group on the real axis and the rotated-contour
//! semigroups for `t > 0` (fourth quadrant) and `t < 0` (first quadrant).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{bra_eval, residue_eval, BraTable, ResidueKind};
use crate::eigenfunctions::{chi_zero, ChiPm};
use crate::error::{Error, Result};
use crate::jost::Sign;
use crate::model::{ComplexWaveNumber, PhysicalConfig};
use crate::poles::{find_resonances, Rect};
use crate::testspace::{cutoff, smooth_step, Profile, TestFunction};
use crate::transforms::quadrature::{gl16, panel_nodes, panels};
use crate::transforms::{basis_value_and_derivative, Channel, QuadratureSpec, SpectralFunction};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Minimum distance kept between a contour and any declared pole.
pub const POLE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl RadialField {
    fn new(grid: &[f64], values: Vec<Complex64>, t: f64) -> Result<Self> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("radial grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NoConvergence("evolved field is not finite".into()));
        }
        Ok(Self { grid: grid.to_vec(), values, t })
    }

    /// `sqrt(sum w |f|^2)` for quadrature weights on the grid.
    pub fn l2_norm(&self, weights: &[f64]) -> f64 {
        self.values.iter().zip(weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn l2_distance(&self, other: &RadialField, weights: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(weights)
            .map(|((a, b), w)| w * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_difference(&self, other: &RadialField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Real or imaginary part of a field on a [`radial_grid`], interpolated panel
/// by panel and rolled off smoothly over `[end - taper, end]`.
#[derive(Debug, Clone)]
pub struct FieldPart {
    grid: Vec<f64>,
    values: Vec<f64>,
    end: f64,
    taper: f64,
}

impl FieldPart {
    /// `(re, im)` profiles of `field`, whose grid must come from [`radial_grid`].
    pub fn split(field: &RadialField, r_end: f64, taper: f64) -> Result<(Self, Self)> {
        let n = gl16().nodes.len();
        if field.grid.is_empty() || field.grid.len() % n != 0 {
            return Err(Error::InvalidArgument("field grid is not a panel grid".into()));
        }
        if !(taper > 0.0 && taper < r_end) {
            return Err(Error::InvalidArgument(format!("taper {taper} must lie in (0, {r_end})")));
        }
        let make = |f: fn(&Complex64) -> f64| Self {
            grid: field.grid.clone(),
            values: field.values.iter().map(f).collect(),
            end: r_end,
            taper,
        };
        Ok((make(|z| z.re), make(|z| z.im)))
    }
}

impl Profile for FieldPart {
    fn value(&self, r: f64) -> f64 {
        if !(0.0..=self.end).contains(&r) {
            return 0.0;
        }
        let n = gl16().nodes.len();
        let idx = self.grid.partition_point(|&x| x < r);
        let panel = (idx.min(self.grid.len() - 1) / n) * n;
        let (xs, ys) = (&self.grid[panel..panel + n], &self.values[panel..panel + n]);
        let mut acc = 0.0;
        for j in 0..n {
            let mut l = 1.0;
            for m in 0..n {
                if m != j {
                    l *= (r - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += l * ys[j];
        }
        acc * smooth_step((self.end - r) / self.taper)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let n = gl16().nodes.len();
        // the interpolating panel switches at each panel's last node
        let mut b: Vec<f64> = self.grid.chunks(n).map(|c| c[n - 1]).collect();
        b.push(self.end - self.taper);
        b.push(self.end);
        b
    }

    fn support_end(&self) -> Option<f64> {
        Some(self.end)
    }

    fn tail_scale(&self) -> Option<f64> {
        None
    }
}

/// Gauss–Legendre nodes and weights on `[0, r_end]`, broken at the shell edges.
pub fn radial_grid(cfg: &PhysicalConfig, r_end: f64, panel: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = panel_nodes(&panels(&[0.0, cfg.a, cfg.b, r_end], &|_| panel), gl16());
    nodes.retain(|&(r, _)| r <= r_end);
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    nodes.into_iter().unzip()
}

fn phase(cfg: &PhysicalConfig, q: Complex64, t: f64) -> Complex64 {
    (-I * cfg.h2m() * q * q * t / cfg.hbar).exp()
}

fn check_grid(rgrid: &[f64]) -> Result<f64> {
    if rgrid.is_empty() || rgrid.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radial grid must be non-empty and non-negative".into()));
    }
    Ok(rgrid.iter().copied().fold(0.0, f64::max))
}

/// Real-axis evolution on a time-aware `k` grid. Returns values and, when
/// requested, radial derivatives.
fn real_axis(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    channel: Channel,
    t: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
    derivative: bool,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let r_top = check_grid(rgrid)?;
    let probe = SpectralFunction::new(cfg, phi, channel, quad)?;
    let fixed = probe.radial_end + r_top + 2.0 * cfg.b;
    let speed = 2.0 * cfg.h2m() * t.abs() / cfg.hbar;
    let omega = move |k: f64| fixed + speed * k;
    let nodes = probe.refined(cfg, &omega, quad).ok_or_else(|| Error::InvalidArgument("transform was mapped".into()))?;
    let weighted: Vec<Complex64> = nodes.iter().map(|(k, w, v, _)| w * v * phase(cfg, Complex64::new(*k, 0.0), t)).collect();
    let out: Vec<(Complex64, Complex64)> = rgrid
        .par_iter()
        .map(|&r| {
            let mut acc = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for ((_, _, _, sol), c) in nodes.iter().zip(&weighted) {
                if derivative {
                    let (v, d) = basis_value_and_derivative(channel, sol, r);
                    acc.0 += c * v;
                    acc.1 += c * d;
                } else {
                    acc.0 += c * crate::transforms::basis_value(channel, sol, r);
                }
            }
            acc
        })
        .collect();
    Ok(out.into_iter().unzip())
}

/// `e^{-iHt/hbar} phi` through the spectral representation of the given sign.
pub fn group_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    t: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
) -> Result<RadialField> {
    let (v, _) = real_axis(cfg, phi, Channel::from(sign), t, rgrid, quad, false)?;
    RadialField::new(rgrid, v, t)
}

/// `e^{-iH0t/hbar} phi`.
pub fn free_group_evolve(cfg: &PhysicalConfig, phi: &dyn Profile, t: f64, rgrid: &[f64], quad: &QuadratureSpec) -> Result<RadialField> {
    let (v, _) = real_axis(cfg, phi, Channel::Free, t, rgrid, quad, false)?;
    RadialField::new(rgrid, v, t)
}

/// `<phi_t|H|phi_t>` from the evolved field and its derivative, integrated over
/// the Gauss–Legendre grid `(rgrid, weights)`.
pub fn evolved_energy(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    t: f64,
    rgrid: &[f64],
    weights: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let (v, d) = real_axis(cfg, phi, Channel::from(sign), t, rgrid, quad, true)?;
    Ok(rgrid
        .iter()
        .zip(weights)
        .zip(v.iter().zip(&d))
        .map(|((&r, &w), (v, d))| w * (cfg.h2m() * d.norm_sqr() + cfg.potential(r) * v.norm_sqr()))
        .sum())
}

/// `<phi|H|phi>` of a test function in closed form.
pub fn initial_energy(cfg: &PhysicalConfig, phi: &TestFunction, rgrid: &[f64], weights: &[f64]) -> f64 {
    rgrid
        .iter()
        .zip(weights)
        .map(|(&r, &w)| w * (cfg.h2m() * phi.d1(r).powi(2) + cfg.potential(r) * phi.value(r).powi(2)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    RealAxis,
    RadialRay,
    BentRay,
}

/// A polygonal path from the origin to infinity along the direction `angle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Negative angles point into the fourth quadrant.
    pub angle: f64,
    /// Truncation radius; chosen automatically when absent.
    pub s_max: Option<f64>,
    /// Interior vertices of a bent ray.
    pub bend: Vec<Complex64>,
}

impl ContourSpec {
    pub fn real_axis() -> Self {
        Self { kind: ContourKind::RealAxis, angle: 0.0, s_max: None, bend: Vec::new() }
    }

    pub fn ray(angle: f64) -> Result<Self> {
        if !(angle.abs() < PI / 2.0) {
            return Err(Error::InvalidArgument(format!("ray angle {angle} outside (-pi/2, pi/2)")));
        }
        let kind = if angle == 0.0 { ContourKind::RealAxis } else { ContourKind::RadialRay };
        Ok(Self { kind, angle, s_max: None, bend: Vec::new() })
    }

    /// The ray at `angle` with two-segment detours around poles closer than the margin.
    pub fn bent_ray(angle: f64, poles: &[Complex64]) -> Result<Self> {
        let mut c = Self::ray(angle)?;
        c.kind = ContourKind::BentRay;
        let dir = Complex64::from_polar(1.0, angle);
        let mut near: Vec<(f64, f64)> = poles
            .iter()
            .map(|p| {
                let z = p / dir;
                (z.re, z.im)
            })
            .filter(|&(s, d)| s > 0.0 && d.abs() < POLE_MARGIN)
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (half, offset) = (0.2, 0.075);
        for (s, d) in near {
            let side = if d >= 0.0 { -1.0 } else { 1.0 };
            let lo = (s - half).max(0.5 * s);
            c.bend.push(dir * lo);
            c.bend.push(dir * Complex64::new(s, side * offset));
            c.bend.push(dir * (s + half));
        }
        Ok(c)
    }

    fn vertices(&self, s_max: f64) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0)];
        v.extend(self.bend.iter().copied().filter(|z| z.norm() < s_max));
        v.push(Complex64::from_polar(s_max, self.angle));
        v
    }

    /// Winding number of `[0, R] + arc + (contour reversed)` about `p`.
    fn winding(&self, p: Complex64, s_max: f64) -> i32 {
        let big = 1e4_f64.max(4.0 * s_max).max(4.0 * p.norm());
        let mut loop_pts = vec![Complex64::new(0.0, 0.0), Complex64::new(big, 0.0)];
        for j in 1..=128 {
            loop_pts.push(Complex64::from_polar(big, self.angle * j as f64 / 128.0));
        }
        let mut path = self.vertices(s_max);
        path.push(Complex64::from_polar(big, self.angle));
        path.reverse();
        loop_pts.extend(path);
        let mut total = 0.0;
        for w in loop_pts.windows(2) {
            let (a, b) = (w[0] - p, w[1] - p);
            if a.norm() == 0.0 || b.norm() == 0.0 {
                continue;
            }
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i32
    }

    fn distance_to(&self, p: Complex64, s_max: f64) -> f64 {
        let v = self.vertices(s_max);
        v.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let d = b - a;
                let tau = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                (a + d * tau - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Zeros of `J+` (lower half) and `J-` (their conjugates) with `0 < Re q <= re_max`.
pub fn sector_poles(cfg: &PhysicalConfig, re_max: f64) -> Result<Vec<Complex64>> {
    if cfg.u0() == 0.0 {
        return Ok(Vec::new());
    }
    let rect = Rect::new(0.02, re_max, -4.0, -1e-4)?;
    let set = find_resonances(cfg, &rect, Sign::Plus)?;
    let mut out: Vec<Complex64> = set.locations();
    out.extend(set.locations().iter().map(|z| z.conj()));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    First,
    Second,
    Third,
    Fourth,
}

impl Quadrant {
    pub fn of(angle: f64) -> Result<Self> {
        let a = angle.rem_euclid(2.0 * PI);
        let q = a / (PI / 2.0);
        if (q - q.round()).abs() < 1e-12 {
            return Err(Error::IllDefined(format!("direction {angle} lies on an axis")));
        }
        Ok(match q.floor() as i32 {
            0 => Quadrant::First,
            1 => Quadrant::Second,
            2 => Quadrant::Third,
            _ => Quadrant::Fourth,
        })
    }

    pub fn center(self) -> f64 {
        match self {
            Quadrant::First => PI / 4.0,
            Quadrant::Second => 3.0 * PI / 4.0,
            Quadrant::Third => -3.0 * PI / 4.0,
            Quadrant::Fourth => -PI / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Decays,
    BlowsUp,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadrantReport {
    pub quadrant: Quadrant,
    pub t_sign: f64,
    pub predicted: Limit,
    /// `|e^{-i q^2 t}|` at `|q| = 10, 20, 40` along the ray.
    pub samples: [f64; 3],
    pub observed: Limit,
}

/// Behaviour of `e^{-i q^2 hbar t/2m}` as `|q| -> inf` along `direction`.
pub fn quadrant_limit(direction: f64, t_sign: f64) -> Result<QuadrantReport> {
    if t_sign == 0.0 || !t_sign.is_finite() {
        return Err(Error::IllDefined("t must be nonzero".into()));
    }
    let quadrant = Quadrant::of(direction)?;
    let decays = match quadrant {
        Quadrant::Second | Quadrant::Fourth => t_sign > 0.0,
        Quadrant::First | Quadrant::Third => t_sign < 0.0,
    };
    let predicted = if decays { Limit::Decays } else { Limit::BlowsUp };
    let t = t_sign.signum();
    let mut samples = [0.0; 3];
    for (s, m) in samples.iter_mut().zip([10.0, 20.0, 40.0]) {
        let q = Complex64::from_polar(m, direction);
        // log-magnitude avoids overflow
        *s = (-I * q * q * t).re;
    }
    let observed = if samples[0] > samples[1] && samples[1] > samples[2] && samples[2] < -1.0 {
        Limit::Decays
    } else {
        Limit::BlowsUp
    };
    let samples = samples.map(f64::exp);
    Ok(QuadrantReport { quadrant, t_sign, predicted, samples, observed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BraKet {
    Bra,
    Ket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormalMultiplier {
    pub multiplier: Complex64,
    pub valid: bool,
}

/// The formal multiplier `e^{-i h2m q^2 t/hbar}` (ket) or its inverse (bra) with
/// the flag telling whether it decays along the direction of `q`.
pub fn formal_braket_evolution(cfg: &PhysicalConfig, q: ComplexWaveNumber, t: f64, kind: BraKet) -> FormalMultiplier {
    let s = match kind {
        BraKet::Ket => 1.0,
        BraKet::Bra => -1.0,
    };
    let multiplier = phase(cfg, q, s * t);
    let valid = if t == 0.0 {
        true
    } else {
        match quadrant_limit(q.arg(), s * t) {
            Ok(rep) => rep.predicted == Limit::Decays,
            // on an axis the multiplier keeps unit modulus
            Err(_) => true,
        }
    };
    FormalMultiplier { multiplier, valid }
}

/// Which evolution a contour integral represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dynamics {
    Interacting(Sign),
    Free,
}

/// Truncation radius along a ray: the Gaussian damping beats the growth bound
/// of the integrand by `e^{-45}`.
fn ray_truncation(cfg: &PhysicalConfig, phi: &dyn Profile, angle: f64, t: f64, r_top: f64, free: bool) -> f64 {
    let sigma0 = cfg.h2m() * (2.0 * angle.abs()).sin() * t.abs() / cfg.hbar;
    let y = angle.abs().sin();
    let (gauss, linear) = match phi.tail_scale() {
        Some(c) if phi.support_end().is_none() => (y * y / (4.0 * c), 0.0),
        _ => (0.0, cutoff(phi, 0.0, 1e-17)),
    };
    let jost_decay = if free || cfg.u0() == 0.0 { 0.0 } else { 2.0 * cfg.b };
    let sigma = (sigma0 - gauss).max(0.1 * sigma0);
    let g = (y * (r_top + linear - jost_decay)).max(0.0) + 1e-3;
    let budget = 45.0;
    (g + (g * g + 4.0 * sigma * budget).sqrt()) / (2.0 * sigma)
}

/// Diagnostics of a contour evolution.
#[derive(Debug, Clone, Serialize)]
pub struct ContourEvolution {
    pub field: RadialField,
    pub contour: ContourSpec,
    pub s_max: f64,
    /// Poles whose residues were added, with winding numbers.
    pub residues: Vec<(Complex64, i32)>,
    /// Largest integrand magnitude at the truncation radius relative to the peak.
    pub tail_ratio: f64,
}

/// Evolution along an arbitrary contour; `sign = None` selects the free
/// dynamics. The contour must lie in the decay sector of `t`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_on_contour(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Option<Sign>,
    t: f64,
    contour: &ContourSpec,
    rgrid: &[f64],
    quad: &QuadratureSpec,
    poles: &[Complex64],
) -> Result<ContourEvolution> {
    if contour.kind == ContourKind::RealAxis || contour.angle == 0.0 {
        let field = match sign {
            Some(s) => group_evolve(cfg, phi, s, t, rgrid, quad)?,
            None => free_group_evolve(cfg, phi, t, rgrid, quad)?,
        };
        return Ok(ContourEvolution { field, contour: contour.clone(), s_max: f64::INFINITY, residues: Vec::new(), tail_ratio: 0.0 });
    }
    if contour.angle * t >= 0.0 {
        return Err(Error::Domain(format!("t={t} on a contour at angle {}: the multiplier grows along it", contour.angle)));
    }
    let dynamics = match sign {
        Some(s) => Dynamics::Interacting(s),
        None => Dynamics::Free,
    };
    contour_evolve(cfg, phi, dynamics, t, contour, rgrid, quad, poles)
}

#[allow(clippy::too_many_arguments)]
fn contour_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    dynamics: Dynamics,
    t: f64,
    contour: &ContourSpec,
    rgrid: &[f64],
    quad: &QuadratureSpec,
    poles: &[Complex64],
) -> Result<ContourEvolution> {
    let r_top = check_grid(rgrid)?;
    let mirror = contour.angle > 0.0;
    let free = matches!(dynamics, Dynamics::Free);
    let s_max = match contour.s_max {
        Some(s) => s,
        None => ray_truncation(cfg, phi, contour.angle, t, r_top, free),
    };
    let mut residues = Vec::new();
    if !free {
        for &p in poles {
            let w = contour.winding(p, s_max);
            let d = contour.distance_to(p, s_max);
            if d < POLE_MARGIN * 0.999 || (w != 0 && contour.kind != ContourKind::BentRay) {
                return Err(Error::PoleInSector(p));
            }
            if w != 0 {
                residues.push((p, w));
            }
        }
    }
    let growth = s_max * contour.angle.abs().sin() + 0.1;
    let table = BraTable::new(cfg, phi, s_max + 1.0, growth, quad)?;
    let vertices = contour.vertices(s_max);
    let fixed = table_extent(phi) + r_top + 2.0 * cfg.b;
    let speed = 2.0 * cfg.h2m() * t.abs() / cfg.hbar;
    let mut nodes: Vec<(Complex64, Complex64)> = Vec::new();
    for seg in vertices.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let ps = panels(&[0.0, len], &|s| {
            let z = a + dir * s;
            let near = poles.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min);
            quad_width(quad, fixed + speed * z.norm()).min(0.5 * near)
        });
        for (s, w) in panel_nodes(&ps, gl16()) {
            nodes.push((a + dir * s, dir * w));
        }
    }
    // integrand P(q) = bra(q) chi(r; q); the mirrored path uses conj(P(conj q))
    let eval_node = |z: Complex64| -> Result<(Complex64, Vec<Complex64>)> {
        let zq = if mirror { z.conj() } else { z };
        let (b, chi): (Complex64, Vec<Complex64>) = match dynamics {
            Dynamics::Free => (table.free_bra(zq), rgrid.iter().map(|&r| chi_zero(r, zq)).collect()),
            Dynamics::Interacting(sign) => {
                let c = ChiPm::new(cfg, zq, sign)?;
                (table.bra(zq, sign)?, rgrid.iter().map(|&r| c.eval(r)).collect())
            }
        };
        let vals = chi.iter().map(|c| if mirror { (b * c).conj() } else { b * c }).collect();
        Ok((phase(cfg, z, t), vals))
    };
    let contribs: Vec<(f64, Vec<Complex64>)> = nodes
        .par_iter()
        .map(|&(z, dz)| {
            let (e, vals) = eval_node(z)?;
            let mag = vals.iter().map(|v| v.norm()).fold(0.0, f64::max) * e.norm();
            Ok((mag * z.norm().max(1e-300), vals.into_iter().map(|v| v * e * dz).collect()))
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Complex64::new(0.0, 0.0); rgrid.len()];
    let mut peak: f64 = 0.0;
    for (m, v) in &contribs {
        peak = peak.max(*m);
        for (acc, x) in total.iter_mut().zip(v) {
            *acc += x;
        }
    }
    let (end_mag, _) = contribs.last().cloned().unwrap_or((0.0, Vec::new()));
    let tail_ratio = if peak > 0.0 { end_mag / peak } else { 0.0 };
    if let Dynamics::Interacting(sign) = dynamics {
        for &(p, w) in &residues {
            let pq = if mirror { p.conj() } else { p };
            let e = phase(cfg, p, t);
            // the time factor sets the accuracy the residue needs
            let weight = (e.norm() * (p.im.abs() * r_top).exp()).min(1.0);
            let loose = QuadratureSpec { abs_tol: (quad.abs_tol / weight).min(1e300), ..quad.clone() };
            let res = pole_residue(cfg, phi, sign, pq, rgrid, &loose)?;
            for (acc, r) in total.iter_mut().zip(res) {
                let r = if mirror { r.conj() } else { r };
                *acc += 2.0 * PI * I * w as f64 * e * r;
            }
        }
    }
    Ok(ContourEvolution { field: RadialField::new(rgrid, total, t)?, contour: contour.clone(), s_max, residues, tail_ratio })
}

fn table_extent(phi: &dyn Profile) -> f64 {
    cutoff(phi, 0.0, 1e-17)
}

fn quad_width(quad: &QuadratureSpec, omega: f64) -> f64 {
    (2.0 * PI / (quad.panels as f64 * omega.max(1e-9))).min(0.25)
}

/// Residue of `bra_sign(q) chi_sign(r; q)` at a Jost zero, one value per radius.
fn pole_residue(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    p: Complex64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<Complex64>> {
    // the eigenfunction factor carries zeros of J_sign, the bra those of J_{-sign}
    match ChiPm::residue(cfg, p, sign) {
        Ok(res) => {
            let b = bra_eval(cfg, p, phi, sign, quad)?.value;
            Ok(rgrid.iter().map(|&r| b * res.eval(r)).collect())
        }
        Err(Error::NotAPole { .. }) => {
            let rb = residue_eval(cfg, p, phi, sign, ResidueKind::Bra, quad)?.value;
            let chi = ChiPm::new(cfg, p, sign)?;
            Ok(rgrid.iter().map(|&r| rb * chi.eval(r)).collect())
        }
        Err(e) => Err(e),
    }
}

/// Largest real part of a pole that can still contribute at time `|t|`.
fn pole_reach(t: f64) -> f64 {
    (30.0 / t.abs().max(0.05)).clamp(40.0, 120.0)
}

/// Retarded evolution (`t > 0`) along the fourth-quadrant ray at angle `-eps`,
/// bent around nearby resonances, with enclosed resonance residues added.
/// When `poles` is `None` the resonances are located automatically.
#[allow(clippy::too_many_arguments)]
pub fn retarded_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    t: f64,
    eps: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
    poles: Option<&[Complex64]>,
) -> Result<ContourEvolution> {
    if !(t > 0.0) {
        return Err(Error::Domain("t<0 (the retarded semigroup needs t > 0)".into()));
    }
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, pi/2), got {eps}")));
    }
    let owned;
    let poles = match poles {
        Some(p) => p,
        None => {
            owned = sector_poles(cfg, pole_reach(t))?;
            &owned
        }
    };
    let contour = ContourSpec::bent_ray(-eps, poles)?;
    contour_evolve(cfg, phi, Dynamics::Interacting(sign), t, &contour, rgrid, quad, poles)
}

/// Advanced evolution (`t < 0`) along the mirrored first-quadrant ray.
#[allow(clippy::too_many_arguments)]
pub fn advanced_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    t: f64,
    eps: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
    poles: Option<&[Complex64]>,
) -> Result<ContourEvolution> {
    if !(t < 0.0) {
        return Err(Error::Domain("t>0 (the advanced semigroup needs t < 0)".into()));
    }
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, pi/2), got {eps}")));
    }
    let owned;
    let poles = match poles {
        Some(p) => p,
        None => {
            owned = sector_poles(cfg, pole_reach(t))?;
            &owned
        }
    };
    let contour = ContourSpec::bent_ray(eps, poles)?;
    contour_evolve(cfg, phi, Dynamics::Interacting(sign), t, &contour, rgrid, quad, poles)
}

pub fn free_retarded_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    t: f64,
    eps: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ContourEvolution> {
    if !(t > 0.0) {
        return Err(Error::Domain("t<0 (the retarded semigroup needs t > 0)".into()));
    }
    let contour = ContourSpec::ray(-eps)?;
    contour_evolve(cfg, phi, Dynamics::Free, t, &contour, rgrid, quad, &[])
}

pub fn free_advanced_evolve(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    t: f64,
    eps: f64,
    rgrid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ContourEvolution> {
    if !(t < 0.0) {
        return Err(Error::Domain("t>0 (the advanced semigroup needs t < 0)".into()));
    }
    let contour = ContourSpec::ray(eps)?;
    contour_evolve(cfg, phi, Dynamics::Free, t, &contour, rgrid, quad, &[])
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub angles: (f64, f64),
    pub t: f64,
    /// Relative `L2` difference of the two evolutions.
    pub difference: f64,
    /// Smallest admissible `alpha` in the dominance estimate, `m tan(eps)/(2 hbar t)`.
    pub alpha_min: f64,
    pub residues: (usize, usize),
}

/// Evolves along two contours (angle 0 meaning the real axis) and compares.
/// Refuses when the region swept between them contains a growth direction.
#[allow(clippy::too_many_arguments)]
pub fn contour_equivalence_check(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    sign: Sign,
    t: f64,
    angle_a: f64,
    angle_b: f64,
    rgrid: &[f64],
    weights: &[f64],
    quad: &QuadratureSpec,
    poles: Option<&[Complex64]>,
) -> Result<EquivalenceReport> {
    for &ang in &[angle_a, angle_b] {
        if ang == 0.0 {
            continue;
        }
        let rep = quadrant_limit(if ang < 0.0 { -PI / 4.0 } else { PI / 4.0 }, t)?;
        if rep.predicted == Limit::BlowsUp {
            let side = if ang < 0.0 { "fourth" } else { "first" };
            return Err(Error::Refused(format!(
                "closing arc grows: e^(-i q^2 t) blows up in the {side} quadrant for t = {t}"
            )));
        }
    }
    let owned;
    let poles = match poles {
        Some(p) => p,
        None => {
            owned = sector_poles(cfg, pole_reach(t))?;
            &owned
        }
    };
    let run = |ang: f64| -> Result<(RadialField, usize)> {
        if ang == 0.0 {
            Ok((group_evolve(cfg, phi, sign, t, rgrid, quad)?, 0))
        } else {
            let contour = ContourSpec::bent_ray(ang, poles)?;
            let ev = contour_evolve(cfg, phi, Dynamics::Interacting(sign), t, &contour, rgrid, quad, poles)?;
            Ok((ev.field, ev.residues.len()))
        }
    };
    let (fa, na) = run(angle_a)?;
    let (fb, nb) = run(angle_b)?;
    let scale = fa.l2_norm(weights).max(f64::MIN_POSITIVE);
    let eps = angle_a.abs().max(angle_b.abs());
    Ok(EquivalenceReport {
        angles: (angle_a, angle_b),
        t,
        difference: fa.l2_distance(&fb, weights) / scale,
        alpha_min: cfg.mass * eps.tan() / (2.0 * cfg.hbar * t.abs()),
        residues: (na, nb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_table() {
        use Limit::*;
        let cases = [
            (Quadrant::First, 1.0, BlowsUp),
            (Quadrant::Second, 1.0, Decays),
            (Quadrant::Third, 1.0, BlowsUp),
            (Quadrant::Fourth, 1.0, Decays),
            (Quadrant::First, -1.0, Decays),
            (Quadrant::Second, -1.0, BlowsUp),
            (Quadrant::Third, -1.0, Decays),
            (Quadrant::Fourth, -1.0, BlowsUp),
        ];
        for (q, t, expect) in cases {
            let rep = quadrant_limit(q.center(), t).unwrap();
            assert_eq!(rep.predicted, expect);
            assert_eq!(rep.observed, expect);
        }
        assert!(matches!(quadrant_limit(0.0, 1.0), Err(Error::IllDefined(_))));
    }

    #[test]
    fn formal_multipliers() {
        let cfg = PhysicalConfig::canonical();
        let q = Complex64::new(2.0, -1.0);
        assert!(formal_braket_evolution(&cfg, q, 1.0, BraKet::Ket).valid);
        assert!(!formal_braket_evolution(&cfg, q, 1.0, BraKet::Bra).valid);
        let k = formal_braket_evolution(&cfg, Complex64::new(2.0, 0.0), 0.7, BraKet::Ket);
        assert!((k.multiplier - Complex64::from_polar(1.0, -4.0 * 0.7)).norm() < 1e-15);
    }

    #[test]
    fn winding_counts_sector_poles() {
        let c = ContourSpec::ray(-0.2).unwrap();
        assert_eq!(c.winding(Complex64::new(4.0, -0.26), 50.0), -1);
        assert_eq!(c.winding(Complex64::new(4.0, -2.0), 50.0), 0);
        assert_eq!(c.winding(Complex64::new(4.0, 0.26), 50.0), 0);
        let m = ContourSpec::ray(0.2).unwrap();
        assert_eq!(m.winding(Complex64::new(4.0, 0.26), 50.0), 1);
    }

    #[test]
    fn wrong_sign_time_is_refused() {
        let cfg = PhysicalConfig::canonical();
        let quad = QuadratureSpec::for_config(&cfg);
        let phi = TestFunction::bump(0.3, 2.7, 1).unwrap();
        let r = retarded_evolve(&cfg, &phi, Sign::Plus, -0.5, 0.2, &[1.0], &quad, Some(&[]));
        assert!(matches!(r, Err(Error::Domain(_))));
        assert!(r.unwrap_err().to_string().contains("not defined for t<0"));
        let a = advanced_evolve(&cfg, &phi, Sign::Plus, 0.5, 0.2, &[1.0], &quad, Some(&[]));
        assert!(matches!(a, Err(Error::Domain(_))));
    }
}
