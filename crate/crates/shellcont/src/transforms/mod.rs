//! The maps between position and wave-number representations on the real
//! `k` axis, the Møller operators and S-matrix elements.

pub mod quadrature;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfunctions::NORM;
use crate::error::{Error, Result};
use crate::jost::{RealSolution, Sign};
use crate::model::PhysicalConfig;
use crate::testspace::{apply_h, cutoff, Profile, TestFunction};
use quadrature::{gl16, panel_nodes, panels, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Plus,
    Minus,
    Free,
}

impl From<Sign> for Channel {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => Channel::Plus,
            Sign::Minus => Channel::Minus,
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Channel::Plus),
            "minus" | "-" => Ok(Channel::Minus),
            "free" | "0" => Ok(Channel::Free),
            _ => Err(Error::InvalidArgument(format!("unknown channel '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussLegendreComposite,
    Adaptive,
}

/// Discretisation parameters shared by every real-axis integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub r_max: f64,
    /// Starting wave-number cutoff; spectral grids extend it until the tail is negligible.
    pub k_max: f64,
    /// Hard ceiling for the extension.
    pub k_cap: f64,
    /// Gauss–Legendre panels per period of the fastest oscillation.
    pub panels: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Spectral amplitude at `k_max` relative to the peak that stops the extension.
    pub tail_tol: f64,
    pub split_points: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussLegendreComposite,
            r_max: 12.0,
            k_max: 40.0,
            k_cap: 640.0,
            panels: 1,
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            tail_tol: 1e-8,
            split_points: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn for_config(cfg: &PhysicalConfig) -> Self {
        Self { split_points: vec![cfg.a, cfg.b], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !(pos(self.r_max) && pos(self.k_max) && pos(self.abs_tol) && pos(self.rel_tol) && pos(self.tail_tol)) {
            return Err(Error::InvalidArgument("quadrature parameters must be positive and finite".into()));
        }
        if self.k_cap < self.k_max || self.panels == 0 {
            return Err(Error::InvalidArgument("k_cap must be at least k_max and panels positive".into()));
        }
        if self.split_points.iter().any(|&s| !(0.0..=self.r_max).contains(&s)) {
            return Err(Error::InvalidArgument("split points must lie in [0, r_max]".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance { abs: self.abs_tol, rel: self.rel_tol, max_panels: 200_000 }
    }

    fn width(&self, omega: f64) -> f64 {
        (2.0 * PI / (self.panels as f64 * omega.max(1e-9))).min(0.25)
    }
}

fn radial_breaks(cfg: &PhysicalConfig, phi: &dyn Profile, quad: &QuadratureSpec, end: f64) -> Vec<f64> {
    let mut b = vec![0.0, cfg.a, cfg.b, end];
    b.extend(quad.split_points.iter().copied());
    b.extend(phi.breakpoints());
    b.retain(|&x| (0.0..=end).contains(&x));
    b
}

/// Integration range of a profile: `(end, tail)` where `tail` bounds the
/// discarded `L1` mass beyond `r_max`.
fn radial_range(phi: &dyn Profile, quad: &QuadratureSpec) -> (f64, f64) {
    let full = cutoff(phi, 0.0, 1e-17);
    if full <= quad.r_max {
        return (full, 0.0);
    }
    let rule = gl16();
    let tail = panel_nodes(&panels(&[quad.r_max, full], &|_| 0.1), rule)
        .iter()
        .map(|&(r, w)| w * phi.value(r).abs())
        .sum();
    (quad.r_max, tail)
}

/// Fixed radial nodes with the profile folded into the weights.
#[derive(Debug, Clone)]
pub(crate) struct RadialRule {
    r: Vec<f64>,
    wphi: Vec<f64>,
    pub(crate) end: f64,
    pub(crate) tail: f64,
}

impl RadialRule {
    fn build(cfg: &PhysicalConfig, phi: &dyn Profile, quad: &QuadratureSpec, k_top: f64, halvings: u32) -> Self {
        let (end, tail) = radial_range(phi, quad);
        let h = quad.width(k_top) / 2f64.powi(halvings as i32);
        let nodes = panel_nodes(&panels(&radial_breaks(cfg, phi, quad, end), &|_| h), gl16());
        let (r, wphi) = nodes.iter().map(|&(r, w)| (r, w * phi.value(r))).unzip();
        Self { r, wphi, end, tail }
    }

    fn l1(&self) -> f64 {
        self.wphi.iter().map(|w| w.abs()).sum()
    }

    /// `int phi(r) u(r; k) dr` with the real regular solution.
    fn regular_integral(&self, sol: &RealSolution) -> f64 {
        self.r.iter().zip(&self.wphi).map(|(&r, &w)| w * sol.value(r)).sum()
    }

    fn sine_integral(&self, k: f64) -> f64 {
        self.r.iter().zip(&self.wphi).map(|(&r, &w)| w * (k * r).sin()).sum()
    }

    fn transform(&self, cfg: &PhysicalConfig, channel: Channel, k: f64) -> Complex64 {
        match channel {
            Channel::Free => Complex64::new(NORM * self.sine_integral(k), 0.0),
            _ => {
                let sol = RealSolution::new(cfg, k);
                channel_factor(channel, &sol) * self.regular_integral(&sol)
            }
        }
    }
}

/// `sqrt(2/pi) / J(k)` mapping `int phi u` to the transform in a channel.
fn channel_factor(channel: Channel, sol: &RealSolution) -> Complex64 {
    match channel {
        Channel::Plus => NORM / sol.j_plus().conj(),
        Channel::Minus => NORM / sol.j_plus(),
        Channel::Free => Complex64::new(NORM, 0.0),
    }
}

/// `chi_channel(r; k)` on the real axis.
pub(crate) fn basis_value(channel: Channel, sol: &RealSolution, r: f64) -> Complex64 {
    match channel {
        Channel::Free => Complex64::new(NORM * (sol.k() * r).sin(), 0.0),
        Channel::Plus => NORM * sol.value(r) / sol.j_plus(),
        Channel::Minus => NORM * sol.value(r) / sol.j_plus().conj(),
    }
}

/// `(chi_channel, d chi_channel/dr)` on the real axis.
pub(crate) fn basis_value_and_derivative(channel: Channel, sol: &RealSolution, r: f64) -> (Complex64, Complex64) {
    let k = sol.k();
    match channel {
        Channel::Free => (Complex64::new(NORM * (k * r).sin(), 0.0), Complex64::new(NORM * k * (k * r).cos(), 0.0)),
        _ => {
            let (u, du) = sol.value_and_derivative(r);
            let f = match channel {
                Channel::Plus => NORM / sol.j_plus(),
                _ => NORM / sol.j_plus().conj(),
            };
            (f * u, f * du)
        }
    }
}

/// `chi_channel(r; k)` for real `k > 0`.
pub fn eigenfunction(cfg: &PhysicalConfig, channel: Channel, k: f64, r: f64) -> Complex64 {
    basis_value(channel, &RealSolution::new(cfg, k), r)
}

/// A transform value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardValue {
    pub value: Complex64,
    pub quad_error: f64,
    pub tail_bound: f64,
}

/// Adaptive evaluation of `int phi conj(chi_channel(.; k))` at one `k`.
pub fn forward_detailed(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    channel: Channel,
    k: f64,
    quad: &QuadratureSpec,
) -> Result<ForwardValue> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    let (end, tail) = radial_range(phi, quad);
    let init = panels(&radial_breaks(cfg, phi, quad, end), &|_| quad.width(k.max(1.0)));
    let sol = RealSolution::new(cfg, k);
    let f = |r: f64| {
        let u = match channel {
            Channel::Free => (k * r).sin(),
            _ => sol.value(r),
        };
        Complex64::new(phi.value(r) * u, 0.0)
    };
    let (v, err) = quadrature::integrate(&f, &init, quad.tolerance())?;
    let factor = channel_factor(channel, &sol);
    Ok(ForwardValue { value: factor * v, quad_error: factor.norm() * err, tail_bound: factor.norm() * tail })
}

pub fn forward(cfg: &PhysicalConfig, phi: &dyn Profile, channel: Channel, k: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    Ok(forward_detailed(cfg, phi, channel, k, quad)?.value)
}

/// Quadrature nodes on `(0, k_max]`.
#[derive(Debug, Clone)]
pub struct KGrid {
    pub k: Vec<f64>,
    pub w: Vec<f64>,
    pub k_max: f64,
    /// Panels in node order, sixteen nodes each.
    pub panels: Vec<(f64, f64)>,
}

/// Width of a Lorentzian-resolving panel test on `1/|J+(k)|^2`.
const RESONANCE_TOL: f64 = 1e-12;

impl KGrid {
    /// Panels on `(lo, hi]` no wider than one `1/panels` of the local period
    /// `2 pi / omega(k)`, bisected where `1/|J+|^2` is poorly resolved.
    pub fn build(
        cfg: &PhysicalConfig,
        lo: f64,
        hi: f64,
        omega: &(dyn Fn(f64) -> f64 + Sync),
        quad: &QuadratureSpec,
    ) -> Self {
        let mut breaks = vec![lo, hi];
        // geometric grading towards the origin
        let mut g = 1.0;
        while g > 1e-3 {
            if g > lo && g < hi {
                breaks.push(g);
            }
            g /= 4.0;
        }
        let base = panels(&breaks, &|k| quad.width(omega(k)));
        let refined = if cfg.u0() != 0.0 { refine_resonances(cfg, &base, lo, hi) } else { base };
        let (k, w) = panel_nodes(&refined, gl16()).into_iter().unzip();
        Self { k, w, k_max: hi, panels: refined }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    fn append(&mut self, other: KGrid) {
        self.k.extend(other.k);
        self.w.extend(other.w);
        self.panels.extend(other.panels);
        self.k_max = self.k_max.max(other.k_max);
    }
}

fn refine_resonances(cfg: &PhysicalConfig, base: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let g = |k: f64| 1.0 / RealSolution::new(cfg, k).j_plus().norm_sqr();
    let rule = gl16();
    let quad = |a: f64, b: f64| rule.mapped(a, b).map(|(x, w)| w * g(x)).sum::<f64>();
    let total: f64 = base.iter().map(|&(a, b)| quad(a, b)).sum();
    let span = (hi - lo).max(1e-12);
    base.par_iter()
        .flat_map(|&(a, b)| {
            let mut out = Vec::new();
            let mut stack = vec![(a, b, 0u32)];
            while let Some((a, b, depth)) = stack.pop() {
                let m = 0.5 * (a + b);
                let err = (quad(a, b) - quad(a, m) - quad(m, b)).abs();
                if err > RESONANCE_TOL * total * (b - a) / span && depth < 30 {
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                } else {
                    out.push((a, b));
                }
            }
            out
        })
        .collect()
}

/// Samples of a transform on a `k` grid plus an off-grid evaluator.
#[derive(Clone)]
pub struct SpectralFunction {
    pub channel: Channel,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub k_max: f64,
    /// Extrapolated `L2` mass beyond `k_max` (square root).
    pub tail_l2: f64,
    /// Extrapolated `L1` mass beyond `k_max`.
    pub tail_l1: f64,
    /// Radial quadrature error estimate (absolute).
    pub quad_error: f64,
    /// Discarded radial mass beyond `r_max`.
    pub radial_tail: f64,
    /// End of the radial integration range.
    pub radial_end: f64,
    basis: Arc<Vec<RealSolution>>,
    panels: Arc<Vec<(f64, f64)>>,
    pristine: bool,
    evaluator: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("channel", &self.channel)
            .field("nodes", &self.k.len())
            .field("k_max", &self.k_max)
            .field("tail_l2", &self.tail_l2)
            .field("quad_error", &self.quad_error)
            .finish()
    }
}

/// Local oscillation frequency of spectral integrands in `k`.
pub(crate) fn spectral_omega(cfg: &PhysicalConfig, end: f64, quad: &QuadratureSpec) -> impl Fn(f64) -> f64 + Sync {
    let omega = end + quad.r_max + 2.0 * cfg.b;
    move |_| omega
}

fn sample(cfg: &PhysicalConfig, rule: &RadialRule, channel: Channel, k: &[f64]) -> (Vec<RealSolution>, Vec<Complex64>) {
    k.par_iter()
        .map(|&k| {
            let sol = RealSolution::new(cfg, k);
            let v = match channel {
                Channel::Free => Complex64::new(NORM * rule.sine_integral(k), 0.0),
                _ => channel_factor(channel, &sol) * rule.regular_integral(&sol),
            };
            (sol, v)
        })
        .unzip()
}

/// Radial rule fine enough for wave numbers up to `k_top`, with its error estimate.
fn radial_rule(
    cfg: &PhysicalConfig,
    phi: &dyn Profile,
    channel: Channel,
    quad: &QuadratureSpec,
    k_top: f64,
) -> Result<(RadialRule, f64)> {
    let probes = [1.0, 0.5 * k_top, k_top];
    let mut coarse = RadialRule::build(cfg, phi, quad, k_top, 0);
    let mut last = f64::INFINITY;
    for halvings in 1..=4 {
        let fine = RadialRule::build(cfg, phi, quad, k_top, halvings);
        let mut diff: f64 = 0.0;
        for &k in &probes {
            let a = coarse.transform(cfg, channel, k);
            let b = fine.transform(cfg, channel, k);
            diff = diff.max((a - b).norm());
        }
        let scale = NORM * fine.l1();
        let target = quad.abs_tol.max(quad.rel_tol * scale);
        if diff <= target {
            return Ok((fine, diff));
        }
        last = diff;
        coarse = fine;
        if matches!(quad.scheme, Scheme::GaussLegendreComposite) && halvings >= 2 {
            return Err(Error::Quadrature { estimate: diff, tolerance: target });
        }
    }
    Err(Error::Quadrature { estimate: last, tolerance: quad.abs_tol })
}

/// Geometric extrapolation of the spectral tail from the last two windows.
fn tail_estimates(k: &[f64], w: &[f64], v: &[Complex64], k_max: f64) -> (f64, f64, bool, f64) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let window = |lo: f64, hi: f64| {
        let mut amp: f64 = 0.0;
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for ((&k, &w), z) in k.iter().zip(w).zip(v) {
            if k > lo && k <= hi {
                amp = amp.max(z.norm());
                l1 += w * z.norm();
                l2 += w * z.norm_sqr();
            }
        }
        (amp, l1, l2)
    };
    let (e1, _, _) = window(0.7 * k_max, 0.85 * k_max);
    let (e2, l1, l2) = window(0.85 * k_max, k_max);
    let rho = if e1 > 0.0 { (e2 / e1).min(0.95) } else { 0.0 };
    let geo = rho / (1.0 - rho);
    (l1 * geo, (l2 * geo).sqrt(), e2 <= 0.0 || peak == 0.0, if peak > 0.0 { e2 / peak } else { 0.0 })
}

impl SpectralFunction {
    /// Transform on an automatically sized grid. `k_max` grows by half until the
    /// amplitude near the cutoff falls below `tail_tol` of the peak.
    pub fn new(cfg: &PhysicalConfig, phi: &dyn Profile, channel: Channel, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let (end, _) = radial_range(phi, quad);
        let omega = spectral_omega(cfg, end, quad);
        let mut k_max = quad.k_max;
        let mut grid = KGrid::build(cfg, 0.0, k_max, &omega, quad);
        let (mut rule, mut qerr) = radial_rule(cfg, phi, channel, quad, k_max)?;
        let (mut basis, mut values) = sample(cfg, &rule, channel, &grid.k);
        loop {
            let (_, _, zero, rel) = tail_estimates(&grid.k, &grid.w, &values, k_max);
            if zero || rel <= quad.tail_tol || k_max >= quad.k_cap {
                break;
            }
            let next = (1.5 * k_max).min(quad.k_cap);
            let extra = KGrid::build(cfg, k_max, next, &omega, quad);
            let (r2, e2) = radial_rule(cfg, phi, channel, quad, next)?;
            rule = r2;
            qerr = qerr.max(e2);
            let (b2, v2) = sample(cfg, &rule, channel, &extra.k);
            basis.extend(b2);
            values.extend(v2);
            grid.append(extra);
            k_max = next;
        }
        Ok(Self::assemble(cfg, rule, channel, grid, basis, values, qerr))
    }

    /// Transform sampled on a caller-supplied grid.
    pub fn with_grid(
        cfg: &PhysicalConfig,
        phi: &dyn Profile,
        channel: Channel,
        grid: KGrid,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        quad.validate()?;
        let (rule, qerr) = radial_rule(cfg, phi, channel, quad, grid.k_max)?;
        let (basis, values) = sample(cfg, &rule, channel, &grid.k);
        Ok(Self::assemble(cfg, rule, channel, grid, basis, values, qerr))
    }

    fn assemble(
        cfg: &PhysicalConfig,
        rule: RadialRule,
        channel: Channel,
        grid: KGrid,
        basis: Vec<RealSolution>,
        values: Vec<Complex64>,
        qerr: f64,
    ) -> Self {
        let (tail_l1, tail_l2, _, _) = tail_estimates(&grid.k, &grid.w, &values, grid.k_max);
        let radial_tail = rule.tail;
        let radial_end = rule.end;
        let cfg = *cfg;
        let rule = Arc::new(rule);
        let evaluator = Arc::new(move |k: f64| rule.transform(&cfg, channel, k));
        Self {
            channel,
            k: grid.k.clone(),
            weights: grid.w.clone(),
            values,
            k_max: grid.k_max,
            tail_l1,
            tail_l2,
            quad_error: qerr,
            radial_tail,
            radial_end,
            basis: Arc::new(basis),
            panels: Arc::new(grid.panels),
            pristine: true,
            evaluator,
        }
    }

    /// Value at an arbitrary `k > 0` from the defining radial integral.
    pub fn eval(&self, k: f64) -> Complex64 {
        (self.evaluator)(k)
    }

    /// The same grid with values replaced by `f(k, value)`.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64, Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let mut out = self.clone();
        out.pristine = false;
        for (v, &k) in out.values.iter_mut().zip(&self.k) {
            *v = f(k, *v);
        }
        let (l1, l2, _, _) = tail_estimates(&out.k, &out.weights, &out.values, out.k_max);
        out.tail_l1 = l1;
        out.tail_l2 = l2;
        let inner = self.evaluator.clone();
        out.evaluator = Arc::new(move |k| f(k, inner(k)));
        out
    }

    /// The quadrature grid the samples live on.
    pub fn grid(&self) -> KGrid {
        KGrid { k: self.k.clone(), w: self.weights.clone(), k_max: self.k_max, panels: self.panels.to_vec() }
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub(crate) fn nodes(&self) -> impl Iterator<Item = (f64, f64, Complex64, &RealSolution)> + '_ {
        self.k
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .zip(self.basis.iter())
            .map(|(((&k, &w), &v), s)| (k, w, v, s))
    }

    /// The transform on a finer grid whose panels are no wider than
    /// `quad.width(omega(k))`, interpolating the smooth radial integral on each
    /// original panel. `None` once values have been mapped.
    pub(crate) fn refined(
        &self,
        cfg: &PhysicalConfig,
        omega: &(dyn Fn(f64) -> f64 + Sync),
        quad: &QuadratureSpec,
    ) -> Option<Vec<(f64, f64, Complex64, RealSolution)>> {
        if !self.pristine {
            return None;
        }
        let n = gl16().nodes.len();
        let channel = self.channel;
        let out = self
            .panels
            .par_iter()
            .enumerate()
            .flat_map_iter(|(p, &(a, b))| {
                let ks = &self.k[p * n..(p + 1) * n];
                let reduced: Vec<f64> = (p * n..(p + 1) * n)
                    .map(|i| (self.values[i] / channel_factor(channel, &self.basis[i])).re)
                    .collect();
                let bary: Vec<f64> = (0..n)
                    .map(|j| 1.0 / (0..n).filter(|&m| m != j).map(|m| ks[j] - ks[m]).product::<f64>())
                    .collect();
                let pieces = ((b - a) / quad.width(omega(a))).ceil().max(1.0) as usize;
                let h = (b - a) / pieces as f64;
                let mut nodes = Vec::with_capacity(pieces * n);
                for s in 0..pieces {
                    for (k, w) in gl16().mapped(a + s as f64 * h, a + (s + 1) as f64 * h) {
                        let (mut num, mut den) = (0.0, 0.0);
                        let mut exact = None;
                        for j in 0..n {
                            let d = k - ks[j];
                            if d == 0.0 {
                                exact = Some(reduced[j]);
                                break;
                            }
                            num += bary[j] / d * reduced[j];
                            den += bary[j] / d;
                        }
                        let i = exact.unwrap_or(num / den);
                        let sol = RealSolution::new(cfg, k);
                        let v = channel_factor(channel, &sol) * i;
                        nodes.push((k, w, v, sol));
                    }
                }
                nodes
            })
            .collect();
        Some(out)
    }

    /// Largest deviation between grid samples and the evaluator, relative to the peak.
    pub fn evaluator_consistency(&self, stride: usize) -> f64 {
        let peak = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.k
            .iter()
            .zip(&self.values)
            .step_by(stride.max(1))
            .map(|(&k, v)| (self.eval(k) - v).norm() / peak)
            .fold(0.0, f64::max)
    }
}

/// `int f(k) chi_channel(r; k) dk` over the grid of `f`.
pub fn inverse(cfg: &PhysicalConfig, f: &SpectralFunction, channel: Channel, r: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    let _ = cfg;
    if !(0.0..=quad.r_max.max(f.k_max)).contains(&r) && r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius {r} is outside the resolved range")));
    }
    Ok(f.nodes().map(|(_, w, v, s)| w * v * basis_value(channel, s, r)).sum())
}

/// [`inverse`] at many radii in parallel.
pub fn inverse_many(cfg: &PhysicalConfig, f: &SpectralFunction, channel: Channel, rs: &[f64], quad: &QuadratureSpec) -> Result<Vec<Complex64>> {
    rs.par_iter().map(|&r| inverse(cfg, f, channel, r, quad)).collect()
}

/// Pointwise bound on the inverse error caused by truncating at `k_max`.
pub fn inverse_tail_bound(cfg: &PhysicalConfig, f: &SpectralFunction, channel: Channel) -> f64 {
    let jmin = match channel {
        Channel::Free => 1.0,
        _ => {
            let s = RealSolution::new(cfg, f.k_max);
            s.j_plus().norm().min(1.0)
        }
    };
    // |u(r; k)| <= max(1, |J|) for k above the barrier
    NORM * f.tail_l1 * (1.0 + 1.0 / jmin)
}

/// `sqrt(int_0^end |g(r)|^2 dr)` on panels resolving wave numbers up to `k_top`.
pub fn l2_norm_radial(g: &(dyn Fn(f64) -> Complex64 + Sync), end: f64, k_top: f64, breaks: &[f64]) -> f64 {
    let mut b = vec![0.0, end];
    b.extend(breaks.iter().copied().filter(|&x| x > 0.0 && x < end));
    let h = (PI / k_top.max(1.0)).min(0.25);
    let nodes = panel_nodes(&panels(&b, &|_| h), gl16());
    nodes.par_iter().map(|&(r, w)| w * g(r).norm_sqr()).sum::<f64>().sqrt()
}

/// `||phi||_{L2}` by adaptive quadrature.
pub fn l2_norm_profile(cfg: &PhysicalConfig, phi: &dyn Profile, quad: &QuadratureSpec) -> Result<f64> {
    let full = cutoff(phi, 0.0, 1e-17);
    let init = panels(&radial_breaks(cfg, phi, quad, full.max(quad.r_max.min(full))), &|_| 0.25);
    let f = |r: f64| Complex64::new(phi.value(r).powi(2), 0.0);
    let (v, _) = quadrature::integrate(&f, &init, quad.tolerance())?;
    Ok(v.re.sqrt())
}

/// `Omega_sign phi = F_sign^{-1} F_0 phi` as an evaluable field.
#[derive(Debug, Clone)]
pub struct MollerField {
    pub sign: Sign,
    pub free: SpectralFunction,
    cfg: PhysicalConfig,
}

impl MollerField {
    pub fn eval(&self, r: f64) -> Complex64 {
        let ch = Channel::from(self.sign);
        self.free.nodes().map(|(_, w, v, s)| w * v * basis_value(ch, s, r)).sum()
    }

    pub fn eval_many(&self, rs: &[f64]) -> Vec<Complex64> {
        rs.par_iter().map(|&r| self.eval(r)).collect()
    }

    /// `(Omega phi, H Omega phi)` in one pass.
    pub fn eval_pair(&self, r: f64) -> (Complex64, Complex64) {
        let ch = Channel::from(self.sign);
        let h2m = self.cfg.h2m();
        self.free.nodes().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(a, b), (k, w, v, s)| {
            let x = w * v * basis_value(ch, s, r);
            (a + x, b + h2m * k * k * x)
        })
    }

    /// `H Omega phi` with `H` acting as multiplication by `h2m k^2`.
    pub fn eval_h(&self, r: f64) -> Complex64 {
        let ch = Channel::from(self.sign);
        let h2m = self.cfg.h2m();
        self.free.nodes().map(|(k, w, v, s)| w * h2m * k * k * v * basis_value(ch, s, r)).sum()
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.cfg
    }
}

pub fn moller_apply(cfg: &PhysicalConfig, phi: &dyn Profile, sign: Sign, quad: &QuadratureSpec) -> Result<MollerField> {
    let free = SpectralFunction::new(cfg, phi, Channel::Free, quad)?;
    Ok(MollerField { sign, free, cfg: *cfg })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntertwiningReport {
    /// `||H Omega phi - Omega H0 phi||` over `[0, r_end]`.
    pub defect: f64,
    /// `||H Omega phi||` over `[0, r_end]`.
    pub h_norm: f64,
    /// `||Omega phi||` over `[0, r_end]`.
    pub norm: f64,
    /// `||phi||`.
    pub input_norm: f64,
}

impl IntertwiningReport {
    pub fn relative_defect(&self) -> f64 {
        self.defect / self.h_norm.max(f64::MIN_POSITIVE)
    }

    /// `| ||Omega phi|| - ||phi|| | / ||phi||`.
    pub fn isometry_defect(&self) -> f64 {
        (self.norm - self.input_norm).abs() / self.input_norm.max(f64::MIN_POSITIVE)
    }
}

pub fn intertwining_defect(
    cfg: &PhysicalConfig,
    phi: &TestFunction,
    sign: Sign,
    quad: &QuadratureSpec,
    r_end: f64,
) -> Result<IntertwiningReport> {
    Ok(intertwining_defects(cfg, phi, &[sign], quad, r_end)?[0])
}

/// [`intertwining_defect`] for several signs sharing one pair of free transforms.
pub fn intertwining_defects(
    cfg: &PhysicalConfig,
    phi: &TestFunction,
    signs: &[Sign],
    quad: &QuadratureSpec,
    r_end: f64,
) -> Result<Vec<IntertwiningReport>> {
    if !(r_end > cfg.b && r_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("window end {r_end} must exceed the outer radius")));
    }
    let h0phi = apply_h(&cfg.with_v0(0.0), phi);
    let a = SpectralFunction::new(cfg, phi, Channel::Free, quad)?;
    let b = SpectralFunction::new(cfg, &h0phi, Channel::Free, quad)?;
    let (f, fh) = if a.k_max >= b.k_max {
        let fh = SpectralFunction::with_grid(cfg, &h0phi, Channel::Free, a.grid(), quad)?;
        (a, fh)
    } else {
        (SpectralFunction::with_grid(cfg, phi, Channel::Free, b.grid(), quad)?, b)
    };
    let h2m = cfg.h2m();
    let coeffs: Vec<[Complex64; 3]> = f
        .nodes()
        .zip(&fh.values)
        .map(|((k, w, v, _), vh)| {
            let e = h2m * k * k;
            [w * v, w * e * v, w * (e * v - vh)]
        })
        .collect();
    let input_norm = l2_norm_profile(cfg, phi, quad)?;
    Ok(signs
        .iter()
        .map(|&sign| {
            let sq = window_norms(cfg, Channel::from(sign), &f.basis, &coeffs, r_end, f.k_max);
            IntertwiningReport { defect: sq[2].sqrt(), h_norm: sq[1].sqrt(), norm: sq[0].sqrt(), input_norm }
        })
        .collect())
}

/// Squared `L2` norms over `[0, r_end]` of `sum_k c_k chi(r; k)` for each
/// coefficient column. Beyond the shell all panels have equal width, so the
/// oscillatory factors advance by a fixed rotation from panel to panel.
fn window_norms(
    cfg: &PhysicalConfig,
    channel: Channel,
    basis: &[RealSolution],
    coeffs: &[[Complex64; 3]],
    r_end: f64,
    k_top: f64,
) -> [f64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let h = (4.0 * PI / k_top.max(1.0)).min(0.25);
    let inner = panel_nodes(&panels(&[0.0, cfg.a, cfg.b], &|_| h), gl16());
    let mut out = inner
        .par_iter()
        .map(|&(r, w)| {
            let mut acc = [zero; 3];
            for (s, c) in basis.iter().zip(coeffs) {
                let b = basis_value(channel, s, r);
                for f in 0..3 {
                    acc[f] += c[f] * b;
                }
            }
            acc.map(|z| w * z.norm_sqr())
        })
        .reduce(|| [0.0; 3], |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2]]);
    let n = ((r_end - cfg.b) / h).ceil() as usize;
    let width = (r_end - cfg.b) / n as f64;
    let rule: Vec<(f64, f64)> = gl16().mapped(0.0, width).collect();
    let m = rule.len();
    let fields = basis
        .par_chunks(256)
        .zip(coeffs.par_chunks(256))
        .map(|(sols, cs)| {
            let mut acc = vec![[zero; 3]; n * m];
            for (s, c) in sols.iter().zip(cs) {
                let k = s.k();
                let j = match channel {
                    Channel::Plus => s.j_plus(),
                    Channel::Minus => s.j_plus().conj(),
                    Channel::Free => Complex64::new(1.0, 0.0),
                };
                let (ca, cb) = match channel {
                    Channel::Free => ((k * cfg.b).sin(), (k * cfg.b).cos()),
                    _ => s.outer_coefficients(),
                };
                let pre = NORM / j;
                let alpha = c.map(|x| x * pre * ca);
                let beta = c.map(|x| x * pre * cb);
                let rot = Complex64::from_polar(1.0, k * width);
                for (i, &(x, _)) in rule.iter().enumerate() {
                    let mut z = Complex64::from_polar(1.0, k * x);
                    for p in 0..n {
                        let a = &mut acc[p * m + i];
                        for f in 0..3 {
                            a[f] += alpha[f] * z.re + beta[f] * z.im;
                        }
                        z *= rot;
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![[zero; 3]; n * m],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(&y) {
                    for f in 0..3 {
                        a[f] += b[f];
                    }
                }
                x
            },
        );
    for (idx, v) in fields.iter().enumerate() {
        let w = rule[idx % m].1;
        for f in 0..3 {
            out[f] += w * v[f].norm_sqr();
        }
    }
    out
}

/// `int conj(F_- phi_minus) S F_+ phi_plus dk`.
pub fn s_matrix_element(
    cfg: &PhysicalConfig,
    phi_minus: &dyn Profile,
    phi_plus: &dyn Profile,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let probe_m = SpectralFunction::new(cfg, phi_minus, Channel::Minus, quad)?;
    let probe_p = SpectralFunction::new(cfg, phi_plus, Channel::Plus, quad)?;
    let k_max = probe_m.k_max.max(probe_p.k_max);
    let end = radial_range(phi_minus, quad).0.max(radial_range(phi_plus, quad).0);
    let omega = spectral_omega(cfg, end, quad);
    let grid = KGrid::build(cfg, 0.0, k_max, &omega, quad);
    let fm = SpectralFunction::with_grid(cfg, phi_minus, Channel::Minus, grid.clone(), quad)?;
    let fp = SpectralFunction::with_grid(cfg, phi_plus, Channel::Plus, grid, quad)?;
    Ok(fm
        .nodes()
        .zip(fp.values.iter())
        .map(|((_, w, vm, s), vp)| {
            let j = s.j_plus();
            w * vm.conj() * (j.conj() / j) * vp
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PhysicalConfig {
        PhysicalConfig::canonical()
    }

    #[test]
    fn free_potential_channels_coincide() {
        let cfg = cfg().with_v0(0.0);
        let quad = QuadratureSpec::for_config(&cfg);
        let phi = TestFunction::bump(0.5, 3.0, 1).unwrap();
        for k in [0.3, 2.0, 11.0] {
            let p = forward(&cfg, &phi, Channel::Plus, k, &quad).unwrap();
            let f = forward(&cfg, &phi, Channel::Free, k, &quad).unwrap();
            assert!((p - f).norm() < 1e-12, "{p} {f}");
        }
    }

    #[test]
    fn conjugate_channels_on_real_axis() {
        let cfg = cfg();
        let quad = QuadratureSpec::for_config(&cfg);
        let phi = TestFunction::gauss_damped(&cfg, 1, 2.0).unwrap();
        for k in [0.7, 2.319, 5.0] {
            let p = forward(&cfg, &phi, Channel::Plus, k, &quad).unwrap();
            let m = forward(&cfg, &phi, Channel::Minus, k, &quad).unwrap();
            assert!((p - m.conj()).norm() < 1e-13 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn batch_matches_adaptive() {
        let cfg = cfg();
        let quad = QuadratureSpec::for_config(&cfg);
        let phi = TestFunction::bump(1.5, 4.0, 0).unwrap();
        let f = SpectralFunction::new(&cfg, &phi, Channel::Plus, &quad).unwrap();
        for i in (0..f.len()).step_by(997) {
            let k = f.k[i];
            let a = forward(&cfg, &phi, Channel::Plus, k, &quad).unwrap();
            assert!((a - f.values[i]).norm() < 1e-10, "k={k}: {a} vs {}", f.values[i]);
        }
        assert!(f.evaluator_consistency(101) < 1e-12);
    }

    #[test]
    fn zero_function_inverts_to_zero() {
        let cfg = cfg();
        let quad = QuadratureSpec::for_config(&cfg);
        let phi = TestFunction::combination(vec![(0.0, TestFunction::bump(0.2, 0.8, 0).unwrap())]).unwrap();
        let f = SpectralFunction::new(&cfg, &phi, Channel::Minus, &quad).unwrap();
        assert_eq!(inverse(&cfg, &f, Channel::Minus, 0.5, &quad).unwrap(), Complex64::new(0.0, 0.0));
    }
}
