//! Gauss–Legendre panels and a panel-bisecting adaptive integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule { nodes, weights }
}

static GL16: Lazy<Rule> = Lazy::new(|| gauss_legendre(16));

pub fn gl16() -> &'static Rule {
    &GL16
}

impl Rule {
    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (m + h * x, h * w))
    }

    pub fn integrate(&self, f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// Splits each interval between consecutive `breaks` into panels no wider than
/// `width(x)` at the panel's left end.
pub fn panels(breaks: &[f64], width: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut b: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * (1.0 + y.abs()));
    let mut out = Vec::new();
    for pair in b.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mut x = lo;
        while x < hi {
            let h = width(x).max(1e-12);
            let left = hi - x;
            if left <= h * 1.0001 {
                out.push((x, hi));
                break;
            }
            // split the remainder evenly when it is a small multiple of h
            let step = if left < 2.0 * h { 0.5 * left } else { h };
            out.push((x, x + step));
            x += step;
        }
    }
    out
}

/// Flattened nodes and weights of `rule` over `panels`.
pub fn panel_nodes(panels: &[(f64, f64)], rule: &Rule) -> Vec<(f64, f64)> {
    panels.iter().flat_map(|&(a, b)| rule.mapped(a, b).collect::<Vec<_>>()).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_panels: 20_000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn eval_panel<F>(f: &F, a: f64, b: f64, n_out: usize) -> Panel
where
    F: Fn(f64) -> Vec<Complex64> + Sync,
{
    let rule = gl16();
    let m = 0.5 * (a + b);
    let mut whole = vec![Complex64::new(0.0, 0.0); n_out];
    let mut halves = vec![Complex64::new(0.0, 0.0); n_out];
    for (x, w) in rule.mapped(a, b) {
        for (acc, v) in whole.iter_mut().zip(f(x)) {
            *acc += v * w;
        }
    }
    for (lo, hi) in [(a, m), (m, b)] {
        for (x, w) in rule.mapped(lo, hi) {
            for (acc, v) in halves.iter_mut().zip(f(x)) {
                *acc += v * w;
            }
        }
    }
    let err = whole.iter().zip(&halves).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Panel { a, b, value: halves, err }
}

/// Adaptive integral of a vector-valued function. Returns values and an error
/// estimate (max over components).
pub fn integrate_vec<F>(f: &F, init: &[(f64, f64)], n_out: usize, tol: Tolerance) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(f64) -> Vec<Complex64> + Sync,
{
    let mut heap: BinaryHeap<Panel> = init.par_iter().map(|&(a, b)| eval_panel(f, a, b, n_out)).collect::<Vec<_>>().into();
    loop {
        let mut total = vec![Complex64::new(0.0, 0.0); n_out];
        let mut err = 0.0;
        for p in heap.iter() {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            err += p.err;
        }
        let scale = total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let target = tol.abs.max(tol.rel * scale);
        if err <= target {
            return Ok((total, err));
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature { estimate: err, tolerance: target });
        }
        // refine the worst panels in one parallel batch
        let batch = (heap.len() / 8).clamp(1, 64);
        let mut work = Vec::with_capacity(batch);
        while work.len() < batch {
            match heap.pop() {
                Some(p) if p.err > 0.0 && p.b - p.a > 1e-13 * (1.0 + p.a.abs()) => work.push(p),
                Some(p) => {
                    heap.push(p);
                    break;
                }
                None => break,
            }
        }
        if work.is_empty() {
            return Err(Error::Quadrature { estimate: err, tolerance: target });
        }
        let fresh: Vec<Panel> = work
            .par_iter()
            .flat_map(|p| {
                let m = 0.5 * (p.a + p.b);
                vec![eval_panel(f, p.a, m, n_out), eval_panel(f, m, p.b, n_out)]
            })
            .collect();
        heap.extend(fresh);
    }
}

/// Scalar form of [`integrate_vec`].
pub fn integrate<F>(f: &F, init: &[(f64, f64)], tol: Tolerance) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let g = |x: f64| vec![f(x)];
    let (v, e) = integrate_vec(&g, init, 1, tol)?;
    Ok((v[0], e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let r = gauss_legendre(16);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let f = |x: f64| Complex64::new(x.powi(30) + 3.0 * x.powi(7), 0.0);
        let v = r.integrate(&f, -1.0, 1.0);
        assert!((v.re - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn panels_respect_breaks_and_width() {
        let p = panels(&[0.0, 1.0, 2.5], &|_| 0.3);
        assert!(p.iter().any(|&(a, _)| a == 1.0));
        assert!(p.iter().all(|&(a, b)| b - a <= 0.3 * 1.0001 && b > a));
        assert_eq!(p.first().unwrap().0, 0.0);
        assert_eq!(p.last().unwrap().1, 2.5);
    }

    #[test]
    fn adaptive_handles_near_singularity() {
        // Lorentzian of width 1e-3: integral over [0, 2] of eps/((x-1)^2+eps^2)
        let eps = 1e-3;
        let f = |x: f64| Complex64::new(eps / ((x - 1.0).powi(2) + eps * eps), 0.0);
        let (v, err) = integrate(&f, &[(0.0, 2.0)], Tolerance::default()).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v.re - exact).abs() < 1e-10, "{} vs {exact}, err {err}", v.re);
    }
}
