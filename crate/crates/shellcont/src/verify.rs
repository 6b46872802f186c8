//! Numerical verification of the scattering, continuation and evolution
//! properties, collected into one machine-readable report.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::continuation::{bra_eval, complex_delta_check, ket_eval, residue_eval, residue_limit, BraTable, ResidueKind};
use crate::eigenfunctions::{chi_pm, chi_zero, residue_chi_pm};
use crate::error::{Error, Result};
use crate::jost::{jost_pm, newton_distance, s_matrix, symmetry_suite, RegularSolution, Sign};
use crate::model::{energy_from_wavenumber, wavenumber_from_energy, PhysicalConfig};
use crate::poles::{count_zeros, find_resonances, Rect};
use crate::propagators::{
    advanced_evolve, contour_equivalence_check, group_evolve, quadrant_limit, radial_grid, retarded_evolve, sector_poles,
    Limit, Quadrant,
};
use crate::testspace::{apply_h, norm_nnprime, norm_of_h, TestFunction};
use crate::transforms::{
    forward, intertwining_defects, inverse_many, l2_norm_profile, Channel, QuadratureSpec, SpectralFunction,
};
use crate::young::{scaled_quadratic, young_check, MonotoneFunction};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Suite names accepted by [`run_all`], in criterion order.
pub const SUITES: [&str; 16] = [
    "free_limit",
    "symmetry",
    "unitarity",
    "upper_half",
    "poles",
    "transforms",
    "moller",
    "eigen",
    "growth",
    "residues",
    "evolution",
    "quadrants",
    "norms",
    "young",
    "delta",
    "sheets",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub check_id: String,
    /// The property being checked, in words.
    pub anchor: String,
    pub status: Status,
    pub metric: f64,
    pub tolerance: f64,
    pub runtime_s: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub config: PhysicalConfig,
    pub entries: Vec<Entry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    /// Entries whose id starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.check_id.starts_with(prefix))
    }
}

struct Ctx<'a> {
    cfg: &'a PhysicalConfig,
    quad: &'a QuadratureSpec,
    seed: u64,
}

impl Ctx<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

fn entry(id: &str, anchor: &str, metric: f64, tolerance: f64, start: Instant, detail: String) -> Entry {
    let status = if metric.is_finite() && metric <= tolerance { Status::Pass } else { Status::Fail };
    Entry {
        check_id: id.into(),
        anchor: anchor.into(),
        status,
        metric,
        tolerance,
        runtime_s: start.elapsed().as_secs_f64(),
        detail,
    }
}

fn failed(id: &str, anchor: &str, tolerance: f64, start: Instant, e: &Error) -> Entry {
    Entry {
        check_id: id.into(),
        anchor: anchor.into(),
        status: Status::Fail,
        metric: f64::INFINITY,
        tolerance,
        runtime_s: start.elapsed().as_secs_f64(),
        detail: e.to_string(),
    }
}

fn check(id: &str, anchor: &str, tolerance: f64, f: impl FnOnce() -> Result<(f64, String)>) -> Entry {
    let start = Instant::now();
    match f() {
        Ok((m, d)) => entry(id, anchor, m, tolerance, start, d),
        Err(e) => failed(id, anchor, tolerance, start, &e),
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / a.norm().max(b.norm())
    }
}

/// Runs the comma-separated suites named in `selector` (all when `None`).
pub fn run_all(cfg: &PhysicalConfig, selector: Option<&str>, seed: u64) -> Result<VerificationReport> {
    run_all_with(cfg, selector, seed, &QuadratureSpec::for_config(cfg))
}

pub fn run_all_with(
    cfg: &PhysicalConfig,
    selector: Option<&str>,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<VerificationReport> {
    cfg.validate()?;
    quad.validate()?;
    let chosen: Vec<&str> = match selector {
        None => SUITES.to_vec(),
        Some(sel) => {
            let names: Vec<&str> = sel.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if let Some(bad) = names.iter().find(|n| !SUITES.contains(n)) {
                return Err(Error::InvalidArgument(format!("unknown suite '{bad}'; known suites: {}", SUITES.join(", "))));
            }
            if names.is_empty() {
                return Err(Error::InvalidArgument("empty suite selector".into()));
            }
            SUITES.iter().copied().filter(|s| names.contains(s)).collect()
        }
    };
    let ctx = Ctx { cfg, quad, seed };
    let mut entries: Vec<Entry> = chosen.par_iter().flat_map(|s| run_suite(&ctx, s)).collect();
    entries.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(VerificationReport { seed, config: *cfg, entries })
}

fn run_suite(ctx: &Ctx, name: &str) -> Vec<Entry> {
    match name {
        "free_limit" => free_limit(ctx),
        "symmetry" => symmetry(ctx),
        "unitarity" => unitarity(ctx),
        "upper_half" => upper_half(ctx),
        "poles" => poles(ctx),
        "transforms" => transforms(ctx),
        "moller" => moller(ctx),
        "eigen" => eigen(ctx),
        "growth" => growth(ctx),
        "residues" => residues(ctx),
        "evolution" => evolution(ctx),
        "quadrants" => quadrants(ctx),
        "norms" => norms(ctx),
        "young" => young(ctx),
        "delta" => delta(ctx),
        "sheets" => sheets(ctx),
        _ => Vec::new(),
    }
}

fn free_limit(ctx: &Ctx) -> Vec<Entry> {
    let free = ctx.cfg.with_v0(0.0);
    let qs: Vec<Complex64> = (0..41)
        .flat_map(|i| (0..41).map(move |j| Complex64::new(-10.0 + 0.5 * i as f64, -10.0 + 0.5 * j as f64)))
        .filter(|q| q.norm() > 0.0)
        .collect();
    let jost = check("01-free-limit/jost", "Jost functions tend to one without potential", 1e-12, || {
        let mut worst = 0.0f64;
        for &q in &qs {
            let j = jost_pm(&free, q)?;
            worst = worst.max((j.j_plus - 1.0).norm()).max((j.j_minus - 1.0).norm());
        }
        Ok((worst, format!("{} grid points", qs.len())))
    });
    let chi = check("01-free-limit/chi", "scattering eigenfunctions reduce to free ones", 1e-12, || {
        let mut worst = 0.0f64;
        for &q in &qs {
            for r in [0.3, 1.0, 1.7, 2.5, 4.0] {
                let c0 = chi_zero(r, q);
                let scale = c0.norm().max(1.0);
                for sign in [Sign::Plus, Sign::Minus] {
                    worst = worst.max((chi_pm(&free, r, q, sign)? - c0).norm() / scale);
                }
            }
        }
        Ok((worst, "relative to max(1, |chi0|) at 5 radii".into()))
    });
    vec![jost, chi]
}

fn symmetry(ctx: &Ctx) -> Vec<Entry> {
    vec![check("02-symmetry", "parity and conjugation identities", 1e-11, || {
        let mut rng = ctx.rng(2);
        let mut worst = 0.0f64;
        let mut arg = String::new();
        let mut n = 0;
        while n < 100 {
            let q = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            if q.norm() < 1e-3 {
                continue;
            }
            let rep = symmetry_suite(ctx.cfg, q)?;
            if rep.max_violation > worst {
                worst = rep.max_violation;
                let e = rep.entries.iter().max_by(|a, b| a.violation.total_cmp(&b.violation));
                arg = format!("q = {q}, {}", e.map_or("", |e| e.identity));
            }
            n += 1;
        }
        Ok((worst, format!("100 samples; worst at {arg}")))
    })]
}

fn unitarity(ctx: &Ctx) -> Vec<Entry> {
    vec![check("03-unitarity", "|S(k)| = 1 on the positive axis", 1e-10, || {
        let mut worst = 0.0f64;
        for i in 1..=40 {
            let s = s_matrix(ctx.cfg, Complex64::new(0.5 * i as f64, 0.0))?;
            worst = worst.max((s.norm() - 1.0).abs());
        }
        Ok((worst, "k = 0.5, 1.0, ..., 20".into()))
    })]
}

fn inverse_jost_sup(cfg: &PhysicalConfig, nx: usize, ny: usize) -> (f64, Complex64) {
    let pts: Vec<Complex64> = (0..=nx)
        .flat_map(|i| {
            (0..=ny).map(move |j| Complex64::new(0.1 + 9.9 * i as f64 / nx as f64, 0.1 + 4.9 * j as f64 / ny as f64))
        })
        .collect();
    pts.par_iter()
        .map(|&q| (1.0 / RegularSolution::new(cfg, q).jost().j_plus.norm(), q))
        .reduce(|| (0.0, Complex64::new(0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a })
}

fn upper_half(ctx: &Ctx) -> Vec<Entry> {
    let count = check("04-upper-half/count", "J+ has no zeros in the upper half plane", 0.0, || {
        let rect = Rect::new(0.1, 10.0, 0.1, 5.0)?;
        let n = count_zeros(ctx.cfg, &rect, Sign::Plus)?;
        Ok((n.unsigned_abs() as f64, format!("argument-principle count {n}")))
    });
    let sup = check("04-upper-half/bound", "1/|J+| is bounded in the upper half plane", 0.05, || {
        let (s1, q1) = inverse_jost_sup(ctx.cfg, 200, 100);
        let (s2, q2) = inverse_jost_sup(ctx.cfg, 400, 200);
        let (s3, _) = inverse_jost_sup(ctx.cfg, 100, 50);
        let change = ((s1 - s2).abs() / s2).max((s3 - s1).abs() / s1);
        Ok((change, format!("sup 1/|J+| = {s3:.6} / {s1:.6} / {s2:.6} on three grids (at {q1}, {q2})")))
    });
    vec![count, sup]
}

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

fn poles(ctx: &Ctx) -> Vec<Entry> {
    let rect = match Rect::new(0.1, 10.0, -3.0, -0.01) {
        Ok(r) => r,
        Err(e) => return vec![failed("05-poles/count", "pole certificate", 0.0, Instant::now(), &e)],
    };
    let start = Instant::now();
    let found = find_resonances(ctx.cfg, &rect, Sign::Plus);
    let mut out = Vec::new();
    let set = match (count_zeros(ctx.cfg, &rect, Sign::Plus), found) {
        (Ok(n), Ok(set)) => {
            let d = (n - set.zeros.len() as i64).unsigned_abs() as f64;
            let detail = format!("winding {n}, refined {}", set.zeros.len());
            out.push(entry("05-poles/count", "winding count equals the number of refined zeros", d, 0.0, start, detail));
            set
        }
        (Err(e), _) | (_, Err(e)) => {
            out.push(failed("05-poles/count", "winding count equals the number of refined zeros", 0.0, start, &e));
            return out;
        }
    };
    let z: Vec<Complex64> = set.locations();
    out.push(check("05-poles/residual", "|J+(q0)| <= 1e-10 max(1, |q0|^2) at each zero", 1.0, || {
        let mut worst = 0.0f64;
        for &q0 in &z {
            let j = jost_pm(ctx.cfg, q0)?.j_plus.norm();
            worst = worst.max(j / (1e-10 * q0.norm_sqr().max(1.0)));
        }
        Ok((worst, format!("{} zeros; metric is the residual in units of the bound", z.len())))
    }));
    out.push(check("05-poles/mirror", "zeros of J+ are symmetric under q -> -conj(q)", 1e-8, || {
        let m = find_resonances(ctx.cfg, &rect.mirrored(), Sign::Plus)?.locations();
        if m.len() != z.len() {
            return Ok((f64::INFINITY, format!("{} zeros vs {} mirrored", z.len(), m.len())));
        }
        let worst = z.iter().map(|q| nearest(-q.conj(), &m)).fold(0.0, f64::max);
        Ok((worst, format!("{} pairs", z.len())))
    }));
    out.push(check("05-poles/minus", "zeros of J- are the negatives of the zeros of J+", 1e-8, || {
        let m = find_resonances(ctx.cfg, &rect.negated(), Sign::Minus)?.locations();
        if m.len() != z.len() {
            return Ok((f64::INFINITY, format!("{} zeros of J+ vs {} of J-", z.len(), m.len())));
        }
        let worst = z.iter().map(|q| nearest(-q, &m)).fold(0.0, f64::max);
        Ok((worst, format!("{} pairs", z.len())))
    }));
    out
}

fn transform_family(cfg: &PhysicalConfig) -> Result<Vec<TestFunction>> {
    Ok(vec![
        TestFunction::bump(0.3, 2.7, 1)?,
        TestFunction::bump(2.5, 9.5, 2)?,
        TestFunction::gauss_analytic(cfg, 0, 2.0, 4)?,
        TestFunction::gauss_damped(cfg, 1, 2.0)?,
    ])
}

/// Parseval, roundtrip and diagonalisation errors for one function and channel.
fn transform_errors(cfg: &PhysicalConfig, phi: &TestFunction, channel: Channel, quad: &QuadratureSpec) -> Result<[f64; 3]> {
    let f = SpectralFunction::new(cfg, phi, channel, quad)?;
    let norm = l2_norm_profile(cfg, phi, quad)?;
    let parseval = (f.l2_norm() - norm).abs() / norm;
    let end = f.radial_end.min(quad.r_max);
    let (rs, w) = radial_grid(cfg, end, 0.5);
    let back = inverse_many(cfg, &f, channel, &rs, quad)?;
    let (num, den) = rs.iter().zip(&w).zip(&back).fold((0.0, 0.0), |(n, d), ((&r, &w), v)| {
        let x = phi.value(r);
        (n + w * (v - x).norm_sqr(), d + w * x * x)
    });
    let roundtrip = (num / den).sqrt();
    let hcfg = match channel {
        Channel::Free => cfg.with_v0(0.0),
        _ => *cfg,
    };
    let hphi = apply_h(&hcfg, phi);
    let picks: Vec<(f64, Complex64)> =
        f.k.iter().zip(&f.values).step_by((f.len() / 48).max(1)).map(|(&k, &v)| (k, v)).collect();
    let hv = picks.par_iter().map(|&(k, _)| forward(cfg, &hphi, channel, k, quad)).collect::<Result<Vec<_>>>()?;
    let peak = hv.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let diag = picks
        .iter()
        .zip(&hv)
        .map(|(&(k, v), h)| (h - cfg.h2m() * k * k * v).norm() / peak)
        .fold(0.0, f64::max);
    Ok([parseval, roundtrip, diag])
}

fn transforms(ctx: &Ctx) -> Vec<Entry> {
    let family = match transform_family(ctx.cfg) {
        Ok(f) => f,
        Err(e) => return vec![failed("06-transforms", "transform unitarity", 1e-6, Instant::now(), &e)],
    };
    let jobs: Vec<(usize, Channel)> =
        (0..family.len()).flat_map(|i| [Channel::Plus, Channel::Minus, Channel::Free].map(|c| (i, c))).collect();
    let start = Instant::now();
    let results: Vec<Result<[f64; 3]>> =
        jobs.par_iter().map(|&(i, c)| transform_errors(ctx.cfg, &family[i], c, ctx.quad)).collect();
    let names = ["parseval", "roundtrip", "diagonal"];
    let anchors = [
        "transforms preserve the norm",
        "inverse transform recovers the function",
        "H acts as multiplication by h2m k^2",
    ];
    let mut out = Vec::new();
    for (m, name) in names.iter().enumerate() {
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        let mut err = None;
        for ((i, c), r) in jobs.iter().zip(&results) {
            match r {
                Ok(v) => {
                    worst = worst.max(v[m]);
                    detail.push(format!("{} {c:?} {:.1e}", family[*i].label(), v[m]));
                }
                Err(e) => err = Some(e.clone()),
            }
        }
        let id = format!("06-transforms/{name}");
        out.push(match err {
            Some(e) => failed(&id, anchors[m], 1e-6, start, &e),
            None => entry(&id, anchors[m], worst, 1e-6, start, detail.join("; ")),
        });
    }
    out
}

fn moller(ctx: &Ctx) -> Vec<Entry> {
    let start = Instant::now();
    let bumps = [TestFunction::bump(0.2, 4.0, 2), TestFunction::bump(2.5, 9.5, 2)];
    let signs = [Sign::Plus, Sign::Minus];
    let res: Vec<Result<(String, f64, f64)>> = bumps
        .par_iter()
        .flat_map(|phi| {
            let reps = phi.clone().and_then(|p| Ok((intertwining_defects(ctx.cfg, &p, &signs, ctx.quad, 50.0)?, p)));
            match reps {
                Ok((reps, p)) => signs
                    .iter()
                    .zip(reps)
                    .map(|(s, r)| Ok((format!("{} {s:?}", p.label()), r.relative_defect(), r.isometry_defect())))
                    .collect(),
                Err(e) => vec![Err(e)],
            }
        })
        .collect();
    let mut out = Vec::new();
    for (m, (name, anchor, tol)) in [
        ("intertwining", "H Omega = Omega H0 on compact bumps", 1e-5),
        ("isometry", "Moller operators preserve the norm", 1e-6),
    ]
    .iter()
    .enumerate()
    {
        let id = format!("07-moller/{name}");
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        let mut err = None;
        for r in &res {
            match r {
                Ok((l, d, iso)) => {
                    let v = if m == 0 { *d } else { *iso };
                    worst = worst.max(v);
                    detail.push(format!("{l} {v:.1e}"));
                }
                Err(e) => err = Some(e.clone()),
            }
        }
        out.push(match err {
            Some(e) => failed(&id, anchor, *tol, start, &e),
            None => entry(&id, anchor, worst, *tol, start, detail.join("; ")),
        });
    }
    out
}

fn pole_free_samples(ctx: &Ctx, n: usize, stream: u64) -> Vec<Complex64> {
    let mut rng = ctx.rng(stream);
    let mut out = Vec::new();
    while out.len() < n {
        let q = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-3.0..3.0));
        if q.norm() < 0.1 {
            continue;
        }
        if newton_distance(ctx.cfg, q, Sign::Plus) < 0.1 || newton_distance(ctx.cfg, q, Sign::Minus) < 0.1 {
            continue;
        }
        out.push(q);
    }
    out
}

fn eigen(ctx: &Ctx) -> Vec<Entry> {
    let qs = pole_free_samples(ctx, 20, 8);
    let run = |kind: ResidueKind| -> Result<(f64, String)> {
        let phi = TestFunction::bump(0.3, 2.7, 1)?;
        let hphi = apply_h(ctx.cfg, &phi);
        let worst = qs
            .par_iter()
            .map(|&q| {
                let e = ctx.cfg.h2m() * q * q;
                let mut w = 0.0f64;
                for sign in [Sign::Plus, Sign::Minus] {
                    let (a, b) = match kind {
                        ResidueKind::Bra => {
                            (bra_eval(ctx.cfg, q, &hphi, sign, ctx.quad)?.value, bra_eval(ctx.cfg, q, &phi, sign, ctx.quad)?.value)
                        }
                        ResidueKind::Ket => {
                            (ket_eval(ctx.cfg, q, &hphi, sign, ctx.quad)?.value, ket_eval(ctx.cfg, q, &phi, sign, ctx.quad)?.value)
                        }
                    };
                    w = w.max(rel(a, e * b));
                }
                Ok(w)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((worst, "20 seeded q, both signs".into()))
    };
    vec![
        check("08-eigen/bra", "<q|H phi> = E(q) <q|phi> off the poles", 1e-8, || run(ResidueKind::Bra)),
        check("08-eigen/ket", "<phi|H|q> = E(q) <phi|q> off the poles", 1e-8, || run(ResidueKind::Ket)),
    ]
}

fn damped(cfg: &PhysicalConfig, q: Complex64, v: Complex64, nprime: u32) -> f64 {
    let e = Complex64::new(1.0, 0.0) + cfg.h2m() * q * q;
    (e.powu(nprime) * v).norm() * (-0.5 * q.im * q.im).exp()
}

/// Grid supremum over the half disc `|q| <= 8` on the pole-free side, followed
/// by a compass search from the best grid and real-axis points.
fn growth_sup(cfg: &PhysicalConfig, table: &BraTable, sign: Sign, nprime: u32, n: usize) -> Result<(f64, f64, Complex64)> {
    let side = match sign {
        Sign::Plus => -1.0,
        Sign::Minus => 1.0,
    };
    let radius = 8.0;
    let admissible = |q: Complex64| q.norm() <= radius && q.norm() > 1e-6 && side * q.im >= 0.0;
    let f = |q: Complex64| -> f64 {
        if !admissible(q) {
            return f64::NEG_INFINITY;
        }
        match table.bra(q, sign) {
            Ok(v) => damped(cfg, q, v, nprime),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let h = radius / n as f64;
    let pts: Vec<Complex64> = (0..=2 * n)
        .flat_map(|i| (0..=n).map(move |j| Complex64::new(-radius + i as f64 * h, side * j as f64 * h)))
        .filter(|&q| admissible(q))
        .collect();
    let mut vals: Vec<(f64, Complex64)> = pts.par_iter().map(|&q| (f(q), q)).collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let grid_sup = vals.first().map_or(0.0, |v| v.0);
    // narrow resonance peaks sit on the real axis
    let fine = h / 16.0;
    let mut axis: Vec<(f64, Complex64)> = (0..=32 * n)
        .into_par_iter()
        .map(|i| {
            let q = Complex64::new(-radius + i as f64 * fine, 0.0);
            (f(q), q)
        })
        .collect();
    axis.sort_by(|a, b| b.0.total_cmp(&a.0));
    let seeds: Vec<(f64, Complex64, f64)> = vals
        .into_iter()
        .take(8)
        .map(|(v, q)| (v, q, h))
        .chain(axis.into_iter().take(8).map(|(v, q)| (v, q, fine)))
        .collect();
    let refined = seeds
        .par_iter()
        .map(|&(v0, q0, h)| {
            let (mut v, mut q, mut step) = (v0, q0, h);
            while step > 1e-5 {
                let mut moved = false;
                for d in [Complex64::new(step, 0.0), Complex64::new(-step, 0.0), Complex64::new(0.0, step), Complex64::new(0.0, -step)] {
                    let w = f(q + d);
                    if w > v {
                        v = w;
                        q += d;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            (v, q)
        })
        .reduce(|| (0.0, Complex64::new(0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a });
    Ok((grid_sup, refined.0, refined.1))
}

fn growth(ctx: &Ctx) -> Vec<Entry> {
    let fam = [TestFunction::gauss_analytic(ctx.cfg, 0, 2.0, 4), TestFunction::gauss_damped(ctx.cfg, 1, 2.0)];
    let mut out = Vec::new();
    for (name, phi) in ["analytic", "damped"].into_iter().zip(fam) {
        for sign in [Sign::Plus, Sign::Minus] {
            let id = format!("09-growth/{name}{}", sign.symbol());
            out.push(check(&id, "damped continued transform has a finite, stable supremum", 0.1, || {
                let phi = phi.clone()?;
                let table = BraTable::new(ctx.cfg, &phi, 9.0, 8.5, ctx.quad)?;
                let mut worst = 0.0f64;
                let mut detail = Vec::new();
                for nprime in 0..=2 {
                    let (g1, s1, q1) = growth_sup(ctx.cfg, &table, sign, nprime, 32)?;
                    let (g2, s2, q2) = growth_sup(ctx.cfg, &table, sign, nprime, 64)?;
                    let change = (s1 - s2).abs() / s2.max(f64::MIN_POSITIVE);
                    if !(s1.is_finite() && s2.is_finite()) {
                        worst = f64::INFINITY;
                    }
                    worst = worst.max(change);
                    detail.push(format!(
                        "n'={nprime}: grid {g1:.4e}/{g2:.4e}, refined {s1:.6e} at {q1:.4} / {s2:.6e} at {q2:.4}"
                    ));
                }
                Ok((worst, format!("{}: {}", phi.label(), detail.join("; "))))
            }));
        }
    }
    out
}

fn lowest_resonances(cfg: &PhysicalConfig, n: usize) -> Result<Vec<Complex64>> {
    let rect = Rect::new(0.1, 10.0, -3.0, -0.01)?;
    let mut z = find_resonances(cfg, &rect, Sign::Plus)?.locations();
    z.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    z.truncate(n);
    Ok(z)
}

fn richardson(g: impl Fn(f64) -> Result<Complex64>, step: f64) -> Result<Complex64> {
    let (g1, g2, g4) = (g(step)?, g(step / 2.0)?, g(step / 4.0)?);
    let r1 = 2.0 * g2 - g1;
    let r2 = 2.0 * g4 - g2;
    Ok((4.0 * r2 - r1) / 3.0)
}

fn residues(ctx: &Ctx) -> Vec<Entry> {
    let pointwise = check("10-residues/pointwise", "(q - q0) chi+(r; q) tends to the residue", 1e-7, || {
        let z = lowest_resonances(ctx.cfg, 2)?;
        let mut worst = 0.0f64;
        for &q0 in &z {
            for r in [0.5, 1.5, 3.0] {
                let exact = residue_chi_pm(ctx.cfg, r, q0, Sign::Plus)?;
                let dir = Complex64::from_polar(1.0, 0.3);
                let lim = richardson(|h| Ok(dir * h * chi_pm(ctx.cfg, r, q0 + dir * h, Sign::Plus)?), 1e-3)?;
                worst = worst.max(rel(lim, exact));
            }
        }
        Ok((worst, format!("resonances {z:?}")))
    });
    let functional = check("10-residues/functional", "residue functional equals the limit of the continued functional", 1e-7, || {
        let z = lowest_resonances(ctx.cfg, 2)?;
        let phi = TestFunction::bump(0.3, 2.7, 1)?;
        let mut worst = 0.0f64;
        for &q0 in &z {
            for (sign, kind) in [(Sign::Plus, ResidueKind::Ket), (Sign::Minus, ResidueKind::Bra)] {
                let exact = residue_eval(ctx.cfg, q0, &phi, sign, kind, ctx.quad)?.value;
                let lim = residue_limit(ctx.cfg, q0, &phi, sign, kind, ctx.quad, 1e-3, 0.3)?;
                worst = worst.max(rel(lim, exact));
            }
        }
        Ok((worst, format!("{} resonances, ket+ and bra-", z.len())))
    });
    vec![pointwise, functional]
}

fn evolution(ctx: &Ctx) -> Vec<Entry> {
    let anchor = "rotated-contour evolution coincides with the group";
    let setup = || -> Result<(TestFunction, Vec<f64>, Vec<f64>, Vec<Complex64>)> {
        let phi = TestFunction::gauss_analytic(ctx.cfg, 0, 4.0, 4)?;
        let (r, w) = radial_grid(ctx.cfg, 8.0, 0.5);
        Ok((phi, r, w, sector_poles(ctx.cfg, 60.0)?))
    };
    let (phi, r, w, poles) = match setup() {
        Ok(s) => s,
        Err(e) => return vec![failed("11-evolution/setup", anchor, 1e-6, Instant::now(), &e)],
    };
    let times = [0.1, 0.5, 1.0, -0.1, -0.5, -1.0];
    let mut out: Vec<Entry> = times
        .par_iter()
        .flat_map(|&t| {
            let start = Instant::now();
            let g = match group_evolve(ctx.cfg, &phi, Sign::Plus, t, &r, ctx.quad) {
                Ok(g) => g,
                Err(e) => return vec![failed(&format!("11-evolution/t={t:+}"), anchor, 1e-6, start, &e)],
            };
            let gn = g.l2_norm(&w);
            [0.1, 0.2]
                .iter()
                .map(|&eps| {
                    let id = format!("11-evolution/t={t:+}/eps={eps}");
                    check(&id, anchor, 1e-6, || {
                        let c = if t > 0.0 {
                            retarded_evolve(ctx.cfg, &phi, Sign::Plus, t, eps, &r, ctx.quad, Some(&poles))?
                        } else {
                            advanced_evolve(ctx.cfg, &phi, Sign::Plus, t, eps, &r, ctx.quad, Some(&poles))?
                        };
                        Ok((c.field.l2_distance(&g, &w) / gn, format!("{} residues, s_max {:.1}", c.residues.len(), c.s_max)))
                    })
                })
                .collect()
        })
        .collect();
    out.push(check("11-evolution/refusal", "semigroups refuse the wrong sign of time", 0.0, || {
        let a = retarded_evolve(ctx.cfg, &phi, Sign::Plus, -0.5, 0.2, &r, ctx.quad, Some(&poles));
        let b = advanced_evolve(ctx.cfg, &phi, Sign::Plus, 0.5, 0.2, &r, ctx.quad, Some(&poles));
        let c = contour_equivalence_check(ctx.cfg, &phi, Sign::Plus, -0.5, 0.0, -0.2, &r, &w, ctx.quad, Some(&poles));
        let ok = [
            matches!(a, Err(Error::Domain(_))),
            matches!(b, Err(Error::Domain(_))),
            matches!(c, Err(Error::Refused(_))),
        ];
        let bad = ok.iter().filter(|x| !**x).count();
        Ok((bad as f64, format!("refusals {ok:?}")))
    }));
    out
}

fn quadrants(ctx: &Ctx) -> Vec<Entry> {
    let _ = ctx;
    vec![check("12-quadrants", "large-|q| limit of the time factor in each quadrant", 0.0, || {
        // decay of e^{-i q^2 t} for (quadrant, t > 0) and (quadrant, t < 0)
        let table = [
            (Quadrant::First, Limit::BlowsUp, Limit::Decays),
            (Quadrant::Second, Limit::Decays, Limit::BlowsUp),
            (Quadrant::Third, Limit::BlowsUp, Limit::Decays),
            (Quadrant::Fourth, Limit::Decays, Limit::BlowsUp),
        ];
        let mut bad = 0;
        let mut cases = 0;
        for (quad, pos, neg) in table {
            for off in [-PI / 8.0, 0.0, PI / 8.0] {
                for (ts, want) in [(1.0, pos), (-1.0, neg)] {
                    let rep = quadrant_limit(quad.center() + off, ts)?;
                    cases += 1;
                    if rep.quadrant != quad || rep.observed != want || rep.predicted != want {
                        bad += 1;
                    }
                }
            }
        }
        Ok((bad as f64, format!("{cases} rays, {bad} mismatches")))
    })]
}

fn norms(ctx: &Ctx) -> Vec<Entry> {
    let family: Vec<(&str, Result<TestFunction>)> = vec![
        ("bump-inner", TestFunction::bump(0.3, 2.7, 1)),
        ("bump-outer", TestFunction::bump(2.5, 9.5, 2)),
        ("gauss-analytic", TestFunction::gauss_analytic(ctx.cfg, 0, 2.0, 4)),
        ("gauss-damped", TestFunction::gauss_damped(ctx.cfg, 1, 2.0)),
        ("gauss-damped-3", TestFunction::gauss_damped(ctx.cfg, 0, 3.0)),
    ];
    family
        .into_par_iter()
        .map(|(name, phi)| {
            let id = format!("13-norms/{name}");
            let anchor = "||H phi||_{n,n'} <= ||phi||_{n,n'+1} + ||phi||_{n,n'}";
            let start = Instant::now();
            let phi = match phi {
                Ok(p) => p,
                Err(e) => return failed(&id, anchor, 1.0, start, &e),
            };
            let mut worst = 0.0f64;
            let mut used = Vec::new();
            let mut skipped = Vec::new();
            for n in 1..=3 {
                for np in 0..=1 {
                    let r = norm_of_h(ctx.cfg, &phi, n, np).and_then(|l| {
                        Ok(l / (norm_nnprime(ctx.cfg, &phi, n, np + 1)? + norm_nnprime(ctx.cfg, &phi, n, np)?))
                    });
                    match r {
                        Ok(x) => {
                            worst = worst.max(x);
                            used.push(format!("({n},{np}) {x:.3}"));
                        }
                        Err(Error::DivergentNorm(_)) => skipped.push(format!("({n},{np})")),
                        Err(e) => return failed(&id, anchor, 1.0, start, &e),
                    }
                }
            }
            let detail = format!("{}: ratios {}; divergent {}", phi.label(), used.join(" "), skipped.join(" "));
            if used.is_empty() {
                Entry {
                    check_id: id,
                    anchor: anchor.into(),
                    status: Status::Skipped,
                    metric: 0.0,
                    tolerance: 1.0,
                    runtime_s: start.elapsed().as_secs_f64(),
                    detail,
                }
            } else {
                entry(&id, anchor, worst, 1.0, start, detail)
            }
        })
        .collect()
}

fn young(ctx: &Ctx) -> Vec<Entry> {
    let pqss = check("14-young/power", "x y <= x^a/a + y^b/b", 0.0, || {
        let mut rng = ctx.rng(14);
        let mut bad = 0;
        let mut min_slack = f64::INFINITY;
        for _ in 0..10_000 {
            let a: f64 = rng.gen_range(1.1..5.0);
            let x: f64 = rng.gen_range(0.0..10.0);
            let y: f64 = rng.gen_range(0.0..10.0);
            let rep = young_check(&MonotoneFunction::power(a - 1.0)?, x, y)?;
            let b = a / (a - 1.0);
            let closed = x.powf(a) / a + y.powf(b) / b;
            if !rep.holds || (rep.m + rep.omega - closed).abs() > 1e-9 * closed.max(1.0) {
                bad += 1;
            }
            min_slack = min_slack.min(rep.slack / (rep.m + rep.omega).max(1.0));
        }
        Ok((bad as f64, format!("10000 samples, smallest relative slack {min_slack:.2e}")))
    });
    let scaled = check("14-young/scaled", "x y <= alpha x^2/2 + y^2/(2 alpha)", 0.0, || {
        let mut rng = ctx.rng(15);
        let mut bad = 0;
        for i in 0..10_000 {
            let alpha = [0.5, 1.0, 2.0][i % 3];
            let x: f64 = rng.gen_range(0.0..10.0);
            let y: f64 = rng.gen_range(0.0..10.0);
            let rep = scaled_quadratic(x, y, alpha)?;
            let closed = alpha * x * x / 2.0 + y * y / (2.0 * alpha);
            if !rep.holds || x * y > closed * (1.0 + 1e-14) {
                bad += 1;
            }
        }
        Ok((bad as f64, "10000 samples over alpha in {0.5, 1, 2}".into()))
    });
    let equality = check("14-young/equality", "equality exactly on the graph y = mu(x)", 0.0, || {
        let mut rng = ctx.rng(16);
        let mut bad = 0;
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(1.1..5.0);
            let x: f64 = rng.gen_range(0.01..5.0);
            let mu = MonotoneFunction::power(a - 1.0)?;
            let on = young_check(&mu, x, mu.eval(x))?;
            let off = young_check(&mu, x, mu.eval(x) * 1.01 + 1e-3)?;
            let scale = (on.m + on.omega).max(1.0);
            if !on.equality_case || on.slack.abs() > 1e-9 * scale || off.equality_case || off.slack <= 0.0 {
                bad += 1;
            }
        }
        Ok((bad as f64, "1000 points on and 1000 off the graph".into()))
    });
    vec![pqss, scaled, equality]
}

fn delta(ctx: &Ctx) -> Vec<Entry> {
    vec![check("x-delta", "continued transform agrees with the complex delta functional", 1e-6, || {
        let phi = TestFunction::bump(0.3, 2.7, 1)?;
        let mut worst = 0.0f64;
        for q in [Complex64::new(1.5, -0.3), Complex64::new(2.5, 0.4)] {
            for sign in [Sign::Plus, Sign::Minus] {
                let rep = complex_delta_check(ctx.cfg, q, &phi, sign, ctx.quad)?;
                worst = worst.max(rep.discrepancy);
            }
        }
        Ok((worst, "two points, both signs".into()))
    })]
}

fn sheets(ctx: &Ctx) -> Vec<Entry> {
    vec![check("x-sheets", "energy and wave number maps are mutually inverse", 1e-13, || {
        let mut rng = ctx.rng(17);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let q = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let back = wavenumber_from_energy(ctx.cfg, energy_from_wavenumber(ctx.cfg, q));
            worst = worst.max((back - q).norm() / q.norm().max(1.0));
        }
        Ok((worst, "1000 seeded q".into()))
    })]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_filters_suites() {
        let cfg = PhysicalConfig::canonical();
        let rep = run_all(&cfg, Some("quadrants"), DEFAULT_SEED).unwrap();
        assert!(rep.entries.iter().all(|e| e.check_id.starts_with("12-")));
        assert!(run_all(&cfg, Some("nonsense"), DEFAULT_SEED).is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = PhysicalConfig::canonical();
        let a = run_all(&cfg, Some("symmetry"), 7).unwrap();
        let b = run_all(&cfg, Some("symmetry"), 7).unwrap();
        assert_eq!(a.entries[0].metric, b.entries[0].metric);
        assert_eq!(a.seed, 7);
    }

    #[test]
    fn tighter_quadrature_keeps_passes() {
        let cfg = PhysicalConfig::canonical();
        let loose = QuadratureSpec::for_config(&cfg);
        let tight = QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-12, ..loose.clone() };
        for suite in ["eigen", "residues", "delta"] {
            let a = run_all_with(&cfg, Some(suite), DEFAULT_SEED, &loose).unwrap();
            let b = run_all_with(&cfg, Some(suite), DEFAULT_SEED, &tight).unwrap();
            for (x, y) in a.entries.iter().zip(&b.entries) {
                assert_eq!(x.check_id, y.check_id);
                if x.status == Status::Pass {
                    assert_eq!(y.status, Status::Pass, "{} flipped: {}", y.check_id, y.detail);
                }
            }
        }
    }

    #[test]
    fn pass_implies_metric_within_tolerance() {
        let cfg = PhysicalConfig::canonical();
        let rep = run_all(&cfg, Some("young"), DEFAULT_SEED).unwrap();
        for e in &rep.entries {
            assert!(e.status != Status::Pass || e.metric <= e.tolerance);
        }
    }
}
