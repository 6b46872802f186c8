//! Closed-form test functions, the Hamiltonian acting on them, and the weighted norms.

pub mod jet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PhysicalConfig;
use crate::transforms::quadrature::{self, Tolerance};
use jet::Jet;

/// A real radial function that the quadrature engine can integrate.
pub trait Profile: Send + Sync {
    fn value(&self, r: f64) -> f64;
    /// Support ends and points where derivatives may jump.
    fn breakpoints(&self) -> Vec<f64>;
    /// Upper end of a compact support, `None` for Gaussian tails.
    fn support_end(&self) -> Option<f64>;
    /// Gaussian tail scale `c` (`|f| <~ e^{-c r^2}`), `None` when compact.
    fn tail_scale(&self) -> Option<f64>;
}

/// Radius beyond which `|f(r)| e^{growth r}` stays below `tol` times its maximum.
pub fn cutoff(p: &dyn Profile, growth: f64, tol: f64) -> f64 {
    if let Some(hi) = p.support_end() {
        return hi;
    }
    let step = 0.02;
    let env: Vec<(f64, f64)> = (0..=4000)
        .map(|i| {
            let r = i as f64 * step;
            (r, p.value(r).abs() * (growth * r).exp())
        })
        .collect();
    let peak = env.iter().map(|e| e.1).fold(0.0, f64::max);
    if peak == 0.0 {
        return step;
    }
    let last = env.iter().rposition(|e| e.1 > tol * peak).unwrap_or(0);
    env[last].0 + 5.0 * step
}

/// Smooth step `f(t)/(f(t)+f(1-t))` with `f(t) = e^{-1/t}`.
pub(crate) fn smooth_step(t: f64) -> f64 {
    if t <= 2e-3 {
        0.0
    } else if t >= 1.0 - 2e-3 {
        1.0
    } else {
        let f = |x: f64| (-1.0 / x).exp();
        f(t) / (f(t) + f(1.0 - t))
    }
}

fn smooth_step_jet(t: Jet) -> Jet {
    let t0 = t.value();
    if t0 <= 2e-3 {
        Jet::zero()
    } else if t0 >= 1.0 - 2e-3 {
        Jet::constant(1.0)
    } else {
        let f = |x: Jet| (-x.recip()).exp();
        let a = f(t);
        let b = f(-t.shift(-1.0));
        a * (a + b).recip()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Bump { lo: f64, hi: f64, deg: u32 },
    Gauss { a: f64, b: f64, deg: u32, c: f64, order: u32, flatten: Option<f64> },
    Sum(Vec<(f64, TestFunction)>),
}

/// A closed-form, real-valued member of the test space.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    kind: Kind,
    label: String,
}

/// Default flattening width as a fraction of `a`.
pub const DEFAULT_FLATTEN: f64 = 0.05;

impl TestFunction {
    /// `x^deg e^{-1/(1-x^2)}` with `x` the affine image of `r` on `(lo, hi)`.
    pub fn bump(lo: f64, hi: f64, deg: u32) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!("degenerate bump interval ({lo}, {hi})")));
        }
        let label = if deg == 0 { format!("bump:{lo},{hi}") } else { format!("bump:{lo},{hi},deg={deg}") };
        Ok(Self { kind: Kind::Bump { lo, hi, deg }, label })
    }

    /// Checks that a bump interval does not straddle `0`, `a` or `b`.
    pub fn check_bump_against(&self, cfg: &PhysicalConfig) -> Result<()> {
        if let Kind::Bump { lo, hi, .. } = self.kind {
            for p in [0.0, cfg.a, cfg.b] {
                if p > lo && p < hi {
                    return Err(Error::InvalidArgument(format!(
                        "bump interval ({lo}, {hi}) contains the interface {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(1+r)^deg r^3 (r-a)^2 (r-b)^2 e^{-c r^2}` times smooth flattening at `0, a, b`.
    pub fn gauss_damped(cfg: &PhysicalConfig, deg: u32, c: f64) -> Result<Self> {
        Self::gauss_general(cfg, deg, c, 2, Some(DEFAULT_FLATTEN * cfg.a))
    }

    /// `(1+r)^deg r^(p+1) (r-a)^p (r-b)^p e^{-c r^2}` without flattening; entire in `r`.
    pub fn gauss_analytic(cfg: &PhysicalConfig, deg: u32, c: f64, order: u32) -> Result<Self> {
        Self::gauss_general(cfg, deg, c, order, None)
    }

    pub fn gauss_general(cfg: &PhysicalConfig, deg: u32, c: f64, order: u32, flatten: Option<f64>) -> Result<Self> {
        if !(c >= 2.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("tail scale c must be >= 2, got {c}")));
        }
        if order < 2 {
            return Err(Error::InvalidArgument("order must be at least 2".into()));
        }
        if let Some(d) = flatten {
            if !(d > 0.0 && d < 0.5 * cfg.a.min(cfg.b - cfg.a)) {
                return Err(Error::InvalidArgument(format!("flattening width {d} out of range")));
            }
        }
        let mut label = format!("gauss:deg={deg},c={c}");
        if order != 2 {
            label.push_str(&format!(",p={order}"));
        }
        match flatten {
            None => label.push_str(",flat=none"),
            Some(d) if (d - DEFAULT_FLATTEN * cfg.a).abs() > 1e-15 => label.push_str(&format!(",flat={d}")),
            _ => {}
        }
        Ok(Self { kind: Kind::Gauss { a: cfg.a, b: cfg.b, deg, c, order, flatten }, label })
    }

    /// `sum_i w_i f_i`.
    pub fn combination(terms: Vec<(f64, TestFunction)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty combination".into()));
        }
        let label = terms.iter().map(|(w, f)| format!("{w}*[{}]", f.label)).collect::<Vec<_>>().join("+");
        Ok(Self { kind: Kind::Sum(terms), label })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Parses `bump:lo,hi[,deg=N]` and `gauss:deg=N,c=C[,p=P][,flat=D|none]`.
    pub fn parse(spec: &str, cfg: &PhysicalConfig) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse test function {spec:?}"));
        let (head, rest) = spec.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        match head.trim() {
            "bump" => {
                if parts.len() < 2 {
                    return Err(bad());
                }
                let lo: f64 = parts[0].parse().map_err(|_| bad())?;
                let hi: f64 = parts[1].parse().map_err(|_| bad())?;
                let mut deg = 0;
                for p in &parts[2..] {
                    match p.split_once('=') {
                        Some(("deg", v)) => deg = v.parse().map_err(|_| bad())?,
                        _ => return Err(bad()),
                    }
                }
                let f = Self::bump(lo, hi, deg)?;
                f.check_bump_against(cfg)?;
                Ok(f)
            }
            "gauss" => {
                let (mut deg, mut c, mut order) = (0u32, 2.0f64, 2u32);
                let mut flatten = Some(DEFAULT_FLATTEN * cfg.a);
                for p in &parts {
                    let (k, v) = p.split_once('=').ok_or_else(bad)?;
                    match k {
                        "deg" => deg = v.parse().map_err(|_| bad())?,
                        "c" => c = v.parse().map_err(|_| bad())?,
                        "p" => order = v.parse().map_err(|_| bad())?,
                        "flat" if v == "none" => flatten = None,
                        "flat" => flatten = Some(v.parse().map_err(|_| bad())?),
                        _ => return Err(bad()),
                    }
                }
                Self::gauss_general(cfg, deg, c, order, flatten)
            }
            _ => Err(bad()),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Bump { lo, hi, deg } => {
                if r <= *lo || r >= *hi {
                    return 0.0;
                }
                let x = (2.0 * r - lo - hi) / (hi - lo);
                let w = 1.0 - x * x;
                if w <= 2e-3 {
                    return 0.0;
                }
                x.powi(*deg as i32) * (-1.0 / w).exp()
            }
            Kind::Gauss { a, b, deg, c, order, flatten } => {
                if r <= 0.0 {
                    return 0.0;
                }
                let p = *order as i32;
                let mut v = (1.0 + r).powi(*deg as i32)
                    * r.powi(p + 1)
                    * (r - a).powi(p)
                    * (r - b).powi(p)
                    * (-c * r * r).exp();
                if let Some(d) = flatten {
                    v *= smooth_step(r / d) * smooth_step((r - a).abs() / d) * smooth_step((r - b).abs() / d);
                }
                v
            }
            Kind::Sum(terms) => terms.iter().map(|(w, f)| w * f.value(r)).sum(),
        }
    }

    /// Taylor jet of the function at `r`.
    pub fn jet(&self, r: f64) -> Jet {
        match &self.kind {
            Kind::Bump { lo, hi, deg } => {
                if r <= *lo || r >= *hi {
                    return Jet::zero();
                }
                let x = Jet::var(r).scale(2.0 / (hi - lo)).shift(-(lo + hi) / (hi - lo));
                let w = -(x * x).shift(-1.0);
                if w.value() <= 2e-3 {
                    return Jet::zero();
                }
                x.powi(*deg) * (-w.recip()).exp()
            }
            Kind::Gauss { a, b, deg, c, order, flatten } => {
                if r <= 0.0 {
                    return Jet::zero();
                }
                let x = Jet::var(r);
                let mut v = x.shift(1.0).powi(*deg)
                    * x.powi(order + 1)
                    * x.shift(-a).powi(*order)
                    * x.shift(-b).powi(*order)
                    * (x * x).scale(-c).exp();
                if let Some(d) = flatten {
                    let dist = |p: f64| if r >= p { x.shift(-p) } else { -x.shift(-p) };
                    v = v
                        * smooth_step_jet(x.scale(1.0 / d))
                        * smooth_step_jet(dist(*a).scale(1.0 / d))
                        * smooth_step_jet(dist(*b).scale(1.0 / d));
                }
                v
            }
            Kind::Sum(terms) => terms.iter().fold(Jet::zero(), |acc, (w, f)| acc + f.jet(r).scale(*w)),
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.jet(r).derivative(1)
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.jet(r).derivative(2)
    }

    pub fn support(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Bump { lo, hi, .. } => vec![(*lo, *hi)],
            Kind::Gauss { .. } => vec![(0.0, f64::INFINITY)],
            Kind::Sum(terms) => {
                let mut s: Vec<(f64, f64)> = terms.iter().flat_map(|(_, f)| f.support()).collect();
                s.sort_by(|x, y| x.0.total_cmp(&y.0));
                let mut out: Vec<(f64, f64)> = Vec::new();
                for iv in s {
                    match out.last_mut() {
                        Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                        _ => out.push(iv),
                    }
                }
                out
            }
        }
    }

    /// Largest `m` with the function in the domain of `H^m` (`u32::MAX` when smooth and flat).
    pub fn domain_order(&self) -> u32 {
        match &self.kind {
            Kind::Bump { .. } => u32::MAX,
            Kind::Gauss { order, flatten, .. } => {
                if flatten.is_some() {
                    u32::MAX
                } else {
                    order / 2 + 1
                }
            }
            Kind::Sum(terms) => terms.iter().map(|(_, f)| f.domain_order()).min().unwrap_or(u32::MAX),
        }
    }

    /// `|f(r)| e^{r^2}` ratio at the given radius.
    pub fn tail_ratio(&self, r: f64) -> f64 {
        self.value(r).abs() * (r * r).exp()
    }
}

impl Profile for TestFunction {
    fn value(&self, r: f64) -> f64 {
        TestFunction::value(self, r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Bump { lo, hi, .. } => vec![*lo, *hi],
            Kind::Gauss { a, b, flatten, .. } => {
                let mut pts = vec![0.0, *a, *b];
                if let Some(d) = flatten {
                    // graded towards each flattening centre
                    for c in [0.0, *a, *b] {
                        for j in 0..8 {
                            let off = d * 0.5f64.powi(j);
                            pts.extend([c - off, c + off]);
                        }
                    }
                    pts.retain(|&x| x >= 0.0);
                }
                pts
            }
            Kind::Sum(terms) => terms.iter().flat_map(|(_, f)| f.breakpoints()).collect(),
        }
    }

    fn support_end(&self) -> Option<f64> {
        match &self.kind {
            Kind::Bump { hi, .. } => Some(*hi),
            Kind::Gauss { .. } => None,
            Kind::Sum(terms) => {
                let mut end: f64 = 0.0;
                for (_, f) in terms {
                    end = end.max(f.support_end()?);
                }
                Some(end)
            }
        }
    }

    fn tail_scale(&self) -> Option<f64> {
        match &self.kind {
            Kind::Bump { .. } => None,
            Kind::Gauss { c, .. } => Some(*c),
            Kind::Sum(terms) => terms.iter().filter_map(|(_, f)| f.tail_scale()).reduce(f64::min),
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sum_j coeffs[j] H^j` applied to a test function, evaluated region by region.
#[derive(Debug, Clone)]
pub struct HPolynomial {
    phi: TestFunction,
    cfg: PhysicalConfig,
    coeffs: Vec<f64>,
}

impl HPolynomial {
    pub fn new(cfg: &PhysicalConfig, phi: &TestFunction, coeffs: Vec<f64>) -> Result<Self> {
        if 2 * (coeffs.len().saturating_sub(1)) > jet::ORDER {
            return Err(Error::InvalidArgument(format!(
                "H powers above {} are not supported",
                jet::ORDER / 2
            )));
        }
        Ok(Self { phi: phi.clone(), cfg: *cfg, coeffs })
    }

    /// `(1 + H)^n`.
    pub fn one_plus_h_pow(cfg: &PhysicalConfig, phi: &TestFunction, n: u32) -> Result<Self> {
        Self::new(cfg, phi, (0..=n).map(|k| binomial(n, k)).collect())
    }

    /// `H (1 + H)^n`.
    pub fn h_times_one_plus_h_pow(cfg: &PhysicalConfig, phi: &TestFunction, n: u32) -> Result<Self> {
        let mut c = vec![0.0];
        c.extend((0..=n).map(|k| binomial(n, k)));
        Self::new(cfg, phi, c)
    }

    pub fn test_function(&self) -> &TestFunction {
        &self.phi
    }

    pub fn value(&self, r: f64) -> f64 {
        let jet = self.phi.jet(r);
        let v = self.cfg.potential(r);
        let h2m = self.cfg.h2m();
        let mut total = 0.0;
        for (j, &cj) in self.coeffs.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let j = j as u32;
            let mut hj = 0.0;
            for i in 0..=j {
                hj += binomial(j, i) * v.powi((j - i) as i32) * (-h2m).powi(i as i32) * jet.derivative(2 * i as usize);
            }
            total += cj * hj;
        }
        total
    }
}

impl Profile for HPolynomial {
    fn value(&self, r: f64) -> f64 {
        HPolynomial::value(self, r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.phi.breakpoints();
        b.extend([self.cfg.a, self.cfg.b]);
        b
    }

    fn support_end(&self) -> Option<f64> {
        self.phi.support_end()
    }

    fn tail_scale(&self) -> Option<f64> {
        self.phi.tail_scale()
    }
}

/// `r -> -hbar^2/2m phi''(r) + V(r) phi(r)`.
pub fn apply_h(cfg: &PhysicalConfig, phi: &TestFunction) -> HPolynomial {
    HPolynomial { phi: phi.clone(), cfg: *cfg, coeffs: vec![0.0, 1.0] }
}

/// Tail budget margin: the norm of order `n` needs `2c > n + NORM_MARGIN`.
pub const NORM_MARGIN: f64 = 0.5;

/// `sqrt(int |(n r/(1+n r)) e^{n r^2/2} g(r)|^2 dr)` for an arbitrary profile `g`.
pub fn weighted_norm(cfg: &PhysicalConfig, g: &dyn Profile, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("the n = 0 weight vanishes identically".into()));
    }
    let nf = n as f64;
    if let Some(c) = g.tail_scale() {
        if 2.0 * c <= nf + NORM_MARGIN {
            return Err(Error::DivergentNorm(format!(
                "weight e^({n} r^2) against tail e^(-2*{c} r^2) leaves no margin"
            )));
        }
    }
    let integrand = |r: f64| {
        let w = nf * r / (1.0 + nf * r);
        let v = w * g.value(r);
        v * v * (nf * r * r).exp()
    };
    let end = match g.support_end() {
        Some(hi) => hi,
        None => {
            // scan the full integrand, including the growing weight
            let mut peak: f64 = 0.0;
            let mut last = 0.0;
            for i in 0..=3000 {
                let r = i as f64 * 0.02;
                let v = integrand(r);
                if v > peak {
                    peak = v;
                }
                if v > 1e-18 * peak {
                    last = r;
                }
            }
            last + 0.1
        }
    };
    let mut breaks = g.breakpoints();
    breaks.extend([0.0, cfg.a, cfg.b, end]);
    breaks.retain(|&x| (0.0..=end).contains(&x));
    let init = quadrature::panels(&breaks, &|_| 0.25);
    let f = |r: f64| Complex64::new(integrand(r), 0.0);
    let (v, _) = quadrature::integrate(&f, &init, Tolerance { abs: 0.0, rel: 1e-12, max_panels: 50_000 })?;
    Ok(v.re.max(0.0).sqrt())
}

/// `||phi||_{n,n'}` with `(1+H)^{n'}` applied in closed form.
pub fn norm_nnprime(cfg: &PhysicalConfig, phi: &TestFunction, n: u32, nprime: u32) -> Result<f64> {
    let g = HPolynomial::one_plus_h_pow(cfg, phi, nprime)?;
    weighted_norm(cfg, &g, n)
}

/// `||H phi||_{n,n'}`.
pub fn norm_of_h(cfg: &PhysicalConfig, phi: &TestFunction, n: u32, nprime: u32) -> Result<f64> {
    let g = HPolynomial::h_times_one_plus_h_pow(cfg, phi, nprime)?;
    weighted_norm(cfg, &g, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PhysicalConfig {
        PhysicalConfig::canonical()
    }

    #[test]
    fn bump_vanishes_at_ends_with_zero_slope() {
        let f = TestFunction::bump(0.0, 1.0, 0).unwrap();
        for r in [0.0, 1.0] {
            assert_eq!(f.value(r), 0.0);
            assert_eq!(f.d1(r), 0.0);
        }
        let g = TestFunction::bump(2.0, 4.0, 0).unwrap();
        assert_eq!(g.value(4.5), 0.0);
        assert!(g.value(3.0) > 0.0);
    }

    #[test]
    fn gauss_vanishes_at_interfaces() {
        let f = TestFunction::gauss_damped(&cfg(), 2, 3.0).unwrap();
        for r in [0.0, 1.0, 2.0] {
            assert!(f.value(r).abs() <= 1e-13 && f.d1(r).abs() <= 1e-13);
        }
        let t: Vec<f64> = [8.0, 10.0, 12.0].iter().map(|&r| f.tail_ratio(r)).collect();
        assert!(t[0] < 1e-40 && t[1] <= t[0] && t[2] <= t[1]);
    }

    #[test]
    fn jets_match_scalar_values() {
        let fs = [
            TestFunction::bump(0.2, 0.8, 1).unwrap(),
            TestFunction::gauss_damped(&cfg(), 1, 2.0).unwrap(),
            TestFunction::gauss_analytic(&cfg(), 0, 2.0, 4).unwrap(),
        ];
        for f in &fs {
            for i in 1..60 {
                let r = 0.05 * i as f64;
                let v = f.value(r);
                assert!((f.jet(r).value() - v).abs() <= 1e-13 * (1.0 + v.abs()), "{} at {r}", f.label());
            }
        }
    }

    #[test]
    fn parse_round_trips_labels() {
        let c = cfg();
        let f = TestFunction::parse("bump:0.2,0.8", &c).unwrap();
        assert_eq!(f, TestFunction::bump(0.2, 0.8, 0).unwrap());
        let g = TestFunction::parse("gauss:deg=2,c=3", &c).unwrap();
        assert_eq!(g, TestFunction::gauss_damped(&c, 2, 3.0).unwrap());
        assert_eq!(TestFunction::parse(g.label(), &c).unwrap(), g);
        let h = TestFunction::parse("gauss:deg=0,c=2,p=4,flat=none", &c).unwrap();
        assert_eq!(h, TestFunction::gauss_analytic(&c, 0, 2.0, 4).unwrap());
        assert!(TestFunction::parse("bump:0.5,1.5", &c).is_err());
        assert!(TestFunction::parse("gauss:c=1", &c).is_err());
    }

    #[test]
    fn apply_h_on_constant_potential_support() {
        let c = cfg();
        let f = TestFunction::bump(1.2, 1.8, 0).unwrap();
        let h = apply_h(&c, &f);
        for r in [1.3, 1.5, 1.7] {
            let expect = -f.d2(r) + 10.0 * f.value(r);
            assert!((h.value(r) - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
        let free = c.with_v0(0.0);
        let h0 = apply_h(&free, &f);
        assert!((h0.value(1.4) + f.d2(1.4)).abs() < 1e-12);
    }

    #[test]
    fn divergent_norm_is_refused() {
        let f = TestFunction::gauss_damped(&cfg(), 0, 2.0).unwrap();
        assert!(matches!(norm_nnprime(&cfg(), &f, 5, 0), Err(Error::DivergentNorm(_))));
        assert!(norm_nnprime(&cfg(), &f, 3, 1).unwrap().is_finite());
    }

    #[test]
    fn compact_bump_norms_are_finite() {
        let f = TestFunction::bump(2.5, 5.0, 0).unwrap();
        for n in 1..=6 {
            for np in 0..=2 {
                let v = norm_nnprime(&cfg(), &f, n, np).unwrap();
                assert!(v.is_finite() && v > 0.0);
            }
        }
    }
}
