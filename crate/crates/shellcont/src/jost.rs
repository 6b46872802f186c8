//! Regular solution, matching coefficients, Jost functions and the S-matrix.
//!
//! The middle region is written in the basis `C(x) = cos(kx)`, `S(x) = sin(kx)/k`
//! with `x = r - a`; both are even in `k`, so no branch of `k = sqrt(q^2 - u0)`
//! ever enters the regular solution or the Jost functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kappa, ComplexWaveNumber, PhysicalConfig};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const SERIES_CUTOFF: f64 = 0.25;
/// Below `|k|(b - a)` of this size the middle basis is reported as `{1, r - a}`.
pub const DEGENERATE_KAPPA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// `(C, S)` with `C = cos(sqrt(w) x)`, `S = sin(sqrt(w) x)/sqrt(w)`.
pub(crate) fn cos_sinc(w: Complex64, x: f64) -> (Complex64, Complex64) {
    let z = w * x * x;
    if z.norm() < SERIES_CUTOFF {
        let mut c = Complex64::new(1.0, 0.0);
        let mut s = Complex64::new(1.0, 0.0);
        let mut tc = c;
        let mut ts = s;
        for n in 1..30 {
            let n = n as f64;
            tc *= -z / ((2.0 * n - 1.0) * (2.0 * n));
            ts *= -z / ((2.0 * n) * (2.0 * n + 1.0));
            c += tc;
            s += ts;
            if tc.norm() < 1e-18 && ts.norm() < 1e-18 {
                break;
            }
        }
        (c, s * x)
    } else {
        let k = w.sqrt();
        ((k * x).cos(), (k * x).sin() / k)
    }
}

/// `(dC/dw, dS/dw)`.
fn cos_sinc_dw(w: Complex64, x: f64, c: Complex64, s: Complex64) -> (Complex64, Complex64) {
    let dc = -s * x / 2.0;
    let z = w * x * x;
    let ds = if z.norm() < SERIES_CUTOFF {
        // S = sum (-1)^n w^n x^(2n+1) / (2n+1)!
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(x * x * x / 6.0, 0.0); // w^(n-1) x^(2n+1)/(2n+1)! at n = 1
        for n in 1..30 {
            let nf = n as f64;
            let sgn = if n % 2 == 1 { -1.0 } else { 1.0 };
            sum += term * (sgn * nf);
            term *= w * x * x / ((2.0 * nf + 2.0) * (2.0 * nf + 3.0));
            if term.norm() * (nf + 1.0) < 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        (c * x - s) / (2.0 * w)
    };
    (dc, ds)
}

/// Deviations `(u(b) - sin(qb), u'(b) - q cos(qb))` of the regular solution from
/// the free one, in a form free of cancellation when both are exponentially large.
fn free_deviation(q: Complex64, u0: f64, x: f64, amp: Complex64, slope: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    if u0 == 0.0 {
        return (zero, zero);
    }
    let w = q * q - u0;
    let mut k = w.sqrt();
    if (k - q).norm() > (k + q).norm() {
        k = -k;
    }
    let d = k - q;
    let (sq, cq) = ((q * x).sin(), (q * x).cos());
    let sh = (d * x / 2.0).sin();
    let sd = (d * x).sin();
    let dc = -2.0 * ((k + q) * x / 2.0).sin() * sh;
    let dt = q * (-2.0 * sq * sh * sh + cq * sd) + d * (k * x).sin();
    let ds = if (w * x * x).norm() < SERIES_CUTOFF {
        cos_sinc(w, x).1 - sq / q
    } else {
        (q * (-2.0 * sq * sh * sh + cq * sd) - d * sq) / (k * q)
    };
    (amp * dc + slope * ds, -amp * dt + slope * dc)
}

/// The regular solution at a fixed `q`: inner amplitude data and values at `r = b`.
#[derive(Debug, Clone, Copy)]
pub struct RegularSolution {
    q: Complex64,
    w: Complex64,
    u0: f64,
    a: f64,
    b: f64,
    amp: Complex64,
    slope: Complex64,
    upb: Complex64,
    dub: Complex64,
    dupb: Complex64,
}

impl RegularSolution {
    pub fn new(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Self {
        let u0 = cfg.u0();
        let w = q * q - u0;
        let amp = (q * cfg.a).sin();
        let slope = q * (q * cfg.a).cos();
        let (c, s) = cos_sinc(w, cfg.b - cfg.a);
        let upb = -amp * w * s + slope * c;
        let (dub, dupb) = free_deviation(q, u0, cfg.b - cfg.a, amp, slope);
        Self { q, w, u0, a: cfg.a, b: cfg.b, amp, slope, upb, dub, dupb }
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// `(chi(r), d chi/dr)`.
    pub fn value_and_derivative(&self, r: f64) -> (Complex64, Complex64) {
        let q = self.q;
        if r <= self.a {
            ((q * r).sin(), q * (q * r).cos())
        } else if r <= self.b {
            let (c, s) = cos_sinc(self.w, r - self.a);
            (self.amp * c + self.slope * s, -self.amp * self.w * s + self.slope * c)
        } else {
            if q.norm() == 0.0 {
                return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            }
            let y = r - self.b;
            let (cy, sy) = ((q * y).cos(), (q * y).sin());
            let (sr, cr) = ((q * r).sin(), (q * r).cos());
            (
                sr + self.dub * cy + self.dupb * sy / q,
                q * cr - self.dub * q * sy + self.dupb * cy,
            )
        }
    }

    pub fn value(&self, r: f64) -> Complex64 {
        self.value_and_derivative(r).0
    }

    pub fn j3(&self) -> Complex64 {
        -I * self.jost().j_minus / 2.0
    }

    pub fn j4(&self) -> Complex64 {
        I * self.jost().j_plus / 2.0
    }

    pub fn jost(&self) -> JostPair {
        let e = (I * self.q * self.b).exp();
        let p = self.dupb / self.q;
        JostPair { j_plus: 1.0 + e * (p - I * self.dub), j_minus: 1.0 + (p + I * self.dub) / e }
    }

    pub fn jost_signed(&self, sign: Sign) -> Complex64 {
        let j = self.jost();
        match sign {
            Sign::Plus => j.j_plus,
            Sign::Minus => j.j_minus,
        }
    }

    /// `(dJ+/dq, dJ-/dq)` in closed form.
    pub fn jost_derivative(&self) -> (Complex64, Complex64) {
        if self.u0 == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let (q, w, x) = (self.q, self.w, self.b - self.a);
        let (c, s) = cos_sinc(w, x);
        let (dc_dw, ds_dw) = cos_sinc_dw(w, x, c, s);
        let dw = 2.0 * q;
        let d_amp = self.a * (q * self.a).cos();
        let d_slope = (q * self.a).cos() - q * self.a * (q * self.a).sin();
        let dub = d_amp * c + self.amp * dc_dw * dw + d_slope * s + self.slope * ds_dw * dw;
        let dupb = -d_amp * w * s - self.amp * dw * s - self.amp * w * ds_dw * dw
            + d_slope * c
            + self.slope * dc_dw * dw;
        let e = (I * q * self.b).exp();
        let jp = self.jost();
        let dp = dupb / q - self.upb / (q * q);
        let djp = I * self.b * jp.j_plus + e * (dp - I * dub);
        let djm = -I * self.b * jp.j_minus + (dp + I * dub) / e;
        (djp, djm)
    }
}

/// `(C, S)` for real `w`.
fn cos_sinc_real(w: f64, x: f64) -> (f64, f64) {
    let z = w * x * x;
    if z.abs() < SERIES_CUTOFF {
        let (mut c, mut s, mut tc, mut ts) = (1.0, 1.0, 1.0, 1.0);
        for n in 1..30 {
            let n = n as f64;
            tc *= -z / ((2.0 * n - 1.0) * (2.0 * n));
            ts *= -z / ((2.0 * n) * (2.0 * n + 1.0));
            c += tc;
            s += ts;
            if tc.abs() < 1e-18 && ts.abs() < 1e-18 {
                break;
            }
        }
        (c, s * x)
    } else if w > 0.0 {
        let k = w.sqrt();
        ((k * x).cos(), (k * x).sin() / k)
    } else {
        let k = (-w).sqrt();
        ((k * x).cosh(), (k * x).sinh() / k)
    }
}

/// Real-arithmetic regular solution for real `k > 0`.
#[derive(Debug, Clone, Copy)]
pub struct RealSolution {
    k: f64,
    w: f64,
    a: f64,
    b: f64,
    amp: f64,
    slope: f64,
    ub: f64,
    upb: f64,
}

impl RealSolution {
    pub fn new(cfg: &PhysicalConfig, k: f64) -> Self {
        let w = k * k - cfg.u0();
        let amp = (k * cfg.a).sin();
        let slope = k * (k * cfg.a).cos();
        let (c, s) = cos_sinc_real(w, cfg.b - cfg.a);
        let ub = amp * c + slope * s;
        let upb = -amp * w * s + slope * c;
        Self { k, w, a: cfg.a, b: cfg.b, amp, slope, ub, upb }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn value(&self, r: f64) -> f64 {
        let k = self.k;
        if r <= self.a {
            (k * r).sin()
        } else if r <= self.b {
            let (c, s) = cos_sinc_real(self.w, r - self.a);
            self.amp * c + self.slope * s
        } else {
            let y = r - self.b;
            self.ub * (k * y).cos() + self.upb * (k * y).sin() / k
        }
    }

    pub fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        let k = self.k;
        if r <= self.a {
            ((k * r).sin(), k * (k * r).cos())
        } else if r <= self.b {
            let (c, s) = cos_sinc_real(self.w, r - self.a);
            (self.amp * c + self.slope * s, -self.amp * self.w * s + self.slope * c)
        } else {
            let (cy, sy) = ((k * (r - self.b)).cos(), (k * (r - self.b)).sin());
            (self.ub * cy + self.upb * sy / k, -self.ub * k * sy + self.upb * cy)
        }
    }

    /// `(A, B)` with `u(r) = A cos(k (r - b)) + B sin(k (r - b))` beyond the shell.
    pub(crate) fn outer_coefficients(&self) -> (f64, f64) {
        (self.ub, self.upb / self.k)
    }

    /// `J+(k)`; `J-(k)` is its conjugate.
    pub fn j_plus(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.k * self.b) * Complex64::new(self.upb / self.k, -self.ub)
    }
}

/// Region coefficients of the regular solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingCoefficients {
    pub middle: MiddleCoefficients,
    pub j3: Complex64,
    pub j4: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MiddleCoefficients {
    /// `chi = j1 e^{i k r} + j2 e^{-i k r}` on `(a, b)` with principal `k`.
    Exponential { kappa: Complex64, j1: Complex64, j2: Complex64 },
    /// `chi = c0 + c1 (r - a)` on `(a, b)`; used when `|k|(b - a)` is tiny.
    Linear { c0: Complex64, c1: Complex64 },
}

impl MatchingCoefficients {
    pub fn j1(&self) -> Option<Complex64> {
        match self.middle {
            MiddleCoefficients::Exponential { j1, .. } => Some(j1),
            MiddleCoefficients::Linear { .. } => None,
        }
    }

    pub fn j2(&self) -> Option<Complex64> {
        match self.middle {
            MiddleCoefficients::Exponential { j2, .. } => Some(j2),
            MiddleCoefficients::Linear { .. } => None,
        }
    }
}

/// `(j1, j2)` of the exponential middle basis for an explicit branch `kap`.
pub fn middle_exponential(cfg: &PhysicalConfig, q: Complex64, kap: Complex64) -> (Complex64, Complex64) {
    let amp = (q * cfg.a).sin();
    let slope = q * (q * cfg.a).cos();
    let j1 = (-I * kap * cfg.a).exp() / 2.0 * (amp + slope / (I * kap));
    let j2 = (I * kap * cfg.a).exp() / 2.0 * (amp - slope / (I * kap));
    (j1, j2)
}

pub fn matching_coefficients(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Result<MatchingCoefficients> {
    if q.norm() == 0.0 {
        return Err(Error::DegenerateWaveNumber);
    }
    let sol = RegularSolution::new(cfg, q);
    let kap = kappa(cfg, q);
    let middle = if kap.norm() * (cfg.b - cfg.a) < DEGENERATE_KAPPA {
        MiddleCoefficients::Linear { c0: sol.amp, c1: sol.slope }
    } else {
        let (j1, j2) = middle_exponential(cfg, q, kap);
        MiddleCoefficients::Exponential { kappa: kap, j1, j2 }
    };
    Ok(MatchingCoefficients { middle, j3: sol.j3(), j4: sol.j4() })
}

/// Largest relative mismatch of value and slope at `r = a` and `r = b` when the
/// piecewise forms built from `coeffs` are compared across each interface.
pub fn continuity_residual(cfg: &PhysicalConfig, q: ComplexWaveNumber, coeffs: &MatchingCoefficients) -> f64 {
    let middle = |r: f64| -> (Complex64, Complex64) {
        match coeffs.middle {
            MiddleCoefficients::Exponential { kappa: k, j1, j2 } => {
                let (ep, em) = ((I * k * r).exp(), (-I * k * r).exp());
                (j1 * ep + j2 * em, I * k * (j1 * ep - j2 * em))
            }
            MiddleCoefficients::Linear { c0, c1 } => (c0 + c1 * (r - cfg.a), c1),
        }
    };
    let outer = |r: f64| -> (Complex64, Complex64) {
        let (ep, em) = ((I * q * r).exp(), (-I * q * r).exp());
        (coeffs.j3 * ep + coeffs.j4 * em, I * q * (coeffs.j3 * ep - coeffs.j4 * em))
    };
    let inner = |r: f64| ((q * r).sin(), q * (q * r).cos());
    let (ia, ipa) = inner(cfg.a);
    let (ma, mpa) = middle(cfg.a);
    let (mb, mpb) = middle(cfg.b);
    let (ob, opb) = outer(cfg.b);
    let scale_a = ia.norm().max(ipa.norm() * cfg.a);
    let scale_b = mb.norm().max(mpb.norm() * cfg.b);
    let abs = |x: Complex64, y: Complex64, s: f64| (x - y).norm() / s.max(1e-300);
    [
        abs(ia, ma, scale_a),
        abs(ipa * cfg.a, mpa * cfg.a, scale_a),
        abs(mb, ob, scale_b),
        abs(mpb * cfg.b, opb * cfg.b, scale_b),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// `chi(r; q)` (zero at `q = 0`).
pub fn regular_solution(cfg: &PhysicalConfig, r: f64, q: ComplexWaveNumber) -> Complex64 {
    RegularSolution::new(cfg, q).value(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostPair {
    pub j_plus: Complex64,
    pub j_minus: Complex64,
}

impl JostPair {
    pub fn get(&self, sign: Sign) -> Complex64 {
        match sign {
            Sign::Plus => self.j_plus,
            Sign::Minus => self.j_minus,
        }
    }
}

pub fn jost_pm(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Result<JostPair> {
    if q.norm() == 0.0 {
        return Err(Error::DegenerateWaveNumber);
    }
    Ok(RegularSolution::new(cfg, q).jost())
}

/// `(dJ+/dq, dJ-/dq)`.
pub fn jost_derivative(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Result<(Complex64, Complex64)> {
    if q.norm() == 0.0 {
        return Err(Error::DegenerateWaveNumber);
    }
    Ok(RegularSolution::new(cfg, q).jost_derivative())
}

/// Newton distance `|J/J'|` to the nearest zero of `J_sign`, infinite when `J'` vanishes.
pub fn newton_distance(cfg: &PhysicalConfig, q: ComplexWaveNumber, sign: Sign) -> f64 {
    let sol = RegularSolution::new(cfg, q);
    let j = sol.jost_signed(sign);
    let (dp, dm) = sol.jost_derivative();
    let d = match sign {
        Sign::Plus => dp,
        Sign::Minus => dm,
    };
    if d.norm() == 0.0 {
        f64::INFINITY
    } else {
        j.norm() / d.norm()
    }
}

/// Distance below which evaluations next to a Jost zero are refused.
pub const POLE_GUARD: f64 = 1e-8;

pub fn s_matrix(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Result<Complex64> {
    let j = jost_pm(cfg, q)?;
    if newton_distance(cfg, q, Sign::Plus) < POLE_GUARD {
        return Err(Error::SMatrixPole(q));
    }
    Ok(j.j_minus / j.j_plus)
}

/// Coefficient `C` of the large-`|q|` form `1 - C q^{-2} e^{2iqb}` of `J+`.
pub fn lambda_coefficient(cfg: &PhysicalConfig) -> f64 {
    cfg.u0() / 4.0
}

pub fn lambda_asymptote(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Complex64 {
    1.0 - lambda_coefficient(cfg) / (q * q) * (2.0 * I * q * cfg.b).exp()
}

/// One identity of the conjugation/parity suite and its relative violation.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryEntry {
    pub identity: &'static str,
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub q: Complex64,
    pub entries: Vec<SymmetryEntry>,
    pub max_violation: f64,
}

/// Radii at which the `chi` identities are sampled.
pub const SYMMETRY_RADII: [f64; 4] = [0.4, 1.3, 1.8, 3.7];

fn rel(x: Complex64, y: Complex64) -> f64 {
    let d = (x - y).norm();
    if d == 0.0 {
        0.0
    } else {
        d / x.norm().max(y.norm())
    }
}

/// Evaluates the parity and conjugation identities at `q`. Identities involving
/// the middle wave number hold for the branch continued along with `q`, so they
/// are evaluated with that branch made explicit.
pub fn symmetry_suite(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Result<SymmetryReport> {
    if q.norm() == 0.0 {
        return Err(Error::DegenerateWaveNumber);
    }
    let qm = -q;
    let qc = q.conj();
    let qmc = -q.conj();
    let kap = kappa(cfg, q);
    let u0 = cfg.u0();
    let mut entries = Vec::new();
    let mut push = |identity: &'static str, violation: f64| entries.push(SymmetryEntry { identity, violation });

    let branch = |k: Complex64, at: Complex64| {
        let target = at * at - u0;
        (k * k - target).norm() / target.norm().max(k.norm_sqr()).max(1e-300)
    };
    push("conj Q(-conj q) = -Q(q)", branch(-kap.conj(), qmc));
    push("Q(-q) = -Q(q)", branch(-kap, qm));
    push("conj Q(conj q) = Q(q)", branch(kap.conj(), qc));

    let x = q * cfg.a;
    push("conj sin(-conj q) = -sin q", rel((-x.conj()).sin().conj(), -x.sin()));
    push("conj cos(-conj q) = cos q", rel((-x.conj()).cos().conj(), x.cos()));
    push("conj sin(conj q) = sin q", rel(x.conj().sin().conj(), x.sin()));
    push("conj cos(conj q) = cos q", rel(x.conj().cos().conj(), x.cos()));

    let (j1, j2) = middle_exponential(cfg, q, kap);
    let (j1_mc, j2_mc) = middle_exponential(cfg, qmc, -kap.conj());
    let (j1_m, _) = middle_exponential(cfg, qm, -kap);
    let (j1_c, _) = middle_exponential(cfg, qc, kap.conj());
    push("conj J1(-conj q) = -J1(q)", rel(j1_mc.conj(), -j1));
    push("conj J2(-conj q) = -J2(q)", rel(j2_mc.conj(), -j2));
    push("J1(-q) = -J2(q)", rel(j1_m, -j2));
    push("conj J1(conj q) = J2(q)", rel(j1_c.conj(), j2));

    let s = RegularSolution::new(cfg, q);
    let s_mc = RegularSolution::new(cfg, qmc);
    let s_m = RegularSolution::new(cfg, qm);
    let s_c = RegularSolution::new(cfg, qc);
    push("conj J3(-conj q) = -J3(q)", rel(s_mc.j3().conj(), -s.j3()));
    push("conj J4(-conj q) = -J4(q)", rel(s_mc.j4().conj(), -s.j4()));
    push("J3(-q) = -J4(q)", rel(s_m.j3(), -s.j4()));
    push("conj J3(conj q) = J4(q)", rel(s_c.j3().conj(), s.j4()));

    let j = s.jost();
    let j_mc = s_mc.jost();
    let j_m = s_m.jost();
    let j_c = s_c.jost();
    push("conj J+(-conj q) = J+(q)", rel(j_mc.j_plus.conj(), j.j_plus));
    push("conj J-(-conj q) = J-(q)", rel(j_mc.j_minus.conj(), j.j_minus));
    push("J+(-q) = J-(q)", rel(j_m.j_plus, j.j_minus));
    push("conj J+(conj q) = J-(q)", rel(j_c.j_plus.conj(), j.j_minus));

    let norm = (2.0 / std::f64::consts::PI).sqrt();
    let mut worst = [0.0f64; 7];
    for &r in &SYMMETRY_RADII {
        let chi = s.value(r);
        let (chi_mc, chi_m, chi_c) = (s_mc.value(r), s_m.value(r), s_c.value(r));
        let plus = |c: Complex64, jp: &JostPair| norm * c / jp.j_plus;
        let minus = |c: Complex64, jp: &JostPair| norm * c / jp.j_minus;
        let v = [
            rel(chi_mc.conj(), -chi),
            rel(plus(chi_mc, &j_mc).conj(), -plus(chi, &j)),
            rel(minus(chi_mc, &j_mc).conj(), -minus(chi, &j)),
            rel(chi_m, -chi),
            rel(plus(chi_m, &j_m), -minus(chi, &j)),
            rel(chi_c.conj(), chi),
            rel(plus(chi_c, &j_c).conj(), minus(chi, &j)),
        ];
        for (w, x) in worst.iter_mut().zip(v) {
            *w = w.max(x);
        }
    }
    let names = [
        "conj chi(r;-conj q) = -chi(r;q)",
        "conj chi+(r;-conj q) = -chi+(r;q)",
        "conj chi-(r;-conj q) = -chi-(r;q)",
        "chi(r;-q) = -chi(r;q)",
        "chi+(r;-q) = -chi-(r;q)",
        "conj chi(r;conj q) = chi(r;q)",
        "conj chi+(r;conj q) = chi-(r;q)",
    ];
    for (n, w) in names.into_iter().zip(worst) {
        push(n, w);
    }

    let max_violation = entries.iter().map(|e| e.violation).fold(0.0, f64::max);
    Ok(SymmetryReport { q, entries, max_violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_coefficients() {
        let free = PhysicalConfig::canonical().with_v0(0.0);
        // principal branch gives kappa = q when Re q > 0
        for q in [c(0.7, 0.0), c(2.0, -1.0), c(3.0, 0.5)] {
            let m = matching_coefficients(&free, q).unwrap();
            let half = c(0.0, 0.5);
            assert!((m.j1().unwrap() + half).norm() < 1e-14);
            assert!((m.j2().unwrap() - half).norm() < 1e-14);
            assert!((m.j3 + half).norm() < 1e-14);
            assert!((m.j4 - half).norm() < 1e-14);
            let j = jost_pm(&free, q).unwrap();
            assert!((j.j_plus - 1.0).norm() < 1e-14 && (j.j_minus - 1.0).norm() < 1e-14);
            let (dp, dm) = jost_derivative(&free, q).unwrap();
            assert!(dp.norm() < 1e-13 && dm.norm() < 1e-13);
        }
    }

    #[test]
    fn q_zero_is_degenerate() {
        let cfg = PhysicalConfig::canonical();
        assert_eq!(matching_coefficients(&cfg, c(0.0, 0.0)), Err(Error::DegenerateWaveNumber));
        assert_eq!(jost_pm(&cfg, c(0.0, 0.0)), Err(Error::DegenerateWaveNumber));
        assert_eq!(regular_solution(&cfg, 3.0, c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn continuity_at_interfaces() {
        let cfg = PhysicalConfig::canonical();
        for q in [c(2.0, 0.0), c(0.3, -0.2), c(5.0, 1.0), c(-4.0, -2.0), c(9.0, 0.1)] {
            let m = matching_coefficients(&cfg, q).unwrap();
            assert!(continuity_residual(&cfg, q, &m) < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn degenerate_middle_basis_at_branch_point() {
        let cfg = PhysicalConfig::canonical();
        let q = c(10f64.sqrt(), 0.0);
        let m = matching_coefficients(&cfg, q).unwrap();
        assert!(matches!(m.middle, MiddleCoefficients::Linear { .. }));
        assert!(continuity_residual(&cfg, q, &m) < 1e-12);
        // J+ is continuous through the branch point
        let j0 = jost_pm(&cfg, q).unwrap().j_plus;
        let j1 = jost_pm(&cfg, q + 1e-7).unwrap().j_plus;
        assert!((j0 - j1).norm() < 1e-5);
    }

    #[test]
    fn closed_form_derivative_matches_finite_differences() {
        let cfg = PhysicalConfig::canonical();
        let q = c(2.0, -0.3);
        let (dp, dm) = jost_derivative(&cfg, q).unwrap();
        let f = |z: Complex64| jost_pm(&cfg, z).unwrap();
        // Richardson-extrapolated central differences
        let cd = |h: f64| {
            let (p, m) = (f(q + h), f(q - h));
            ((p.j_plus - m.j_plus) / (2.0 * h), (p.j_minus - m.j_minus) / (2.0 * h))
        };
        let (a1, b1) = cd(1e-3);
        let (a2, b2) = cd(5e-4);
        let fp = (4.0 * a2 - a1) / 3.0;
        let fm = (4.0 * b2 - b1) / 3.0;
        assert!((fp - dp).norm() / dp.norm() < 1e-7);
        assert!((fm - dm).norm() / dm.norm() < 1e-7);
        let (dpc, _) = jost_derivative(&cfg, q.conj()).unwrap();
        assert!((dpc.conj() - dm).norm() / dm.norm() < 1e-12);
    }

    #[test]
    fn derivative_through_series_regime() {
        let cfg = PhysicalConfig::canonical();
        let q = c(10f64.sqrt() + 0.01, 0.02);
        let (dp, _) = jost_derivative(&cfg, q).unwrap();
        let h = 1e-5;
        let fd = (jost_pm(&cfg, q + h).unwrap().j_plus - jost_pm(&cfg, q - h).unwrap().j_plus) / (2.0 * h);
        assert!((fd - dp).norm() / dp.norm() < 1e-7);
    }

    #[test]
    fn real_solution_agrees_with_complex() {
        let cfg = PhysicalConfig::canonical();
        for k in [0.05, 1.0, 3.1622, 3.1623, 7.5, 30.0] {
            let re = RealSolution::new(&cfg, k);
            let cx = RegularSolution::new(&cfg, c(k, 0.0));
            for r in [0.3, 1.0, 1.5, 2.0, 5.0] {
                assert!((cx.value(r) - re.value(r)).norm() < 1e-13 * (1.0 + re.value(r).abs()));
            }
            let jp = cx.jost().j_plus;
            assert!((jp - re.j_plus()).norm() < 1e-12 * jp.norm());
        }
    }

    #[test]
    fn s_matrix_is_unimodular_on_real_axis() {
        let cfg = PhysicalConfig::canonical();
        for i in 1..=40 {
            let k = 0.5 * i as f64;
            let s = s_matrix(&cfg, c(k, 0.0)).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
        let free = cfg.with_v0(0.0);
        assert!((s_matrix(&free, c(1.0, -2.0)).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn lambda_tracks_jost_plus_far_down() {
        let cfg = PhysicalConfig::canonical();
        let dir = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let errs: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&r| {
                let q = dir * r;
                (jost_pm(&cfg, q).unwrap().j_plus / lambda_asymptote(&cfg, q) - 1.0).norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 0.1, "{errs:?}");
        assert_eq!(lambda_asymptote(&cfg.with_v0(0.0), c(5.0, -5.0)), c(1.0, 0.0));
    }

    #[test]
    fn symmetry_suite_free_is_exact() {
        let free = PhysicalConfig::canonical().with_v0(0.0);
        let rep = symmetry_suite(&free, c(1.7, -0.9)).unwrap();
        assert!(rep.max_violation < 1e-13, "{rep:?}");
    }
}
