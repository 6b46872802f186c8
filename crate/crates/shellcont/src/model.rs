//! Units, shell geometry and the energy/wave-number map.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex wave-number plane.
pub type ComplexWaveNumber = Complex64;

/// Units and the shell potential `V(r) = v0` for `a < r < b`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub hbar: f64,
    pub mass: f64,
    pub a: f64,
    pub b: f64,
    pub v0: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self::canonical()
    }
}

impl PhysicalConfig {
    pub fn new(hbar: f64, mass: f64, a: f64, b: f64, v0: f64) -> Result<Self> {
        let cfg = Self { hbar, mass, a, b, v0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `hbar = 1`, `mass = 1/2`, `a = 1`, `b = 2`, `v0 = 10`.
    pub fn canonical() -> Self {
        Self { hbar: 1.0, mass: 0.5, a: 1.0, b: 2.0, v0: 10.0 }
    }

    pub fn with_v0(self, v0: f64) -> Self {
        Self { v0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.hbar, self.mass, self.a, self.b, self.v0];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("parameters must be finite".into()));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidConfig(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidConfig(format!("mass must be positive, got {}", self.mass)));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidConfig(format!("a must be positive, got {}", self.a)));
        }
        if self.b <= self.a {
            return Err(Error::InvalidConfig(format!(
                "need 0 < a < b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// `hbar^2 / (2 m)`.
    pub fn h2m(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }

    /// `2 m v0 / hbar^2`.
    pub fn u0(&self) -> f64 {
        self.v0 / self.h2m()
    }

    pub fn potential(&self, r: f64) -> f64 {
        if r > self.a && r < self.b {
            self.v0
        } else {
            0.0
        }
    }

    /// Parses `key = value` lines (keys `hbar`, `mass`, `a`, `b`, `v0`).
    /// Missing keys keep their values from `base`; `#` starts a comment.
    pub fn parse_key_values(text: &str, base: Self) -> Result<Self> {
        let mut cfg = base;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("line {}: bad number {:?}", lineno + 1, value.trim()))
            })?;
            match key.trim() {
                "hbar" => cfg.hbar = value,
                "mass" => cfg.mass = value,
                "a" => cfg.a = value,
                "b" => cfg.b = value,
                "v0" => cfg.v0 = value,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    I,
    II,
}

/// A complex energy together with its Riemann sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub z: Complex64,
    pub sheet: Sheet,
}

fn tag(q: Complex64) -> Sheet {
    if q.im > 0.0 || (q.im == 0.0 && q.re >= 0.0) {
        Sheet::I
    } else {
        Sheet::II
    }
}

/// Sheet I lands in the upper half plane (and on `q >= 0`), sheet II in the
/// lower half plane (and on `q < 0`).
pub fn wavenumber_from_energy(cfg: &PhysicalConfig, p: SheetPoint) -> ComplexWaveNumber {
    let q = (p.z / cfg.h2m()).sqrt();
    if q == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    if tag(q) == p.sheet {
        q
    } else {
        -q
    }
}

pub fn energy_from_wavenumber(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> SheetPoint {
    SheetPoint { z: q * q * cfg.h2m(), sheet: tag(q) }
}

/// Principal `sqrt(q^2 - 2 m v0 / hbar^2)`.
pub fn kappa(cfg: &PhysicalConfig, q: ComplexWaveNumber) -> Complex64 {
    (q * q - cfg.u0()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleDirection {
    /// Wave-number bra/ket to energy normalization.
    Ket,
    /// Wave-number function to energy normalization.
    Function,
}

pub fn energy_rep_rescale(
    cfg: &PhysicalConfig,
    q: ComplexWaveNumber,
    value_k: Complex64,
    direction: RescaleDirection,
) -> Result<Complex64> {
    if q.norm() == 0.0 {
        return Err(Error::SingularRescale);
    }
    let factor = (1.0 / (2.0 * cfg.h2m() * q)).sqrt();
    Ok(match direction {
        RescaleDirection::Ket => value_k * factor,
        RescaleDirection::Function => value_k / factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn energy_to_wavenumber_examples() {
        let cfg = PhysicalConfig::canonical();
        let q = |z: Complex64, sheet| wavenumber_from_energy(&cfg, SheetPoint { z, sheet });
        assert_eq!(q(c(0.0, 0.0), Sheet::I), c(0.0, 0.0));
        assert_eq!(q(c(0.0, 0.0), Sheet::II), c(0.0, 0.0));
        assert!((q(c(-1.0, 0.0), Sheet::I) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((q(c(-1.0, 0.0), Sheet::II) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn wavenumber_to_energy_examples() {
        let cfg = PhysicalConfig::canonical();
        let p = energy_from_wavenumber(&cfg, c(2.0, 0.0));
        assert_eq!(p.z, c(4.0, 0.0));
        assert_eq!(p.sheet, Sheet::I);
        let q = c(3.0, -0.5);
        let p = energy_from_wavenumber(&cfg, q);
        assert_eq!(p.z, q * q);
        assert_eq!(p.sheet, Sheet::II);
        let p = energy_from_wavenumber(&cfg, c(0.0, 1.0));
        assert_eq!(p.z, c(-1.0, 0.0));
        assert_eq!(p.sheet, Sheet::I);
    }

    #[test]
    fn kappa_examples() {
        let cfg = PhysicalConfig::canonical();
        let free = cfg.with_v0(0.0);
        let q = c(1.3, -0.4);
        assert!((kappa(&free, q) - q).norm() < 1e-15);
        assert_eq!(kappa(&cfg, c(10f64.sqrt(), 0.0)).norm() < 1e-7, true);
        assert!((kappa(&cfg, c(0.0, 0.0)) - c(0.0, 10f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn rescale_examples() {
        let cfg = PhysicalConfig::canonical();
        let one = c(1.0, 0.0);
        let v = energy_rep_rescale(&cfg, c(0.5, 0.0), one, RescaleDirection::Ket).unwrap();
        assert!((v - one).norm() < 1e-15);
        let v = energy_rep_rescale(&cfg, c(2.0, 0.0), one, RescaleDirection::Ket).unwrap();
        assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        let q = c(1.7, -0.3);
        let x = c(0.3, 2.0);
        let k = energy_rep_rescale(&cfg, q, x, RescaleDirection::Ket).unwrap();
        let back = energy_rep_rescale(&cfg, q, k, RescaleDirection::Function).unwrap();
        assert!((back - x).norm() < 1e-14);
        assert_eq!(
            energy_rep_rescale(&cfg, c(0.0, 0.0), one, RescaleDirection::Ket),
            Err(Error::SingularRescale)
        );
    }

    #[test]
    fn config_validation_and_parsing() {
        assert!(PhysicalConfig::new(1.0, 0.5, 2.0, 1.0, 10.0).is_err());
        assert!(PhysicalConfig::new(1.0, -0.5, 1.0, 2.0, 10.0).is_err());
        let cfg = PhysicalConfig::parse_key_values(
            "# shell\nhbar = 1\nmass=0.5\n a = 1.5 \nb=3\nv0 = -2 # attractive\n",
            PhysicalConfig::canonical(),
        )
        .unwrap();
        assert_eq!(cfg, PhysicalConfig { hbar: 1.0, mass: 0.5, a: 1.5, b: 3.0, v0: -2.0 });
        assert!(PhysicalConfig::parse_key_values("c = 1", PhysicalConfig::canonical()).is_err());
        assert!(PhysicalConfig::parse_key_values("a = 3", PhysicalConfig::canonical()).is_err());
    }
}
