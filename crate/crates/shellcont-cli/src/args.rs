use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use shellcont::poles::Rect;
use shellcont::testspace::TestFunction;
use shellcont::transforms::{Channel, QuadratureSpec};
use shellcont::{PhysicalConfig, Sign};

use crate::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "shellcont",
    version,
    about = "Scattering, resonances and contour-rotated evolution for the spherical shell potential",
    arg_required_else_help = true,
    after_help = "Physical parameters come from --config (key = value lines with keys hbar, mass, a, b, v0) \
and are overridden by the matching flags. Defaults: hbar = 1, mass = 0.5, a = 1, b = 2, v0 = 10.\n\n\
Exit codes: 0 success, 1 computation failure, 2 usage error."
)]
pub struct Cli {
    #[command(flatten)]
    pub physics: PhysicsArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct PhysicsArgs {
    /// Configuration file of key = value lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    /// Inner shell radius.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Outer shell radius.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Shell height.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Jost functions and S-matrix on a line of wave numbers (CSV).
    #[command(after_help = "Example:\n  shellcont jost --grid 0.1:20:0.1 --out jost.csv")]
    Jost {
        /// Real parts as start:stop:step, both ends included.
        #[arg(long, default_value = "0.1:20:0.1")]
        grid: String,
        /// Common imaginary part of the wave numbers.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
    },
    /// Scattering eigenfunction chi_sign(r; q) on a radial grid (CSV).
    #[command(after_help = "Example:\n  shellcont eigfn --q 3.5,-0.2 --sign + --grid 0:6:0.05")]
    Eigfn {
        /// Wave number as re,im.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
        /// Radii as start:stop:step.
        #[arg(long, default_value = "0:6:0.05")]
        grid: String,
    },
    /// Zeros of J_sign inside a rectangle of the wave-number plane (JSON).
    #[command(after_help = "Example:\n  shellcont poles --rect 0.1,10,-3,-0.01 --sign +")]
    Poles {
        /// re_min,re_max,im_min,im_max
        #[arg(long, default_value = "0.1,10,-3,-0.01", allow_hyphen_values = true)]
        rect: String,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
    },
    /// Spectral transform of a test function on a k grid (CSV).
    #[command(after_help = "Example:\n  shellcont transform --phi bump:1.2,1.8,deg=1 --channel plus --grid 0.05:15:0.05")]
    Transform {
        #[arg(long, default_value = "gauss:deg=0,c=2")]
        phi: String,
        /// plus, minus or free.
        #[arg(long, default_value = "plus")]
        channel: String,
        #[arg(long, default_value = "0.05:15:0.05")]
        grid: String,
    },
    /// Continued bra functional <sign q|phi> over a complex grid (CSV).
    #[command(after_help = "Example:\n  shellcont continue --phi gauss:deg=0,c=2 --sign + --re 0.5:8:0.5 --im -2:2:0.5")]
    Continue {
        #[arg(long, default_value = "gauss:deg=0,c=2")]
        phi: String,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
        /// Real parts as start:stop:step.
        #[arg(long, default_value = "0.5:8:0.5", allow_hyphen_values = true)]
        re: String,
        /// Imaginary parts as start:stop:step.
        #[arg(long, default_value = "-2:2:0.5", allow_hyphen_values = true)]
        im: String,
    },
    /// Time evolution of a test function on a radial grid (CSV).
    #[command(after_help = "Example:\n  shellcont evolve --mode retarded --t 0.5 --eps 0.2 --phi gauss:deg=0,c=4,p=4 --rmax 8")]
    Evolve {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum, default_value_t = Mode::Group)]
        mode: Mode,
        /// Rotation angle of the integration ray.
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value = "gauss:deg=0,c=4,p=4")]
        phi: String,
        /// Outer end of the radial grid.
        #[arg(long, default_value_t = 8.0)]
        rmax: f64,
        /// Sign of the spectral representation used by the interacting modes.
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
    },
    /// Numerical verification suites; exit 0 iff no check fails.
    #[command(after_help = "Example:\n  shellcont verify --suite symmetry,unitarity --seed 7 --json report.json")]
    Verify {
        /// Comma-separated suite names (all when absent).
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = shellcont::verify::DEFAULT_SEED)]
        seed: u64,
        /// Write the entries as a JSON array.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Group,
    Retarded,
    Advanced,
    FreeRetarded,
    FreeAdvanced,
}

pub enum Task {
    Jost { ks: Vec<Complex64> },
    Eigfn { q: Complex64, sign: Sign, rs: Vec<f64> },
    Poles { rect: Rect, sign: Sign },
    Transform { phi: TestFunction, channel: Channel, ks: Vec<f64> },
    Continue { phi: TestFunction, sign: Sign, qs: Vec<Complex64> },
    Evolve { phi: TestFunction, mode: Mode, t: f64, eps: f64, rmax: f64, sign: Sign },
    Verify { suite: Option<String>, seed: u64, json: Option<PathBuf> },
}

pub struct Invocation {
    pub config: PhysicalConfig,
    pub quad: QuadratureSpec,
    pub out: Option<PathBuf>,
    pub task: Task,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `start:stop:step` into an inclusive arithmetic progression.
pub fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("expected start:stop:step, got {s:?}"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(usage(format!("range {s:?} needs finite start <= stop and step > 0")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 10_000_000 {
        return Err(usage(format!("range {s:?} has too many points")));
    }
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

fn parse_list(s: &str, len: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("cannot parse {what} {s:?}")))?;
    if v.len() != len || v.iter().any(|x| !x.is_finite()) {
        return Err(usage(format!("{what} needs {len} finite comma-separated numbers, got {s:?}")));
    }
    Ok(v)
}

pub fn parse_sign(s: &str) -> Result<Sign, Failure> {
    match s {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(usage(format!("sign must be + or -, got {s:?}"))),
    }
}

impl PhysicsArgs {
    fn config(&self) -> Result<PhysicalConfig, Failure> {
        let mut cfg = PhysicalConfig::canonical();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg = PhysicalConfig::parse_key_values(&text, cfg).map_err(|e| usage(e.to_string()))?;
        }
        let fields = [
            (self.hbar, &mut cfg.hbar),
            (self.mass, &mut cfg.mass),
            (self.a, &mut cfg.a),
            (self.b, &mut cfg.b),
            (self.v0, &mut cfg.v0),
        ];
        for (flag, slot) in fields {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

impl Cli {
    pub fn invocation(&self) -> Result<Invocation, Failure> {
        let config = self.physics.config()?;
        let phi = |s: &str| TestFunction::parse(s, &config).map_err(|e| usage(e.to_string()));
        let task = match &self.command {
            Command::Jost { grid, im } => {
                if !im.is_finite() {
                    return Err(usage("--im must be finite"));
                }
                Task::Jost { ks: parse_range(grid)?.into_iter().map(|re| Complex64::new(re, *im)).collect() }
            }
            Command::Eigfn { q, sign, grid } => {
                let q = parse_list(q, 2, "--q")?;
                let rs = parse_range(grid)?;
                if rs[0] < 0.0 {
                    return Err(usage("radii must be nonnegative"));
                }
                Task::Eigfn { q: Complex64::new(q[0], q[1]), sign: parse_sign(sign)?, rs }
            }
            Command::Poles { rect, sign } => {
                let v = parse_list(rect, 4, "--rect")?;
                let rect = Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| usage(e.to_string()))?;
                Task::Poles { rect, sign: parse_sign(sign)? }
            }
            Command::Transform { phi: p, channel, grid } => {
                let channel: Channel = channel.parse().map_err(|e: shellcont::Error| usage(e.to_string()))?;
                let ks = parse_range(grid)?;
                if ks[0] <= 0.0 {
                    return Err(usage("wave numbers must be positive"));
                }
                Task::Transform { phi: phi(p)?, channel, ks }
            }
            Command::Continue { phi: p, sign, re, im } => {
                let res = parse_range(re)?;
                let ims = parse_range(im)?;
                let qs = ims.iter().flat_map(|&y| res.iter().map(move |&x| Complex64::new(x, y))).collect();
                Task::Continue { phi: phi(p)?, sign: parse_sign(sign)?, qs }
            }
            Command::Evolve { t, mode, eps, phi: p, rmax, sign } => {
                if !t.is_finite() {
                    return Err(usage("--t must be finite"));
                }
                if !(*eps > 0.0 && *eps < std::f64::consts::FRAC_PI_2) {
                    return Err(usage(format!("--eps must lie in (0, pi/2), got {eps}")));
                }
                if !(rmax.is_finite() && *rmax > config.b) {
                    return Err(usage(format!("--rmax must exceed b = {}", config.b)));
                }
                Task::Evolve { phi: phi(p)?, mode: *mode, t: *t, eps: *eps, rmax: *rmax, sign: parse_sign(sign)? }
            }
            Command::Verify { suite, seed, json } => {
                if let Some(s) = suite {
                    for name in s.split(',').map(str::trim) {
                        if !shellcont::verify::SUITES.contains(&name) {
                            return Err(usage(format!(
                                "unknown suite {name:?}; known suites: {}",
                                shellcont::verify::SUITES.join(", ")
                            )));
                        }
                    }
                }
                Task::Verify { suite: suite.clone(), seed: *seed, json: json.clone() }
            }
        };
        Ok(Invocation { quad: QuadratureSpec::for_config(&config), config, out: self.physics.out.clone(), task })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Invocation, Failure> {
        let mut argv = vec!["shellcont"];
        argv.extend_from_slice(args);
        Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?.invocation()
    }

    #[test]
    fn rect_flag_is_parsed() {
        let Ok(inv) = parse(&["poles", "--rect", "0.1,10,-3,-0.01"]) else { panic!("parse failed") };
        let Task::Poles { rect, sign } = inv.task else { panic!("wrong task") };
        assert_eq!((rect.re_min, rect.re_max, rect.im_min, rect.im_max), (0.1, 10.0, -3.0, -0.01));
        assert_eq!(sign, Sign::Plus);
    }

    #[test]
    fn inverted_shell_is_a_usage_error() {
        assert!(matches!(parse(&["jost", "--a", "2", "--b", "1"]), Err(Failure::Usage(_))));
        assert!(matches!(parse(&["jost", "--mass", "0"]), Err(Failure::Usage(_))));
    }

    #[test]
    fn ranges_include_both_ends() {
        let Ok(v) = parse_range("0.1:20:0.1") else { panic!() };
        assert_eq!(v.len(), 200);
        assert_eq!(v[0], 0.1);
        assert!((v[199] - 20.0).abs() < 1e-12);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn negative_values_are_accepted() {
        let Ok(inv) = parse(&["evolve", "--mode", "retarded", "--t", "-1"]) else { panic!("parse failed") };
        assert!(matches!(inv.task, Task::Evolve { t, mode: Mode::Retarded, .. } if t == -1.0));
        let Ok(inv) = parse(&["eigfn", "--q", "2,-0.5", "--sign", "-"]) else { panic!("parse failed") };
        assert!(matches!(inv.task, Task::Eigfn { sign: Sign::Minus, .. }));
    }

    #[test]
    fn unknown_suite_is_rejected_before_running() {
        assert!(matches!(parse(&["verify", "--suite", "bogus"]), Err(Failure::Usage(_))));
    }
}
