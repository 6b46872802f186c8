use proptest::prelude::*;
use shellcont::eigenfunctions::{chi_pm, chi_zero};
use shellcont::jost::{jost_pm, s_matrix, RegularSolution};
use shellcont::model::{energy_from_wavenumber, wavenumber_from_energy};
use shellcont::propagators::{quadrant_limit, Quadrant};
use shellcont::young::{scaled_quadratic, young_check, MonotoneFunction};
use shellcont::{Complex64, PhysicalConfig, Sign};

fn shell() -> impl Strategy<Value = PhysicalConfig> {
    (0.2f64..2.0, 0.1f64..2.0, -20.0f64..40.0, 0.3f64..2.0)
        .prop_map(|(a, w, v0, mass)| PhysicalConfig::new(1.0, mass, a, a + w, v0).unwrap())
}

fn wavenumber() -> impl Strategy<Value = Complex64> {
    (-8.0f64..8.0, -3.0f64..3.0)
        .prop_filter("q away from 0", |(x, y)| x.hypot(*y) > 0.05)
        .prop_map(|(x, y)| Complex64::new(x, y))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jost_conjugation_and_parity(cfg in shell(), q in wavenumber()) {
        let j = jost_pm(&cfg, q).unwrap();
        let jc = jost_pm(&cfg, q.conj()).unwrap();
        let jn = jost_pm(&cfg, -q).unwrap();
        prop_assert!(rel(j.j_minus, jc.j_plus.conj()) < 1e-10);
        prop_assert!(rel(j.j_minus, jn.j_plus) < 1e-10);
    }

    #[test]
    fn s_matrix_is_unimodular_on_the_real_axis(cfg in shell(), k in 0.05f64..30.0) {
        let s = s_matrix(&cfg, Complex64::new(k, 0.0)).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn regular_solution_solves_the_radial_equation(cfg in shell(), q in wavenumber(), t in 0.05f64..0.95) {
        // Second derivative by central differences away from the interfaces.
        let sol = RegularSolution::new(&cfg, q);
        let r = if t < 0.5 { cfg.a + (cfg.b - cfg.a) * (0.2 + t) } else { cfg.b + 3.0 * t };
        let h = 1e-4;
        let d2 = (sol.value(r + h) - 2.0 * sol.value(r) + sol.value(r - h)) / (h * h);
        let lhs = -d2 + (cfg.u0() * f64::from(cfg.potential(r) != 0.0)) * sol.value(r);
        let rhs = q * q * sol.value(r);
        let scale = (q * q).norm().max(cfg.u0().abs()).max(1.0) * sol.value(r).norm().max(1e-8);
        prop_assert!((lhs - rhs).norm() / scale < 1e-4, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn eigenfunctions_are_continuous_across_interfaces(cfg in shell(), q in wavenumber(), sign in prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]) {
        for edge in [cfg.a, cfg.b] {
            let (Ok(lo), Ok(hi)) = (chi_pm(&cfg, edge - 1e-9, q, sign), chi_pm(&cfg, edge + 1e-9, q, sign)) else {
                return Ok(());
            };
            prop_assert!((lo - hi).norm() <= 1e-6 * lo.norm().max(1.0));
        }
    }

    #[test]
    fn zero_potential_gives_free_eigenfunctions(a in 0.2f64..2.0, w in 0.1f64..2.0, q in wavenumber(), r in 0.0f64..6.0) {
        let cfg = PhysicalConfig::new(1.0, 0.5, a, a + w, 0.0).unwrap();
        let chi = chi_pm(&cfg, r, q, Sign::Plus).unwrap();
        prop_assert!((chi - chi_zero(r, q)).norm() <= 1e-12 * chi_zero(r, q).norm().max(1.0));
    }

    #[test]
    fn energy_map_round_trips(cfg in shell(), q in wavenumber()) {
        let back = wavenumber_from_energy(&cfg, energy_from_wavenumber(&cfg, q));
        prop_assert!(rel(back, q) < 1e-14);
    }

    #[test]
    fn young_inequality_for_powers(p in 0.3f64..4.0, x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let mu = MonotoneFunction::power(p).unwrap();
        let rep = young_check(&mu, x, y).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
        let eq = young_check(&mu, x, mu.eval(x)).unwrap();
        prop_assert!(eq.slack.abs() <= 1e-9 * (eq.m + eq.omega).max(1.0));
    }

    #[test]
    fn scaled_quadratic_never_fails(x in 0.0f64..100.0, y in 0.0f64..100.0, alpha in 0.01f64..100.0) {
        prop_assert!(scaled_quadratic(x, y, alpha).unwrap().holds);
    }

    #[test]
    fn quadrant_limits_flip_with_time(theta in -3.1f64..3.1) {
        let off_axis = (theta / std::f64::consts::FRAC_PI_2).fract().abs();
        prop_assume!(off_axis > 0.01 && off_axis < 0.99);
        let fwd = quadrant_limit(theta, 1.0).unwrap();
        let bwd = quadrant_limit(theta, -1.0).unwrap();
        prop_assert_ne!(fwd.predicted, bwd.predicted);
        prop_assert_eq!(fwd.predicted, fwd.observed);
        prop_assert_eq!(bwd.predicted, bwd.observed);
        prop_assert_eq!(Quadrant::of(theta).unwrap(), fwd.quadrant);
    }

    #[test]
    fn config_text_round_trips(cfg in shell()) {
        let text = format!("hbar = {:?}\nmass = {:?}\na = {:?}\nb = {:?}\nv0 = {:?}\n", cfg.hbar, cfg.mass, cfg.a, cfg.b, cfg.v0);
        let parsed = PhysicalConfig::parse_key_values(&text, PhysicalConfig::canonical()).unwrap();
        prop_assert_eq!(parsed, cfg);
    }
}
