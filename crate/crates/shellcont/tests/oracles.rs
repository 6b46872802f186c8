//! Reference values computed independently at 30 significant digits and frozen here.
#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use shellcont::eigenfunctions::chi_pm;
use shellcont::jost::{jost_pm, s_matrix};
use shellcont::poles::{find_resonances, Rect};
use shellcont::testspace::TestFunction;
use shellcont::transforms::{forward, Channel, QuadratureSpec};
use shellcont::{Complex64, PhysicalConfig, Sign};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(got: Complex64, want: Complex64, tol: f64) {
    let err = (got - want).norm() / want.norm();
    assert!(err < tol, "got {got}, want {want}, relative error {err:e}");
}

#[test]
fn jost_values() {
    let cfg = PhysicalConfig::canonical();
    let table = [
        (c(3.0, 0.0), c(-0.499308821259925496657640250394, 3.55361565544625600000097661815), c(-0.499308821259925496657640250394, -3.55361565544625600000097661815)),
        (c(2.5, -0.7), c(24.3870571612306580540979670697, 11.6286517070782193399623686208), c(-0.0969936105631512360162600034357, -3.15331956671297383586640480403)),
        (c(1.0, 2.0), c(4.68673819349823197746409101137, 2.72207597012155997908252183011), c(-4614.23068833033652733867610696, -947.296781289692538125344129377)),
        (c(7.3, 0.1), c(0.755962223540172996397798013231, 0.689967899014867190149090933451), c(0.762073118277614005438523712299, -0.6913660378205737744598435362)),
        (c(0.4, -3.0), c(34026.4657283372848863993672381, 113888.491762369308931886798681), c(3.94165275850791649130404473029, -0.540156158313414135047571862204)),
    ];
    for (q, jp, jm) in table {
        let j = jost_pm(&cfg, q).unwrap();
        close(j.j_plus, jp, 1e-12);
        close(j.j_minus, jm, 1e-12);
    }
}

#[test]
fn s_matrix_value() {
    let s = s_matrix(&PhysicalConfig::canonical(), c(1.5, 0.0)).unwrap();
    assert_relative_eq!(s.re, 0.289072628928337392831796159775, max_relative = 1e-12);
    assert_relative_eq!(s.im, 0.957307168679133915689982305605, max_relative = 1e-12);
}

#[test]
fn lowest_resonances() {
    let cfg = PhysicalConfig::canonical();
    let rect = Rect::new(0.1, 7.0, -1.0, -0.001).unwrap();
    let mut z = find_resonances(&cfg, &rect, Sign::Plus).unwrap().locations();
    z.sort_by(|a, b| a.re.total_cmp(&b.re));
    let want = [
        c(2.31909985020527341761419832755, -0.00930310548096513428403193748273),
        c(3.99251071400758093839461626286, -0.25914986511885276923929545486),
        c(5.1171498806837458881958294921, -0.454008925569924496180144973157),
        c(6.66570927605941874138566969046, -0.678609329523698913335960855076),
    ];
    assert_eq!(z.len(), want.len(), "{z:?}");
    for (got, want) in z.iter().zip(want) {
        assert!((got - want).norm() < 1e-12, "got {got}, want {want}");
    }
}

#[test]
fn eigenfunction_values() {
    let cfg = PhysicalConfig::canonical();
    let q = c(3.0, -0.2);
    close(chi_pm(&cfg, 1.5, q, Sign::Plus).unwrap(), c(0.0940346583769260982405608110541, 0.217097973515002211495507923676), 1e-12);
    close(chi_pm(&cfg, 2.7, q, Sign::Minus).unwrap(), c(0.268274432450747561267293749611, 0.145254360948671768654701443903), 1e-12);
}

#[test]
fn transform_values() {
    let cfg = PhysicalConfig::canonical();
    let quad = QuadratureSpec::for_config(&cfg);
    let gauss = TestFunction::gauss_analytic(&cfg, 0, 2.0, 2).unwrap();
    let free = forward(&cfg, &gauss, Channel::Free, 2.0, &quad).unwrap();
    assert_relative_eq!(free.re, 0.0124504758805118550668356922094, max_relative = 1e-10);
    assert!(free.im.abs() < 1e-15);
    let bump = TestFunction::bump(1.2, 1.8, 0).unwrap();
    let plus = forward(&cfg, &bump, Channel::Plus, 3.0, &quad).unwrap();
    close(plus, c(0.00576251693215209478145990078661, -0.0410122343386552933199738024026), 1e-10);
}
