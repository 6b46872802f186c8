use std::io::Write;

use anyhow::Context;
use num_complex::Complex64;
use serde_json::json;
use shellcont::continuation::bra_grid;
use shellcont::eigenfunctions::chi_pm;
use shellcont::jost::{jost_pm, s_matrix};
use shellcont::poles::find_resonances;
use shellcont::propagators::{
    advanced_evolve, free_advanced_evolve, free_retarded_evolve, group_evolve, radial_grid, retarded_evolve,
};
use shellcont::transforms::forward;
use shellcont::verify::{run_all_with, Status};

use crate::args::{Invocation, Mode, Task};
use crate::table::{Cell, Csv};
use crate::Failure;

fn emit(inv: &Invocation, text: &str) -> Result<(), Failure> {
    match &inv.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn run(inv: &Invocation) -> Result<u8, Failure> {
    let cfg = &inv.config;
    let quad = &inv.quad;
    let text = match &inv.task {
        Task::Jost { ks } => {
            let mut t = Csv::new(&["k_re", "k_im", "j_plus_re", "j_plus_im", "j_minus_re", "j_minus_im", "s_re", "s_im"]);
            for &k in ks {
                let j = jost_pm(cfg, k).with_context(|| format!("Jost functions at k = {k}"))?;
                let s = s_matrix(cfg, k).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                t.row(&[Cell::Complex(k), Cell::Complex(j.j_plus), Cell::Complex(j.j_minus), Cell::Complex(s)]);
            }
            t.finish()
        }
        Task::Eigfn { q, sign, rs } => {
            let mut t = Csv::new(&["r", "chi_re", "chi_im"]);
            for &r in rs {
                let v = chi_pm(cfg, r, *q, *sign).with_context(|| format!("eigenfunction at q = {q}"))?;
                t.row(&[Cell::Real(r), Cell::Complex(v)]);
            }
            t.finish()
        }
        Task::Poles { rect, sign } => {
            let set = find_resonances(cfg, rect, *sign)?;
            let zeros: Vec<_> = set
                .zeros
                .iter()
                .map(|z| json!({"re": z.q0.re, "im": z.q0.im, "deriv_re": z.derivative.re, "deriv_im": z.derivative.im}))
                .collect();
            let doc = json!({
                "sign": sign.symbol(),
                "rectangle": [rect.re_min, rect.re_max, rect.im_min, rect.im_max],
                "zeros": zeros,
            });
            serde_json::to_string_pretty(&doc).context("serialising poles")? + "\n"
        }
        Task::Transform { phi, channel, ks } => {
            let mut t = Csv::new(&["k", "f_re", "f_im"]);
            for &k in ks {
                let v = forward(cfg, phi, *channel, k, quad).with_context(|| format!("transform at k = {k}"))?;
                t.row(&[Cell::Real(k), Cell::Complex(v)]);
            }
            t.finish()
        }
        Task::Continue { phi, sign, qs } => {
            let mut t = Csv::new(&["q_re", "q_im", "braval_re", "braval_im", "quad_err"]);
            let mut skipped = 0;
            for (q, v) in qs.iter().zip(bra_grid(cfg, qs, phi, *sign, quad)) {
                let (val, err) = match v {
                    Ok(f) => (f.value, f.quad_error),
                    Err(_) => {
                        skipped += 1;
                        (Complex64::new(f64::NAN, f64::NAN), f64::NAN)
                    }
                };
                t.row(&[Cell::Complex(*q), Cell::Complex(val), Cell::Real(err)]);
            }
            if skipped > 0 {
                eprintln!("warning: {skipped} grid points could not be evaluated and are written as NaN");
            }
            t.finish()
        }
        Task::Evolve { phi, mode, t, eps, rmax, sign } => {
            let (rs, _) = radial_grid(cfg, *rmax, 0.5);
            let field = match mode {
                Mode::Group => group_evolve(cfg, phi, *sign, *t, &rs, quad)?,
                Mode::Retarded => retarded_evolve(cfg, phi, *sign, *t, *eps, &rs, quad, None)?.field,
                Mode::Advanced => advanced_evolve(cfg, phi, *sign, *t, *eps, &rs, quad, None)?.field,
                Mode::FreeRetarded => free_retarded_evolve(cfg, phi, *t, *eps, &rs, quad)?.field,
                Mode::FreeAdvanced => free_advanced_evolve(cfg, phi, *t, *eps, &rs, quad)?.field,
            };
            let mut out = Csv::new(&["r", "re", "im", "t"]);
            for (r, v) in field.grid.iter().zip(&field.values) {
                out.row(&[Cell::Real(*r), Cell::Complex(*v), Cell::Real(field.t)]);
            }
            out.finish()
        }
        Task::Verify { suite, seed, json } => {
            let report = run_all_with(cfg, suite.as_deref(), *seed, quad)?;
            if let Some(path) = json {
                let doc = serde_json::to_string_pretty(&report.entries).context("serialising report")? + "\n";
                std::fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
            }
            let mut text = String::new();
            for e in &report.entries {
                let status = match e.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skipped => "SKIP",
                };
                text += &format!("{status} {:<32} {:>10.3e} <= {:.1e}  {}\n", e.check_id, e.metric, e.tolerance, e.detail);
            }
            let fails = report.failures().count();
            text += &format!("{} checks, {} failed\n", report.entries.len(), fails);
            emit(inv, &text)?;
            return Ok(if fails == 0 { 0 } else { 1 });
        }
    };
    emit(inv, &text)?;
    Ok(0)
}
