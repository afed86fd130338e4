//! Serialization of a registration result into output files.
//!
//! Floating-point values are written with 17 significant digits so that
//! every value reads back bitwise.

use std::fmt::Write as _;

use crate::grid::ScalarField;
use crate::jacobian::jacobian_det;
use crate::registration::{RegistrationResult, SolverConfig};

use super::image_io::{encode_pgm, encode_png};
use super::manifest::EmitFlags;

pub const WARPED_PGM: &str = "warped.pgm";
pub const WARPED_PNG: &str = "warped.png";
pub const GRID_CSV: &str = "grid.csv";
pub const GRID_SVG: &str = "grid.svg";
pub const DET_CSV: &str = "det.csv";
pub const F_CSV: &str = "f.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const METRICS_JSON: &str = "metrics.json";

/// One file to be written, relative to the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

/// 17 significant digits; non-finite values become `inf`, `-inf`, `NaN`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn json_f64(v: f64) -> String {
    if v.is_finite() {
        fmt_f64(v)
    } else {
        "null".to_string()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_object(fields: &[(&str, String)], indent: usize) -> String {
    let pad = " ".repeat(indent + 2);
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{pad}{}: {v}", json_str(k)))
        .collect();
    format!("{{\n{}\n{}}}", body.join(",\n"), " ".repeat(indent))
}

pub fn grid_csv(result: &RegistrationResult) -> String {
    let phi = &result.phi_final;
    let s = phi.spec();
    let mut out = String::from("i,j,phi1,phi2\n");
    for j in 0..s.n() {
        for i in 0..s.m() {
            let (x, y) = phi.get(i, j);
            let _ = writeln!(out, "{i},{j},{},{}", fmt_f64(x), fmt_f64(y));
        }
    }
    out
}

/// Grid rows and columns of the deformation as SVG polylines on a
/// 512-pixel canvas, `y` pointing down like the image rows.
pub fn grid_svg(result: &RegistrationResult) -> String {
    const SIZE: f64 = 512.0;
    let phi = &result.phi_final;
    let s = phi.spec();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"none\" stroke=\"black\" stroke-width=\"0.6\">\n"
    );
    let line = |out: &mut String, pts: &mut dyn Iterator<Item = (f64, f64)>| {
        let p: Vec<String> = pts
            .map(|(x, y)| format!("{:.3},{:.3}", x * SIZE, y * SIZE))
            .collect();
        let _ = writeln!(out, "<polyline points=\"{}\"/>", p.join(" "));
    };
    for j in 0..s.n() {
        line(&mut out, &mut (0..s.m()).map(|i| phi.get(i, j)));
    }
    for i in 0..s.m() {
        line(&mut out, &mut (0..s.n()).map(|j| phi.get(i, j)));
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Per-cell field as `i,j,<name>` rows, row-major in `j`.
pub fn field_csv(name: &str, v: &ScalarField) -> String {
    let s = v.spec();
    let mut out = format!("i,j,{name}\n");
    for j in 0..s.n() {
        for i in 0..s.m() {
            let _ = writeln!(out, "{i},{j},{}", fmt_f64(v.get(i, j)));
        }
    }
    out
}

pub fn trace_csv(result: &RegistrationResult) -> String {
    let mut out =
        String::from("level,iter,lambda,data,reg_u,reg_phi,reg_f,constraint,total,det_mean\n");
    for r in &result.trace {
        let e = &r.energy;
        let vals = [
            r.lambda,
            e.data,
            e.reg_u,
            e.reg_phi,
            e.reg_f,
            e.constraint,
            e.total,
            r.det_mean,
        ];
        let vals: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{},{},{}", r.level, r.iter, vals.join(","));
    }
    out
}

fn config_json(c: &SolverConfig) -> String {
    json_object(
        &[
            ("tau1", json_f64(c.tau1)),
            ("tau2", json_f64(c.tau2)),
            ("tau3", json_f64(c.tau3)),
            ("lambda", json_f64(c.lambda1)),
            ("gamma", json_f64(c.gamma)),
            ("rho", json_f64(c.rho)),
            ("levels", c.levels.to_string()),
            ("max_iter", c.max_iter.to_string()),
            ("eps_l", json_f64(c.eps_l)),
            ("eps_u", json_f64(c.eps_u)),
            ("variant", json_str(&c.variant.to_string())),
            ("correction", c.correction.to_string()),
            ("correction_eps", json_f64(c.correction_eps)),
            ("intensity_scale", json_f64(c.intensity_scale)),
            ("max_backtracks", c.max_backtracks.to_string()),
            ("solver_tol", json_f64(c.solver_tol)),
        ],
        2,
    )
}

pub fn metrics_json(result: &RegistrationResult, config: &SolverConfig, source: &str) -> String {
    let m = &result.metrics;
    let mut fields: Vec<(&str, String)> = Vec::new();
    match m.re_ssd {
        Some(v) => fields.push(("re_ssd", json_f64(v))),
        None => {
            fields.push(("re_ssd", "null".into()));
            fields.push(("re_ssd_reason", json_str("identical inputs")));
        }
    }
    fields.push(("ssim", json_f64(m.ssim)));
    fields.push(("psnr", json_f64(m.psnr)));
    if m.psnr.is_infinite() {
        fields.push(("psnr_reason", json_str("zero mean squared error")));
    }
    fields.push(("det_mean", json_f64(m.det_mean)));
    fields.push(("det_min", json_f64(m.det_min)));
    fields.push(("det_max", json_f64(m.det_max)));
    fields.push(("r_min", json_f64(m.r_min)));
    fields.push(("gfr", json_f64(m.gfr)));
    fields.push(("degraded", result.degraded.to_string()));
    fields.push((
        "failure",
        result.failure.as_deref().map_or("null".into(), json_str),
    ));
    fields.push(("iterations", result.total_iterations().to_string()));
    let levels: Vec<String> = result
        .level_traces
        .iter()
        .map(|l| {
            format!(
                "{{\"level\": {}, \"m\": {}, \"n\": {}, \"iterations\": {}, \"stop\": {}}}",
                l.level,
                l.m,
                l.n,
                l.iterations,
                serde_json::to_string(&l.stop).expect("enum serializes")
            )
        })
        .collect();
    fields.push(("levels", format!("[{}]", levels.join(", "))));
    fields.push(("source", json_str(source)));
    fields.push(("config", config_json(config)));
    let mut out = json_object(&fields, 0);
    out.push('\n');
    out
}

/// Every artifact selected by `emit`, encoded in memory.
pub fn render(
    result: &RegistrationResult,
    config: &SolverConfig,
    emit: EmitFlags,
    source: &str,
) -> Result<Vec<Artifact>, png::EncodingError> {
    let mut out = vec![
        Artifact {
            name: WARPED_PGM,
            bytes: encode_pgm(&result.warped),
        },
        Artifact {
            name: WARPED_PNG,
            bytes: encode_png(&result.warped)?,
        },
    ];
    if emit.grid {
        out.push(Artifact {
            name: GRID_CSV,
            bytes: grid_csv(result).into_bytes(),
        });
        out.push(Artifact {
            name: GRID_SVG,
            bytes: grid_svg(result).into_bytes(),
        });
    }
    if emit.hotmaps {
        out.push(Artifact {
            name: DET_CSV,
            bytes: field_csv("det", &jacobian_det(&result.phi_final)).into_bytes(),
        });
        out.push(Artifact {
            name: F_CSV,
            bytes: field_csv("f", &result.f_final).into_bytes(),
        });
    }
    if emit.trace {
        out.push(Artifact {
            name: TRACE_CSV,
            bytes: trace_csv(result).into_bytes(),
        });
    }
    if emit.metrics {
        out.push(Artifact {
            name: METRICS_JSON,
            bytes: metrics_json(result, config, source).into_bytes(),
        });
    }
    Ok(out)
}
