//! Solves `-a Δw + c w = g` with a known solution on a sequence of grids
//! and prints the error ratio between successive refinements.

use std::f64::consts::PI;

use diffreg::grid::{GridSpec, ScalarField};
use diffreg::linsolve::{ScreenedPoissonProblem, ScreenedPoissonSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, c) = (1.0, 2.0);
    let mut prev: Option<f64> = None;
    for size in [16, 32, 64, 128] {
        let spec = GridSpec::square(size)?;
        let h = spec.hx();
        // vanishes on the outermost cell centers, where the boundary value sits
        let s = |t: f64| (PI * (t - h / 2.0) / (1.0 - h)).sin();
        let k = PI / (1.0 - h);
        let exact = ScalarField::from_fn(spec, |x, y| s(x) * s(y));
        let rhs = ScalarField::from_fn(spec, |x, y| (2.0 * a * k * k + c) * s(x) * s(y));
        let problem = ScreenedPoissonProblem {
            a,
            c,
            rhs,
            boundary_value: 0.0,
        };
        let sol = ScreenedPoissonSolver::new(spec).solve(&problem, 1e-12, 20)?;
        let err = sol.field.zip_map(&exact, |p, q| p - q).max_abs();
        let ratio = prev.map_or(String::new(), |p| format!("  ratio {:.3}", p / err));
        println!(
            "{size:>4}: max error {err:.3e}, residual {:.1e}{ratio}",
            sol.residual
        );
        prev = Some(err);
    }
    Ok(())
}
