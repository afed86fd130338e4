//! Folds a grid with a local swirl and untangles it.

use diffreg::fields::{identity_deformation, Deformation};
use diffreg::grid::GridSpec;
use diffreg::jacobian::{correct_deformation, folding_indicator};

/// Rotates points near cell `(ci, cj)` by up to `angle`, fading out at `radius`.
fn swirl(phi: &mut Deformation, ci: usize, cj: usize, radius: f64, angle: f64) {
    let s = phi.spec();
    let (cx, cy) = (s.x(ci), s.y(cj));
    for (i, j) in s.interior_cells() {
        let (x, y) = phi.get(i, j);
        let (dx, dy) = (x - cx, y - cy);
        let r = dx.hypot(dy);
        if r < radius {
            let th = angle * (1.0 - r / radius).powi(2);
            let (sn, cs) = th.sin_cos();
            phi.set(i, j, (cx + cs * dx - sn * dy, cy + sn * dx + cs * dy));
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::square(32)?;
    let eps = 1e-2;
    println!(
        "{:>6} {:>6} {:>8} {:>8} {:>6} {:>6}",
        "radius", "angle", "gfr", "flagged", "moved", "sweeps"
    );
    for radius in [2.5, 3.5, 5.0] {
        for angle in [2.0, 3.0, 4.0, 5.0, 6.0] {
            let mut phi = identity_deformation(spec);
            swirl(&mut phi, 16, 16, radius * spec.hx(), angle);
            let before = folding_indicator(&phi);
            match correct_deformation(&phi, eps) {
                Ok(c) => println!(
                    "{radius:>6} {angle:>6} {:>8.4} {:>8} {:>6} {:>6}   R_min {:.3}",
                    before.gfr,
                    before.flagged.len(),
                    c.moved.len(),
                    c.sweeps,
                    c.r_min
                ),
                Err(e) => println!(
                    "{radius:>6} {angle:>6} {:>8.4} {:>8}   {e}",
                    before.gfr,
                    before.flagged.len()
                ),
            }
        }
    }
    Ok(())
}
