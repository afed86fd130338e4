//! Compares both control functions with the unconstrained diffusion
//! baseline on the same pair.

use diffreg::energy::PenaltyVariant;
use diffreg::registration::{multilevel_register, SolverConfig};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: ExampleKind = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("disc_to_c")
        .parse()?;
    let (t, r) = generate(ExampleSpec::square(kind, 64)?)?;
    let runs = [
        ("phi1", SolverConfig::default()),
        (
            "phi2",
            SolverConfig {
                variant: PenaltyVariant::Phi2,
                ..SolverConfig::default()
            },
        ),
        ("diffusion", SolverConfig::diffusion_baseline()),
    ];
    println!(
        "{:<10} {:>9} {:>7} {:>8} {:>8} {:>8} {:>6}",
        "run", "re_ssd", "ssim", "det_min", "det_max", "r_min", "gfr"
    );
    for (name, cfg) in runs {
        let m = multilevel_register(&r, &t, &cfg)?.metrics;
        println!(
            "{name:<10} {:>9.5} {:>7.4} {:>8.4} {:>8.4} {:>8.4} {:>6.4}",
            m.re_ssd.unwrap_or(0.0),
            m.ssim,
            m.det_min,
            m.det_max,
            m.r_min,
            m.gfr
        );
    }
    Ok(())
}
