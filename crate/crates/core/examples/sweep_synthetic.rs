//! Registers every synthetic pair at 64² and 128² with the default
//! configuration and prints the quality summary.

use std::time::Instant;

use diffreg::registration::{multilevel_register, SolverConfig};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::default();
    println!(
        "{:<18} {:>4} {:>9} {:>7} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}",
        "example",
        "size",
        "re_ssd",
        "ssim",
        "det_min",
        "det_max",
        "det_mean",
        "r_min",
        "gfr",
        "secs"
    );
    for kind in ExampleKind::ALL {
        for size in [64, 128] {
            let (t, r) = generate(ExampleSpec::square(kind, size)?)?;
            let start = Instant::now();
            let res = multilevel_register(&r, &t, &cfg)?;
            let m = res.metrics;
            println!(
                "{:<18} {:>4} {:>9.5} {:>7.4} {:>8.4} {:>8.4} {:>8.5} {:>8.4} {:>6} {:>6.2}",
                kind.name(),
                size,
                m.re_ssd.unwrap_or(0.0),
                m.ssim,
                m.det_min,
                m.det_max,
                m.det_mean,
                m.r_min,
                m.gfr,
                start.elapsed().as_secs_f64()
            );
            let iters: Vec<String> = res
                .level_traces
                .iter()
                .map(|l| format!("{}:{:?}", l.iterations, l.stop))
                .collect();
            println!(
                "    levels {}{}",
                iters.join(" "),
                if res.degraded { " DEGRADED" } else { "" }
            );
        }
    }
    Ok(())
}
