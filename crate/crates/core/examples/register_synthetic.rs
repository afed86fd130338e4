//! Registers one synthetic pair and prints the per-level progress.
//!
//! ```text
//! cargo run --release --example register_synthetic -- disc_to_c 128
//! ```

use diffreg::registration::{multilevel_register, SolverConfig};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: ExampleKind = args.next().as_deref().unwrap_or("circle_square").parse()?;
    let size: usize = args.next().map_or(Ok(64), |s| s.parse())?;

    let (t, r) = generate(ExampleSpec::square(kind, size)?)?;
    let cfg = SolverConfig::default();
    let res = multilevel_register(&r, &t, &cfg)?;

    for l in &res.level_traces {
        println!(
            "level {} ({}x{}): {} iterations, stop {:?}",
            l.level, l.m, l.n, l.iterations, l.stop
        );
    }
    let m = &res.metrics;
    println!(
        "Re_SSD {:.3}%  SSIM {:.4}  PSNR {:.2} dB",
        100.0 * m.re_ssd.unwrap_or(0.0),
        m.ssim,
        m.psnr
    );
    println!(
        "det in [{:.4}, {:.4}], mean {:.5}, GFR {}",
        m.det_min, m.det_max, m.det_mean, m.gfr
    );
    Ok(())
}
