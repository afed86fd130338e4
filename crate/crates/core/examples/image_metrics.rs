//! Quality measures for a shifted image against its reference.

use diffreg::fields::{identity_deformation, warp, Deformation};
use diffreg::metrics::evaluate;
use diffreg::synth::{generate, ExampleKind, ExampleSpec, BLOB_SHIFT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (t, r) = generate(ExampleSpec::square(ExampleKind::TranslatedBlob, 64)?)?;
    let spec = t.spec();
    println!("{:>8} {:>9} {:>7} {:>8}", "shift", "re_ssd", "ssim", "psnr");
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let phi = if frac == 0.0 {
            identity_deformation(spec)
        } else {
            Deformation::from_map(spec, |x, y| (x - frac * BLOB_SHIFT, y))
        };
        let m = evaluate(&t, &r, &warp(&t, &phi), &phi)?;
        println!(
            "{:>8.3} {:>9.5} {:>7.4} {:>8.2}",
            frac * BLOB_SHIFT,
            m.re_ssd.unwrap_or(0.0),
            m.ssim,
            m.psnr
        );
    }
    Ok(())
}
