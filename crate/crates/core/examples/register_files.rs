//! Registers a template PGM onto a reference PGM and writes the warped
//! template next to them.
//!
//! ```text
//! cargo run --release --example register_files -- ref.pgm template.pgm out_dir
//! ```
//!
//! Without arguments a demo pair is written to a temporary directory first.

use std::path::PathBuf;

use diffreg::cli::image_io::{read_pgm, write_pgm, write_png};
use diffreg::registration::{multilevel_register, SolverConfig};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (rp, tp, out) = if let [r, t, o] = args.as_slice() {
        (PathBuf::from(r), PathBuf::from(t), PathBuf::from(o))
    } else {
        let dir = std::env::temp_dir().join("diffreg-register-files");
        std::fs::create_dir_all(&dir)?;
        let (t, r) = generate(ExampleSpec::square(ExampleKind::BigSmallCircle, 64)?)?;
        write_pgm(&dir.join("ref.pgm"), &r)?;
        write_pgm(&dir.join("template.pgm"), &t)?;
        (dir.join("ref.pgm"), dir.join("template.pgm"), dir.clone())
    };

    let r = read_pgm(&rp)?;
    let t = read_pgm(&tp)?;
    // levels must divide the image size
    let side = r.spec().m().min(r.spec().n());
    let cfg = SolverConfig {
        levels: (1..=3)
            .rev()
            .find(|l| side % (1 << (l - 1)) == 0 && side >> (l - 1) >= 4)
            .unwrap_or(1),
        ..SolverConfig::default()
    };
    let res = multilevel_register(&r, &t, &cfg)?;

    std::fs::create_dir_all(&out)?;
    write_pgm(&out.join("warped.pgm"), &res.warped)?;
    write_png(&out.join("warped.png"), &res.warped)?;
    println!(
        "{} iterations, Re_SSD {:.3}%, GFR {}; wrote {}",
        res.total_iterations(),
        100.0 * res.metrics.re_ssd.unwrap_or(0.0),
        res.metrics.gfr,
        out.join("warped.pgm").display()
    );
    Ok(())
}
