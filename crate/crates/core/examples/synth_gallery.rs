//! Writes every synthetic template/reference pair as PGM files.
//!
//! ```text
//! cargo run --example synth_gallery -- out_dir 128
//! ```

use std::path::PathBuf;

use diffreg::cli::image_io::write_pgm;
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map_or_else(
        || std::env::temp_dir().join("diffreg-gallery"),
        PathBuf::from,
    );
    let size: usize = args.next().map_or(Ok(64), |s| s.parse())?;
    std::fs::create_dir_all(&dir)?;
    for kind in ExampleKind::ALL {
        let (t, r) = generate(ExampleSpec::square(kind, size)?)?;
        write_pgm(&dir.join(format!("{kind}_template.pgm")), &t)?;
        write_pgm(&dir.join(format!("{kind}_reference.pgm")), &r)?;
        println!(
            "{kind}: template mass {:.1}, reference mass {:.1}",
            t.sum() / 255.0,
            r.sum() / 255.0
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}
