//! Batch front end: configuration, image I/O and artifact emission.
//!
//! A run reads a template/reference pair (PGM files or a synthetic
//! example), registers it and writes
//!
//! - `warped.pgm`, `warped.png`: the deformed template
//! - `grid.csv` (`i,j,phi1,phi2`) and `grid.svg`: the deformation grid
//! - `det.csv`, `f.csv`: Jacobian determinant and relaxation field per cell
//! - `trace.csv`: one row per outer iteration
//! - `metrics.json`: quality measures, stop reasons and the configuration
//!
//! Inputs are loaded and registered before anything is written, so a failed
//! run leaves no partial output behind.

pub mod artifacts;
pub mod image_io;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use crate::grid::ScalarField;
use crate::metrics::MetricsReport;
use crate::registration::{multilevel_register, ConfigError, RegistrationError};
use crate::synth::{generate, SynthError};

pub use manifest::{
    build_manifest, parse_config, parse_pairs, EmitFlags, InputSource, RunManifest,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Image { path: PathBuf, reason: String },
    #[error("input images differ in size: reference {r:?}, template {t:?}")]
    SizeMismatch {
        r: (usize, usize),
        t: (usize, usize),
    },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("registration failed: {0}")]
    Registration(#[from] RegistrationError),
}

impl CliError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Exit status of a run that wrote artifacts for a degraded result.
pub const EXIT_DEGRADED: u8 = 3;

/// Command-line flags. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "diffreg",
    version,
    about = "Diffeomorphic 2D image registration"
)]
pub struct Args {
    /// Reference image (PGM)
    #[arg(long = "ref", value_name = "PGM")]
    pub reference: Option<PathBuf>,
    /// Template image (PGM), deformed onto the reference
    #[arg(long, value_name = "PGM")]
    pub template: Option<PathBuf>,
    /// Synthetic pair instead of files: circle_square, disc_to_c, big_small_circle, translated_blob
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
    /// Side length of the synthetic images (power of two, at least 32)
    #[arg(long)]
    pub size: Option<usize>,
    /// Number of multilevel grids
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub tau3: Option<f64>,
    /// Initial penalty weight
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Proximal weight
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Penalty growth factor (> 1)
    #[arg(long)]
    pub rho: Option<f64>,
    /// Iteration cap per level
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Control function: phi1 or phi2
    #[arg(long)]
    pub variant: Option<String>,
    /// Skip the folding correction step
    #[arg(long = "no-correction")]
    pub no_correction: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// File of `key = value` lines
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Suppress the summary on stdout
    #[arg(long, short)]
    pub quiet: bool,
}

impl Args {
    /// Flags as configuration pairs, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("ref", path(&self.reference));
        put("template", path(&self.template));
        put("example", self.example.clone());
        put("size", self.size.map(|v| v.to_string()));
        put("levels", self.levels.map(|v| v.to_string()));
        put("tau1", self.tau1.map(|v| v.to_string()));
        put("tau2", self.tau2.map(|v| v.to_string()));
        put("tau3", self.tau3.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("rho", self.rho.map(|v| v.to_string()));
        put("max_iter", self.max_iter.map(|v| v.to_string()));
        put("variant", self.variant.clone());
        put(
            "correction",
            self.no_correction.then(|| "false".to_string()),
        );
        put("out", path(&self.out));
        out
    }
}

/// What a successful run wrote.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub metrics: MetricsReport,
    pub iterations: usize,
    pub degraded: bool,
    pub failure: Option<String>,
}

fn load_inputs(input: &InputSource) -> Result<(ScalarField, ScalarField, String), CliError> {
    match input {
        InputSource::Files {
            reference,
            template,
        } => {
            let r = image_io::read_pgm(reference)?;
            let t = image_io::read_pgm(template)?;
            let (rs, ts) = (r.spec(), t.spec());
            if rs != ts {
                return Err(CliError::SizeMismatch {
                    r: (rs.m(), rs.n()),
                    t: (ts.m(), ts.n()),
                });
            }
            let source = format!(
                "ref={} template={}",
                reference.display(),
                template.display()
            );
            Ok((t, r, source))
        }
        InputSource::Example(spec) => {
            let (t, r) = generate(*spec)?;
            Ok((
                t,
                r,
                format!("example={} size={}x{}", spec.kind, spec.m, spec.n),
            ))
        }
    }
}

fn write_all(dir: &Path, items: &[artifacts::Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for a in items {
        let path = dir.join(a.name);
        if let Err(source) = fs::write(&path, &a.bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(CliError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

/// Loads, registers and writes every selected artifact.
pub fn run(manifest: &RunManifest) -> Result<RunReport, CliError> {
    let (t, r, source) = load_inputs(&manifest.input)?;
    let result = multilevel_register(&r, &t, &manifest.config)?;
    let items =
        artifacts::render(&result, &manifest.config, manifest.emit, &source).map_err(|e| {
            CliError::Image {
                path: manifest.out_dir.join(artifacts::WARPED_PNG),
                reason: e.to_string(),
            }
        })?;
    let files = write_all(&manifest.out_dir, &items)?;
    Ok(RunReport {
        out_dir: manifest.out_dir.clone(),
        files,
        metrics: result.metrics,
        iterations: result.total_iterations(),
        degraded: result.degraded,
        failure: result.failure,
    })
}

fn summary(report: &RunReport) -> String {
    let m = &report.metrics;
    let re = m.re_ssd.map_or("n/a (identical inputs)".to_string(), |v| {
        format!("{:.4}%", 100.0 * v)
    });
    format!(
        "{} iterations; Re_SSD {re}; SSIM {:.4}; PSNR {:.2} dB; det [{:.4}, {:.4}] mean {:.5}; R_min {:.4}; GFR {}\nwrote {} files to {}",
        report.iterations,
        m.ssim,
        m.psnr,
        m.det_min,
        m.det_max,
        m.det_mean,
        m.r_min,
        m.gfr,
        report.files.len(),
        report.out_dir.display()
    )
}

/// Entry point shared by the binary: parses configuration, runs, prints a
/// summary and maps failures to exit codes.
pub fn main_with(args: Args) -> ExitCode {
    let manifest = match parse_config(args.config.as_deref(), &args.to_pairs()) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("diffreg: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match run(&manifest) {
        Ok(report) => {
            if !args.quiet {
                println!("{}", summary(&report));
            }
            if report.degraded {
                eprintln!(
                    "diffreg: result is degraded: {}",
                    report.failure.as_deref().unwrap_or("unknown failure")
                );
                ExitCode::from(EXIT_DEGRADED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("diffreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_pairs() {
        let args = Args::parse_from([
            "diffreg",
            "--example",
            "disc_to_c",
            "--size",
            "32",
            "--rho",
            "1.08",
            "--max-iter",
            "7",
            "--no-correction",
        ]);
        let m = build_manifest(&args.to_pairs()).unwrap();
        assert_eq!(m.config.rho, 1.08);
        assert_eq!(m.config.max_iter, 7);
        assert!(!m.config.correction);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("diffreg-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("run.cfg");
        fs::write(&file, "example = circle_square\nlambda = 3\ngamma = 5\n").unwrap();
        let args = Args::parse_from(["diffreg", "--lambda", "0.25"]);
        let m = parse_config(Some(&file), &args.to_pairs()).unwrap();
        assert_eq!(m.config.lambda1, 0.25);
        assert_eq!(m.config.gamma, 5.0);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_config_file_is_io_error() {
        let err = parse_config(Some(Path::new("/nonexistent/diffreg.cfg")), &[]).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        assert_eq!(err.exit_code(), 1);
    }
}
