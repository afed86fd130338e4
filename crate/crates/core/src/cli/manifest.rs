//! Run manifests built from `key = value` configuration files and flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::energy::PenaltyVariant;
use crate::registration::{ConfigError, SolverConfig};
use crate::synth::{ExampleKind, ExampleSpec};

/// Where the image pair comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Files {
        reference: PathBuf,
        template: PathBuf,
    },
    Example(ExampleSpec),
}

/// Which optional artifacts to write. The warped image is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub grid: bool,
    pub hotmaps: bool,
    pub trace: bool,
    pub metrics: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            grid: true,
            hotmaps: true,
            trace: true,
            metrics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub input: InputSource,
    pub config: SolverConfig,
    pub out_dir: PathBuf,
    pub emit: EmitFlags,
}

pub const DEFAULT_OUT_DIR: &str = "diffreg-out";
pub const DEFAULT_EXAMPLE_SIZE: usize = 64;

/// Keys accepted in configuration files.
pub const KEYS: &[&str] = &[
    "ref",
    "template",
    "example",
    "size",
    "out",
    "tau1",
    "tau2",
    "tau3",
    "lambda",
    "gamma",
    "rho",
    "levels",
    "max_iter",
    "eps_l",
    "eps_u",
    "variant",
    "correction",
    "correction_eps",
    "intensity_scale",
    "max_backtracks",
    "solver_tol",
    "emit_grid",
    "emit_hotmaps",
    "emit_trace",
    "emit_metrics",
];

/// Splits `key = value` lines. Blank lines and `#` comments are skipped;
/// dashes in keys are read as underscores.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(
                format!("line {}", n + 1),
                format!("expected `key = value`, found `{line}`"),
            )
        })?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("`{value}` is not a valid number")))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::new(key, format!("`{value}` is not a boolean"))),
    }
}

#[derive(Debug, Default)]
struct Builder {
    reference: Option<PathBuf>,
    template: Option<PathBuf>,
    example: Option<ExampleKind>,
    size: Option<usize>,
    out: Option<PathBuf>,
    config: SolverConfig,
    emit: EmitFlags,
}

impl Builder {
    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let c = &mut self.config;
        match key {
            "ref" => self.reference = Some(PathBuf::from(value)),
            "template" => self.template = Some(PathBuf::from(value)),
            "example" => {
                self.example =
                    Some(value.parse().map_err(|e: crate::synth::SynthError| {
                        ConfigError::new(key, e.to_string())
                    })?)
            }
            "size" => self.size = Some(number(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "tau1" => c.tau1 = number(key, value)?,
            "tau2" => c.tau2 = number(key, value)?,
            "tau3" => c.tau3 = number(key, value)?,
            "lambda" => c.lambda1 = number(key, value)?,
            "gamma" => c.gamma = number(key, value)?,
            "rho" => c.rho = number(key, value)?,
            "levels" => c.levels = number(key, value)?,
            "max_iter" => c.max_iter = number(key, value)?,
            "eps_l" => c.eps_l = number(key, value)?,
            "eps_u" => c.eps_u = number(key, value)?,
            "variant" => {
                c.variant = PenaltyVariant::from_str(value).map_err(|e| ConfigError::new(key, e))?
            }
            "correction" => c.correction = boolean(key, value)?,
            "correction_eps" => c.correction_eps = number(key, value)?,
            "intensity_scale" => c.intensity_scale = number(key, value)?,
            "max_backtracks" => c.max_backtracks = number(key, value)?,
            "solver_tol" => c.solver_tol = number(key, value)?,
            "emit_grid" => self.emit.grid = boolean(key, value)?,
            "emit_hotmaps" => self.emit.hotmaps = boolean(key, value)?,
            "emit_trace" => self.emit.trace = boolean(key, value)?,
            "emit_metrics" => self.emit.metrics = boolean(key, value)?,
            other => return Err(ConfigError::new(other, "unknown configuration key")),
        }
        Ok(())
    }

    fn finish(self) -> Result<RunManifest, ConfigError> {
        self.config.validate()?;
        let input = match (self.reference, self.template, self.example) {
            (Some(reference), Some(template), None) => {
                if self.size.is_some() {
                    return Err(ConfigError::new(
                        "size",
                        "only applies to synthetic examples",
                    ));
                }
                InputSource::Files {
                    reference,
                    template,
                }
            }
            (None, None, Some(kind)) => {
                let size = self.size.unwrap_or(DEFAULT_EXAMPLE_SIZE);
                InputSource::Example(
                    ExampleSpec::square(kind, size)
                        .map_err(|e| ConfigError::new("size", e.to_string()))?,
                )
            }
            (None, None, None) => {
                return Err(ConfigError::new(
                    "input",
                    "give either --ref and --template or --example",
                ));
            }
            (_, _, Some(_)) => {
                return Err(ConfigError::new(
                    "input",
                    "--example cannot be combined with --ref/--template",
                ));
            }
            (r, _, None) => {
                let missing = if r.is_none() { "ref" } else { "template" };
                return Err(ConfigError::new(
                    missing,
                    "both --ref and --template are required",
                ));
            }
        };
        Ok(RunManifest {
            input,
            config: self.config,
            out_dir: self.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            emit: self.emit,
        })
    }
}

/// Builds a manifest from file pairs followed by flag pairs; later pairs
/// override earlier ones.
pub fn build_manifest<'a>(
    pairs: impl IntoIterator<Item = &'a (String, String)>,
) -> Result<RunManifest, ConfigError> {
    let mut b = Builder::default();
    for (k, v) in pairs {
        b.apply(k, v)?;
    }
    b.finish()
}

/// Reads an optional configuration file and applies `flags` on top.
pub fn parse_config(
    path: Option<&Path>,
    flags: &[(String, String)],
) -> Result<RunManifest, super::CliError> {
    let mut pairs = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| super::CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_pairs(&text)?
        }
        None => Vec::new(),
    };
    pairs.extend(flags.iter().cloned());
    Ok(build_manifest(&pairs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &str) -> Vec<(String, String)> {
        parse_pairs(s).unwrap()
    }

    #[test]
    fn empty_config_gives_defaults() {
        let m = build_manifest(&pairs("example = circle_square")).unwrap();
        assert_eq!(m.config, SolverConfig::default());
        assert_eq!(m.config.variant, PenaltyVariant::Phi1);
        assert_eq!(m.emit, EmitFlags::default());
        assert_eq!(
            m.input,
            InputSource::Example(ExampleSpec::square(ExampleKind::CircleSquare, 64).unwrap())
        );
    }

    #[test]
    fn rho_one_rejected() {
        let err = build_manifest(&pairs("example = disc_to_c\nrho = 1.0")).unwrap_err();
        assert_eq!(err.field, "rho");
    }

    #[test]
    fn variant_selected() {
        let m = build_manifest(&pairs("example=disc_to_c\nvariant = phi2 # comment")).unwrap();
        assert_eq!(m.config.variant, PenaltyVariant::Phi2);
    }

    #[test]
    fn unknown_and_malformed_keys_named() {
        assert_eq!(
            build_manifest(&pairs("example=disc_to_c\ntau4=1"))
                .unwrap_err()
                .field,
            "tau4"
        );
        assert_eq!(
            build_manifest(&pairs("example=disc_to_c\ngamma=abc"))
                .unwrap_err()
                .field,
            "gamma"
        );
        assert_eq!(
            build_manifest(&pairs("example=disc_to_c\nmax-iter=1.5"))
                .unwrap_err()
                .field,
            "max_iter"
        );
        assert!(parse_pairs("just words").is_err());
    }

    #[test]
    fn later_pairs_override() {
        let mut p = pairs("example=circle_square\nlambda=2\nsize=32");
        p.push(("lambda".into(), "0.5".into()));
        let m = build_manifest(&p).unwrap();
        assert_eq!(m.config.lambda1, 0.5);
        assert!(matches!(m.input, InputSource::Example(s) if s.m == 32));
    }

    #[test]
    fn input_combinations() {
        assert_eq!(build_manifest(&pairs("tau1=1")).unwrap_err().field, "input");
        assert_eq!(
            build_manifest(&pairs("ref=a.pgm")).unwrap_err().field,
            "template"
        );
        assert_eq!(
            build_manifest(&pairs("ref=a.pgm\ntemplate=b.pgm\nexample=disc_to_c"))
                .unwrap_err()
                .field,
            "input"
        );
        let m = build_manifest(&pairs("ref=a.pgm\ntemplate=b.pgm\nout=o")).unwrap();
        assert_eq!(m.out_dir, PathBuf::from("o"));
        assert_eq!(
            build_manifest(&pairs("example=disc_to_c\nsize=48"))
                .unwrap_err()
                .field,
            "size"
        );
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let values = |k: &str| match k {
            "ref" | "template" | "out" => "x",
            "example" => "disc_to_c",
            "variant" => "phi1",
            "correction" => "true",
            k if k.starts_with("emit_") => "true",
            "size" => "64",
            "levels" | "max_iter" | "max_backtracks" => "2",
            "rho" => "1.1",
            _ => "0.5",
        };
        let mut b = Builder::default();
        for k in KEYS {
            b.apply(k, values(k)).unwrap();
        }
    }
}
