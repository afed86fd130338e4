//! Deterministic synthetic template/reference pairs.
//!
//! Shapes are rasterized at cell centers with a cosine ramp reaching two
//! cells to either side of the edge, intensity 255 inside and 0 outside.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridSpec, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("example size {0} must be a power of two and at least 32")]
    BadSize(usize),
    #[error("unknown example `{0}` (expected circle_square, disc_to_c, big_small_circle or translated_blob)")]
    UnknownExample(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    /// Disc template, square reference of equal area.
    CircleSquare,
    /// Disc template, C-shaped reference (annulus with a gap on the right).
    DiscToC,
    /// Concentric discs with radius ratio 2.5.
    BigSmallCircle,
    /// Gaussian blob shifted right by a tenth of the domain.
    TranslatedBlob,
}

impl ExampleKind {
    pub const ALL: [ExampleKind; 4] = [
        ExampleKind::CircleSquare,
        ExampleKind::DiscToC,
        ExampleKind::BigSmallCircle,
        ExampleKind::TranslatedBlob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleKind::CircleSquare => "circle_square",
            ExampleKind::DiscToC => "disc_to_c",
            ExampleKind::BigSmallCircle => "big_small_circle",
            ExampleKind::TranslatedBlob => "translated_blob",
        }
    }
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleKind {
    type Err = SynthError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExampleKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| SynthError::UnknownExample(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    pub m: usize,
    pub n: usize,
}

impl ExampleSpec {
    pub fn new(kind: ExampleKind, m: usize, n: usize) -> Result<Self, SynthError> {
        for s in [m, n] {
            if s < 32 || !s.is_power_of_two() {
                return Err(SynthError::BadSize(s));
            }
        }
        Ok(Self { kind, m, n })
    }

    pub fn square(kind: ExampleKind, size: usize) -> Result<Self, SynthError> {
        Self::new(kind, size, size)
    }
}

/// Blob center offset between template and reference.
pub const BLOB_SHIFT: f64 = 0.1;
const BLOB_SIGMA: f64 = 0.1;
const DISC_RADIUS: f64 = 0.25;
const BIG_RADIUS: f64 = 0.3;
const SMALL_RADIUS: f64 = 0.12;
const C_OUTER: f64 = 0.3;
const C_INNER: f64 = 0.15;
const C_GAP_HALF: f64 = 0.08;

/// `1` well inside (`d < −w/2`), `0` well outside, cosine blend in between.
fn ramp(d: f64, width: f64) -> f64 {
    let t = (d / width + 0.5).clamp(0.0, 1.0);
    0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

fn raster(spec: GridSpec, sdf: impl Fn(f64, f64) -> f64) -> ScalarField {
    let width = 4.0 * spec.hx().max(spec.hy());
    ScalarField::from_fn(spec, |x, y| 255.0 * ramp(sdf(x, y), width))
}

fn disc(r: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| (x - 0.5).hypot(y - 0.5) - r
}

fn c_shape(x: f64, y: f64) -> f64 {
    let rr = (x - 0.5).hypot(y - 0.5);
    let ring = (rr - C_OUTER).max(C_INNER - rr);
    if x > 0.5 {
        ring.max(C_GAP_HALF - (y - 0.5).abs())
    } else {
        ring
    }
}

fn gaussian(cx: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        255.0 * (-((x - cx).powi(2) + (y - 0.5).powi(2)) / (2.0 * BLOB_SIGMA * BLOB_SIGMA)).exp()
    }
}

/// Template and reference images for `spec`.
pub fn generate(spec: ExampleSpec) -> Result<(ScalarField, ScalarField), SynthError> {
    let g = GridSpec::new(spec.m, spec.n)?;
    Ok(match spec.kind {
        ExampleKind::CircleSquare => {
            let half = std::f64::consts::PI.sqrt() * DISC_RADIUS / 2.0;
            let t = raster(g, disc(DISC_RADIUS));
            let r = raster(g, |x, y| (x - 0.5).abs().max((y - 0.5).abs()) - half);
            (t, r)
        }
        ExampleKind::DiscToC => (raster(g, disc(C_OUTER)), raster(g, c_shape)),
        ExampleKind::BigSmallCircle => (raster(g, disc(BIG_RADIUS)), raster(g, disc(SMALL_RADIUS))),
        ExampleKind::TranslatedBlob => {
            let c = 0.5 - BLOB_SHIFT / 2.0;
            (
                ScalarField::from_fn(g, gaussian(c)),
                ScalarField::from_fn(g, gaussian(c + BLOB_SHIFT)),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{warp, Deformation};

    fn max_jump(v: &ScalarField) -> f64 {
        let s = v.spec();
        let mut worst: f64 = 0.0;
        for (i, j) in s.cells() {
            if i + 1 < s.m() {
                worst = worst.max((v.get(i + 1, j) - v.get(i, j)).abs());
            }
            if j + 1 < s.n() {
                worst = worst.max((v.get(i, j + 1) - v.get(i, j)).abs());
            }
        }
        worst
    }

    #[test]
    fn sizes_validated() {
        assert_eq!(
            ExampleSpec::square(ExampleKind::CircleSquare, 48),
            Err(SynthError::BadSize(48))
        );
        assert_eq!(
            ExampleSpec::square(ExampleKind::CircleSquare, 16),
            Err(SynthError::BadSize(16))
        );
        assert!(ExampleSpec::new(ExampleKind::DiscToC, 64, 32).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for k in ExampleKind::ALL {
            assert_eq!(k.name().parse::<ExampleKind>().unwrap(), k);
        }
        assert!("square_circle".parse::<ExampleKind>().is_err());
    }

    #[test]
    fn range_determinism_and_smoothness() {
        for k in ExampleKind::ALL {
            let spec = ExampleSpec::square(k, 64).unwrap();
            let (t, r) = generate(spec).unwrap();
            let (t2, r2) = generate(spec).unwrap();
            assert_eq!(t, t2);
            assert_eq!(r, r2);
            for v in [&t, &r] {
                assert!(v.min() >= 0.0 && v.max() <= 255.0);
                assert!(max_jump(v) < 127.5, "{k}: jump {}", max_jump(v));
            }
        }
    }

    #[test]
    fn circle_square_equal_area() {
        let (t, r) = generate(ExampleSpec::square(ExampleKind::CircleSquare, 64).unwrap()).unwrap();
        let at = t.sum() / 255.0;
        let ar = r.sum() / 255.0;
        assert!((at - ar).abs() / ar <= 0.02, "{at} vs {ar}");
    }

    #[test]
    fn blob_is_a_translation() {
        let spec = ExampleSpec::square(ExampleKind::TranslatedBlob, 64).unwrap();
        let (t, r) = generate(spec).unwrap();
        let shift = Deformation::from_map(t.spec(), |x, y| (x - BLOB_SHIFT, y));
        let w = warp(&t, &shift);
        let s = t.spec();
        let guard = (BLOB_SHIFT * s.m() as f64).ceil() as usize + 1;
        for (i, j) in s.interior_cells() {
            if i > guard {
                assert!((w.get(i, j) - r.get(i, j)).abs() <= 1.0);
            }
        }
    }
}
