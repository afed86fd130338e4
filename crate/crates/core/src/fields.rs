//! Deformations and bilinear warping of images.

use crate::grid::{grad_central, GridError, GridSpec, ScalarField, VectorField};

/// A deformation `φ` stored as absolute coordinates in `[0,1]²` at each cell
/// center. The identity deformation maps each cell to its own center.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub phi: VectorField,
}

impl Deformation {
    pub fn identity(spec: GridSpec) -> Self {
        identity_deformation(spec)
    }

    pub fn from_field(phi: VectorField) -> Result<Self, GridError> {
        phi.check_finite()?;
        Ok(Self { phi })
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.phi.spec()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        self.phi.get(i, j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, p: (f64, f64)) {
        self.phi.set(i, j, p);
    }

    /// `φ + u`.
    pub fn displaced(&self, u: &VectorField) -> Self {
        Self {
            phi: self.phi.add(u),
        }
    }

    /// Displacement `φ(x) − x` relative to the cell centers.
    pub fn displacement(&self) -> VectorField {
        self.phi.sub(&identity_deformation(self.spec()).phi)
    }

    /// Builds `x + d(x)` from a displacement field.
    pub fn from_displacement(d: &VectorField) -> Self {
        identity_deformation(d.spec()).displaced(d)
    }

    /// Applies `f` to the coordinates of each cell center.
    pub fn from_map(spec: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            phi: VectorField::from_fn(spec, f),
        }
    }
}

pub fn identity_deformation(spec: GridSpec) -> Deformation {
    Deformation {
        phi: VectorField::from_fn(spec, |x, y| (x, y)),
    }
}

/// Bilinear sample of `v` at physical point `(x, y)`. Points outside the
/// hull of cell centers are clamped to the nearest boundary cell center.
#[inline]
pub fn sample_bilinear(v: &ScalarField, x: f64, y: f64) -> f64 {
    let spec = v.spec();
    let (fi, ti) = split_coordinate(x * spec.m() as f64 - 0.5, spec.m());
    let (fj, tj) = split_coordinate(y * spec.n() as f64 - 0.5, spec.n());
    let v00 = v.get(fi, fj);
    let v10 = v.get(fi + 1, fj);
    let v01 = v.get(fi, fj + 1);
    let v11 = v.get(fi + 1, fj + 1);
    let a = v00 + ti * (v10 - v00);
    let b = v01 + ti * (v11 - v01);
    a + tj * (b - a)
}

/// Clamps a continuous cell index to `[0, len-1]` and returns the lower
/// stencil index and the fractional weight.
#[inline]
fn split_coordinate(p: f64, len: usize) -> (usize, f64) {
    let hi = (len - 1) as f64;
    let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, hi) };
    // lattice points read their cell exactly despite rounding in x·m − ½
    let r = p.round();
    let p = if (p - r).abs() < 1e-10 { r } else { p };
    let base = (p.floor() as usize).min(len - 2);
    (base, p - base as f64)
}

/// `T ∘ φ`: the template sampled at every deformed cell center.
pub fn warp(t: &ScalarField, phi: &Deformation) -> ScalarField {
    let spec = phi.spec();
    ScalarField::from_index_fn(spec, |i, j| {
        let (x, y) = phi.get(i, j);
        sample_bilinear(t, x, y)
    })
}

/// `(∇T) ∘ φ`: the grid gradient of `T` sampled at the deformed points.
pub fn warped_gradient(t: &ScalarField, phi: &Deformation) -> VectorField {
    let g = grad_central(t);
    sample_vector(&g, phi)
}

pub(crate) fn sample_vector(g: &VectorField, phi: &Deformation) -> VectorField {
    VectorField {
        comp1: warp(&g.comp1, phi),
        comp2: warp(&g.comp2, phi),
    }
}
