//! Cell-centered discretization of the unit square and the finite-difference
//! operators shared by every other module.
//!
//! A grid with `m × n` cells covers `[0,1]²` with spacings `h_x = 1/m` and
//! `h_y = 1/n`. Cell `(i, j)` (0-based, `i` along x) has its center at
//! `((i + 1/2) h_x, (j + 1/2) h_y)`. Values are stored row-major in `j`, so
//! the flat index of `(i, j)` is `j * m + i`; this is also the order used by
//! every file format the crate writes.

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid {m}x{n} is too small; at least 3x3 cells are required")]
    TooSmall { m: usize, n: usize },
    #[error("value buffer has {got} entries, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid mismatch: {left:?} vs {right:?}")]
    SpecMismatch { left: GridSpec, right: GridSpec },
    #[error("non-finite value at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize },
}

/// Shape of a cell-centered grid on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    m: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(m: usize, n: usize) -> Result<Self, GridError> {
        if m < 3 || n < 3 {
            return Err(GridError::TooSmall { m, n });
        }
        Ok(Self { m, n })
    }

    /// Square grid with `size × size` cells.
    pub fn square(size: usize) -> Result<Self, GridError> {
        Self::new(size, size)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Area of one cell, the midpoint-rule quadrature weight.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.m && j < self.n);
        j * self.m + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy()
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.m || j + 1 == self.n
    }

    /// Grid with the x and y axes swapped.
    pub fn transposed(&self) -> Self {
        Self {
            m: self.n,
            n: self.m,
        }
    }

    /// Iterator over all `(i, j)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> {
        let (m, n) = (self.m, self.n);
        (0..n).flat_map(move |j| (0..m).map(move |i| (i, j)))
    }

    /// Iterator over interior `(i, j)` (all four axis neighbors exist).
    pub fn interior_cells(&self) -> impl Iterator<Item = (usize, usize)> {
        let (m, n) = (self.m, self.n);
        (1..n - 1).flat_map(move |j| (1..m - 1).map(move |i| (i, j)))
    }
}

/// Real values on the cells of a grid (images, `f`, determinant maps).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_vec(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::LengthMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = spec.cells().map(|(i, j)| f(spec.x(i), spec.y(j))).collect();
        Self { spec, values }
    }

    /// Builds a field from a function of the cell index.
    pub fn from_index_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = spec.cells().map(|(i, j)| f(i, j)).collect();
        Self { spec, values }
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.spec.index(i, j);
        self.values[k] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two fields on the same grid cell by cell.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.spec, other.spec, "grid mismatch in zip_map");
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Euclidean norm of the value vector (no quadrature weight).
    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Midpoint-rule integral over the unit square.
    pub fn integral(&self) -> f64 {
        self.sum() * self.spec.cell_area()
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(GridError::NonFinite {
                i: k % self.spec.m,
                j: k / self.spec.m,
            }),
        }
    }

    /// Sets every boundary cell to `value`.
    pub fn pin_boundary(&mut self, value: f64) {
        let spec = self.spec;
        for (i, j) in spec.cells() {
            if spec.is_boundary(i, j) {
                self.set(i, j, value);
            }
        }
    }

    /// Field with x and y swapped: `out(j, i) = self(i, j)`.
    pub fn transposed(&self) -> Self {
        let t = self.spec.transposed();
        Self::from_index_fn(t, |i, j| self.get(j, i))
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<(), GridError> {
        same_grid(self.spec, other.spec)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

pub(crate) fn same_grid(left: GridSpec, right: GridSpec) -> Result<(), GridError> {
    if left == right {
        Ok(())
    } else {
        Err(GridError::SpecMismatch { left, right })
    }
}

/// Two-component vector field on a grid (displacements, coordinates, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comp1: ScalarField,
    pub comp2: ScalarField,
}

impl VectorField {
    pub fn new(comp1: ScalarField, comp2: ScalarField) -> Result<Self, GridError> {
        comp1.ensure_same_grid(&comp2)?;
        Ok(Self { comp1, comp2 })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            comp1: ScalarField::zeros(spec),
            comp2: ScalarField::zeros(spec),
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            comp1: ScalarField::from_fn(spec, |x, y| f(x, y).0),
            comp2: ScalarField::from_fn(spec, |x, y| f(x, y).1),
        }
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.comp1.spec()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        (self.comp1.get(i, j), self.comp2.get(i, j))
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: (f64, f64)) {
        self.comp1.set(i, j, v.0);
        self.comp2.set(i, j, v.1);
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            comp1: &self.comp1 + &other.comp1,
            comp2: &self.comp2 + &other.comp2,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            comp1: &self.comp1 - &other.comp1,
            comp2: &self.comp2 - &other.comp2,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            comp1: self.comp1.scale(s),
            comp2: self.comp2.scale(s),
        }
    }

    /// Sum of squared entries of both components.
    pub fn norm2_squared(&self) -> f64 {
        let a = self.comp1.norm2();
        let b = self.comp2.norm2();
        a * a + b * b
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_squared().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comp1.max_abs().max(self.comp2.max_abs())
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        self.comp1.check_finite()?;
        self.comp2.check_finite()
    }

    /// Swaps the axes: components are exchanged as well as cell indices.
    pub fn transposed(&self) -> Self {
        Self {
            comp1: self.comp2.transposed(),
            comp2: self.comp1.transposed(),
        }
    }
}

/// Central-difference gradient; the outermost cells use one-sided
/// first-order differences.
pub fn grad_central(v: &ScalarField) -> VectorField {
    let spec = v.spec();
    let (m, n) = (spec.m(), spec.n());
    let (hx, hy) = (spec.hx(), spec.hy());
    let mut dx = ScalarField::zeros(spec);
    let mut dy = ScalarField::zeros(spec);
    for j in 0..n {
        for i in 0..m {
            let gx = if i == 0 {
                (v.get(1, j) - v.get(0, j)) / hx
            } else if i == m - 1 {
                (v.get(m - 1, j) - v.get(m - 2, j)) / hx
            } else {
                (v.get(i + 1, j) - v.get(i - 1, j)) / (2.0 * hx)
            };
            let gy = if j == 0 {
                (v.get(i, 1) - v.get(i, 0)) / hy
            } else if j == n - 1 {
                (v.get(i, n - 1) - v.get(i, n - 2)) / hy
            } else {
                (v.get(i, j + 1) - v.get(i, j - 1)) / (2.0 * hy)
            };
            dx.set(i, j, gx);
            dy.set(i, j, gy);
        }
    }
    VectorField {
        comp1: dx,
        comp2: dy,
    }
}

/// Five-point Laplacian on interior cells.
///
/// Boundary cells are returned as zero: on the Dirichlet problems of this
/// crate they are fixed data, and the solver folds them into its stencil.
pub fn laplacian(v: &ScalarField) -> ScalarField {
    let spec = v.spec();
    let ihx2 = 1.0 / (spec.hx() * spec.hx());
    let ihy2 = 1.0 / (spec.hy() * spec.hy());
    let mut out = ScalarField::zeros(spec);
    for (i, j) in spec.interior_cells() {
        let c = v.get(i, j);
        let lx = (v.get(i - 1, j) - 2.0 * c + v.get(i + 1, j)) * ihx2;
        let ly = (v.get(i, j - 1) - 2.0 * c + v.get(i, j + 1)) * ihy2;
        out.set(i, j, lx + ly);
    }
    out
}

/// Componentwise [`laplacian`].
pub fn vector_laplacian(u: &VectorField) -> VectorField {
    VectorField {
        comp1: laplacian(&u.comp1),
        comp2: laplacian(&u.comp2),
    }
}
