//! Restriction and prolongation between a grid and its 2× refinement.

use thiserror::Error;

use crate::fields::{sample_bilinear, Deformation};
use crate::grid::{GridError, GridSpec, ScalarField, VectorField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("cannot restrict a {m}x{n} grid: both dimensions must be even")]
    OddDimensions { m: usize, n: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Two-grid transfer operators.
pub trait GridTransfer: Sized {
    /// 2×2 cell averaging onto the half-resolution grid.
    fn restrict(&self) -> Result<Self, TransferError>;
    /// Bilinear interpolation onto the double-resolution grid.
    fn prolong(&self) -> Result<Self, TransferError>;
}

impl GridTransfer for ScalarField {
    fn restrict(&self) -> Result<Self, TransferError> {
        let s = self.spec();
        if !s.m().is_multiple_of(2) || !s.n().is_multiple_of(2) {
            return Err(TransferError::OddDimensions { m: s.m(), n: s.n() });
        }
        let coarse = GridSpec::new(s.m() / 2, s.n() / 2)?;
        Ok(ScalarField::from_index_fn(coarse, |i, j| {
            let (a, b) = (2 * i, 2 * j);
            0.25 * (self.get(a, b)
                + self.get(a + 1, b)
                + self.get(a, b + 1)
                + self.get(a + 1, b + 1))
        }))
    }

    fn prolong(&self) -> Result<Self, TransferError> {
        let s = self.spec();
        let fine = GridSpec::new(2 * s.m(), 2 * s.n())?;
        Ok(ScalarField::from_fn(fine, |x, y| {
            sample_bilinear(self, x, y)
        }))
    }
}

impl GridTransfer for VectorField {
    fn restrict(&self) -> Result<Self, TransferError> {
        Ok(VectorField {
            comp1: self.comp1.restrict()?,
            comp2: self.comp2.restrict()?,
        })
    }

    fn prolong(&self) -> Result<Self, TransferError> {
        Ok(VectorField {
            comp1: self.comp1.prolong()?,
            comp2: self.comp2.prolong()?,
        })
    }
}

impl GridTransfer for Deformation {
    fn restrict(&self) -> Result<Self, TransferError> {
        Ok(Deformation {
            phi: self.phi.restrict()?,
        })
    }

    /// Interpolates the displacement and adds it to the fine cell centers,
    /// so that edge clamping never pulls boundary points inward.
    fn prolong(&self) -> Result<Self, TransferError> {
        Ok(Deformation::from_displacement(
            &self.displacement().prolong()?,
        ))
    }
}

/// Prolongs a relaxation field and re-pins its boundary to 1.
pub fn prolong_relaxation(f: &ScalarField) -> Result<ScalarField, TransferError> {
    let mut fine = f.prolong()?;
    fine.pin_boundary(1.0);
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::identity_deformation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants_survive_both_directions() {
        let s = GridSpec::new(8, 6).unwrap();
        let c = ScalarField::constant(s, 2.5);
        assert_eq!(
            c.restrict().unwrap(),
            ScalarField::constant(GridSpec::new(4, 3).unwrap(), 2.5)
        );
        assert_eq!(
            c.prolong().unwrap(),
            ScalarField::constant(GridSpec::new(16, 12).unwrap(), 2.5)
        );
        assert_eq!(c.prolong().unwrap().restrict().unwrap(), c);
    }

    #[test]
    fn odd_dimensions_rejected() {
        let s = GridSpec::new(7, 6).unwrap();
        assert_eq!(
            ScalarField::zeros(s).restrict(),
            Err(TransferError::OddDimensions { m: 7, n: 6 })
        );
    }

    #[test]
    fn linear_reproduced_in_interior() {
        let s = GridSpec::square(8).unwrap();
        let v = ScalarField::from_fn(s, |x, y| 2.0 * x - 0.5 * y + 0.25);
        let p = v.prolong().unwrap();
        let fs = p.spec();
        for (i, j) in fs.cells() {
            let (x, y) = (fs.x(i), fs.y(j));
            // fine centers outside the coarse-center hull are clamped
            if x >= s.x(0) && x <= s.x(s.m() - 1) && y >= s.y(0) && y <= s.y(s.n() - 1) {
                assert_abs_diff_eq!(p.get(i, j), 2.0 * x - 0.5 * y + 0.25, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_deformation_transfers_exactly() {
        let s = GridSpec::square(8).unwrap();
        let id = identity_deformation(s);
        let up = id.prolong().unwrap();
        let want = identity_deformation(GridSpec::square(16).unwrap());
        assert!(up.phi.sub(&want.phi).max_abs() < 1e-15);
        let down = id.restrict().unwrap();
        let want = identity_deformation(GridSpec::square(4).unwrap());
        assert!(down.phi.sub(&want.phi).max_abs() < 1e-15);
    }

    #[test]
    fn relaxation_boundary_is_pinned() {
        let s = GridSpec::square(4).unwrap();
        let f = ScalarField::constant(s, 0.7);
        let p = prolong_relaxation(&f).unwrap();
        let fs = p.spec();
        for (i, j) in fs.cells() {
            let want = if fs.is_boundary(i, j) { 1.0 } else { 0.7 };
            assert_abs_diff_eq!(p.get(i, j), want, epsilon = 1e-15);
        }
    }
}
