//! Jacobian determinant, signed triangle-area ratios and local grid-folding
//! correction.
//!
//! Around an interior cell center `o = φ(i, j)` the four axis neighbors
//! `E = φ(i+1, j)`, `N = φ(i, j+1)`, `W = φ(i-1, j)` and `S = φ(i, j-1)` span
//! four triangles `oEN`, `oNW`, `oWS`, `oSE`. Each ratio is the signed area
//! of one triangle divided by the cell area `h_x h_y`; on the identity
//! lattice every ratio is `1/2`, and half their sum is exactly the
//! central-difference Jacobian determinant at `o`.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::fields::Deformation;
use crate::grid::{grad_central, GridSpec, ScalarField};

/// Default threshold `ε` of the correction step.
pub const DEFAULT_CORRECTION_EPS: f64 = 1e-2;
/// Maximum number of correction sweeps before giving up.
pub const MAX_CORRECTION_SWEEPS: usize = 50;
/// Maximum halvings of the pull-back toward a key point's old position.
const MAX_BISECTIONS: usize = 20;

#[derive(Debug, Error)]
pub enum JacobianError {
    #[error("cell ({i}, {j}) has no full 4-neighborhood on a {m}x{n} grid")]
    OutOfNeighborhood {
        i: usize,
        j: usize,
        m: usize,
        n: usize,
    },
    #[error(
        "correction did not reach R_min >= {eps} after {sweeps} sweeps (best R_min = {r_min})"
    )]
    CorrectionFailed {
        eps: f64,
        sweeps: usize,
        r_min: f64,
        best: Box<Deformation>,
    },
    #[error("correction threshold must be positive, got {0}")]
    InvalidThreshold(f64),
}

/// Per-cell folding diagnostics.
#[derive(Debug, Clone)]
pub struct FoldingReport {
    /// Minimum triangle ratio per cell; `+∞` on boundary cells.
    pub indicator: ScalarField,
    /// Interior cells with indicator below the threshold.
    pub flagged: Vec<(usize, usize)>,
    /// Interior points that belong to the five-point stencil of a flagged cell.
    pub candidates: Vec<(usize, usize)>,
    pub r_min: f64,
    /// Fraction of all cells whose indicator is negative.
    pub gfr: f64,
    pub threshold: f64,
}

impl FoldingReport {
    pub fn is_folded(&self) -> bool {
        self.gfr > 0.0
    }
}

/// Result of [`correct_deformation`].
#[derive(Debug, Clone)]
pub struct Correction {
    pub phi: Deformation,
    pub r_min: f64,
    /// Points that were relocated, in processing order.
    pub moved: Vec<(usize, usize)>,
    pub sweeps: usize,
}

#[inline]
fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

#[inline]
fn rel(p: (f64, f64), o: (f64, f64)) -> (f64, f64) {
    (p.0 - o.0, p.1 - o.1)
}

/// Ratios at an interior cell with the center moved to `o`.
#[inline]
fn ratios_with_center(phi: &Deformation, i: usize, j: usize, o: (f64, f64)) -> [f64; 4] {
    let spec = phi.spec();
    let scale = 1.0 / (2.0 * spec.cell_area());
    let e = rel(phi.get(i + 1, j), o);
    let nn = rel(phi.get(i, j + 1), o);
    let w = rel(phi.get(i - 1, j), o);
    let s = rel(phi.get(i, j - 1), o);
    [
        cross(e, nn) * scale,
        cross(nn, w) * scale,
        cross(w, s) * scale,
        cross(s, e) * scale,
    ]
}

#[inline]
fn cell_ratios(phi: &Deformation, i: usize, j: usize) -> [f64; 4] {
    ratios_with_center(phi, i, j, phi.get(i, j))
}

#[inline]
fn min4(r: [f64; 4]) -> f64 {
    r[0].min(r[1]).min(r[2]).min(r[3])
}

/// The four signed triangle-area ratios `(oEN, oNW, oWS, oSE)` at an
/// interior cell.
pub fn triangle_ratios(phi: &Deformation, i: usize, j: usize) -> Result<[f64; 4], JacobianError> {
    let spec = phi.spec();
    if i == 0 || j == 0 || i + 1 >= spec.m() || j + 1 >= spec.n() {
        return Err(JacobianError::OutOfNeighborhood {
            i,
            j,
            m: spec.m(),
            n: spec.n(),
        });
    }
    Ok(cell_ratios(phi, i, j))
}

/// Cell-centered Jacobian determinant: central differences inside,
/// one-sided differences on the outermost cells.
pub fn jacobian_det(phi: &Deformation) -> ScalarField {
    let g1 = grad_central(&phi.phi.comp1);
    let g2 = grad_central(&phi.phi.comp2);
    let spec = phi.spec();
    ScalarField::from_index_fn(spec, |i, j| {
        g1.comp1.get(i, j) * g2.comp2.get(i, j) - g1.comp2.get(i, j) * g2.comp1.get(i, j)
    })
}

/// Minimum triangle ratio per cell (boundary cells are `+∞`).
pub fn indicator_field(phi: &Deformation) -> ScalarField {
    let spec = phi.spec();
    ScalarField::from_index_fn(spec, |i, j| {
        if spec.is_boundary(i, j) {
            f64::INFINITY
        } else {
            min4(cell_ratios(phi, i, j))
        }
    })
}

/// Folding report with the default threshold.
pub fn folding_indicator(phi: &Deformation) -> FoldingReport {
    folding_indicator_with_threshold(phi, DEFAULT_CORRECTION_EPS)
}

pub fn folding_indicator_with_threshold(phi: &Deformation, eps: f64) -> FoldingReport {
    let indicator = indicator_field(phi);
    report_from_indicator(indicator, eps)
}

fn report_from_indicator(indicator: ScalarField, eps: f64) -> FoldingReport {
    let spec = indicator.spec();
    let mut flagged = Vec::new();
    let mut negative = 0usize;
    for (i, j) in spec.interior_cells() {
        let r = indicator.get(i, j);
        if r < eps {
            flagged.push((i, j));
        }
        if r < 0.0 {
            negative += 1;
        }
    }
    let candidates = candidate_points(spec, &flagged).into_iter().collect();
    FoldingReport {
        r_min: indicator.min(),
        gfr: negative as f64 / spec.len() as f64,
        indicator,
        flagged,
        candidates,
        threshold: eps,
    }
}

/// Five-point stencils of the flagged cells, restricted to interior points.
fn candidate_points(spec: GridSpec, flagged: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &(i, j) in flagged {
        for p in [(i, j), (i - 1, j), (i, j - 1), (i + 1, j), (i, j + 1)] {
            if !spec.is_boundary(p.0, p.1) {
                out.insert(p);
            }
        }
    }
    out
}

/// Number of distinct edges incident to `p` among triangles with a
/// negative ratio.
pub fn folding_degree(phi: &Deformation, p: (usize, usize)) -> usize {
    let edges = negative_edges(phi);
    degree_from_edges(phi.spec(), &edges, p)
}

type Edge = (usize, usize);

fn negative_edges(phi: &Deformation) -> HashSet<Edge> {
    let spec = phi.spec();
    let mut edges = HashSet::new();
    for (i, j) in spec.interior_cells() {
        let r = cell_ratios(phi, i, j);
        if min4(r) >= 0.0 {
            continue;
        }
        let o = spec.index(i, j);
        let e = spec.index(i + 1, j);
        let n = spec.index(i, j + 1);
        let w = spec.index(i - 1, j);
        let s = spec.index(i, j - 1);
        let tris = [(e, n), (n, w), (w, s), (s, e)];
        for (k, &(a, b)) in tris.iter().enumerate() {
            if r[k] < 0.0 {
                for (p, q) in [(o, a), (o, b), (a, b)] {
                    edges.insert((p.min(q), p.max(q)));
                }
            }
        }
    }
    edges
}

fn degree_from_edges(spec: GridSpec, edges: &HashSet<Edge>, p: (usize, usize)) -> usize {
    let k = spec.index(p.0, p.1);
    edges.iter().filter(|&&(a, b)| a == k || b == k).count()
}

/// The (up to) five interior cells whose indicator depends on point `p`.
fn affected_cells(spec: GridSpec, p: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let (i, j) = p;
    [
        Some((i, j)),
        i.checked_sub(1).map(|a| (a, j)),
        j.checked_sub(1).map(|b| (i, b)),
        Some((i + 1, j)),
        Some((i, j + 1)),
    ]
    .into_iter()
    .flatten()
    .filter(move |&(a, b)| a < spec.m() && b < spec.n() && !spec.is_boundary(a, b))
}

fn local_min(phi: &Deformation, p: (usize, usize)) -> f64 {
    affected_cells(phi.spec(), p)
        .map(|(a, b)| min4(cell_ratios(phi, a, b)))
        .fold(f64::INFINITY, f64::min)
}

/// Local indicator minimum with point `p` moved to `pos`.
fn local_min_at(phi: &mut Deformation, p: (usize, usize), pos: (f64, f64)) -> f64 {
    let old = phi.get(p.0, p.1);
    phi.set(p.0, p.1, pos);
    let v = local_min(phi, p);
    phi.set(p.0, p.1, old);
    v
}

/// Moves key point `p` toward the centroid of its four neighbors, keeping
/// it as close to its old position as the threshold allows. Returns whether
/// the point was moved.
fn relocate(phi: &mut Deformation, p: (usize, usize), eps: f64) -> bool {
    let (i, j) = p;
    let old = phi.get(i, j);
    let nb = [
        phi.get(i + 1, j),
        phi.get(i - 1, j),
        phi.get(i, j + 1),
        phi.get(i, j - 1),
    ];
    let target = (
        nb.iter().map(|q| q.0).sum::<f64>() / 4.0,
        nb.iter().map(|q| q.1).sum::<f64>() / 4.0,
    );
    let lerp = |t: f64| {
        (
            old.0 + t * (target.0 - old.0),
            old.1 + t * (target.1 - old.1),
        )
    };

    let at_target = local_min_at(phi, p, target);
    if at_target >= eps {
        // smallest pull toward the centroid that clears the threshold
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if local_min_at(phi, p, lerp(mid)) >= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        phi.set(i, j, lerp(hi));
        true
    } else if target != old {
        // no admissible spot yet; smoothing lets the neighbors catch up
        phi.set(i, j, target);
        true
    } else {
        false
    }
}

/// Local untangling of grid folds.
///
/// Flags interior cells whose indicator is below `eps`, collects the
/// interior points of their five-point stencils, and relocates those points
/// one at a time in decreasing folding degree (ties by `(i, j)`), re-deriving
/// the candidate set after every move. Each point is relocated at most once
/// per sweep. An already valid deformation is returned unchanged.
pub fn correct_deformation(phi: &Deformation, eps: f64) -> Result<Correction, JacobianError> {
    if !(eps > 0.0) {
        return Err(JacobianError::InvalidThreshold(eps));
    }
    let spec = phi.spec();
    let mut cur = phi.clone();
    let mut indicator = indicator_field(&cur);
    let mut moved = Vec::new();
    let mut best = (indicator.min(), cur.clone());

    for sweep in 0..MAX_CORRECTION_SWEEPS {
        let r_min = indicator.min();
        if r_min >= eps {
            return Ok(Correction {
                phi: cur,
                r_min,
                moved,
                sweeps: sweep,
            });
        }
        let mut visited: HashSet<(usize, usize)> = HashSet::new();
        loop {
            let flagged: Vec<_> = spec
                .interior_cells()
                .filter(|&(a, b)| indicator.get(a, b) < eps)
                .collect();
            let pending: Vec<_> = candidate_points(spec, &flagged)
                .into_iter()
                .filter(|p| !visited.contains(p))
                .collect();
            if pending.is_empty() {
                break;
            }
            let edges = negative_edges(&cur);
            // highest degree; ties go to the smallest (i, j)
            let key = pending
                .iter()
                .copied()
                .max_by(|a, b| {
                    let da = degree_from_edges(spec, &edges, *a);
                    let db = degree_from_edges(spec, &edges, *b);
                    da.cmp(&db).then(b.cmp(a))
                })
                .expect("pending is non-empty");
            visited.insert(key);
            if relocate(&mut cur, key, eps) {
                moved.push(key);
                for (a, b) in affected_cells(spec, key) {
                    indicator.set(a, b, min4(cell_ratios(&cur, a, b)));
                }
            }
        }
        let r_min = indicator.min();
        if r_min > best.0 {
            best = (r_min, cur.clone());
        }
    }
    let r_min = indicator.min();
    if r_min >= eps {
        return Ok(Correction {
            phi: cur,
            r_min,
            moved,
            sweeps: MAX_CORRECTION_SWEEPS,
        });
    }
    Err(JacobianError::CorrectionFailed {
        eps,
        sweeps: MAX_CORRECTION_SWEEPS,
        r_min: best.0,
        best: Box::new(best.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::identity_deformation;
    use approx::assert_abs_diff_eq;

    fn swap_with_right(phi: &mut Deformation, i: usize, j: usize) {
        let a = phi.get(i, j);
        let b = phi.get(i + 1, j);
        phi.set(i, j, b);
        phi.set(i + 1, j, a);
    }

    #[test]
    fn identity_ratios_are_half() {
        let s = GridSpec::new(6, 9).unwrap();
        let id = identity_deformation(s);
        for (i, j) in s.interior_cells() {
            for r in triangle_ratios(&id, i, j).unwrap() {
                assert_abs_diff_eq!(r, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn boundary_cells_have_no_ratios() {
        let s = GridSpec::square(5).unwrap();
        let id = identity_deformation(s);
        assert!(matches!(
            triangle_ratios(&id, 0, 2),
            Err(JacobianError::OutOfNeighborhood { .. })
        ));
        assert!(triangle_ratios(&id, 2, 4).is_err());
    }

    #[test]
    fn dilation_scales_ratios() {
        let s = GridSpec::square(8).unwrap();
        let phi = Deformation::from_map(s, |x, y| (2.0 * x, 2.0 * y));
        for r in triangle_ratios(&phi, 3, 4).unwrap() {
            assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reflected_neighbor_flips_orientation() {
        let s = GridSpec::square(6).unwrap();
        let mut phi = identity_deformation(s);
        let (ox, oy) = phi.get(2, 2);
        let (ex, ey) = phi.get(3, 2);
        phi.set(3, 2, (2.0 * ox - ex, 2.0 * oy - ey));
        assert!(triangle_ratios(&phi, 2, 2)
            .unwrap()
            .iter()
            .any(|&r| r < 0.0));
    }

    #[test]
    fn det_of_linear_maps() {
        let s = GridSpec::square(10).unwrap();
        assert!(jacobian_det(&identity_deformation(s))
            .values()
            .iter()
            .all(|&d| (d - 1.0).abs() < 1e-12));
        let det = jacobian_det(&Deformation::from_map(s, |x, y| (2.0 * x, 3.0 * y)));
        for (i, j) in s.interior_cells() {
            assert_abs_diff_eq!(det.get(i, j), 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_report() {
        let s = GridSpec::square(8).unwrap();
        let rep = folding_indicator(&identity_deformation(s));
        assert_abs_diff_eq!(rep.r_min, 0.5, epsilon = 1e-12);
        assert!(rep.flagged.is_empty());
        assert!(rep.candidates.is_empty());
        assert_eq!(rep.gfr, 0.0);
        assert_eq!(rep.indicator.get(0, 3), f64::INFINITY);
    }

    #[test]
    fn swapped_vertex_is_detected() {
        let s = GridSpec::square(8).unwrap();
        let mut phi = identity_deformation(s);
        swap_with_right(&mut phi, 3, 3);
        let rep = folding_indicator(&phi);
        assert!(rep.gfr > 0.0);
        assert!(rep.r_min < 0.0);
        assert!(rep.candidates.iter().all(|&(i, j)| !s.is_boundary(i, j)));
        let stretched = folding_indicator(&Deformation::from_map(s, |x, y| (2.0 * x, 3.0 * y)));
        assert_eq!(stretched.gfr, 0.0);
    }

    #[test]
    fn degree_counts_distinct_edges() {
        let s = GridSpec::square(7).unwrap();
        let mut phi = identity_deformation(s);
        let (x, y) = phi.get(3, 3);
        // push the center past its east neighbor: all four triangles at (3,3)
        // stay consistent except those touching E
        phi.set(3, 3, (x + 1.5 * s.hx(), y));
        let edges = negative_edges(&phi);
        assert!(!edges.is_empty());
        let d_center = degree_from_edges(s, &edges, (3, 3));
        let d_far = degree_from_edges(s, &edges, (1, 1));
        assert!(d_center > 0);
        assert_eq!(d_far, 0);
        assert_eq!(folding_degree(&phi, (3, 3)), d_center);
    }

    #[test]
    fn valid_deformation_is_untouched() {
        let s = GridSpec::square(9).unwrap();
        let phi = Deformation::from_map(s, |x, y| (x + 0.01 * (3.0 * y).sin(), y));
        let out = correct_deformation(&phi, 1e-2).unwrap();
        assert_eq!(out.phi, phi);
        assert!(out.moved.is_empty());
        let id = identity_deformation(s);
        assert_eq!(correct_deformation(&id, 1e-2).unwrap().phi, id);
    }

    #[test]
    fn single_twist_is_repaired() {
        let s = GridSpec::square(16).unwrap();
        let mut phi = identity_deformation(s);
        swap_with_right(&mut phi, 7, 8);
        let before = folding_indicator(&phi);
        let out = correct_deformation(&phi, 1e-2).unwrap();
        let after = folding_indicator(&out.phi);
        assert!(after.r_min >= 1e-2, "r_min = {}", after.r_min);
        assert_eq!(after.gfr, 0.0);
        let allowed: BTreeSet<_> = before.candidates.iter().copied().collect();
        for (i, j) in s.cells() {
            if out.phi.get(i, j) != phi.get(i, j) {
                assert!(out.moved.contains(&(i, j)));
            }
        }
        // first relocation is always drawn from the initial candidate set
        assert!(allowed.contains(&out.moved[0]));
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let s = GridSpec::square(4).unwrap();
        assert!(matches!(
            correct_deformation(&identity_deformation(s), 0.0),
            Err(JacobianError::InvalidThreshold(_))
        ));
    }
}
