//! Control functions, the penalized objective and the right-hand sides of
//! the two linearized subproblems.
//!
//! Every integral is approximated by the midpoint rule over cell centers and
//! every derivative by [`grad_central`]. Images enter in whatever intensity
//! scale the caller uses; the registration driver works on `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fields::{warp, warped_gradient, Deformation};
use crate::grid::{grad_central, ScalarField, VectorField};
use crate::jacobian::jacobian_det;

/// Lower clamp applied to `f` before evaluating `dφ`.
pub const F_FLOOR: f64 = 1e-3;

/// Choice of control function for the relaxation field `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyVariant {
    /// `(f − 1)² / f`
    #[default]
    Phi1,
    /// `(f − 1) log f`
    Phi2,
}

impl fmt::Display for PenaltyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyVariant::Phi1 => f.write_str("phi1"),
            PenaltyVariant::Phi2 => f.write_str("phi2"),
        }
    }
}

impl FromStr for PenaltyVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi1" | "1" => Ok(PenaltyVariant::Phi1),
            "phi2" | "2" => Ok(PenaltyVariant::Phi2),
            other => Err(format!(
                "unknown penalty variant `{other}` (expected phi1 or phi2)"
            )),
        }
    }
}

/// Control function value; `+∞` for `f ≤ 0`.
pub fn phi(f: f64, variant: PenaltyVariant) -> f64 {
    if !(f > 0.0) {
        return f64::INFINITY;
    }
    match variant {
        PenaltyVariant::Phi1 => (f - 1.0) * (f - 1.0) / f,
        PenaltyVariant::Phi2 => (f - 1.0) * f.ln(),
    }
}

/// Derivative of the control function, evaluated at `max(f, F_FLOOR)`.
pub fn dphi(f: f64, variant: PenaltyVariant) -> f64 {
    let f = if f >= F_FLOOR { f } else { F_FLOOR };
    match variant {
        PenaltyVariant::Phi1 => 1.0 - 1.0 / (f * f),
        PenaltyVariant::Phi2 => f.ln() + 1.0 - 1.0 / f,
    }
}

/// Weights of the objective at one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub gamma: f64,
    /// Current penalty weight `λᵏ`.
    pub lambda: f64,
    pub variant: PenaltyVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub data: f64,
    pub reg_u: f64,
    pub reg_phi: f64,
    pub reg_f: f64,
    pub constraint: f64,
    pub proximal: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(
        data: f64,
        reg_u: f64,
        reg_phi: f64,
        reg_f: f64,
        constraint: f64,
        proximal: f64,
    ) -> Self {
        Self {
            data,
            reg_u,
            reg_phi,
            reg_f,
            constraint,
            proximal,
            total: data + reg_u + reg_phi + reg_f + constraint + proximal,
        }
    }
}

fn grad_sq_integral(v: &ScalarField) -> f64 {
    let g = grad_central(v);
    let s: f64 = g
        .comp1
        .values()
        .iter()
        .zip(g.comp2.values())
        .map(|(a, b)| a * a + b * b)
        .sum();
    s * v.spec().cell_area()
}

/// `½ ∫ (T(φ) − R)²`.
pub fn data_term(t: &ScalarField, r: &ScalarField, phi: &Deformation) -> f64 {
    let w = warp(t, phi);
    let s: f64 = w
        .values()
        .iter()
        .zip(r.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    0.5 * s * phi.spec().cell_area()
}

/// `∫ φ(f)` (without the weight); `+∞` if `f ≤ 0` anywhere.
pub fn penalty_integral(f: &ScalarField, variant: PenaltyVariant) -> f64 {
    f.values().iter().map(|&v| phi(v, variant)).sum::<f64>() * f.spec().cell_area()
}

/// Discrete constraint residual `det ∇(φ) − f`.
pub fn constraint_residual(phi: &Deformation, f: &ScalarField) -> ScalarField {
    &jacobian_det(phi) - f
}

/// Penalized objective at `(φ + u, f)` with proximal anchor `u_prev`.
pub fn energy(
    t: &ScalarField,
    r: &ScalarField,
    phi: &Deformation,
    u: &VectorField,
    f: &ScalarField,
    u_prev: &VectorField,
    params: &EnergyParams,
) -> EnergyBreakdown {
    let area = phi.spec().cell_area();
    let moved = phi.displaced(u);
    let data = data_term(t, r, &moved);
    let reg_u = 0.5 * params.tau1 * (grad_sq_integral(&u.comp1) + grad_sq_integral(&u.comp2));
    let reg_phi = if params.tau2 == 0.0 {
        0.0
    } else {
        params.tau2 * penalty_integral(f, params.variant)
    };
    let reg_f = if params.tau3 == 0.0 {
        0.0
    } else {
        0.5 * params.tau3 * grad_sq_integral(f)
    };
    let constraint = if params.lambda == 0.0 {
        0.0
    } else {
        let c = constraint_residual(&moved, f);
        0.5 * params.lambda * c.values().iter().map(|v| v * v).sum::<f64>() * area
    };
    let proximal = 0.5 / params.gamma * u.sub(u_prev).norm2_squared() * area;
    EnergyBreakdown::from_parts(data, reg_u, reg_phi, reg_f, constraint, proximal)
}

/// Image force `−(T(φ) − R) (∇T)(φ)`.
pub fn image_force(t: &ScalarField, r: &ScalarField, phi: &Deformation) -> VectorField {
    let w = warp(t, phi);
    let g = warped_gradient(t, phi);
    let diff = &w - r;
    VectorField {
        comp1: diff.zip_map(&g.comp1, |d, gx| -d * gx),
        comp2: diff.zip_map(&g.comp2, |d, gy| -d * gy),
    }
}

/// Constraint force `λ · adj(∇φ)ᵀ ∇(det ∇φ − f)` with the adjugate built
/// from the central differences of `φ`:
///
/// ```text
/// ( δy φ²  −δx φ² ) ( δx C )
/// ( −δy φ¹  δx φ¹ ) ( δy C )
/// ```
pub fn constraint_force(phi: &Deformation, f: &ScalarField, lambda: f64) -> VectorField {
    let spec = phi.spec();
    if lambda == 0.0 {
        return VectorField::zeros(spec);
    }
    let g1 = grad_central(&phi.phi.comp1);
    let g2 = grad_central(&phi.phi.comp2);
    let c = ScalarField::from_index_fn(spec, |i, j| {
        g1.comp1.get(i, j) * g2.comp2.get(i, j)
            - g1.comp2.get(i, j) * g2.comp1.get(i, j)
            - f.get(i, j)
    });
    let gc = grad_central(&c);
    let comp1 = ScalarField::from_index_fn(spec, |i, j| {
        lambda * (g2.comp2.get(i, j) * gc.comp1.get(i, j) - g2.comp1.get(i, j) * gc.comp2.get(i, j))
    });
    let comp2 = ScalarField::from_index_fn(spec, |i, j| {
        -lambda
            * (g1.comp2.get(i, j) * gc.comp1.get(i, j) - g1.comp1.get(i, j) * gc.comp2.get(i, j))
    });
    VectorField { comp1, comp2 }
}

/// Right-hand side `r(uᵏ)` of the linearized displacement subproblem
/// `−τ₁Δu + u/γ = r(uᵏ)`: image force and constraint force evaluated at
/// `φ + uᵏ`, plus `uᵏ/γ`.
pub fn assemble_u_rhs(
    t: &ScalarField,
    r: &ScalarField,
    phi: &Deformation,
    u_k: &VectorField,
    f_k: &ScalarField,
    params: &EnergyParams,
) -> VectorField {
    let moved = phi.displaced(u_k);
    let img = image_force(t, r, &moved);
    let con = constraint_force(&moved, f_k, params.lambda);
    img.add(&con).add(&u_k.scale(1.0 / params.gamma))
}

/// Right-hand side `λ det ∇φ − τ₂ dφ(fᵏ)` of the relaxation subproblem,
/// where `phi` is the already updated deformation.
pub fn assemble_f_rhs(phi: &Deformation, f_k: &ScalarField, params: &EnergyParams) -> ScalarField {
    let det = jacobian_det(phi);
    det.zip_map(f_k, |d, f| {
        let pen = if params.tau2 == 0.0 {
            0.0
        } else {
            params.tau2 * dphi(f, params.variant)
        };
        params.lambda * d - pen
    })
}
