//! The penalty-splitting outer iteration and the coarse-to-fine driver.
//!
//! One outer iteration at penalty weight `λ`:
//!
//! 1. assemble the displacement right-hand side at the current `φ` and solve
//!    `−(τ₁ + βλ)Δu + u/γ = r` per component (zero boundary), doubling `β`
//!    until the objective at fixed `λ, f` does not increase;
//! 2. `φ ← φ + u`;
//! 3. untangle folds if the indicator drops below `correction_eps`;
//! 4. solve `−τ₃Δf + λf = λ det ∇φ − τ₂ dφ(f)` with `f = 1` on the boundary;
//! 5. `λ ← ρλ`.
//!
//! Each step is an increment from the current deformation, so the proximal
//! anchor is the zero displacement.

mod config;
mod transfer;

pub use config::{ConfigError, SolverConfig};
pub use transfer::{prolong_relaxation, GridTransfer, TransferError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{assemble_f_rhs, assemble_u_rhs, energy, EnergyBreakdown};
use crate::fields::{identity_deformation, warp, Deformation};
use crate::grid::{GridError, GridSpec, ScalarField, VectorField};
use crate::jacobian::{correct_deformation, jacobian_det, JacobianError};
use crate::linsolve::{
    default_max_iter, ScreenedPoissonProblem, ScreenedPoissonSolver, SolveError,
};
use crate::metrics::{evaluate, MetricsError, MetricsReport};

/// Displacements with every entry below this are treated as a fixed point.
pub const STALL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("a {m}x{n} image cannot be coarsened {levels} times (needs both sides divisible by {div} and a coarsest side of at least 4)")]
    Indivisible {
        m: usize,
        n: usize,
        levels: usize,
        div: usize,
    },
    #[error("initial relaxation field must be positive (found {0})")]
    NonPositiveRelaxation(f64),
}

/// Why a level stopped iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EnergyTolerance,
    DisplacementTolerance,
    /// The displacement vanished.
    Stalled,
    MaxIterations,
    /// A linear solve or the correction step failed.
    Failed,
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Level index: `L` is the coarsest grid, 1 the finest.
    pub level: usize,
    /// 1-based iteration within the level.
    pub iter: usize,
    /// Penalty weight used by this iteration.
    pub lambda: f64,
    /// Objective of the accepted step at fixed `λ` and `f`; `data` is `D(u)`.
    pub energy: EnergyBreakdown,
    /// Objective of the zero step, used by the stopping test.
    pub energy_before: f64,
    /// Mean of `det ∇φ` after the update and correction.
    pub det_mean: f64,
    /// `max |u|` of the accepted increment.
    pub u_max: f64,
    /// Times the step was shortened.
    pub backtracks: usize,
    /// Points moved by the correction step.
    pub corrected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub m: usize,
    pub n: usize,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub phi_final: Deformation,
    pub f_final: ScalarField,
    /// `warp(T, phi_final)` on the input intensity scale.
    pub warped: ScalarField,
    /// All iterations, coarsest level first.
    pub trace: Vec<IterationRecord>,
    pub metrics: MetricsReport,
    pub level_traces: Vec<LevelSummary>,
    /// Set when some level ended on a failed solve or correction; the result
    /// then holds the last valid iterate of that level.
    pub degraded: bool,
    pub failure: Option<String>,
}

impl RegistrationResult {
    pub fn total_iterations(&self) -> usize {
        self.trace.len()
    }

    /// Records of one level in iteration order.
    pub fn level_records(&self, level: usize) -> impl Iterator<Item = &IterationRecord> {
        self.trace.iter().filter(move |r| r.level == level)
    }
}

struct LevelOutcome {
    phi: Deformation,
    f: ScalarField,
    records: Vec<IterationRecord>,
    stop: StopReason,
    failure: Option<String>,
}

enum StepFailure {
    Solve(SolveError),
    Correction(JacobianError),
}

impl std::fmt::Display for StepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepFailure::Solve(e) => write!(f, "linear solve failed: {e}"),
            StepFailure::Correction(e) => write!(f, "{e}"),
        }
    }
}

fn check_inputs(r: &ScalarField, t: &ScalarField) -> Result<(), RegistrationError> {
    r.ensure_same_grid(t)?;
    r.check_finite()?;
    t.check_finite()?;
    Ok(())
}

fn solve_screened(
    solver: &ScreenedPoissonSolver,
    a: f64,
    c: f64,
    rhs: ScalarField,
    boundary_value: f64,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolveError> {
    let max_iter = default_max_iter(rhs.spec());
    let problem = ScreenedPoissonProblem {
        a,
        c,
        rhs,
        boundary_value,
    };
    Ok(solver.solve(&problem, cfg.solver_tol, max_iter)?.field)
}

fn solve_relaxation(
    solver: &ScreenedPoissonSolver,
    phi: &Deformation,
    f: &ScalarField,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolveError> {
    if cfg.tau3 == 0.0 && lambda == 0.0 {
        // no equation left for f
        return Ok(f.clone());
    }
    let rhs = assemble_f_rhs(phi, f, &cfg.energy_params(lambda));
    if cfg.tau3 == 0.0 {
        let mut next = rhs.scale(1.0 / lambda);
        next.pin_boundary(1.0);
        return Ok(next);
    }
    solve_screened(solver, cfg.tau3, lambda, rhs, 1.0, cfg)
}

/// Runs one level of the outer iteration on intensity-normalized images.
fn run_level(
    t: &ScalarField,
    r: &ScalarField,
    phi0: Deformation,
    f0: ScalarField,
    cfg: &SolverConfig,
    level: usize,
) -> LevelOutcome {
    let spec = t.spec();
    let solver = ScreenedPoissonSolver::new(spec);
    let zero = VectorField::zeros(spec);
    let mut phi = phi0;
    let mut f = f0;
    let mut records = Vec::new();
    let mut first_energy: Option<f64> = None;
    let mut first_norm: Option<f64> = None;
    let mut prev_u: Option<VectorField> = None;

    for k in 0..cfg.max_iter {
        let lambda = cfg.lambda1 * cfg.rho.powi(k as i32);
        let params = cfg.energy_params(lambda);
        let step = (|| -> Result<_, StepFailure> {
            let rhs = assemble_u_rhs(t, r, &phi, &zero, &f, &params);
            let e0 = energy(t, r, &phi, &zero, &f, &zero, &params).total;
            let mut beta = 1.0;
            let mut backtracks = 0;
            let (u, e1) = loop {
                let a = cfg.tau1 + beta * lambda;
                let c = 1.0 / cfg.gamma;
                let u = VectorField {
                    comp1: solve_screened(&solver, a, c, rhs.comp1.clone(), 0.0, cfg)
                        .map_err(StepFailure::Solve)?,
                    comp2: solve_screened(&solver, a, c, rhs.comp2.clone(), 0.0, cfg)
                        .map_err(StepFailure::Solve)?,
                };
                let e1 = energy(t, r, &phi, &u, &f, &zero, &params);
                if e1.total <= e0 || lambda == 0.0 || backtracks >= cfg.max_backtracks {
                    break (u, e1);
                }
                beta *= 2.0;
                backtracks += 1;
            };
            let mut next = phi.displaced(&u);
            let mut corrected = 0;
            if cfg.correction {
                let c = correct_deformation(&next, cfg.correction_eps)
                    .map_err(StepFailure::Correction)?;
                corrected = c.moved.len();
                next = c.phi;
            }
            let f_next =
                solve_relaxation(&solver, &next, &f, lambda, cfg).map_err(StepFailure::Solve)?;
            Ok((u, e0, e1, backtracks, corrected, next, f_next))
        })();

        let (u, e0, e1, backtracks, corrected, next, f_next) = match step {
            Ok(s) => s,
            Err(e) => {
                return LevelOutcome {
                    phi,
                    f,
                    records,
                    stop: StopReason::Failed,
                    failure: Some(format!("level {level}, iteration {}: {e}", k + 1)),
                };
            }
        };

        phi = next;
        f = f_next;
        let u_max = u.max_abs();
        records.push(IterationRecord {
            level,
            iter: k + 1,
            lambda,
            energy: e1,
            energy_before: e0,
            det_mean: jacobian_det(&phi).mean(),
            u_max,
            backtracks,
            corrected,
        });

        if u_max <= STALL_TOL {
            return LevelOutcome {
                phi,
                f,
                records,
                stop: StopReason::Stalled,
                failure: None,
            };
        }
        let l1 = *first_energy.get_or_insert(e0);
        let u_norm = u.norm2();
        let n1 = *first_norm.get_or_insert(u_norm);
        if let Some(prev) = &prev_u {
            let de = if l1 > 0.0 {
                (e1.total - e0).abs() / l1
            } else {
                f64::INFINITY
            };
            if de <= cfg.eps_l {
                return LevelOutcome {
                    phi,
                    f,
                    records,
                    stop: StopReason::EnergyTolerance,
                    failure: None,
                };
            }
            if u.sub(prev).norm2() / n1 <= cfg.eps_u {
                return LevelOutcome {
                    phi,
                    f,
                    records,
                    stop: StopReason::DisplacementTolerance,
                    failure: None,
                };
            }
        }
        prev_u = Some(u);
    }
    LevelOutcome {
        phi,
        f,
        records,
        stop: StopReason::MaxIterations,
        failure: None,
    }
}

fn normalized(v: &ScalarField, cfg: &SolverConfig) -> ScalarField {
    v.scale(1.0 / cfg.intensity_scale)
}

fn finish(
    t: &ScalarField,
    r: &ScalarField,
    phi: Deformation,
    f: ScalarField,
    trace: Vec<IterationRecord>,
    level_traces: Vec<LevelSummary>,
    failure: Option<String>,
) -> Result<RegistrationResult, RegistrationError> {
    let warped = warp(t, &phi);
    let metrics = evaluate(t, r, &warped, &phi)?;
    Ok(RegistrationResult {
        phi_final: phi,
        f_final: f,
        warped,
        trace,
        metrics,
        level_traces,
        degraded: failure.is_some(),
        failure,
    })
}

/// Single-level registration of `t` onto `r` starting from `(phi0, f0)`.
pub fn dirpm(
    r: &ScalarField,
    t: &ScalarField,
    phi0: &Deformation,
    f0: &ScalarField,
    cfg: &SolverConfig,
) -> Result<RegistrationResult, RegistrationError> {
    cfg.validate()?;
    check_inputs(r, t)?;
    r.ensure_same_grid(f0)?;
    if phi0.spec() != r.spec() {
        return Err(GridError::SpecMismatch {
            left: phi0.spec(),
            right: r.spec(),
        }
        .into());
    }
    phi0.phi.check_finite()?;
    if f0.min() <= 0.0 {
        return Err(RegistrationError::NonPositiveRelaxation(f0.min()));
    }
    let spec = r.spec();
    let out = run_level(
        &normalized(t, cfg),
        &normalized(r, cfg),
        phi0.clone(),
        f0.clone(),
        cfg,
        1,
    );
    let summary = LevelSummary {
        level: 1,
        m: spec.m(),
        n: spec.n(),
        iterations: out.records.len(),
        stop: out.stop,
    };
    finish(
        t,
        r,
        out.phi,
        out.f,
        out.records,
        vec![summary],
        out.failure,
    )
}

fn pyramid(v: ScalarField, levels: usize) -> Result<Vec<ScalarField>, TransferError> {
    let mut out = vec![v];
    for _ in 1..levels {
        let next = out.last().expect("nonempty").restrict()?;
        out.push(next);
    }
    Ok(out)
}

/// Coarse-to-fine registration of `t` onto `r` over `cfg.levels` grids,
/// starting from the identity and `f ≡ 1` on the coarsest one.
pub fn multilevel_register(
    r: &ScalarField,
    t: &ScalarField,
    cfg: &SolverConfig,
) -> Result<RegistrationResult, RegistrationError> {
    cfg.validate()?;
    check_inputs(r, t)?;
    let spec = r.spec();
    let levels = cfg.levels;
    let div = 1usize
        .checked_shl((levels - 1) as u32)
        .filter(|d| *d <= spec.m() && *d <= spec.n())
        .ok_or(RegistrationError::Indivisible {
            m: spec.m(),
            n: spec.n(),
            levels,
            div: usize::MAX,
        })?;
    if !spec.m().is_multiple_of(div)
        || !spec.n().is_multiple_of(div)
        || spec.m() / div < 4
        || spec.n() / div < 4
    {
        return Err(RegistrationError::Indivisible {
            m: spec.m(),
            n: spec.n(),
            levels,
            div,
        });
    }
    let ts = pyramid(normalized(t, cfg), levels)?;
    let rs = pyramid(normalized(r, cfg), levels)?;

    let coarse: GridSpec = ts[levels - 1].spec();
    let mut phi = identity_deformation(coarse);
    let mut f = ScalarField::constant(coarse, 1.0);
    let mut trace = Vec::new();
    let mut summaries = Vec::new();
    let mut failure: Option<String> = None;

    for idx in (0..levels).rev() {
        let level = idx + 1;
        let out = run_level(&ts[idx], &rs[idx], phi, f, cfg, level);
        let s = ts[idx].spec();
        summaries.push(LevelSummary {
            level,
            m: s.m(),
            n: s.n(),
            iterations: out.records.len(),
            stop: out.stop,
        });
        trace.extend(out.records);
        if failure.is_none() {
            failure = out.failure;
        }
        phi = out.phi;
        f = out.f;
        if idx > 0 {
            phi = phi.prolong()?;
            f = prolong_relaxation(&f)?;
        }
    }
    finish(t, r, phi, f, trace, summaries, failure)
}
