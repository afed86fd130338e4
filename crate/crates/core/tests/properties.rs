use diffreg::energy::phi;
use diffreg::fields::sample_bilinear;
use diffreg::jacobian::{correct_deformation, indicator_field, triangle_ratios, JacobianError};
use diffreg::linsolve::{apply_operator, solve, ScreenedPoissonProblem};
use diffreg::metrics::{re_ssd, ssim};
use diffreg::{jacobian_det, Deformation, GridSpec, PenaltyVariant, ScalarField};
use proptest::prelude::*;

fn field(spec: GridSpec, vals: &[f64]) -> ScalarField {
    ScalarField::from_vec(spec, vals.to_vec()).unwrap()
}

/// Identity plus a smooth random perturbation of amplitude `amp` cells.
fn perturbed(spec: GridSpec, c: [f64; 4], amp: f64) -> Deformation {
    let h = spec.hx();
    Deformation::from_map(spec, |x, y| {
        let tau = std::f64::consts::TAU;
        (
            x + amp * h * ((tau * (x * c[0] + y * c[1])).sin()),
            y + amp * h * ((tau * (x * c[2] - y * c[3])).cos()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn det_is_half_sum_of_ratios(c in prop::array::uniform4(-2.0f64..2.0), amp in 0.0f64..3.0) {
        let spec = GridSpec::square(12).unwrap();
        let p = perturbed(spec, c, amp);
        let det = jacobian_det(&p);
        for (i, j) in spec.interior_cells() {
            let r = triangle_ratios(&p, i, j).unwrap();
            let half: f64 = 0.5 * r.iter().sum::<f64>();
            prop_assert!((det.get(i, j) - half).abs() <= 1e-12 * (1.0 + half.abs()));
        }
    }

    #[test]
    fn positive_ratios_give_positive_det(c in prop::array::uniform4(-2.0f64..2.0), amp in 0.0f64..4.0) {
        let spec = GridSpec::square(12).unwrap();
        let p = perturbed(spec, c, amp);
        let ind = indicator_field(&p);
        let det = jacobian_det(&p);
        for (i, j) in spec.interior_cells() {
            if ind.get(i, j) > 0.0 {
                prop_assert!(det.get(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn penalty_is_nonnegative(e in -3.0f64..3.0) {
        let f = 10f64.powf(e);
        prop_assert!(phi(f, PenaltyVariant::Phi1) >= 0.0);
        prop_assert!(phi(f, PenaltyVariant::Phi2) >= 0.0);
    }

    #[test]
    fn operator_is_symmetric(
        v in prop::collection::vec(-1.0f64..1.0, 100),
        w in prop::collection::vec(-1.0f64..1.0, 100),
        a in 0.1f64..5.0,
        c in 0.0f64..5.0,
    ) {
        // Restricted to fields that vanish on the boundary.
        let spec = GridSpec::square(10).unwrap();
        let zero_edge = |vals: &[f64]| {
            ScalarField::from_index_fn(spec, |i, j| if spec.is_boundary(i, j) { 0.0 } else { vals[spec.index(i, j)] })
        };
        let (v, w) = (zero_edge(&v), zero_edge(&w));
        let av = apply_operator(a, c, &v);
        let aw = apply_operator(a, c, &w);
        let dot = |x: &ScalarField, y: &ScalarField| x.values().iter().zip(y.values()).map(|(p, q)| p * q).sum::<f64>();
        let (l, r) = (dot(&av, &w), dot(&v, &aw));
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
    }

    #[test]
    fn solver_meets_tolerance_and_maximum_principle(
        rhs in prop::collection::vec(0.0f64..1.0, 64),
        a in 0.1f64..3.0,
        c in 0.0f64..3.0,
    ) {
        let spec = GridSpec::square(8).unwrap();
        let problem = ScreenedPoissonProblem { a, c, rhs: field(spec, &rhs), boundary_value: 0.0 };
        let sol = solve(&problem, 1e-10, 50).unwrap();
        prop_assert!(sol.residual <= 1e-10);
        // Non-negative sources with a zero boundary give a non-negative solution.
        prop_assert!(sol.field.min() >= -1e-12);
    }

    #[test]
    fn re_ssd_is_scale_invariant(
        t in prop::collection::vec(0.0f64..255.0, 64),
        r in prop::collection::vec(0.0f64..255.0, 64),
        w in prop::collection::vec(0.0f64..255.0, 64),
        s in 0.01f64..100.0,
    ) {
        let spec = GridSpec::square(8).unwrap();
        let (t, r, w) = (field(spec, &t), field(spec, &r), field(spec, &w));
        let a = re_ssd(&t, &r, &w).unwrap();
        let b = re_ssd(&t.scale(s), &r.scale(s), &w.scale(s)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn ssim_is_symmetric(
        a in prop::collection::vec(0.0f64..255.0, 256),
        b in prop::collection::vec(0.0f64..255.0, 256),
    ) {
        let spec = GridSpec::square(16).unwrap();
        let (a, b) = (field(spec, &a), field(spec, &b));
        let ab = ssim(&a, &b).unwrap();
        prop_assert!((ab - ssim(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!(ab <= 1.0 + 1e-12);
    }

    #[test]
    fn bilinear_reproduces_affine(p in prop::array::uniform3(-2.0f64..2.0), x in 0.05f64..0.95, y in 0.05f64..0.95) {
        let spec = GridSpec::square(16).unwrap();
        let v = ScalarField::from_fn(spec, |x, y| p[0] + p[1] * x + p[2] * y);
        let h = spec.hx();
        // Inside the hull of cell centers the interpolant is exact.
        let (x, y) = (x.clamp(h / 2.0, 1.0 - h / 2.0), y.clamp(h / 2.0, 1.0 - h / 2.0));
        prop_assert!((sample_bilinear(&v, x, y) - (p[0] + p[1] * x + p[2] * y)).abs() <= 1e-12);
    }

    #[test]
    fn correction_keeps_boundary_and_clears_threshold(c in prop::array::uniform4(-3.0f64..3.0), amp in 0.0f64..1.5) {
        let spec = GridSpec::square(16).unwrap();
        let p = perturbed(spec, c, amp);
        let out = match correct_deformation(&p, 1e-2) {
            Ok(out) => {
                prop_assert!(out.r_min >= 1e-2);
                prop_assert!(indicator_field(&out.phi).min() >= 1e-2);
                if out.moved.is_empty() {
                    prop_assert!(out.phi == p);
                }
                out.phi
            }
            // folds pinned against the boundary are not always repairable
            Err(JacobianError::CorrectionFailed { best, .. }) => *best,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for (i, j) in spec.cells() {
            if spec.is_boundary(i, j) {
                prop_assert_eq!(out.get(i, j), p.get(i, j));
            }
        }
    }
}
