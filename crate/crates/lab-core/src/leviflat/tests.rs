use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::*;
use crate::error::LabError;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn poly_re_z() -> WirtingerPoly {
    WirtingerPoly::new(vec![term(1.0, 0.0, [1, 0, 0, 0])])
}

/// Im w - |z|^2 + 1 as a table: S = -i w + i wbar ... written via (w - wbar)/(2i).
fn poly_im_w_z2() -> WirtingerPoly {
    WirtingerPoly::new(vec![
        term(0.0, -0.5, [0, 0, 1, 0]),
        term(0.0, 0.5, [0, 0, 0, 1]),
        term(-1.0, 0.0, [1, 1, 0, 0]),
        term(1.0, 0.0, [0, 0, 0, 0]),
    ])
}

#[test]
fn catalog_members_construct_and_unknown_id_is_rejected() {
    for (id, _) in catalog_entries() {
        let f = DefiningFunction::catalog(id).unwrap();
        assert_eq!(f.name(), *id);
        assert_eq!(f.provenance(), Provenance::ClosedForm);
    }
    let err = DefiningFunction::catalog("no_such_surface").unwrap_err();
    assert!(matches!(err, LabError::InvalidConfig(_)));
    assert!(err.to_string().contains("re_w_rotated"));
}

#[test]
fn table_derivatives_match_finite_differences_on_a_messy_polynomial() {
    let poly = WirtingerPoly::new(vec![
        term(0.7, -0.3, [2, 1, 0, 1]),
        term(-0.2, 0.9, [0, 3, 2, 0]),
        term(1.1, 0.0, [1, 0, 1, 1]),
        term(0.0, 0.4, [0, 0, 0, 2]),
    ]);
    let f = DefiningFunction::from_poly("messy", poly).unwrap();
    let z = c(0.37, -0.52);
    let w = c(-0.61, 0.23);
    let g = f.gradient(z, w);
    let g_fd = fd_gradient(&|z, w| f.value(z, w), z, w);
    for j in 0..2 {
        assert!((g[j] - g_fd[j]).norm() < 1e-8, "gradient component {j}");
    }
    let h = f.hessian(z, w);
    let h_fd = fd_hessian(&|z, w| f.value(z, w), z, w);
    for j in 0..2 {
        for k in 0..2 {
            assert!((h[j][k] - h_fd[j][k]).norm() < 1e-6, "hessian entry ({j},{k})");
            assert!((h[j][k] - h[k][j].conj()).norm() < 1e-15, "hermitian ({j},{k})");
        }
    }
}

#[test]
fn complex_coefficient_tables_are_really_symmetrized() {
    // S = i w defines Re(i w) = -Im w.
    let f = DefiningFunction::from_poly(
        "minus_im_w",
        WirtingerPoly::new(vec![term(0.0, 1.0, [0, 0, 1, 0])]),
    )
    .unwrap();
    assert_eq!(f.value(c(0.4, -0.9), c(2.0, 3.0)), -3.0);
    let g = f.gradient(c(0.0, 0.0), c(0.0, 0.0));
    assert!((g[1] - c(0.0, 0.5)).norm() < 1e-15);
}

#[test]
fn mismatched_closed_forms_are_rejected_at_construction() {
    let err = DefiningFunction::with_derivatives(
        "broken",
        |z, w| (w + z * z).re,
        |_, _| [c(0.0, 0.0), c(0.5, 0.0)],
        |_, _| [[c(0.0, 0.0); 2]; 2],
    )
    .unwrap_err();
    assert!(matches!(err, LabError::InvalidConfig(_)));
    assert!(err.to_string().contains("gradient disagrees"));
}

#[test]
fn complex_tangent_is_unit_and_annihilates_the_gradient() {
    let cases = [
        ("re_w", [c(0.3, 0.2), c(0.0, 0.7)]),
        ("re_w_minus_z2", [c(0.5, 0.1), (c(0.5, 0.1) * c(0.5, 0.1))]),
        ("sphere", [c(0.6, 0.0), c(0.0, 0.8)]),
        ("re_w_curved", [c(1.0, 0.0), c(-0.1, 0.3)]),
    ];
    for (id, p) in cases {
        let f = DefiningFunction::catalog(id).unwrap();
        assert!(f.value(p[0], p[1]).abs() < 1e-12, "{id}: case point is off the surface");
        let x = complex_tangent(&f, p).unwrap();
        let norm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
        assert!((norm - 1.0).abs() < 1e-14, "{id}: tangent not unit");
        let g = f.gradient(p[0], p[1]);
        assert!((g[0] * x[0] + g[1] * x[1]).norm() < 1e-15, "{id}: tangent not tangent");
    }
}

#[test]
fn complex_tangent_needs_a_gradient() {
    // |z|^2 + |w|^2 has a critical point at the origin.
    let f = DefiningFunction::from_poly(
        "norm_sq",
        WirtingerPoly::new(vec![term(1.0, 0.0, [1, 1, 0, 0]), term(1.0, 0.0, [0, 0, 1, 1])]),
    )
    .unwrap();
    let err = complex_tangent(&f, [c(0.0, 0.0), c(0.0, 0.0)]).unwrap_err();
    assert!(matches!(err, LabError::NoDerivative(_)));
}

#[test]
fn levi_form_catalog_values() {
    let flat = DefiningFunction::catalog("re_w").unwrap();
    let p = [c(0.3, -0.4), c(0.0, 0.25)];
    let x = complex_tangent(&flat, p).unwrap();
    let lv = levi_form(&flat, p, x).unwrap();
    assert_eq!(lv.value, 0.0);
    assert_eq!(lv.sign, FormSign::Zero);

    // Unit sphere: Hessian is the identity and the tangent is unit, so the
    // form is exactly one at every surface point.
    let sphere = DefiningFunction::catalog("sphere").unwrap();
    let p = [c(0.6, 0.0), c(0.0, 0.8)];
    let x = complex_tangent(&sphere, p).unwrap();
    let lv = levi_form(&sphere, p, x).unwrap();
    assert!((lv.value - 1.0).abs() < 1e-14);
    assert_eq!(lv.sign, FormSign::Positive);

    // Re w + 0.1 |z|^2 at (1, -0.1): form = 0.1 |x_z|^2 with
    // x = (0.5, -0.1) / sqrt(0.26), so 0.025 / 0.26.
    let curved = DefiningFunction::catalog("re_w_curved").unwrap();
    let p = [c(1.0, 0.0), c(-0.1, 0.0)];
    let x = complex_tangent(&curved, p).unwrap();
    let lv = levi_form(&curved, p, x).unwrap();
    assert!((lv.value - 0.025 / 0.26).abs() < 1e-14);
    assert_eq!(lv.sign, FormSign::Positive);
}

#[test]
fn levi_form_scales_linearly_and_normalized_value_is_invariant() {
    let one = DefiningFunction::catalog("re_w_curved").unwrap();
    let two = DefiningFunction::from_poly(
        "re_w_curved_doubled",
        WirtingerPoly::new(vec![term(2.0, 0.0, [0, 0, 1, 0]), term(0.2, 0.0, [1, 1, 0, 0])]),
    )
    .unwrap();
    let p = [c(0.8, 0.3), c(-0.073, 0.5)];
    assert!(one.value(p[0], p[1]).abs() < 1e-12);
    let x = complex_tangent(&one, p).unwrap();
    let lv1 = levi_form(&one, p, x).unwrap();
    let lv2 = levi_form(&two, p, x).unwrap();
    assert!((lv2.value - 2.0 * lv1.value).abs() < 1e-14);
    assert_eq!(lv1.sign, lv2.sign);
    // Dividing by the gradient norm removes the scale.
    let n1 = {
        let g = one.gradient(p[0], p[1]);
        (g[0].norm_sqr() + g[1].norm_sqr()).sqrt()
    };
    let n2 = {
        let g = two.gradient(p[0], p[1]);
        (g[0].norm_sqr() + g[1].norm_sqr()).sqrt()
    };
    assert!((lv1.value / n1 - lv2.value / n2).abs() < 1e-14);
}

#[test]
fn levi_form_rejects_bad_inputs() {
    let f = DefiningFunction::catalog("re_w").unwrap();
    let err = levi_form(&f, [c(0.0, 0.0), c(0.5, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]).unwrap_err();
    assert!(matches!(err, LabError::OutsideDomain(_)));
    let err = levi_form(&f, [c(0.0, 0.0), c(0.0, 0.5)], [c(0.0, 0.0), c(1.0, 0.0)]).unwrap_err();
    assert!(matches!(err, LabError::InvalidConfig(_)));
}

#[test]
fn flatness_verdicts_match_the_catalog() {
    let sampler = |center: [Complex64; 2]| SurfaceSampler::new(center, 0.8, 200, 7);
    let origin = [c(0.0, 0.0), c(0.0, 0.0)];

    for id in ["re_w", "re_w_minus_z2", "re_w_rotated"] {
        let f = DefiningFunction::catalog(id).unwrap();
        let verdict = is_levi_flat(&f, &sampler(origin), 1e-8).unwrap();
        assert!(verdict.flat, "{id}: expected flat, worst {}", verdict.worst_value);
        assert_eq!(verdict.samples, 200);
    }

    let sphere = DefiningFunction::catalog("sphere").unwrap();
    let verdict = is_levi_flat(&sphere, &sampler([c(0.4, 0.0), c(0.5, 0.0)]), 1e-8).unwrap();
    assert!(!verdict.flat);
    assert!((verdict.worst_value - 1.0).abs() < 1e-12);
    let wr = verdict.witness;
    assert!(sphere.value(wr[0], wr[1]).abs() < 1e-10);

    let curved = DefiningFunction::catalog("re_w_curved").unwrap();
    let verdict = is_levi_flat(&curved, &sampler(origin), 1e-8).unwrap();
    assert!(!verdict.flat);
    assert!(verdict.worst_value > 1e-2);
}

#[test]
fn flatness_verdict_is_deterministic_for_a_seed() {
    let f = DefiningFunction::catalog("re_w_curved").unwrap();
    let sampler = SurfaceSampler::new([c(0.0, 0.0), c(0.0, 0.0)], 0.8, 64, 123);
    let a = is_levi_flat(&f, &sampler, 1e-8).unwrap();
    let b = is_levi_flat(&f, &sampler, 1e-8).unwrap();
    assert_eq!(a.worst_value, b.worst_value);
    assert_eq!(a.witness[0], b.witness[0]);
    assert_eq!(a.witness[1], b.witness[1]);
}

#[test]
fn empty_surface_exhausts_the_sampler() {
    // |z|^2 + |w|^2 + 1 has no zeros at all.
    let f = DefiningFunction::from_poly(
        "empty",
        WirtingerPoly::new(vec![
            term(1.0, 0.0, [1, 1, 0, 0]),
            term(1.0, 0.0, [0, 0, 1, 1]),
            term(1.0, 0.0, [0, 0, 0, 0]),
        ]),
    )
    .unwrap();
    let sampler = SurfaceSampler::new([c(0.0, 0.0), c(0.0, 0.0)], 0.5, 4, 1);
    let err = is_levi_flat(&f, &sampler, 1e-8).unwrap_err();
    assert!(matches!(err, LabError::InvalidDomain(_)));
}

#[test]
fn genericity_golden_pair_has_quarter_complex_wedge() {
    let system = DefiningSystem {
        functions: vec![
            DefiningFunction::catalog("re_w").unwrap(),
            DefiningFunction::from_poly("re_z", poly_re_z()).unwrap(),
        ],
        box_center: [c(0.0, 0.0), c(0.0, 0.0)],
        box_radius: 0.7,
    };
    let reports = genericity_check(&system, 50, 3, 1e-6).unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0].indices, vec![0]);
    assert_eq!(reports[1].indices, vec![1]);
    assert_eq!(reports[2].indices, vec![0, 1]);
    for r in &reports {
        assert!(r.generic, "stratum {:?} unexpectedly degenerate", r.indices);
        assert_eq!(r.samples, 50);
    }
    // Constant gradients make the wedges exact.
    assert!((reports[2].min_complex_wedge - 0.25).abs() < 1e-12);
    assert!((reports[2].min_real_wedge - 1.0).abs() < 1e-12);
    assert!((reports[0].min_real_wedge - 1.0).abs() < 1e-12);
    assert!((reports[0].min_complex_wedge - 0.5).abs() < 1e-12);
}

#[test]
fn genericity_detects_complex_tangency_of_a_pair() {
    // Re w = 0 and Im w - |z|^2 + 1 = 0 meet along |z|^2 = 1 + ... at
    // (0, -i) the holomorphic differentials are parallel: dz-parts vanish.
    let system = DefiningSystem {
        functions: vec![
            DefiningFunction::catalog("re_w").unwrap(),
            DefiningFunction::from_poly("im_w_shifted", poly_im_w_z2()).unwrap(),
        ],
        box_center: [c(0.0, 0.0), c(0.0, -1.0)],
        box_radius: 0.4,
    };
    let reports = genericity_check(&system, 40, 5, 1e-6).unwrap();
    assert!(reports[0].generic);
    assert!(reports[1].generic);
    let pair = &reports[2];
    assert_eq!(pair.indices, vec![0, 1]);
    // The box-center projection hits (0, -i) where the complex wedge is zero.
    assert!(pair.min_complex_wedge < 1e-12);
    assert!(!pair.generic);
    assert!(pair.min_real_wedge > 0.1);
}

#[test]
fn genericity_errors_on_an_empty_stratum() {
    // Re w = 0 and Re w = 1 never meet.
    let shifted = WirtingerPoly::new(vec![
        term(1.0, 0.0, [0, 0, 1, 0]),
        term(-1.0, 0.0, [0, 0, 0, 0]),
    ]);
    let system = DefiningSystem {
        functions: vec![
            DefiningFunction::catalog("re_w").unwrap(),
            DefiningFunction::from_poly("re_w_shifted", shifted).unwrap(),
        ],
        box_center: [c(0.0, 0.0), c(0.5, 0.0)],
        box_radius: 1.0,
    };
    let err = genericity_check(&system, 10, 7, 1e-6).unwrap_err();
    assert!(matches!(err, LabError::InvalidDomain(_)));
    assert!(err.to_string().contains("[0, 1]"));
}

#[test]
fn trace_segment_reproduces_the_square_leaf() {
    let f = DefiningFunction::catalog("re_w_minus_z2").unwrap();
    let path = TracePath::Segment { from: c(1.0, 0.0), to: c(0.0, 0.0) };
    let trace =
        trace_leaf(&f, [c(1.0, 0.0), c(1.0, 0.0)], &path, &StepControl::default()).unwrap();
    assert!(!trace.failed);
    assert_eq!(trace.zeta.len(), 2001);
    assert!(trace.loop_defect.is_none());
    let mut worst = 0.0f64;
    for (zeta, w) in trace.zeta.iter().zip(&trace.w) {
        worst = worst.max((w - zeta * zeta).norm());
    }
    assert!(worst < 1e-8, "leaf drifts from the square by {worst:.3e}");
    assert!(trace.max_residual < 1e-10);
}

#[test]
fn closed_traces_on_flat_surfaces_have_no_monodromy() {
    let cases = [
        ("re_w", [c(0.7, 0.0), c(0.0, 0.3)], 0.7),
        ("re_w_minus_z2", [c(1.0, 0.0), c(1.0, 0.0)], 1.0),
        ("re_w_rotated", [c(0.5, 0.0), c(0.0, 0.2)], 0.5),
    ];
    for (id, start, radius) in cases {
        let f = DefiningFunction::catalog(id).unwrap();
        let path = TracePath::Circle { center: c(0.0, 0.0), radius };
        let trace = trace_leaf(&f, start, &path, &StepControl::default()).unwrap();
        assert!(!trace.failed, "{id}: trace failed");
        let defect = trace.loop_defect.expect("closed path must report a defect");
        assert!(defect < 1e-8, "{id}: loop defect {defect:.3e}");
    }
}

#[test]
fn sphere_loop_monodromy_matches_the_closed_form() {
    // Around |zeta| = 0.6 the graph solution keeps |w| = 0.8 and advances its
    // phase by -2 pi |zeta|^2 / |w|^2 = -1.125 pi, so the gap is
    // 2 |w| |sin(phase / 2)|.
    let f = DefiningFunction::catalog("sphere").unwrap();
    let path = TracePath::Circle { center: c(0.0, 0.0), radius: 0.6 };
    let trace =
        trace_leaf(&f, [c(0.6, 0.0), c(0.8, 0.0)], &path, &StepControl::default()).unwrap();
    assert!(!trace.failed);
    let expected = 1.6 * (0.5625 * PI).sin();
    let defect = trace.loop_defect.unwrap();
    assert!((defect - expected).abs() < 1e-6, "defect {defect} vs {expected}");
}

#[test]
fn curved_graph_loop_defect_is_two_fifths_pi() {
    // For Re w + 0.1 |z|^2 the slope around the unit circle is the constant
    // -0.4 pi i, so the monodromy gap is exactly 0.4 pi.
    let f = DefiningFunction::catalog("re_w_curved").unwrap();
    let path = TracePath::Circle { center: c(0.0, 0.0), radius: 1.0 };
    let trace =
        trace_leaf(&f, [c(1.0, 0.0), c(-0.1, 0.0)], &path, &StepControl::default()).unwrap();
    assert!(!trace.failed);
    let defect = trace.loop_defect.unwrap();
    assert!((defect - 0.4 * PI).abs() < 1e-9, "defect {defect}");
    assert!(trace.max_residual < 1e-12);
}

#[test]
fn flatness_and_trivial_monodromy_agree_on_the_catalog() {
    let loops: [(&str, [Complex64; 2], f64); 4] = [
        ("re_w", [c(0.7, 0.0), c(0.0, 0.3)], 0.7),
        ("re_w_minus_z2", [c(1.0, 0.0), c(1.0, 0.0)], 1.0),
        ("sphere", [c(0.6, 0.0), c(0.8, 0.0)], 0.6),
        ("re_w_curved", [c(1.0, 0.0), c(-0.1, 0.0)], 1.0),
    ];
    for (id, start, radius) in loops {
        let f = DefiningFunction::catalog(id).unwrap();
        let sampler = SurfaceSampler::new(start, 0.5, 100, 17);
        let flat = is_levi_flat(&f, &sampler, 1e-8).unwrap().flat;
        let path = TracePath::Circle { center: c(0.0, 0.0), radius };
        let trace = trace_leaf(&f, start, &path, &StepControl::default()).unwrap();
        let defect = trace.loop_defect.unwrap();
        assert_eq!(flat, defect < 1e-6, "{id}: flat {flat} but defect {defect:.3e}");
    }
}

#[test]
fn polyline_square_loop_closes_on_the_flat_graph() {
    let f = DefiningFunction::catalog("re_w_minus_z2").unwrap();
    let path = TracePath::Polyline {
        vertices: vec![(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)],
    };
    assert!(path.is_closed());
    let trace =
        trace_leaf(&f, [c(1.0, 0.0), c(1.0, 0.0)], &path, &StepControl::default()).unwrap();
    assert!(!trace.failed);
    assert!(trace.loop_defect.unwrap() < 1e-8);
}

#[test]
fn trace_errors_when_the_graph_condition_breaks() {
    let f = DefiningFunction::from_poly("re_z", poly_re_z()).unwrap();
    let path = TracePath::Segment { from: c(0.0, 0.5), to: c(0.0, 0.8) };
    let err = trace_leaf(&f, [c(0.0, 0.5), c(0.3, 0.0)], &path, &StepControl::default())
        .unwrap_err();
    assert!(matches!(err, LabError::TraceFailed(_)));
}

#[test]
fn trace_validates_its_inputs() {
    let f = DefiningFunction::catalog("re_w").unwrap();
    let ctrl = StepControl::default();
    let path = TracePath::Segment { from: c(0.0, 0.0), to: c(1.0, 0.0) };

    let err = trace_leaf(&f, [c(0.5, 0.0), c(0.0, 0.0)], &path, &ctrl).unwrap_err();
    assert!(matches!(err, LabError::InvalidConfig(_)), "start/path mismatch");

    let err = trace_leaf(&f, [c(0.0, 0.0), c(0.5, 0.0)], &path, &ctrl).unwrap_err();
    assert!(matches!(err, LabError::OutsideDomain(_)), "start off surface");

    let bad = TracePath::Circle { center: c(0.0, 0.0), radius: -1.0 };
    assert!(trace_leaf(&f, [c(0.0, 0.0), c(0.0, 0.0)], &bad, &ctrl).is_err());

    let bad = TracePath::Polyline { vertices: vec![(0.0, 0.0)] };
    assert!(trace_leaf(&f, [c(0.0, 0.0), c(0.0, 0.0)], &bad, &ctrl).is_err());

    let zero_steps = StepControl { steps: 0, ..StepControl::default() };
    let path_ok = TracePath::Segment { from: c(0.0, 0.0), to: c(1.0, 0.0) };
    assert!(trace_leaf(&f, [c(0.0, 0.0), c(0.0, 0.0)], &path_ok, &zero_steps).is_err());
}

#[test]
fn normalization_recovers_the_rotating_multiplier() {
    // arg d(rho)/dw = -Im z, so f = -z and the multiplier is e^{-z}.
    let f = DefiningFunction::catalog("re_w_rotated").unwrap();
    let grid = RadialGrid::default();
    let result = df_normalize(&f, &grid).unwrap();

    assert!(result.harmonic_residual < 1e-9);
    assert_eq!(result.u_origin, 0.0);
    assert_eq!(result.log_coeffs.len(), 2);
    assert!(result.log_coeffs[0].norm() < 1e-12);
    assert!((result.log_coeffs[1] - c(-1.0, 0.0)).norm() < 1e-9);

    for (i, &s) in result.radii.iter().enumerate() {
        for k in 0..result.nodes {
            let phi = TAU * k as f64 / result.nodes as f64;
            assert!((result.v[i][k] - (-s * phi.sin())).abs() < 1e-9);
            assert!((result.u[i][k] - s * phi.cos()).abs() < 1e-9);
        }
    }

    let z = c(0.3, 0.1);
    assert!((result.multiplier(z) - (-z).exp()).norm() < 1e-9);
    assert!(result.normal_spread < 1e-9);

    // The straightened surface has w-gradient of constant argument on the disc.
    let q0 = result.multiplier(c(0.0, 0.0));
    assert!((q0 - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn normalization_of_a_straight_surface_is_the_identity() {
    let f = DefiningFunction::catalog("re_w").unwrap();
    let result = df_normalize(&f, &RadialGrid::default()).unwrap();
    assert_eq!(result.log_coeffs.len(), 1);
    assert_eq!(result.log_coeffs[0], c(0.0, 0.0));
    assert_eq!(result.multiplier(c(0.37, -0.8)), c(1.0, 0.0));
    assert_eq!(result.normal_spread, 0.0);
    assert_eq!(result.harmonic_residual, 0.0);
}

#[test]
fn normalization_is_idempotent() {
    let f = DefiningFunction::catalog("re_w_rotated").unwrap();
    let grid = RadialGrid::default();
    let first = df_normalize(&f, &grid).unwrap();
    let straightener = first.clone();
    let transformed = DefiningFunction::from_evaluator("re_w_rotated_straightened", move |z, w| {
        straightener.transformed_value(&f, z, w)
    });
    let second = df_normalize(&transformed, &grid).unwrap();
    for coeff in &second.log_coeffs {
        assert!(coeff.norm() < 1e-8, "residual straightening {coeff}");
    }
    assert!((second.multiplier(c(0.4, -0.2)) - c(1.0, 0.0)).norm() < 1e-8);
    assert!(second.normal_spread < 1e-7);
}

#[test]
fn normalization_rejects_a_nonharmonic_normal_argument() {
    // arg d(rho)/dw = -(Im z)^2 is not harmonic: its circle mean varies as -s^2/2.
    let f = DefiningFunction::from_evaluator("squared_rotation", |z: Complex64, w: Complex64| {
        (w * Complex64::new(0.0, -(z.im * z.im)).exp()).re
    });
    let err = df_normalize(&f, &RadialGrid::default()).unwrap_err();
    assert!(matches!(err, LabError::NotHarmonic(_)));
}

#[test]
fn normalization_rejects_a_winding_normal_argument() {
    // d(rho)/dw = (z - 1/2)/2 winds around circles of radius > 1/2.
    let f = DefiningFunction::from_poly(
        "winding",
        WirtingerPoly::new(vec![term(1.0, 0.0, [1, 0, 1, 0]), term(-0.5, 0.0, [0, 0, 1, 0])]),
    )
    .unwrap();
    let grid = RadialGrid { radii: vec![0.75, 0.9], nodes: 256 };
    let err = df_normalize(&f, &grid).unwrap_err();
    assert!(matches!(err, LabError::NotHarmonic(_)));
    assert!(err.to_string().contains("winds"));
}

#[test]
fn normalization_preconditions_are_checked() {
    let sphere = DefiningFunction::catalog("sphere").unwrap();
    let err = df_normalize(&sphere, &RadialGrid::default()).unwrap_err();
    assert!(matches!(err, LabError::InvalidConfig(_)));

    // Re(w^2) contains the disc but its w-gradient vanishes on it.
    let f = DefiningFunction::from_poly(
        "quadratic_w",
        WirtingerPoly::new(vec![term(1.0, 0.0, [0, 0, 2, 0])]),
    )
    .unwrap();
    let err = df_normalize(&f, &RadialGrid::default()).unwrap_err();
    assert!(matches!(err, LabError::NoDerivative(_)));

    let bad = RadialGrid { radii: vec![0.5], nodes: 256 };
    assert!(bad.validate().is_err());
    let bad = RadialGrid { radii: vec![0.5, 0.4], nodes: 256 };
    assert!(bad.validate().is_err());
    let bad = RadialGrid { radii: vec![0.5, 1.1], nodes: 256 };
    assert!(bad.validate().is_err());
    let bad = RadialGrid { radii: vec![0.25, 0.5], nodes: 6 };
    assert!(bad.validate().is_err());
}

#[test]
fn peak_value_at_the_origin_is_exactly_one() {
    let v = peak_function(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
    assert_eq!(v.re, 1.0);
    assert_eq!(v.im.abs(), 0.0);
    assert_eq!(v.norm(), 1.0);
}

#[test]
fn peak_diagonal_decay_matches_the_closed_form() {
    let ts = [1e-6, 1e-3, 0.03, 0.2, 0.5, 0.9];
    let mut prev = 1.0f64;
    for t in ts {
        let v = peak_function(c(-t, 0.0), c(-t, 0.0)).unwrap().norm();
        let expected = (-2.0 * t.powf(2.0 / 3.0)).exp();
        assert!((v - expected).abs() < 1e-12, "t = {t}: {v} vs {expected}");
        assert!(v < prev, "modulus must decrease along the diagonal");
        prev = v;
    }
    let v = peak_function(c(-1.0, 0.0), c(-1.0, 0.0)).unwrap().norm();
    assert!((v - (-2.0f64).exp()).abs() < 1e-14);
}

#[test]
fn peak_errors_off_the_wedge_closure() {
    assert!(matches!(
        peak_function(c(0.2, 0.0), c(-1.0, 0.0)),
        Err(LabError::BranchCut(_))
    ));
    assert!(matches!(
        peak_function(c(-1.0, 0.0), c(3.0, 0.0)),
        Err(LabError::BranchCut(_))
    ));
    assert!(wedge_contains(c(-1.0, 0.0), c(-1.0, 0.0)));
    assert!(wedge_contains(c(0.1, 0.2), c(0.1, -0.2)));
    assert!(!wedge_contains(c(0.3, 0.2), c(-1.0, 0.0)));
    assert!(!wedge_contains(c(-1.0, 0.0), c(0.3, -0.2)));
}

#[test]
fn peak_moduli_inside_the_wedge_stay_below_one() {
    let spec = PeakSampleSpec { count: 2000, radius: 0.5, min_distance: 0.1, seed: 5 };
    let report = peak_check(&spec).unwrap();
    assert_eq!(report.value_at_origin, 1.0);
    assert_eq!(report.samples, 2000);
    assert!(report.far_samples > 1000);
    assert!(report.max_modulus_all < 1.0);
    assert!(report.margin > 0.0);
    assert!(report.max_modulus_far <= report.max_modulus_all);
    let [wz, ww] = report.witness;
    assert!(wedge_contains(wz, ww));
    assert!((wz.norm_sqr() + ww.norm_sqr()).sqrt() >= spec.min_distance);
}

#[test]
fn peak_check_is_deterministic_and_pinned() {
    let report = peak_check(&PeakSampleSpec::default()).unwrap();
    let again = peak_check(&PeakSampleSpec::default()).unwrap();
    assert_eq!(report.max_modulus_far, again.max_modulus_far);
    assert_eq!(report.max_modulus_all, again.max_modulus_all);
    // Regression values for the default spec; the margin is small because
    // samples near the wedge edge are barely suppressed, but it stays
    // strictly positive and reproducible.
    assert!((report.max_modulus_far - 9.974420686125913e-1).abs() < 1e-12);
    assert!((report.margin - 2.5579313874086740e-3).abs() < 1e-12);
}

#[test]
fn peak_margin_stays_positive_at_a_tighter_distance_cut() {
    let spec = PeakSampleSpec { min_distance: 0.01, ..PeakSampleSpec::default() };
    let report = peak_check(&spec).unwrap();
    assert!(report.margin > 0.0);
    assert!(report.max_modulus_far < 1.0);
    // Regression pin; the tighter cut admits the same worst sample because
    // the global maximum already sits past distance 0.1.
    let again = peak_check(&spec).unwrap();
    assert_eq!(report.max_modulus_far, again.max_modulus_far);
    assert!((report.max_modulus_far - 9.974420686125913e-1).abs() < 1e-12);
}

#[test]
fn peak_spec_validation() {
    let bad = PeakSampleSpec { count: 0, ..PeakSampleSpec::default() };
    assert!(bad.validate().is_err());
    let bad = PeakSampleSpec { min_distance: 0.9, radius: 0.5, ..PeakSampleSpec::default() };
    assert!(bad.validate().is_err());
    let bad = PeakSampleSpec { radius: -1.0, ..PeakSampleSpec::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn fd_provenance_only_functions_support_the_full_pipeline() {
    let f = DefiningFunction::from_evaluator("sphere_fd", |z: Complex64, w: Complex64| {
        z.norm_sqr() + w.norm_sqr() - 1.0
    });
    assert_eq!(f.provenance(), Provenance::FiniteDifference);
    let sampler = SurfaceSampler::new([c(0.4, 0.0), c(0.5, 0.0)], 0.6, 32, 9);
    let verdict = is_levi_flat(&f, &sampler, 1e-8).unwrap();
    assert!(!verdict.flat);
    assert!((verdict.worst_value - 1.0).abs() < 1e-5);
}
