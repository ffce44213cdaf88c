mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use slag_core::catalog::Sign;
use slag_core::frame::*;
use slag_core::frame::{pattern_array, FrameData};
use slag_core::geometry::AmbientSpace;
use slag_core::geometry::CVector;
use slag_core::kfield::{constant_solution, Bc, Grid, KFields, SystemId};
use slag_core::Error;

#[test]
fn flat_oracle_is_exact() {
    let data = FrameData {
        e: std::array::from_fn(|a| std::array::from_fn(|i| if a == i { 1.0 } else { 0.0 })),
        gamma: [[[0.0; 4]; 4]; 4],
        c: pattern_array(0.0),
    };
    let amb = AmbientSpace::flat(4);
    let src = FixedSource { data, ambient: amb };
    let grid = ReconstructionGrid::new([0.0; 4], [0.1, 0.2, -0.3, 0.25], [3, 4, 2, 5]);
    let init = FrameState::standard(&amb).unwrap();
    let rec = integrate_frame(&src, &grid, &init, &IntegrateOptions::default()).unwrap();
    for i in 0..grid.len() {
        let p = grid.point(grid.multi(i));
        for (z, x) in rec.states[i].f.z.iter().zip(p) {
            assert!((z - Complex64::new(x, 0.0)).norm() < 1e-15);
        }
    }
    assert_eq!(rec.max_drift, 0.0);
    assert_eq!(compatibility_check(&src, &grid, &init).unwrap(), 0.0);
    let cert = certify_reconstruction(&rec.sampled(), &Default::default());
    assert!(cert.residuals.kahler_max < 1e-12 && cert.residuals.minimality_max < 1e-12);
}

#[test]
fn cp1_reconstruction_matches_closed_form() {
    let src = cp1_source();
    let h = 1.0 / 64.0;
    let grid = ReconstructionGrid::new([-0.1, 0.6, -0.1, -0.1], [h; 4], [9; 4]);
    let init = FrameState::standard(&src.ambient()).unwrap();
    let rec = integrate_frame(&src, &grid, &init, &IntegrateOptions::default()).unwrap();
    let err = alignment_error(&src, &rec);
    assert!(err < 1e-5, "alignment error {err:e}");
    assert!(rec.max_drift < 1e-10);
    let cert = certify_reconstruction(&rec.sampled(), &Default::default());
    let r = &cert.residuals;
    for v in [
        r.kahler_max,
        r.minimality_max,
        r.shape_max,
        r.horizontality_max,
        r.lift_norm_max,
    ] {
        assert!(v < 1e-4, "{r:?}");
    }
    assert!(r.r_min > 0.0);
}

#[test]
fn cp1_endpoint_order_is_four() {
    let errs = cp1_endpoint_errors(&[4, 8, 16, 32]);
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.2, "{errs:?}");
    }
}

fn cpk2_compat(n: usize, shift: f64) -> f64 {
    let mut c = constant_solution(SystemId::Cpk2).unwrap();
    c[1] += shift;
    // the k-grid has half the reconstruction step so RK4 midpoints are nodes
    let h = 0.4 / n as f64;
    let g = Grid {
        nu: 2 * n + 3,
        nv: 2 * n + 3,
        hu: h / 2.0,
        hv: h / 2.0,
        u0: -h / 2.0,
        v0: -h / 2.0,
    };
    let k = KFields::constant(g, Bc::Dirichlet, c);
    let src = GenericSource::new(SystemId::Cpk2, Sign::Plus, k);
    let grid = ReconstructionGrid::new([0.3, 0.2, 0.0, 0.0], [h; 4], [n + 1; 4]);
    let init = FrameState::standard(&src.ambient()).unwrap();
    compatibility_check(&src, &grid, &init).unwrap()
}

#[test]
fn cpk2_constant_compatibility_is_quartic() {
    let exact: Vec<f64> = [4, 8, 16].iter().map(|&n| cpk2_compat(n, 0.0)).collect();
    for w in exact.windows(2) {
        assert!(((w[0] / w[1]).log2() - 4.0).abs() < 0.3, "{exact:?}");
    }
    let bad: Vec<f64> = [4, 8, 16].iter().map(|&n| cpk2_compat(n, 0.1)).collect();
    for w in bad.windows(2) {
        assert!((w[0] / w[1] - 1.0).abs() < 0.05, "{bad:?}");
    }
    assert!(bad[2] > 1e-2);
}

#[test]
fn solved_cpk2_compatibility_converges() {
    let mut good = vec![];
    let mut bad = vec![];
    for n in [20, 40, 80] {
        let k = solved_cpk2(n);
        let h = 1.0 / n as f64;
        let m = (0.3 * n as f64).round() as usize + 1;
        let mut kc = k.clone();
        for x in kc.k[1].iter_mut() {
            *x += 0.1;
        }
        let grid = ReconstructionGrid::new([0.3, 0.2, 0.1, 0.1], [h; 4], [m; 4]);
        let src = GenericSource::new(SystemId::Cpk2, Sign::Plus, k);
        let corrupted = GenericSource::new(SystemId::Cpk2, Sign::Plus, kc);
        let init = FrameState::standard(&src.ambient()).unwrap();
        good.push(compatibility_check(&src, &grid, &init).unwrap());
        bad.push(compatibility_check(&corrupted, &grid, &init).unwrap());
    }
    // FD jets make the solved fields compatible to second order
    for w in good.windows(2) {
        assert!(w[0] / w[1] > 3.5, "{good:?}");
    }
    for w in bad.windows(2) {
        assert!((w[0] / w[1] - 1.0).abs() < 0.05, "{bad:?}");
    }
    assert!(bad[2] > 1e3 * good[2]);
}

#[test]
fn generic_reconstruction_of_corrupted_fields_is_reported() {
    let n = 8;
    let h = 1.0 / 64.0;
    let g = Grid {
        nu: 2 * n + 3,
        nv: 2 * n + 3,
        hu: h / 2.0,
        hv: h / 2.0,
        u0: -h / 2.0,
        v0: -h / 2.0,
    };
    let mut c = constant_solution(SystemId::Cpk2).unwrap();
    let exact = GenericSource::new(SystemId::Cpk2, Sign::Plus, KFields::constant(g, Bc::Dirichlet, c));
    c[1] += 0.1;
    let corrupted = GenericSource::new(SystemId::Cpk2, Sign::Plus, KFields::constant(g, Bc::Dirichlet, c));
    let grid = ReconstructionGrid::new([0.3, 0.2, 0.0, 0.0], [h; 4], [7; 4]);
    let init = FrameState::standard(&exact.ambient()).unwrap();
    let opts = IntegrateOptions::default();
    let good = integrate_frame(&exact, &grid, &init, &opts).unwrap();
    let cert = certify_reconstruction(&good.sampled(), &Default::default());
    assert!(
        cert.residuals.kahler_max < 1e-6 && cert.residuals.minimality_max < 1e-5,
        "{:?}",
        cert.residuals
    );
    assert!(cert.residuals.r_min > 0.0, "{:?}", cert);
    // the corrupted frame still integrates (invariants are preserved along
    // lines), only the checks see the inconsistency
    let rec = integrate_frame(&corrupted, &grid, &init, &opts).unwrap();
    let cert = certify_reconstruction(&rec.sampled(), &Default::default());
    assert!(cert.residuals.kahler_max > 1e3 * good.max_drift.max(1e-12));
}

#[test]
fn drift_and_bad_init_are_errors() {
    let amb = AmbientSpace::flat(4);
    let mut data = FrameData {
        e: std::array::from_fn(|a| std::array::from_fn(|i| if a == i { 1.0 } else { 0.0 })),
        gamma: [[[0.0; 4]; 4]; 4],
        c: pattern_array(0.0),
    };
    // a symmetric connection term stretches X₁
    data.gamma[0][0][0] = 1.0;
    let src = FixedSource { data, ambient: amb };
    let grid = ReconstructionGrid::new([0.0; 4], [0.1; 4], [3, 1, 1, 1]);
    let init = FrameState::standard(&amb).unwrap();
    let r = integrate_frame(&src, &grid, &init, &IntegrateOptions::default());
    assert!(
        matches!(r, Err(Error::InvariantDrift { ref node, .. }) if node == &vec![1, 0, 0, 0]),
        "{r:?}"
    );

    let mut off = init.clone();
    off.x[0].z[1] = Complex64::new(1e-6, 0.0);
    let r = integrate_frame(&src, &grid, &off, &IntegrateOptions::default());
    assert!(matches!(r, Err(Error::InvariantDrift { .. })));
}

#[test]
fn reprojection_keeps_drift_at_rounding() {
    let src = cp1_source();
    let init = FrameState::standard(&src.ambient()).unwrap();
    let grid = ReconstructionGrid::new([-0.1, 0.6, -0.1, -0.1], [0.1; 4], [5; 4]);
    let plain = integrate_frame(&src, &grid, &init, &IntegrateOptions::default()).unwrap();
    let opts = IntegrateOptions {
        reproject: true,
        ..Default::default()
    };
    let proj = integrate_frame(&src, &grid, &init, &opts).unwrap();
    assert!(proj.reprojected && !plain.reprojected);
    assert!(plain.max_drift > 1e-9);
    assert!(proj.states.iter().all(|s| s.invariant_residual(1) < 1e-13));
}

#[test]
fn single_node_grid_is_compatible() {
    let src = cp1_source();
    let init = FrameState::standard(&src.ambient()).unwrap();
    let grid = ReconstructionGrid::new([0.0, 0.6, 0.0, 0.0], [0.1; 4], [1; 4]);
    assert_eq!(compatibility_check(&src, &grid, &init).unwrap(), 0.0);
}

fn random_unitary(seed: u64) -> nalgebra::DMatrix<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = nalgebra::DMatrix::from_fn(5, 5, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    m.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn isometric_initial_frames_give_congruent_immersions(seed in 0u64..1000) {
        let src = cp1_source();
        let grid = ReconstructionGrid::new([0.0, 0.7, 0.1, -0.2], [0.05; 4], [3; 4]);
        let init = FrameState::standard(&src.ambient()).unwrap();
        let u = random_unitary(seed);
        let rot = |v: &CVector| CVector::new((&u * nalgebra::DVector::from_column_slice(&v.z)).iter().copied().collect(), v.signature);
        let init2 = FrameState { f: rot(&init.f), x: std::array::from_fn(|i| rot(&init.x[i])) };
        let opts = IntegrateOptions::default();
        let a = integrate_frame(&src, &grid, &init, &opts).unwrap();
        let b = integrate_frame(&src, &grid, &init2, &opts).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert!(rot(&sa.f).axpy((-1.0).into(), &sb.f).coord_norm() < 1e-12);
        }
    }
}
