//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use num_complex::Complex64;
use slag_core::catalog::blocks::default_block;
use slag_core::catalog::{build_immersion, CaseName, Sign};
use slag_core::frame::*;
use slag_core::kfield::constraints::{local_residual, N_LOCAL};
use slag_core::kfield::newton::newton_run;
use slag_core::kfield::{constant_solution, field_sample, Bc, Grid, KFields, KJet2, NewtonOptions, SystemId};
use slag_core::structure::{codazzi_residual, gauss_system_residual};

pub fn cp1_source() -> ImmersionSource {
    let case = CaseName::Cp1;
    let block = default_block(case.block_kind()).unwrap();
    ImmersionSource::new(build_immersion(case, &block).unwrap()).unwrap()
}

/// Max distance between the aligned reconstruction and the immersion.
pub fn alignment_error(src: &ImmersionSource, rec: &DiscreteImmersion) -> f64 {
    let p0 = rec.grid.point([0; 4]);
    let map = alignment_map(&rec.states[0], &src.state(&p0).unwrap()).unwrap();
    (0..rec.grid.len())
        .map(|i| {
            let p = rec.grid.point(rec.grid.multi(i));
            let exact = src.imm.value_unchecked(&p).unwrap();
            map.apply_point(&rec.states[i].f)
                .axpy((-1.0).into(), &exact)
                .coord_norm()
        })
        .fold(0.0, f64::max)
}

/// Endpoint errors of single-path reconstructions of cp1 with n steps per axis.
pub fn cp1_endpoint_errors(ns: &[usize]) -> Vec<f64> {
    let src = cp1_source();
    let init = FrameState::standard(&src.ambient()).unwrap();
    let span = 0.5;
    ns.iter()
        .map(|&n| {
            let h = span / n as f64;
            let grid = ReconstructionGrid::new([-0.2, 0.5, -0.3, -0.2], [h; 4], [n + 1; 4]);
            let end = integrate_path(&src, &grid, grid.schedule, &init, &IntegrateOptions::default()).unwrap();
            let map = alignment_map(&init, &src.state(&grid.point([0; 4])).unwrap()).unwrap();
            let exact = src.imm.value_unchecked(&grid.point([n; 4])).unwrap();
            map.apply_point(&end.f).axpy((-1.0).into(), &exact).coord_norm()
        })
        .collect()
}

pub fn solved_cpk2(n: usize) -> KFields {
    let c = constant_solution(SystemId::Cpk2).unwrap();
    let g = Grid {
        nu: n + 1,
        nv: n + 1,
        hu: 0.5 / n as f64,
        hv: 0.5 / n as f64,
        u0: 0.0,
        v0: 0.0,
    };
    let k0 = KFields::from_fn(g, Bc::Dirichlet, |u, v| {
        [
            c[0] + 0.1 * (u * u - v * v) + 0.05 * u * v,
            c[1] + 0.1 * (u + 2.0 * v).sin() * u,
            0.0,
            0.0,
        ]
    });
    let rep = newton_run(SystemId::Cpk2, &k0, &NewtonOptions::default());
    assert!(rep.converged, "{:?}", rep.error);
    rep.fields
}

/// Second-order jet at (0, 0) satisfying `sys` pointwise, built from a
/// seed and then corrected through the unit-coefficient unknowns.
pub fn compatible_jet(sys: SystemId, seed: [[f64; 6]; 4]) -> KJet2 {
    let mut k = seed;
    let locals = |k: &[[f64; 6]; 4]| -> [Complex64; N_LOCAL] {
        [
            k[0][0],
            k[1][0],
            k[2][0],
            k[3][0],
            k[0][1],
            k[0][2],
            k[2][1],
            k[2][2],
            k[3][1],
            k[3][2],
            k[0][3] + k[0][5],
            k[1][3] + k[1][5],
        ]
        .map(|x| Complex64::new(x, 0.0))
    };
    if sys.n_fields() == 2 {
        k[2..].fill([0.0; 6]);
    }
    let r = local_residual(sys, &locals(&k));
    k[0][5] -= r[0].re;
    k[1][5] -= r[1].re;
    if sys.n_fields() == 4 {
        k[3][1] -= r[2].re;
        k[3][2] -= r[3].re;
    }
    let check = local_residual(sys, &locals(&k));
    assert!(check.iter().all(|x| x.norm() < 1e-13), "{sys}: {check:?}");
    KJet2 { k }
}

/// Smooth field whose 2-jet at the origin is `jet`, plus higher-order terms.
pub fn field_from_jet(jet: &KJet2, grid: Grid) -> KFields {
    KFields::from_fn(grid, Bc::Dirichlet, |u, v| {
        std::array::from_fn(|m| {
            let j = jet.k[m];
            let c = 0.3 + 0.1 * m as f64;
            j[0] + j[1] * u
                + j[2] * v
                + 0.5 * j[3] * u * u
                + j[4] * u * v
                + 0.5 * j[5] * v * v
                + c * (u * u * u - 2.0 * u * v * v)
                + 0.2 * (u * u * v * v)
                + 0.1 * (3.0 * v).sin().powi(3)
                + 0.1 * ((2.0 * u + v).cos() - 1.0 + 0.5 * (2.0 * u + v).powi(2))
        })
    })
}

pub fn gauss_max(sys: SystemId, jet: &KJet2) -> f64 {
    let mut worst = 0.0f64;
    for sign in [Sign::Plus, Sign::Minus] {
        for (s, t) in [(0.3, 0.4), (-0.2, 0.7), (0.45, 0.55)] {
            let (fs, _) = field_sample(sys, sign, jet, s, t).unwrap();
            let g = gauss_system_residual(&fs, sys.epsilon() as f64);
            let c = codazzi_residual(&fs);
            worst = g.iter().chain(c.iter()).fold(worst, |m, x| m.max(x.abs()));
        }
    }
    worst
}
