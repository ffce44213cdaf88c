//! Grid verification of a (case, block) pairing.

use rayon::prelude::*;
use serde::Serialize;

use super::blocks::BuildingBlock;
use super::cases::{build_immersion, CaseName};
use crate::error::{Error, Result};
use crate::geometry::fundamental::lift_residuals;
use crate::geometry::{
    canonicalize_cubic, evaluate_jet, kahler_form_restriction, minimality_residual, second_fundamental_a,
    symmetry_residual, Immersion, Jet2, LiftMode, SymmetryGenerators,
};
use crate::structure::curvature_identity_residual;

const GAUSS_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub kahler: f64,
    pub minimality: f64,
    pub symmetry: f64,
    pub shape: f64,
    pub horizontality: f64,
    pub lift_norm: f64,
    /// Finite-difference Gauss identity check; looser by construction.
    pub gauss: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kahler: 1e-8,
            minimality: 1e-8,
            symmetry: 1e-8,
            shape: 1e-8,
            horizontality: 1e-8,
            lift_norm: 1e-8,
            gauss: 1e-4,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Residuals {
    pub kahler_max: f64,
    pub minimality_max: f64,
    pub symmetry_max: f64,
    pub horizontality_max: f64,
    pub shape_max: f64,
    pub lift_norm_max: f64,
    pub gauss_max: f64,
    pub r_min: f64,
}

/// Largest value of one residual and where it occurred.
#[derive(Clone, Debug, Serialize)]
pub struct Worst {
    pub name: String,
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub case: String,
    pub epsilon: i8,
    pub grid: usize,
    pub residuals: Residuals,
    pub passed: bool,
    /// Residuals above tolerance, with their argmax point.
    pub failures: Vec<Worst>,
    /// Errors raised at individual points (the sweep continues past them).
    pub errors: Vec<String>,
}

#[derive(Default)]
pub(crate) struct PointResult {
    vals: [f64; 7],
    r: f64,
    error: Option<String>,
}

const NAMES: [&str; 7] = [
    "kahler",
    "minimality",
    "symmetry",
    "horizontality",
    "shape",
    "lift_norm",
    "gauss",
];

fn check_point(imm: &Immersion, p: &[f64], gens: &SymmetryGenerators) -> PointResult {
    match evaluate_jet(imm, p) {
        Ok(jet) => check_jet(&jet, imm.ambient.lift_mode(), gens),
        Err(e) => PointResult {
            r: f64::NAN,
            error: Some(e.to_string()),
            ..Default::default()
        },
    }
}

/// Pointwise checks on a second-order jet, however it was obtained.
pub(crate) fn check_jet(jet: &Jet2, lift: LiftMode, gens: &SymmetryGenerators) -> PointResult {
    let mut out = PointResult {
        r: f64::NAN,
        ..Default::default()
    };
    out.vals[0] = kahler_form_restriction(jet).amax();
    let (norm, horiz) = lift_residuals(jet, lift);
    out.vals[3] = horiz;
    out.vals[5] = norm;
    let res = (|| -> Result<()> {
        let (g, c) = second_fundamental_a(jet, lift)?;
        out.vals[1] = minimality_residual(&g, &c)?;
        match canonicalize_cubic(&g, &c) {
            Ok(f) => {
                out.vals[4] = f.shape_residual;
                out.r = f.r;
                out.vals[2] = symmetry_residual(&g, &c, gens)?;
            }
            Err(Error::DegenerateCubic) => out.r = 0.0,
            Err(e) => return Err(e),
        }
        Ok(())
    })();
    if let Err(e) = res {
        out.error = Some(e.to_string());
    }
    out
}

/// Runs the verification suite for `case` over `block` on an `n`-per-axis
/// grid. Never aborts mid-sweep: per-point failures are collected.
pub fn verify_case(case: CaseName, block: &BuildingBlock, n: usize, tol: &Tolerances) -> Result<VerificationReport> {
    let imm = build_immersion(case, block)?;
    verify_immersion(&imm, case.id(), n, tol)
}

pub fn verify_immersion(imm: &Immersion, name: &str, n: usize, tol: &Tolerances) -> Result<VerificationReport> {
    let gens = SymmetryGenerators::default();
    let pts = imm.domain.grid(n);
    let results: Vec<PointResult> = pts.par_iter().map(|p| check_point(imm, p, &gens)).collect();

    // the Gauss identity uses finite differences, so it is sampled at the
    // center only, with a step well inside the box
    let c = imm.domain.center();
    let gauss = curvature_identity_residual(imm, &c, GAUSS_STEP).map(|v| (v, c));
    Ok(summarize(
        name,
        imm.ambient.epsilon,
        n,
        &pts,
        &results,
        Some(gauss),
        tol,
    ))
}

/// Folds pointwise results into a report. `gauss = None` skips the
/// curvature identity (its value is reported as 0).
pub(crate) fn summarize(
    name: &str,
    epsilon: i8,
    n: usize,
    pts: &[Vec<f64>],
    results: &[PointResult],
    gauss: Option<Result<(f64, Vec<f64>)>>,
    tol: &Tolerances,
) -> VerificationReport {
    let mut worst: Vec<Worst> = NAMES
        .iter()
        .map(|s| Worst {
            name: s.to_string(),
            value: 0.0,
            point: vec![],
        })
        .collect();
    let mut errors = Vec::new();
    let mut r_min = f64::INFINITY;
    for (p, res) in pts.iter().zip(results) {
        for (w, &v) in worst.iter_mut().zip(&res.vals) {
            // NaN counts as a violation
            if !(v <= w.value) {
                w.value = if v.is_nan() { f64::INFINITY } else { v };
                w.point = p.clone();
            }
        }
        if !res.r.is_nan() {
            r_min = r_min.min(res.r);
        }
        if let Some(e) = &res.error {
            errors.push(format!("{p:?}: {e}"));
        }
    }
    match gauss {
        Some(Ok((v, c))) => {
            worst[6].value = v;
            worst[6].point = c;
        }
        Some(Err(e)) => errors.push(format!("gauss identity: {e}")),
        None => {}
    }

    let limits = [
        tol.kahler,
        tol.minimality,
        tol.symmetry,
        tol.horizontality,
        tol.shape,
        tol.lift_norm,
        tol.gauss,
    ];
    let failures: Vec<Worst> = worst
        .iter()
        .zip(limits)
        .filter(|(w, l)| !(w.value < *l))
        .map(|(w, _)| w.clone())
        .collect();
    let residuals = Residuals {
        kahler_max: worst[0].value,
        minimality_max: worst[1].value,
        symmetry_max: worst[2].value,
        horizontality_max: worst[3].value,
        shape_max: worst[4].value,
        lift_norm_max: worst[5].value,
        gauss_max: worst[6].value,
        r_min: if r_min.is_finite() { r_min } else { 0.0 },
    };
    let passed = failures.is_empty() && errors.is_empty() && residuals.r_min > 0.0;
    VerificationReport {
        case: name.to_string(),
        epsilon,
        grid: n,
        residuals,
        passed,
        failures,
        errors,
    }
}
