//! Lower-dimensional building blocks consumed by the 4-fold constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fundamental::lift_residuals;
use crate::geometry::{
    canonicalize_cubic, evaluate_jet, kahler_form_restriction, minimality_residual, second_fundamental_a, AmbientSpace,
    Expr, HolomorphicFn, Immersion, ParamBox, Signature,
};

/// Certification grid density (samples per axis).
pub const CERT_GRID: usize = 9;
/// Residual bound used when certifying a block.
pub const CERT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    SlagSurfaceC2,
    LegendrianS5,
    LegendrianH5,
    Slag3C3,
    LegendrianS7,
    LegendrianH7,
}

impl BlockKind {
    pub fn n_params(&self) -> usize {
        match self {
            BlockKind::SlagSurfaceC2 | BlockKind::LegendrianS5 | BlockKind::LegendrianH5 => 2,
            _ => 3,
        }
    }

    pub fn complex_dim(&self) -> usize {
        match self {
            BlockKind::SlagSurfaceC2 => 2,
            BlockKind::LegendrianS5 | BlockKind::LegendrianH5 | BlockKind::Slag3C3 => 3,
            BlockKind::LegendrianS7 | BlockKind::LegendrianH7 => 4,
        }
    }

    pub fn epsilon(&self) -> i8 {
        match self {
            BlockKind::SlagSurfaceC2 | BlockKind::Slag3C3 => 0,
            BlockKind::LegendrianS5 | BlockKind::LegendrianS7 => 1,
            BlockKind::LegendrianH5 | BlockKind::LegendrianH7 => -1,
        }
    }
}

/// A certified (or flagged) immersion of 2 or 3 parameters.
#[derive(Clone, Debug)]
pub struct BuildingBlock {
    pub kind: BlockKind,
    pub imm: Immersion,
    /// Vanishing cubic form: usable, but the composed 4-fold has r = 0.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BlockReport {
    pub kahler_max: f64,
    pub minimality_max: f64,
    pub lift_norm_max: f64,
    pub horizontality_max: f64,
    pub shape_max: f64,
    pub r_min: f64,
    pub points: usize,
}

impl BuildingBlock {
    pub fn new(
        kind: BlockKind,
        name: &str,
        components: Vec<Expr>,
        domain: ParamBox,
        signature: Signature,
    ) -> Result<Self> {
        if domain.dim() != kind.n_params() {
            return Err(Error::DimensionMismatch {
                expected: kind.n_params(),
                got: domain.dim(),
            });
        }
        let ambient = AmbientSpace::new(kind.epsilon(), kind.complex_dim(), signature)?;
        let imm = Immersion::new(name, components, domain, ambient)?;
        Ok(BuildingBlock {
            kind,
            imm,
            degenerate: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.imm.name
    }

    /// Runs the block's verification suite on an `n`-per-axis grid.
    pub fn check(&self, n: usize) -> Result<BlockReport> {
        let lift = self.imm.ambient.lift_mode();
        let mut rep = BlockReport {
            r_min: f64::INFINITY,
            ..Default::default()
        };
        for p in self.imm.domain.grid(n) {
            let jet = evaluate_jet(&self.imm, &p)?;
            rep.kahler_max = rep.kahler_max.max(kahler_form_restriction(&jet).amax());
            let (norm, horiz) = lift_residuals(&jet, lift);
            rep.lift_norm_max = rep.lift_norm_max.max(norm);
            rep.horizontality_max = rep.horizontality_max.max(horiz);
            let (g, c) = second_fundamental_a(&jet, lift)?;
            rep.minimality_max = rep.minimality_max.max(minimality_residual(&g, &c)?);
            match canonicalize_cubic(&g, &c) {
                Ok(f) => {
                    rep.shape_max = rep.shape_max.max(f.shape_residual);
                    rep.r_min = rep.r_min.min(f.r);
                }
                Err(Error::DegenerateCubic) => rep.r_min = 0.0,
                Err(e) => return Err(e),
            }
            rep.points += 1;
        }
        Ok(rep)
    }

    /// Certifies the block at registration; marks it degenerate when its
    /// cubic form vanishes identically.
    pub fn certify(mut self) -> Result<Self> {
        let fail = |reason: String| Error::CertificationFailed {
            name: self.imm.name.clone(),
            reason,
        };
        let rep = self.check(CERT_GRID).map_err(|e| fail(e.to_string()))?;
        let worst = [
            ("kahler", rep.kahler_max),
            ("minimality", rep.minimality_max),
            ("lift norm", rep.lift_norm_max),
            ("horizontality", rep.horizontality_max),
            ("shape", rep.shape_max),
        ];
        for (what, v) in worst {
            if !(v < CERT_TOL) {
                return Err(fail(format!("{what} residual {v:e}")));
            }
        }
        self.degenerate = rep.r_min == 0.0;
        Ok(self)
    }
}

fn p(i: usize) -> Expr {
    Expr::param(i)
}

/// Special Lagrangian surface (x₁+iy₁, x₂+iy₂) from a holomorphic curve
/// w = f(u): x₁ = Re u, x₂ = −Im u, y₁ = Re f, y₂ = Im f.
pub fn holomorphic_to_slag(f: &HolomorphicFn, domain: ParamBox) -> Result<BuildingBlock> {
    let w = f.compose(p(0), p(1));
    let comps = vec![p(0) + Expr::i() * w.re(), -p(1) + Expr::i() * w.im()];
    let name = format!("holo[{}]", f.source);
    BuildingBlock::new(BlockKind::SlagSurfaceC2, &name, comps, domain, Signature::Euclidean)
}

/// Clifford torus 3^{−1/2}(e^{iu}, e^{iv}, e^{−i(u+v)}) in S⁵.
pub fn clifford_legendrian() -> Result<BuildingBlock> {
    let k = 3f64.sqrt().recip();
    let comps = vec![k * p(0).cis(), k * p(1).cis(), k * (-(p(0) + p(1))).cis()];
    BuildingBlock::new(
        BlockKind::LegendrianS5,
        "clifford",
        comps,
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        Signature::Euclidean,
    )
}

/// The cone s·φ over the Clifford torus, special Lagrangian in ℂ³.
pub fn legendrian_cone_3fold() -> Result<BuildingBlock> {
    let phi = clifford_legendrian()?;
    let args = [p(1), p(2)];
    let comps = phi.imm.components.iter().map(|c| p(0) * c.subst(&args)).collect();
    BuildingBlock::new(
        BlockKind::Slag3C3,
        "clifford_cone",
        comps,
        ParamBox::new(vec![0.5, -1.0, -1.0], vec![1.5, 1.0, 1.0]),
        Signature::Euclidean,
    )
}

/// (φ cos s, sin s) with φ the Clifford torus: a minimal Legendrian 3-fold in
/// S⁷ whose cone splits off a line.
pub fn legendrian_s7() -> Result<BuildingBlock> {
    let phi = clifford_legendrian()?;
    let args = [p(1), p(2)];
    let mut comps: Vec<Expr> = phi.imm.components.iter().map(|c| c.subst(&args) * p(0).cos()).collect();
    comps.push(p(0).sin());
    BuildingBlock::new(
        BlockKind::LegendrianS7,
        "clifford_join",
        comps,
        ParamBox::new(vec![-0.6, -1.0, -1.0], vec![0.6, 1.0, 1.0]),
        Signature::Euclidean,
    )
}

/// Horizontal minimal surface in H⁵ ⊂ ℂ³₁ (first slot timelike):
/// (√(2+5u²) e^{iv}, √(1+4u²) e^{2iv}, u e^{−3iv}).
///
/// The moduli satisfy −A² + B² + C² = −1 and −A² + 2B² − 3C² = 0 while the
/// phases sum to zero, which makes the cone special Lagrangian.
pub fn hyperbolic_surface() -> Result<BuildingBlock> {
    let a = (2.0 + 5.0 * p(0).powi(2)).sqrt();
    let b = (1.0 + 4.0 * p(0).powi(2)).sqrt();
    let comps = vec![a * p(1).cis(), b * (2.0 * p(1)).cis(), p(0) * (-3.0 * p(1)).cis()];
    BuildingBlock::new(
        BlockKind::LegendrianH5,
        "moment_surface",
        comps,
        ParamBox::new(vec![0.4, -1.0], vec![1.4, 1.0]),
        Signature::Timelike(0),
    )
}

/// Lift of a totally geodesic real hyperbolic plane; cubic form ≡ 0.
pub fn geodesic_h5() -> Result<BuildingBlock> {
    let comps = vec![p(0).cosh() * p(1).cosh(), p(0).sinh() * p(1).cosh(), p(1).sinh()];
    BuildingBlock::new(
        BlockKind::LegendrianH5,
        "geodesic_plane",
        comps,
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        Signature::Timelike(0),
    )
}

/// (sinh s, φ cosh s) with φ the H⁵ surface above.
pub fn legendrian_h7() -> Result<BuildingBlock> {
    let phi = hyperbolic_surface()?;
    let args = [p(1), p(2)];
    let mut comps = vec![p(0).sinh()];
    comps.extend(phi.imm.components.iter().map(|c| c.subst(&args) * p(0).cosh()));
    let mut lo = vec![-0.6];
    let mut hi = vec![0.6];
    lo.extend(&phi.imm.domain.lo);
    hi.extend(&phi.imm.domain.hi);
    BuildingBlock::new(
        BlockKind::LegendrianH7,
        "moment_join",
        comps,
        ParamBox::new(lo, hi),
        Signature::Timelike(1),
    )
}

/// Default surface block for the flat constructions: the curve w = u².
pub fn default_slag_surface() -> Result<BuildingBlock> {
    holomorphic_to_slag(
        &HolomorphicFn::parse("u^2")?,
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
    )
}

/// A deliberately non-Lagrangian surface: the complex line (u + iv, 0).
pub fn decoy_surface() -> Result<BuildingBlock> {
    let comps = vec![p(0) + Expr::i() * p(1), Expr::c(0.0) * p(0)];
    BuildingBlock::new(
        BlockKind::SlagSurfaceC2,
        "complex_line",
        comps,
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        Signature::Euclidean,
    )
}

pub fn default_block(kind: BlockKind) -> Result<BuildingBlock> {
    match kind {
        BlockKind::SlagSurfaceC2 => default_slag_surface(),
        BlockKind::LegendrianS5 => clifford_legendrian(),
        BlockKind::LegendrianH5 => hyperbolic_surface(),
        BlockKind::Slag3C3 => legendrian_cone_3fold(),
        BlockKind::LegendrianS7 => legendrian_s7(),
        BlockKind::LegendrianH7 => legendrian_h7(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn moduli_at(block: &BuildingBlock, x: &[f64]) -> Vec<f64> {
        block.imm.value(x).unwrap().z.iter().map(Complex64::norm_sqr).collect()
    }

    #[test]
    fn shipped_blocks_certify() {
        for kind in [
            BlockKind::SlagSurfaceC2,
            BlockKind::LegendrianS5,
            BlockKind::LegendrianH5,
            BlockKind::Slag3C3,
            BlockKind::LegendrianS7,
            BlockKind::LegendrianH7,
        ] {
            let b = default_block(kind).unwrap().certify().unwrap();
            assert!(!b.degenerate, "{}", b.name());
        }
    }

    #[test]
    fn geodesic_block_is_flagged_degenerate() {
        let b = geodesic_h5().unwrap().certify().unwrap();
        assert!(b.degenerate);
        let rep = b.check(5).unwrap();
        assert!(rep.kahler_max == 0.0 && rep.r_min == 0.0);
    }

    #[test]
    fn clifford_is_unit_and_horizontal() {
        let b = clifford_legendrian().unwrap();
        let rep = b.check(7).unwrap();
        assert!(rep.lift_norm_max < 1e-15);
        assert!(rep.horizontality_max < 1e-15);
    }

    #[test]
    fn hyperbolic_block_moduli() {
        let b = hyperbolic_surface().unwrap();
        for x in b.imm.domain.grid(4) {
            let m = moduli_at(&b, &x);
            assert!((-m[0] + m[1] + m[2] + 1.0).abs() < 1e-12);
            assert!((-m[0] + 2.0 * m[1] - 3.0 * m[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrangian_gradient_graph_is_not_minimal() {
        // graph of the gradient of x²y: Lagrangian, with mean curvature ∝ Δφ = 2y
        let comps = vec![
            p(0) + Expr::i() * (Expr::c(2.0) * p(0) * p(1)),
            p(1) + Expr::i() * (p(0) * p(0)),
        ];
        let b = BuildingBlock::new(
            BlockKind::SlagSurfaceC2,
            "gradient_graph",
            comps,
            ParamBox::new(vec![-0.5, 0.2], vec![0.5, 0.6]),
            Signature::Euclidean,
        )
        .unwrap();
        for x in b.imm.domain.grid(3) {
            let jet = evaluate_jet(&b.imm, &x).unwrap();
            assert!(kahler_form_restriction(&jet).amax() < 1e-14);
            let (g, c) = second_fundamental_a(&jet, b.imm.ambient.lift_mode()).unwrap();
            assert!(minimality_residual(&g, &c).unwrap() > 0.1);
        }
    }

    #[test]
    fn decoy_fails_certification() {
        let err = decoy_surface().unwrap().certify().unwrap_err();
        assert!(matches!(err, Error::CertificationFailed { .. }));
    }
}
