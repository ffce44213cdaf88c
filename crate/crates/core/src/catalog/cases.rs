//! The twelve explicit 4-fold constructions and their registry.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::blocks::{BlockKind, BuildingBlock};
use crate::error::{Error, Result};
use crate::geometry::expr::PathPotential;
use crate::geometry::{AmbientSpace, Expr, Immersion, ParamBox, Signature};

/// Sub-branch selected by the solution of the first-order ODE for a₂ or a₃
/// when ε = −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubBranch {
    Plain,
    Tanh,
    Coth,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(&self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "+1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            _ => Err(Error::Parse {
                pos: 0,
                msg: format!("bad sign '{s}'"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "sub")]
pub enum Branch {
    B2zeroA2nonzero(SubBranch),
    B2zeroA2zero,
    NplusA3zero,
    NplusA3nonzero(SubBranch),
    GenericZregular,
    GenericZsingular(Sign),
}

/// Identifiers of the explicit constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    /// (t, sφ(u,v)) in ℂ⁴
    C1,
    /// (t, s, φ(u,v)) in ℂ⁴
    C2,
    /// (t, ψ(s,u,v)) in ℂ⁴
    C3,
    /// tφ(s,u,v) in ℂ⁴
    C4,
    Cp1,
    Cp2,
    Ch1,
    Ch12,
    Ch2,
    Ch3,
    Ch32,
    Ch4,
}

pub const ALL_CASES: [CaseName; 12] = [
    CaseName::C1,
    CaseName::C2,
    CaseName::C3,
    CaseName::C4,
    CaseName::Cp1,
    CaseName::Cp2,
    CaseName::Ch1,
    CaseName::Ch12,
    CaseName::Ch2,
    CaseName::Ch3,
    CaseName::Ch32,
    CaseName::Ch4,
];

impl CaseName {
    pub fn id(&self) -> &'static str {
        match self {
            CaseName::C1 => "c1",
            CaseName::C2 => "c2",
            CaseName::C3 => "c3",
            CaseName::C4 => "c4",
            CaseName::Cp1 => "cp1",
            CaseName::Cp2 => "cp2",
            CaseName::Ch1 => "ch1",
            CaseName::Ch12 => "ch12",
            CaseName::Ch2 => "ch2",
            CaseName::Ch3 => "ch3",
            CaseName::Ch32 => "ch32",
            CaseName::Ch4 => "ch4",
        }
    }

    pub fn case_id(&self) -> CaseId {
        use Branch::*;
        use SubBranch::*;
        let (epsilon, branch) = match self {
            CaseName::C1 => (0, B2zeroA2nonzero(Plain)),
            CaseName::C2 => (0, B2zeroA2zero),
            CaseName::C3 => (0, NplusA3zero),
            CaseName::C4 => (0, NplusA3nonzero(Plain)),
            CaseName::Cp1 => (1, B2zeroA2nonzero(Plain)),
            CaseName::Cp2 => (1, NplusA3nonzero(Plain)),
            CaseName::Ch1 => (-1, B2zeroA2nonzero(Tanh)),
            CaseName::Ch12 => (-1, B2zeroA2nonzero(Coth)),
            CaseName::Ch2 => (-1, B2zeroA2nonzero(Exp)),
            CaseName::Ch3 => (-1, NplusA3nonzero(Tanh)),
            CaseName::Ch32 => (-1, NplusA3nonzero(Coth)),
            CaseName::Ch4 => (-1, NplusA3nonzero(Exp)),
        };
        CaseId { epsilon, branch }
    }

    pub fn block_kind(&self) -> BlockKind {
        match self {
            CaseName::C1 | CaseName::Cp1 | CaseName::Ch12 => BlockKind::LegendrianS5,
            CaseName::C2 | CaseName::Ch2 => BlockKind::SlagSurfaceC2,
            CaseName::C3 | CaseName::Ch4 => BlockKind::Slag3C3,
            CaseName::C4 | CaseName::Cp2 | CaseName::Ch32 => BlockKind::LegendrianS7,
            CaseName::Ch1 => BlockKind::LegendrianH5,
            CaseName::Ch3 => BlockKind::LegendrianH7,
        }
    }

    /// Box for the (t, s) coordinates; (u, v) or (s, u, v) come from the block.
    fn outer_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            CaseName::C1 => (vec![-1.0, 0.5], vec![1.0, 1.5]),
            CaseName::C2 => (vec![-1.0, -1.0], vec![1.0, 1.0]),
            CaseName::C3 | CaseName::Cp2 | CaseName::Ch3 | CaseName::Ch4 => (vec![-0.6], vec![0.6]),
            CaseName::C4 => (vec![0.5], vec![1.5]),
            CaseName::Cp1 => (vec![-1.0, 0.3], vec![1.0, 1.2]),
            CaseName::Ch1 | CaseName::Ch12 => (vec![-1.0, 0.3], vec![1.0, 1.2]),
            CaseName::Ch2 => (vec![-1.0, -0.6], vec![1.0, 0.6]),
            CaseName::Ch32 => (vec![0.3], vec![1.2]),
        }
    }

    pub fn domain(&self, block: &BuildingBlock) -> ParamBox {
        let (mut lo, mut hi) = self.outer_box();
        lo.extend(&block.imm.domain.lo);
        hi.extend(&block.imm.domain.hi);
        ParamBox::new(lo, hi)
    }

    pub fn ambient(&self) -> AmbientSpace {
        let eps = self.case_id().epsilon;
        let sig = match self {
            CaseName::Ch1 => Signature::Timelike(2),
            CaseName::Ch12 => Signature::Timelike(3),
            CaseName::Ch3 => Signature::Timelike(2),
            CaseName::Ch32 => Signature::Timelike(4),
            CaseName::Ch2 | CaseName::Ch4 => Signature::NullPair(3, 4),
            _ => Signature::Euclidean,
        };
        let dim = if eps == 0 { 4 } else { 5 };
        AmbientSpace {
            epsilon: eps,
            complex_dim: dim,
            signature: sig,
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for CaseName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_CASES
            .iter()
            .copied()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("unknown case '{s}'"),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseId {
    pub epsilon: i8,
    pub branch: Branch,
}

impl CaseId {
    /// Whether `branch` is admissible for `epsilon`.
    pub fn is_valid(&self) -> bool {
        use Branch::*;
        use SubBranch::*;
        match (self.epsilon, self.branch) {
            (0, B2zeroA2zero) | (0, NplusA3zero) => true,
            (e, B2zeroA2nonzero(Plain)) | (e, NplusA3nonzero(Plain)) => e == 0 || e == 1,
            (-1, B2zeroA2nonzero(_)) | (-1, NplusA3nonzero(_)) => true,
            (_, GenericZregular) | (_, GenericZsingular(_)) => true,
            _ => false,
        }
    }
}

/// One row of the JSON registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub case: String,
    pub epsilon: i8,
    pub branch: Branch,
    pub block_kind: BlockKind,
    pub domain: ParamBox,
}

pub const POTENTIAL_TOL: f64 = 1e-8;

/// Plain conversion of a real expression into its real and imaginary parts.
fn re_im(e: &Expr) -> (Expr, Expr) {
    (e.re(), e.im())
}

/// Potential f with df = 2 Σ (x dy − y dx) pulled back to the block's
/// parameters, integrated from the lower corner of its box.
pub fn horosphere_potential(block: &BuildingBlock) -> Arc<PathPotential> {
    let n = block.imm.n_params;
    let forms = (0..n)
        .map(|k| {
            let mut acc = Expr::c(0.0);
            for c in &block.imm.components {
                let (x, y) = re_im(c);
                let d = c.diff(k);
                acc = acc + 2.0 * (x * d.im() - y * d.re());
            }
            acc
        })
        .collect();
    Arc::new(PathPotential::new(forms, block.imm.domain.lo.clone()))
}

/// Path independence of the potential at the far corner and the center.
fn check_closed(pot: &PathPotential, dom: &ParamBox) -> Result<()> {
    for x in [dom.hi.clone(), dom.center()] {
        let mismatch = pot.path_mismatch(&x)?;
        if !(mismatch <= POTENTIAL_TOL) {
            return Err(Error::PotentialNotClosed { mismatch });
        }
    }
    Ok(())
}

/// Assembles the 4-fold immersion of `case` over `block`.
pub fn build_immersion(case: CaseName, block: &BuildingBlock) -> Result<Immersion> {
    if block.kind != case.block_kind() {
        return Err(Error::BlockMismatch {
            expected: format!("{:?}", case.block_kind()),
            got: format!("{:?}", block.kind),
        });
    }
    let t = Expr::param(0);
    let s = Expr::param(1);
    // block parameters live in the trailing slots
    let offset = 4 - block.imm.n_params;
    let args: Vec<Expr> = (0..block.imm.n_params).map(|i| Expr::param(i + offset)).collect();
    let phi: Vec<Expr> = block.imm.components.iter().map(|c| c.subst(&args)).collect();
    let scale = |k: &Expr| phi.iter().map(|c| c * k).collect::<Vec<_>>();
    let comps: Vec<Expr> = match case {
        CaseName::C1 => [vec![t], scale(&s)].concat(),
        CaseName::C2 => [vec![t, s], phi.clone()].concat(),
        CaseName::C3 => [vec![t], phi.clone()].concat(),
        CaseName::C4 => scale(&t),
        CaseName::Cp1 => [scale(&s.cos()), vec![s.sin() * t.cos(), s.sin() * t.sin()]].concat(),
        CaseName::Cp2 => [scale(&t.cos()), vec![t.sin()]].concat(),
        CaseName::Ch1 => [vec![t.sin() * s.sinh(), t.cos() * s.sinh()], scale(&s.cosh())].concat(),
        CaseName::Ch12 => [scale(&s.sinh()), vec![t.cosh() * s.cosh(), t.sinh() * s.cosh()]].concat(),
        CaseName::Ch3 => [vec![t.sinh()], scale(&t.cosh())].concat(),
        CaseName::Ch32 => [scale(&t.sinh()), vec![t.cosh()]].concat(),
        CaseName::Ch2 | CaseName::Ch4 => {
            // (ψ e^{−σ}, −e^{−σ}/2, (‖ψ‖² + i f) e^{−σ} + e^{σ}) with ψ = (φ, t)
            // for the surface case (σ = s) and ψ = φ for the 3-fold case (σ = t)
            let (psi, sigma) = if case == CaseName::Ch2 {
                ([phi.clone(), vec![t.clone()]].concat(), s.clone())
            } else {
                (phi.clone(), t.clone())
            };
            let pot = horosphere_potential(block);
            check_closed(&pot, &block.imm.domain)?;
            let f = Expr::potential(pot, args.clone());
            let mut norm = Expr::c(0.0);
            for c in &psi {
                norm = norm + c * &c.conj();
            }
            let em = (-sigma.clone()).exp();
            let mut out: Vec<Expr> = psi.iter().map(|c| c * &em).collect();
            out.push(-0.5 * em.clone());
            out.push((norm + Expr::i() * f) * em + sigma.exp());
            out
        }
    };
    Immersion::new(case.id(), comps, case.domain(block), case.ambient())
}
