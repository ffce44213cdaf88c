//! Closed-form generic-branch fields and the constraint PDE systems for the
//! functions k₁..k₄ of (u, v).

pub mod closed_form;
pub mod constraints;
pub mod io;
pub mod newton;
pub mod scan;
pub mod sparse;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use closed_form::{closed_form_fields, field_sample, GaugeFields, KJet, KJet2};
pub use constraints::{constant_solution, constraint_residual, ResidualGrid};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};
pub use scan::{degeneracy_scan, DegeneracyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    Constraa,
    Constrab,
    Cpk1,
    Cpk2,
    Kh,
    Kh2,
    Kh3,
}

pub const ALL_SYSTEMS: [SystemId; 7] = [
    SystemId::Constraa,
    SystemId::Constrab,
    SystemId::Cpk1,
    SystemId::Cpk2,
    SystemId::Kh,
    SystemId::Kh2,
    SystemId::Kh3,
];

impl SystemId {
    pub fn id(&self) -> &'static str {
        match self {
            SystemId::Constraa => "constraa",
            SystemId::Constrab => "constrab",
            SystemId::Cpk1 => "cpk1",
            SystemId::Cpk2 => "cpk2",
            SystemId::Kh => "kh",
            SystemId::Kh2 => "kh2",
            SystemId::Kh3 => "kh3",
        }
    }

    pub fn epsilon(&self) -> i8 {
        match self {
            SystemId::Constraa | SystemId::Constrab => 0,
            SystemId::Cpk1 | SystemId::Cpk2 => 1,
            _ => -1,
        }
    }

    /// z² = −1: only k₁, k₂ enter and the sign of b₂ is an input.
    pub fn z_singular(&self) -> bool {
        matches!(self, SystemId::Constrab | SystemId::Cpk2 | SystemId::Kh3)
    }

    /// Number of unknown fields solved for.
    pub fn n_fields(&self) -> usize {
        if self.z_singular() {
            2
        } else {
            4
        }
    }

    pub fn n_equations(&self) -> usize {
        self.n_fields()
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SystemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_SYSTEMS
            .iter()
            .copied()
            .find(|x| x.id() == s)
            .ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("unknown system '{s}'"),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Periodic,
    /// Boundary nodes hold their current values.
    Dirichlet,
}

impl FromStr for Bc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Bc::Periodic),
            "dirichlet" => Ok(Bc::Dirichlet),
            _ => Err(Error::Parse {
                pos: 0,
                msg: format!("unknown boundary condition '{s}'"),
            }),
        }
    }
}

/// Rectangular node grid; node (i, j) sits at (u0 + i·hu, v0 + j·hv) and is
/// stored at index j·nu + i (u fastest).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nu: usize,
    pub nv: usize,
    pub hu: f64,
    pub hv: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Grid {
    /// Periodic grid on [0, 1)².
    pub fn unit_periodic(n: usize) -> Self {
        Grid {
            nu: n,
            nv: n,
            hu: 1.0 / n as f64,
            hv: 1.0 / n as f64,
            u0: 0.0,
            v0: 0.0,
        }
    }

    /// Grid on [0, 1]² with both endpoints as nodes.
    pub fn unit_closed(n: usize) -> Self {
        let h = 1.0 / (n.max(2) - 1) as f64;
        Grid {
            nu: n,
            nv: n,
            hu: h,
            hv: h,
            u0: 0.0,
            v0: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx % self.nu, idx / self.nu);
        (self.u0 + i as f64 * self.hu, self.v0 + j as f64 * self.hv)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hu > 0.0 && self.hv > 0.0) || !self.hu.is_finite() || !self.hv.is_finite() {
            return Err(Error::Parse {
                pos: 0,
                msg: "grid spacings must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Grid functions k₁..k₄ with their boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFields {
    pub grid: Grid,
    pub bc: Bc,
    pub k: [Vec<f64>; 4],
}

impl KFields {
    pub fn constant(grid: Grid, bc: Bc, vals: [f64; 4]) -> Self {
        let n = grid.len();
        KFields {
            grid,
            bc,
            k: vals.map(|v| vec![v; n]),
        }
    }

    pub fn from_fn(grid: Grid, bc: Bc, f: impl Fn(f64, f64) -> [f64; 4]) -> Self {
        let n = grid.len();
        let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
        for idx in 0..n {
            let (u, v) = grid.coords(idx);
            let vals = f(u, v);
            for m in 0..4 {
                k[m].push(vals[m]);
            }
        }
        KFields { grid, bc, k }
    }

    pub fn at(&self, idx: usize) -> [f64; 4] {
        std::array::from_fn(|m| self.k[m][idx])
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.bc == Bc::Dirichlet && (i == 0 || j == 0 || i + 1 == self.grid.nu || j + 1 == self.grid.nv)
    }

    /// Neighbour indices (left, right, down, up) of node (i, j), or `None`
    /// where the stencil leaves a non-periodic grid.
    pub fn neighbours(&self, i: usize, j: usize) -> Option<[usize; 4]> {
        let g = &self.grid;
        match self.bc {
            Bc::Periodic => Some([
                g.index((i + g.nu - 1) % g.nu, j),
                g.index((i + 1) % g.nu, j),
                g.index(i, (j + g.nv - 1) % g.nv),
                g.index(i, (j + 1) % g.nv),
            ]),
            Bc::Dirichlet => {
                if i == 0 || j == 0 || i + 1 >= g.nu || j + 1 >= g.nv {
                    None
                } else {
                    Some([
                        g.index(i - 1, j),
                        g.index(i + 1, j),
                        g.index(i, j - 1),
                        g.index(i, j + 1),
                    ])
                }
            }
        }
    }

    /// Central-difference jet (value, first and second partials) of every
    /// field at node (i, j).
    pub fn jet(&self, i: usize, j: usize) -> Option<KJet2> {
        let [l, r, d, u] = self.neighbours(i, j)?;
        let g = &self.grid;
        let c = g.index(i, j);
        // corner neighbours for the mixed derivative
        let (il, ir) = match self.bc {
            Bc::Periodic => ((i + g.nu - 1) % g.nu, (i + 1) % g.nu),
            Bc::Dirichlet => (i - 1, i + 1),
        };
        let (jd, ju) = match self.bc {
            Bc::Periodic => ((j + g.nv - 1) % g.nv, (j + 1) % g.nv),
            Bc::Dirichlet => (j - 1, j + 1),
        };
        let (hu, hv) = (g.hu, g.hv);
        let mk = |f: &Vec<f64>| {
            [
                f[c],
                (f[r] - f[l]) / (2.0 * hu),
                (f[u] - f[d]) / (2.0 * hv),
                (f[r] - 2.0 * f[c] + f[l]) / (hu * hu),
                (f[g.index(ir, ju)] - f[g.index(ir, jd)] - f[g.index(il, ju)] + f[g.index(il, jd)]) / (4.0 * hu * hv),
                (f[u] - 2.0 * f[c] + f[d]) / (hv * hv),
            ]
        };
        Some(KJet2 {
            k: std::array::from_fn(|m| mk(&self.k[m])),
        })
    }
}
