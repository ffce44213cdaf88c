//! Classical RK4 integration of the frame system along coordinate lines.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::source::FrameSource;
use super::{Direction, FrameRhs, FrameState};
use crate::error::{Error, Result};
use crate::geometry::{AmbientSpace, CVector};

/// Drift of the frame invariants treated as a failure.
pub const DRIFT_LIMIT: f64 = 1e-6;
/// Required accuracy of the initial frame.
pub const INIT_TOL: f64 = 1e-12;

/// Uniform box in (t, s, u, v): node m sits at origin + m·step. Lines are
/// integrated axis by axis in `schedule` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionGrid {
    pub origin: [f64; 4],
    pub step: [f64; 4],
    pub count: [usize; 4],
    pub schedule: [usize; 4],
}

impl ReconstructionGrid {
    pub fn new(origin: [f64; 4], step: [f64; 4], count: [usize; 4]) -> Self {
        ReconstructionGrid {
            origin,
            step,
            count,
            schedule: [0, 1, 2, 3],
        }
    }

    pub fn len(&self) -> usize {
        self.count.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index with v varying fastest.
    pub fn index(&self, m: [usize; 4]) -> usize {
        ((m[0] * self.count[1] + m[1]) * self.count[2] + m[2]) * self.count[3] + m[3]
    }

    pub fn multi(&self, mut idx: usize) -> [usize; 4] {
        let mut m = [0; 4];
        for a in (0..4).rev() {
            m[a] = idx % self.count[a];
            idx /= self.count[a];
        }
        m
    }

    pub fn point(&self, m: [usize; 4]) -> [f64; 4] {
        std::array::from_fn(|a| self.origin[a] + m[a] as f64 * self.step[a])
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.schedule;
        sorted.sort_unstable();
        let ok = self.count.iter().all(|&c| c >= 1)
            && self.step.iter().all(|h| h.is_finite() && *h != 0.0)
            && self.origin.iter().all(|x| x.is_finite())
            && sorted == [0, 1, 2, 3]
            && self
                .count
                .iter()
                .try_fold(1usize, |acc, &c| acc.checked_mul(c))
                .is_some();
        if ok {
            Ok(())
        } else {
            Err(Error::InsufficientStencil(format!(
                "invalid reconstruction grid {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub drift_limit: f64,
    /// Re-orthonormalize after every step (off by default; drift is the
    /// diagnostic).
    pub reproject: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            drift_limit: DRIFT_LIMIT,
            reproject: false,
        }
    }
}

/// Frame states at every node of a reconstruction grid.
#[derive(Clone, Debug, Serialize)]
pub struct DiscreteImmersion {
    pub grid: ReconstructionGrid,
    pub ambient: AmbientSpace,
    pub states: Vec<FrameState>,
    pub max_drift: f64,
    pub drift_node: [usize; 4],
    pub reprojected: bool,
}

impl DiscreteImmersion {
    pub fn sampled(&self) -> super::SampledImmersion {
        super::SampledImmersion {
            grid: self.grid.clone(),
            ambient: self.ambient,
            f: self.states.iter().map(|s| s.f.clone()).collect(),
        }
    }
}

struct Line {
    states: Vec<FrameState>,
    drift: f64,
    drift_node: [usize; 4],
}

/// `n` RK4 steps along `axis` from node `m0` of `grid`.
fn line<S: FrameSource + ?Sized>(
    src: &S,
    grid: &ReconstructionGrid,
    m0: [usize; 4],
    axis: usize,
    n: usize,
    y0: &FrameState,
    opts: &IntegrateOptions,
) -> Result<Line> {
    let eps = src.ambient().epsilon;
    let dir = Direction::ALL[axis];
    let h = grid.step[axis];
    let p0 = grid.point(m0);
    let at = |x: f64| -> Result<FrameRhs> {
        let mut p = p0;
        p[axis] = x;
        Ok(FrameRhs::from_data(eps, &src.data(&p)?, dir))
    };
    let mut out = Line {
        states: Vec::with_capacity(n),
        drift: 0.0,
        drift_node: m0,
    };
    if n == 0 {
        return Ok(out);
    }
    let mut d0 = at(p0[axis])?;
    let mut y = y0.clone();
    for q in 0..n {
        let dm = at(p0[axis] + (q as f64 + 0.5) * h)?;
        let d1 = at(p0[axis] + (q + 1) as f64 * h)?;
        let k1 = d0.apply(&y);
        let k2 = dm.apply(&y.axpy(0.5 * h, &k1));
        let k3 = dm.apply(&y.axpy(0.5 * h, &k2));
        let k4 = d1.apply(&y.axpy(h, &k3));
        y = y
            .axpy(h / 6.0, &k1)
            .axpy(h / 3.0, &k2)
            .axpy(h / 3.0, &k3)
            .axpy(h / 6.0, &k4);
        let mut m = m0;
        m[axis] += q + 1;
        let drift = y.invariant_residual(eps);
        if drift > out.drift {
            out.drift = drift;
            out.drift_node = m;
        }
        if !(drift <= opts.drift_limit) {
            return Err(Error::InvariantDrift {
                drift,
                limit: opts.drift_limit,
                node: m.to_vec(),
            });
        }
        if opts.reproject {
            y.reproject(eps)?;
        }
        out.states.push(y.clone());
        d0 = d1;
    }
    Ok(out)
}

fn check_init<S: FrameSource + ?Sized>(src: &S, init: &FrameState) -> Result<i8> {
    let amb = src.ambient();
    for v in std::iter::once(&init.f).chain(&init.x) {
        if v.len() != amb.complex_dim {
            return Err(Error::DimensionMismatch {
                expected: amb.complex_dim,
                got: v.len(),
            });
        }
    }
    let drift = init.invariant_residual(amb.epsilon);
    if !(drift <= INIT_TOL) {
        return Err(Error::InvariantDrift {
            drift,
            limit: INIT_TOL,
            node: vec![0; 4],
        });
    }
    Ok(amb.epsilon)
}

/// Integrates from `init` at the grid origin to every node: first along the
/// first scheduled axis, then from each reached node along the next, and so
/// on. Lines of one stage are independent and run in parallel.
pub fn integrate_frame<S: FrameSource + ?Sized>(
    src: &S,
    grid: &ReconstructionGrid,
    init: &FrameState,
    opts: &IntegrateOptions,
) -> Result<DiscreteImmersion> {
    grid.validate()?;
    check_init(src, init)?;
    let n = grid.len();
    let mut states: Vec<Option<FrameState>> = vec![None; n];
    states[0] = Some(init.clone());
    let mut max_drift = 0.0;
    let mut drift_node = [0; 4];
    for (stage, &axis) in grid.schedule.iter().enumerate() {
        let later = &grid.schedule[stage..];
        let starts: Vec<[usize; 4]> = (0..n)
            .map(|i| grid.multi(i))
            .filter(|m| later.iter().all(|&a| m[a] == 0))
            .collect();
        let lines: Vec<Result<Line>> = starts
            .par_iter()
            .map(|&m| {
                let y0 = states[grid.index(m)]
                    .as_ref()
                    .expect("line start is reached by an earlier stage");
                line(src, grid, m, axis, grid.count[axis] - 1, y0, opts)
            })
            .collect();
        for (m, l) in starts.iter().zip(lines) {
            let l = l?;
            if l.drift > max_drift {
                max_drift = l.drift;
                drift_node = l.drift_node;
            }
            for (q, y) in l.states.into_iter().enumerate() {
                let mut mm = *m;
                mm[axis] = q + 1;
                states[grid.index(mm)] = Some(y);
            }
        }
    }
    Ok(DiscreteImmersion {
        grid: grid.clone(),
        ambient: src.ambient(),
        states: states.into_iter().map(|s| s.expect("every node is visited")).collect(),
        max_drift,
        drift_node,
        reprojected: opts.reproject,
    })
}

/// Integrates from the origin to the far corner of `grid`, one full line per
/// axis in the given order.
pub fn integrate_path<S: FrameSource + ?Sized>(
    src: &S,
    grid: &ReconstructionGrid,
    order: [usize; 4],
    init: &FrameState,
    opts: &IntegrateOptions,
) -> Result<FrameState> {
    grid.validate()?;
    check_init(src, init)?;
    let mut m = [0; 4];
    let mut y = init.clone();
    for axis in order {
        let n = grid.count[axis] - 1;
        if let Some(last) = line(src, grid, m, axis, n, &y, opts)?.states.pop() {
            y = last;
        }
        m[axis] = n;
    }
    Ok(y)
}

/// Mismatch at the far corner between the scheduled path and the reversed
/// one. Vanishes with the step exactly when the frame data are compatible.
pub fn compatibility_check<S: FrameSource + ?Sized>(
    src: &S,
    grid: &ReconstructionGrid,
    init: &FrameState,
) -> Result<f64> {
    grid.validate()?;
    if grid.len() <= 1 {
        return Ok(0.0);
    }
    let opts = IntegrateOptions {
        drift_limit: f64::INFINITY,
        reproject: false,
    };
    let mut rev = grid.schedule;
    rev.reverse();
    let a = integrate_path(src, grid, grid.schedule, init, &opts)?;
    let b = integrate_path(src, grid, rev, init, &opts)?;
    Ok(a.distance(&b))
}

/// z ↦ Uz + shift, an ambient isometry in matrix form.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub u: DMatrix<Complex64>,
    pub shift: Vec<Complex64>,
}

impl AffineMap {
    pub fn apply_point(&self, z: &CVector) -> CVector {
        let v = &self.u * nalgebra::DVector::from_column_slice(&z.z);
        CVector::new(v.iter().zip(&self.shift).map(|(a, b)| a + b).collect(), z.signature)
    }
}

/// The map taking frame `from` to frame `to`: with ε ≠ 0 the five vectors
/// (F, X₁..X₄) form a complex basis, with ε = 0 the four Xᵢ do and F fixes the
/// translation.
pub fn alignment_map(from: &FrameState, to: &FrameState) -> Result<AffineMap> {
    let n = from.f.len();
    let basis = |s: &FrameState| -> Vec<CVector> {
        if n == 5 {
            std::iter::once(s.f.clone()).chain(s.x.iter().cloned()).collect()
        } else {
            s.x.to_vec()
        }
    };
    let (a, b) = (basis(from), basis(to));
    if n != a.len() || to.f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: n,
        });
    }
    let ma = DMatrix::from_fn(n, n, |r, c| a[c].z[r]);
    let mb = DMatrix::from_fn(n, n, |r, c| b[c].z[r]);
    let inv = ma.try_inverse().ok_or(Error::DegenerateMetric { det: 0.0 })?;
    let u = mb * inv;
    let uf = &u * nalgebra::DVector::from_column_slice(&from.f.z);
    let shift = to.f.z.iter().zip(uf.iter()).map(|(t, f)| t - f).collect();
    Ok(AffineMap { u, shift })
}
